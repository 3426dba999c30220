"""Six-state gut-brain-axis model: domain types and the delayed right-hand side.

State ordering is P, T, S, A, C, L everywhere (vectors, matrix rows/columns).
"""
import math
from dataclasses import dataclass, fields, replace, asdict
from typing import List, Sequence, Union
import numpy as np


STATE_NAMES = ("P", "T", "S", "A", "C", "L")
IDX_P, IDX_T, IDX_S, IDX_A, IDX_C, IDX_L = range(6)
STATE_DIM = 6

# tolerance below zero that is still treated as a rounding artefact
NEGATIVE_TOLERANCE = 1e-12

# resting values with a small self-sustained TNF level; T = 0 stays at 0 when u = 0
RESTING_STATE = (0.2, 0.1, 1.0, 15.0, 11.4, 0.11)


class GbaError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


class ModelError(GbaError):
    pass


class StateVector:
    """The six physiological signals at one instant."""

    def __init__(self, P: float = 0.0, T: float = 0.0, S: float = 0.0,
                 A: float = 0.0, C: float = 0.0, L: float = 0.0):
        self.P = float(P)
        self.T = float(T)
        self.S = float(S)
        self.A = float(A)
        self.C = float(C)
        self.L = float(L)

    @staticmethod
    def from_array(values: Sequence[float]) -> 'StateVector':
        if len(values) != STATE_DIM:
            raise ModelError("a state vector has 6 components, got " + str(len(values)))
        return StateVector(*[float(v) for v in values])

    def as_array(self) -> np.ndarray:
        return np.array([self.P, self.T, self.S, self.A, self.C, self.L], dtype=float)

    def __getitem__(self, name: str) -> float:
        return getattr(self, name)

    def __eq__(self, other):
        return isinstance(other, StateVector) and np.array_equal(self.as_array(), other.as_array())

    def __repr__(self):
        return "StateVector(" + ", ".join(n + "=" + repr(getattr(self, n)) for n in STATE_NAMES) + ")"

    def to_json(self):
        return {n: getattr(self, n) for n in STATE_NAMES}


StateLike = Union[StateVector, Sequence[float], np.ndarray]


def as_state_array(x: StateLike) -> np.ndarray:
    if isinstance(x, StateVector):
        return x.as_array()
    arr = np.asarray(x, dtype=float)
    if arr.shape != (STATE_DIM,):
        raise ModelError("expected a 6-component state, got shape " + str(arr.shape))
    return arr


@dataclass(frozen=True)
class ModelParameters:
    # HPA axis
    h: float = 7.66
    c: float = 6.11
    m1: int = 4
    alpha: float = 0.28
    a: float = 21.0
    m2: int = 4
    eA: float = 0.04
    eC: float = 0.01
    tau_hpa: float = 10.0
    # immune system
    k: float = 0.0504
    eP: float = 0.05
    eT: float = 0.038
    eS: float = 0.02
    # gut permeability
    k_damage: float = 0.002
    k_repair: float = 0.05
    L_base: float = 0.1
    C_half: float = 15.0
    n_gut: int = 2
    tau_gut: float = 120.0
    # immune/HPA coupling half-saturations
    x1: float = 1.29
    x2: float = 1.0
    x3: float = 207.0
    x4: float = 10.0
    x5: float = 1.3
    x6: float = 2.05
    x7: float = 17.0
    x8: float = 0.021
    x9: float = 1.05
    x10: float = 0.336
    x11: float = 0.0485
    x12: float = 1.76
    # coupling magnitudes
    d1: float = 0.01
    d2: float = 0.0001
    d3: float = 0.1869
    d4: float = 0.7025
    d5: float = 1.01
    d6: float = 1.512

    _HILL = ("m1", "m2", "n_gut")
    # may be zeroed to decouple the loops
    _COUPLINGS = ("k_damage", "d1", "d2", "d3", "d4", "d5", "d6")

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in self._HILL:
                if int(value) != value or value < 1:
                    raise ModelError("Hill coefficient " + f.name + " must be an integer >= 1, got " + repr(value))
                object.__setattr__(self, f.name, int(value))
                continue
            if not math.isfinite(value):
                raise ModelError("parameter " + f.name + " is not finite")
            if f.name in self._COUPLINGS:
                if value < 0:
                    raise ModelError("parameter " + f.name + " must be >= 0, got " + repr(value))
            elif value <= 0:
                raise ModelError("parameter " + f.name + " must be > 0, got " + repr(value))
        if self.L_base > 1:
            raise ModelError("L_base must lie in (0, 1], got " + repr(self.L_base))

    @property
    def max_delay(self) -> float:
        return max(self.tau_hpa, self.tau_gut)

    def replace(self, **changes) -> 'ModelParameters':
        return replace(self, **changes)

    @staticmethod
    def field_names() -> List[str]:
        return [f.name for f in fields(ModelParameters)]

    def to_json(self):
        return asdict(self)


@dataclass(frozen=True)
class CircadianDrive:
    """E(t) = mean_level * (1 + amplitude * cos(2 pi (t - phase) / period)).

    The default phase puts the peak at 08:00 of each simulated day.
    """
    mean_level: float = 1.0
    amplitude: float = 0.5
    period: float = 1440.0
    phase: float = 480.0

    def __post_init__(self):
        for name in ("mean_level", "amplitude", "period", "phase"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError("circadian " + name + " is not finite")
        if self.mean_level <= 0:
            raise ModelError("circadian mean_level must be > 0")
        if self.period <= 0:
            raise ModelError("circadian period must be > 0")
        if not 0 <= self.amplitude < 1:
            raise ModelError("circadian amplitude must lie in [0, 1) to keep E(t) positive, got "
                             + repr(self.amplitude))

    def value(self, t: float) -> float:
        if self.amplitude == 0:
            return self.mean_level
        return self.mean_level * (1.0 + self.amplitude * math.cos(2.0 * math.pi * (t - self.phase) / self.period))

    def frozen(self) -> 'CircadianDrive':
        """Same drive with the modulation removed, E(t) = mean_level."""
        return replace(self, amplitude=0.0)

    def to_json(self):
        return asdict(self)


def circadian_eval(t: float, drive: CircadianDrive) -> float:
    return drive.value(t)


class DelayedView:
    def __init__(self, x_hpa: StateLike, x_gut: StateLike):
        self.x_hpa = as_state_array(x_hpa)
        self.x_gut = as_state_array(x_gut)


def hill(x, k, n):
    xn = x ** n
    return xn / (k ** n + xn)


def derivative(x, x_hpa, x_gut, u, e, p: ModelParameters) -> np.ndarray:
    """Unchecked right-hand side; also accepts complex or slightly negative input."""
    P, T, S, A, C, L = x[0], x[1], x[2], x[3], x[4], x[5]
    c_hpa = x_hpa[IDX_C]
    a_hpa = x_hpa[IDX_A]
    c_gut = x_gut[IDX_C]

    t_x6 = T / (p.x6 + T)
    d_p = u * L - p.eP * P - p.d1 * (T / (p.x1 + T)) * (S / (p.x2 + S)) * P
    d_t = -p.eT * T + p.k * P / (p.x3 + P) + (p.d2 / (p.x4 + C) + p.d3 / (p.x5 + S)) * t_x6
    d_s = -p.eS * S + p.d4 * (1.0 / (p.x7 + C)) * (T / (p.x8 + T))
    inhibition = p.c ** p.m1 / (p.c ** p.m1 + c_hpa ** p.m1)
    d_a = -p.eA * A + p.h * e * inhibition + p.d5 * (S / (p.x9 + S)) * (T / (p.x10 + T))
    d_c = -p.eC * C + p.alpha * hill(a_hpa, p.a, p.m2) + p.d6 * (S / (p.x11 + S)) * (T / (p.x12 + T))
    d_l = p.k_damage * hill(c_gut, p.C_half, p.n_gut) - p.k_repair * (L - p.L_base)
    return np.array([d_p, d_t, d_s, d_a, d_c, d_l])


def _check_state(label: str, x: np.ndarray):
    for i, name in enumerate(STATE_NAMES):
        if not math.isfinite(x[i]):
            raise ModelError(label + " component " + name + " is not finite: " + repr(x[i]))
        if x[i] < -NEGATIVE_TOLERANCE:
            raise ModelError(label + " component " + name + " is negative: " + repr(x[i]))


def rhs(t: float, x: StateLike, delayed: DelayedView, u: float, e: float, p: ModelParameters) -> np.ndarray:
    """Derivative of the six states given current and delayed states, input and drive."""
    x = as_state_array(x)
    _check_state("state", x)
    _check_state("HPA-delayed state", delayed.x_hpa)
    _check_state("gut-delayed state", delayed.x_gut)
    if not math.isfinite(u) or u < 0:
        raise ModelError("leak rate u must be finite and >= 0, got " + repr(u))
    if not math.isfinite(e) or e <= 0:
        raise ModelError("circadian value E must be finite and > 0, got " + repr(e))
    return derivative(np.maximum(x, 0.0), np.maximum(delayed.x_hpa, 0.0), np.maximum(delayed.x_gut, 0.0), u, e, p)
