"""Fixed-step RK4 method-of-steps integrator for constant-delay DDEs.

Delayed arguments are read back from a dense history of knots that store both
the state and its derivative, interpolated with cubic Hermite polynomials.
"""
import math
import logging
from typing import Callable, List, Optional, Sequence, Union
import numpy as np
from gbaxis.model import (GbaError, ModelParameters, CircadianDrive, STATE_NAMES, STATE_DIM,
                          NEGATIVE_TOLERANCE, as_state_array, derivative)


# relative slack when deciding that a query sits on a knot or at the span edge
_KNOT_SLACK = 1e-9


class IntegrationError(GbaError):
    def __init__(self, message, t: Optional[float] = None):
        if t is not None:
            message = "t=" + repr(t) + " min: " + message
        GbaError.__init__(self, message)
        self.t = t


class IntegratorConfig:
    METHODS = ("rk4-hermite",)

    def __init__(self, step: float = 0.5, horizon: float = 14400.0, output_spacing: float = 1.0,
                 method: str = "rk4-hermite", clamp_tolerance: float = NEGATIVE_TOLERANCE):
        self.step = float(step)
        self.horizon = float(horizon)
        self.output_spacing = float(output_spacing)
        self.method = method
        self.clamp_tolerance = float(clamp_tolerance)

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.output_spacing / self.step))

    def validate(self, delays: Sequence[float]):
        if not self.step > 0:
            raise IntegrationError("step must be > 0, got " + repr(self.step))
        if self.method not in self.METHODS:
            raise IntegrationError("unknown integration method " + repr(self.method))
        if self.horizon < 0:
            raise IntegrationError("horizon must be >= 0")
        if self.clamp_tolerance < 0:
            raise IntegrationError("clamp_tolerance must be >= 0")
        positive = [d for d in delays if d > 0]
        if positive and self.step > min(positive) / 4.0 * (1 + _KNOT_SLACK):
            raise IntegrationError("step " + repr(self.step) + " is too large for the smallest delay "
                                   + repr(min(positive)) + " (must not exceed a quarter of it)")
        ratio = self.output_spacing / self.step
        if self.output_spacing <= 0 or abs(ratio - round(ratio)) > _KNOT_SLACK * max(1.0, ratio):
            raise IntegrationError("output spacing must be a positive multiple of the step")

    def to_json(self):
        return dict(self.__dict__)


class HistoryBuffer:
    """Uniformly spaced knots (t0 + i*step) holding state and derivative.

    Times before t0 are answered by the optional prehistory function, which
    must cover at least [t0 - max delay, t0].
    """

    def __init__(self, t0: float, step: float, dim: int = STATE_DIM,
                 prehistory: Optional[Callable[[float], np.ndarray]] = None,
                 prehistory_span: float = 0.0, capacity: int = 1024):
        self.t0 = float(t0)
        self.step = float(step)
        self.dim = dim
        self.prehistory = prehistory
        self.prehistory_span = float(prehistory_span)
        self._states = np.empty((capacity, dim))
        self._derivs = np.empty((capacity, dim))
        self._size = 0

    def __len__(self):
        return self._size

    def knot_time(self, i: int) -> float:
        return self.t0 + i * self.step

    @property
    def t_now(self) -> float:
        if not self._size:
            raise IntegrationError("history buffer is empty")
        return self.knot_time(self._size - 1)

    @property
    def span(self):
        start = self.t0 - self.prehistory_span if self.prehistory is not None else self.t0
        return start, self.t_now

    @property
    def states(self) -> np.ndarray:
        return self._states[:self._size]

    @property
    def derivatives(self) -> np.ndarray:
        return self._derivs[:self._size]

    def append(self, state: np.ndarray, deriv: np.ndarray):
        if self._size == len(self._states):
            self._states = np.concatenate([self._states, np.empty_like(self._states)])
            self._derivs = np.concatenate([self._derivs, np.empty_like(self._derivs)])
        self._states[self._size] = state
        self._derivs[self._size] = deriv
        self._size += 1

    def interpolate(self, t: float) -> np.ndarray:
        s = (t - self.t0) / self.step
        last = self._size - 1
        nearest = int(round(s))
        if abs(s - nearest) <= _KNOT_SLACK and 0 <= nearest <= last:
            return self._states[nearest].copy()
        if s < 0:
            if self.prehistory is None or t < self.t0 - self.prehistory_span * (1 + _KNOT_SLACK) - _KNOT_SLACK:
                raise IntegrationError("history query at " + repr(t) + " lies before the buffer span "
                                       + repr(self.span), t)
            return np.asarray(self.prehistory(t), dtype=float)
        if s > last:
            raise IntegrationError("history query at " + repr(t) + " lies after the buffer span "
                                   + repr(self.span), t)
        i = int(math.floor(s))
        theta = s - i
        theta2 = theta * theta
        theta3 = theta2 * theta
        h00 = 2.0 * theta3 - 3.0 * theta2 + 1.0
        h10 = theta3 - 2.0 * theta2 + theta
        h01 = -2.0 * theta3 + 3.0 * theta2
        h11 = theta3 - theta2
        return (h00 * self._states[i] + h10 * self.step * self._derivs[i]
                + h01 * self._states[i + 1] + h11 * self.step * self._derivs[i + 1])


def interpolate(buf: HistoryBuffer, t_query: float) -> np.ndarray:
    return buf.interpolate(t_query)


DelayedRhs = Callable[[float, np.ndarray, List[np.ndarray]], np.ndarray]


class DelaySolver:
    """Method of steps with classical RK4 for x'(t) = f(t, x(t), [x(t - d) for d in delays])."""

    def __init__(self, fun: DelayedRhs, delays: Sequence[float], dim: int, cfg: IntegratorConfig,
                 nonnegative: bool = False):
        cfg.validate(delays)
        self._fun = fun
        self._delays = [float(d) for d in delays]
        self._dim = dim
        self._cfg = cfg
        self._nonnegative = nonnegative

    def _guard(self, t: float, x: np.ndarray, what: str) -> np.ndarray:
        if not np.all(np.isfinite(x)):
            raise IntegrationError("non-finite " + what + ": " + repr(x.tolist()), t)
        if self._nonnegative:
            low = x.min()
            if low < 0:
                if low < -self._cfg.clamp_tolerance:
                    raise IntegrationError("negative " + what + " beyond tolerance: " + repr(x.tolist()), t)
                x = np.maximum(x, 0.0)
        return x

    def _eval(self, buf: HistoryBuffer, t: float, x: np.ndarray) -> np.ndarray:
        x = self._guard(t, x, "state")
        delayed = [self._guard(t, buf.interpolate(t - d), "delayed state") for d in self._delays]
        dx = self._fun(t, x, delayed)
        if not np.all(np.isfinite(dx)):
            raise IntegrationError("non-finite derivative: " + repr(np.asarray(dx).tolist()), t)
        return dx

    def solve(self, history: Callable[[float], np.ndarray], t0: float = 0.0):
        """Integrate over [t0, t0 + horizon]; returns (sample times, sample states)."""
        cfg = self._cfg
        h = cfg.step
        n_steps = int(round(cfg.horizon / h))
        every = cfg.steps_per_sample
        buf = HistoryBuffer(t0, h, self._dim, prehistory=history,
                            prehistory_span=max(self._delays, default=0.0),
                            capacity=n_steps + 1)

        y = self._guard(t0, np.asarray(history(t0), dtype=float), "initial state")
        # knot derivative at t0 is the right derivative of the solution
        k1 = self._eval(buf, t0, y)
        buf.append(y, k1)

        n_samples = n_steps // every + 1
        times = np.empty(n_samples)
        samples = np.empty((n_samples, self._dim))
        times[0] = t0
        samples[0] = y
        logging.debug("integrating " + str(n_steps) + " steps of " + repr(h) + " min")

        for n in range(n_steps):
            t = buf.knot_time(n)
            k2 = self._eval(buf, t + 0.5 * h, y + 0.5 * h * k1)
            k3 = self._eval(buf, t + 0.5 * h, y + 0.5 * h * k2)
            # the stage at t + h reads history up to t + h - min(delay) <= t
            k4 = self._eval(buf, t + h, y + h * k3)
            y = self._guard(t + h, y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), "state")
            k1 = self._eval(buf, t + h, y)
            buf.append(y, k1)
            if (n + 1) % every == 0:
                j = (n + 1) // every
                times[j] = buf.knot_time(n + 1)
                samples[j] = y
        return times, samples, buf


class TimeSeries:
    """Uniformly sampled trajectory with its input and circadian signals."""

    def __init__(self, times: np.ndarray, states: np.ndarray, u: np.ndarray, e: np.ndarray,
                 parameters: Optional[ModelParameters] = None):
        self.times = times
        self.states = states
        self.u = u
        self.e = e
        self.parameters = parameters

    def __len__(self):
        return len(self.times)

    def channel(self, name: str) -> np.ndarray:
        if name in STATE_NAMES:
            return self.states[:, STATE_NAMES.index(name)]
        if name == "u":
            return self.u
        if name == "E":
            return self.e
        raise GbaError("unknown channel " + repr(name))

    def window_mask(self, t0: float, t1: float) -> np.ndarray:
        return (self.times >= t0 - 1e-9) & (self.times <= t1 + 1e-9)

    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    @property
    def columns(self):
        return ("t",) + STATE_NAMES + ("u", "E")

    def rows(self):
        for i in range(len(self.times)):
            yield [self.times[i]] + self.states[i].tolist() + [self.u[i], self.e[i]]


InputLike = Union[float, object]
HistoryLike = Union[Sequence[float], np.ndarray, Callable[[float], Sequence[float]]]


def _input_function(profile: InputLike) -> Callable[[float], float]:
    if hasattr(profile, "value"):
        return profile.value
    level = float(profile)
    return lambda t: level


def _history_function(history_init: HistoryLike) -> Callable[[float], np.ndarray]:
    if callable(history_init):
        return lambda t: as_state_array(history_init(t))
    constant = as_state_array(history_init)
    return lambda t: constant


def integrate(p: ModelParameters, drive: CircadianDrive, profile: InputLike, history_init: HistoryLike,
              cfg: Optional[IntegratorConfig] = None) -> TimeSeries:
    """Simulate the six-state model on [0, horizon] from the given initial history."""
    cfg = cfg or IntegratorConfig()
    u_of = _input_function(profile)
    e_of = drive.value

    def fun(t, x, delayed):
        return derivative(x, delayed[0], delayed[1], u_of(t), e_of(t), p)

    solver = DelaySolver(fun, (p.tau_hpa, p.tau_gut), STATE_DIM, cfg, nonnegative=True)
    times, states, _ = solver.solve(_history_function(history_init))
    u = np.array([u_of(t) for t in times])
    e = np.array([e_of(t) for t in times])
    return TimeSeries(times, states, u, e, p)
