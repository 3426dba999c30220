"""Water-filling Shannon capacity of the linearized channel and its sweeps."""
import logging
import math
from typing import List, Optional, Sequence
import numpy as np
from scipy.integrate import cumulative_trapezoid
from gbaxis.model import GbaError, ModelParameters, CircadianDrive
from gbaxis.steadystate import LinearizedSystem, operating_point
from gbaxis.frequency import FrequencyResponse, bode
from gbaxis.core import ParallelRunner


ACTIVE_RESOLUTION = 1e-12


class CapacityError(GbaError):
    pass


class NoiseModel:
    KINDS = ("white",)

    def __init__(self, level: float = 1e-4, kind: str = "white"):
        if kind not in self.KINDS:
            raise CapacityError("unsupported noise kind " + repr(kind))
        if not (math.isfinite(level) and level > 0):
            raise CapacityError("noise level must be > 0, got " + repr(level))
        self.kind = kind
        self.level = float(level)

    def psd(self, grid: np.ndarray) -> np.ndarray:
        return np.full(len(grid), self.level)

    def to_json(self):
        return dict(self.__dict__)


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Weights w with sum(w * f) equal to the trapezoid integral of f over the grid."""
    w = np.zeros(len(grid))
    dx = np.diff(grid)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def water_level(thresholds: np.ndarray, weights: np.ndarray, budget: float) -> float:
    """Exact mu with sum(w * max(0, mu - a)) = budget for the piecewise-linear power curve."""
    order = np.argsort(thresholds, kind="stable")
    a = thresholds[order]
    w = weights[order]
    usable = np.isfinite(a) & (w > 0)
    a, w = a[usable], w[usable]
    if not len(a):
        raise CapacityError("no usable frequency bin (zero gain everywhere)")
    cum_w = np.cumsum(w)
    cum_wa = np.cumsum(w * a)
    for k in range(len(a)):
        mu = (budget + cum_wa[k]) / cum_w[k]
        if k + 1 == len(a) or mu <= a[k + 1]:
            return float(mu)


class CapacityResult:
    def __init__(self, grid: np.ndarray, S_u: np.ndarray, eta: np.ndarray, capacity_total: float,
                 mu: float, power_used: float, weights: np.ndarray):
        self.grid = grid
        self.S_u = S_u
        self.eta = eta
        self.capacity_total = capacity_total
        self.mu = mu
        self.power_used = power_used
        self.weights = weights

    def cumulative(self) -> np.ndarray:
        """C(w) over the grid, with the same two-sided factor as capacity_total."""
        if len(self.grid) < 2:
            return self.weights * self.eta
        return cumulative_trapezoid(self.eta, self.grid, initial=0.0) / np.pi

    @property
    def columns(self):
        return ("omega", "S_u", "eta", "cumulative")

    def rows(self):
        cumulative = self.cumulative()
        for i in range(len(self.grid)):
            yield [self.grid[i], self.S_u[i], self.eta[i], cumulative[i]]

    def to_json(self):
        return {"capacity_total": self.capacity_total, "water_level": self.mu, "power_used": self.power_used,
                "active_bins": int(np.count_nonzero(self.S_u))}


def water_fill_bins(gain2: np.ndarray, noise_psd: np.ndarray, weights: np.ndarray, budget: float,
                    grid: Optional[np.ndarray] = None) -> CapacityResult:
    """Water-filling over bins of measure `weights` (power and capacity are sum(w * .))."""
    gain2 = np.asarray(gain2, dtype=float)
    noise_psd = np.asarray(noise_psd, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if not (math.isfinite(budget) and budget > 0):
        raise CapacityError("power budget must be > 0, got " + repr(budget))
    if np.any(noise_psd <= 0):
        raise CapacityError("noise PSD must be > 0")
    with np.errstate(divide="ignore"):
        thresholds = np.where(gain2 > 0, noise_psd / gain2, np.inf)
    mu = water_level(thresholds, weights, budget)
    S_u = np.maximum(0.0, mu - thresholds)
    # bins within rounding of the water level count as inactive
    S_u[~np.isfinite(thresholds) | (S_u <= ACTIVE_RESOLUTION * mu)] = 0.0
    if not np.any(S_u > 0):
        logging.warning("power budget " + repr(budget) + " is too small to activate any bin; capacity is zero")
        S_u = np.zeros_like(S_u)
        eta = np.zeros_like(S_u)
        return CapacityResult(grid if grid is not None else np.arange(len(S_u), dtype=float),
                              S_u, eta, 0.0, mu, 0.0, weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(S_u > 0, np.log2(1.0 + S_u / thresholds), 0.0)
    return CapacityResult(grid if grid is not None else np.arange(len(S_u), dtype=float),
                          S_u, eta, float(np.sum(weights * eta)), mu, float(np.sum(weights * S_u)), weights)


def water_fill(H: FrequencyResponse, noise: NoiseModel, P_av: float, band_limited: bool = False) -> CapacityResult:
    """Optimal input spectrum S_u(w) = max(0, mu - S_n/|H|^2) on the positive grid.

    The spectrum is two-sided and even, so the 1/(2 pi) integral over the real
    line becomes 1/pi times the integral over the positive grid.
    """
    weights = trapezoid_weights(H.grid) / np.pi
    result = water_fill_bins(np.abs(H.H) ** 2, noise.psd(H.grid), weights, P_av, grid=H.grid)
    if not band_limited and result.S_u[-1] > 0:
        raise CapacityError("the active band reaches the top of the grid at " + repr(float(H.grid[-1]))
                            + " rad/min; extend f_max")
    return result


class StressPoint:
    def __init__(self, k_leak: float, capacity: Optional[float] = None, stable: Optional[bool] = None,
                 error: Optional[str] = None):
        self.k_leak = k_leak
        self.capacity = capacity
        self.stable = stable
        self.error = error

    def to_json(self):
        return dict(self.__dict__)


def _stress_point(args) -> StressPoint:
    k_leak, p, drive, noise, P_av, bode_kwargs = args
    try:
        sys = operating_point(p, drive, k_leak)
        if not sys.stable:
            return StressPoint(k_leak, None, False, "unstable operating point")
        return StressPoint(k_leak, water_fill(bode(sys, **bode_kwargs), noise, P_av).capacity_total, True)
    except GbaError as exc:
        return StressPoint(k_leak, None, None, exc.message)


def capacity_vs_stress(kleak_values: Sequence[float], p: ModelParameters, drive: CircadianDrive,
                       noise: NoiseModel, P_av: float, jobs: int = 1, **bode_kwargs) -> List[StressPoint]:
    tasks = [(float(k), p, drive, noise, P_av, bode_kwargs) for k in kleak_values]
    points = ParallelRunner(jobs).map(_stress_point, tasks, label="stress point")
    for point in points:
        if point.capacity is None:
            logging.warning("k_leak=" + repr(point.k_leak) + ": no capacity (" + str(point.error) + ")")
    return points


class CapacitySweeps:
    def __init__(self, noise_levels: np.ndarray, noise_curve: np.ndarray, powers: np.ndarray,
                 power_curve: np.ndarray, nominal: CapacityResult):
        self.noise_levels = noise_levels
        self.noise_curve = noise_curve
        self.powers = powers
        self.power_curve = power_curve
        self.nominal = nominal

    def to_json(self):
        return {"noise_levels": self.noise_levels.tolist(), "capacity_vs_noise": self.noise_curve.tolist(),
                "powers": self.powers.tolist(), "capacity_vs_power": self.power_curve.tolist(),
                "nominal": self.nominal}


def _ascending_positive(name: str, values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not len(arr) or np.any(arr <= 0) or np.any(np.diff(arr) <= 0):
        raise CapacityError(name + " must be positive and strictly ascending")
    return arr


def capacity_sweeps(response: FrequencyResponse, noise_levels: Sequence[float], powers: Sequence[float],
                    noise: Optional[NoiseModel] = None, P_av: float = 1e-2) -> CapacitySweeps:
    """Capacity vs noise level (fixed P_av) and vs P_av (fixed noise), plus the
    spectral efficiency and cumulative capacity at the nominal setting."""
    noise = noise or NoiseModel()
    levels = _ascending_positive("noise levels", noise_levels)
    budgets = _ascending_positive("power budgets", powers)
    noise_curve = np.array([water_fill(response, NoiseModel(level), P_av).capacity_total for level in levels])
    power_curve = np.array([water_fill(response, noise, budget).capacity_total for budget in budgets])
    return CapacitySweeps(levels, noise_curve, budgets, power_curve, water_fill(response, noise, P_av))


def sweep_operating_point(sys: LinearizedSystem, noise_levels: Sequence[float], powers: Sequence[float],
                          noise: Optional[NoiseModel] = None, P_av: float = 1e-2, **bode_kwargs) -> CapacitySweeps:
    return capacity_sweeps(bode(sys, **bode_kwargs), noise_levels, powers, noise, P_av)
