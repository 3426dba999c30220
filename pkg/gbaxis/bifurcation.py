"""One-parameter sweep of constant k_leak and detection of the two tipping points."""
import logging
from typing import List, Optional, Sequence
import numpy as np
from gbaxis.model import GbaError, ModelParameters, CircadianDrive, IDX_C, as_state_array
from gbaxis.integrator import IntegratorConfig, integrate
from gbaxis.scenarios import DAY, ScenarioConfig, measure_rhythm
from gbaxis.steadystate import find_equilibrium
from gbaxis.core import ParallelRunner


HEALTHY = "healthy-rhythm"
DAMPENED = "dampened"
DISRUPTED = "disrupted"
_RANK = {HEALTHY: 0, DAMPENED: 1, DISRUPTED: 2}


class BifurcationError(GbaError):
    pass


class BifurcationPoint:
    def __init__(self, k_leak: float, amplitude: float, mean_cortisol: float, regime: Optional[str] = None):
        self.k_leak = k_leak
        self.amplitude = amplitude
        self.mean_cortisol = mean_cortisol
        self.regime = regime

    @property
    def columns(self):
        return ("kleak", "amplitude", "mean_cortisol", "regime")

    def row(self):
        return [self.k_leak, self.amplitude, self.mean_cortisol, self.regime]

    def to_json(self):
        return dict(self.__dict__)


class SweepResult:
    def __init__(self, points: List[BifurcationPoint], reference_amplitude: float,
                 threshold_1: Optional[float] = None, threshold_2: Optional[float] = None, anomaly: bool = False):
        self.points = points
        self.reference_amplitude = reference_amplitude
        self.threshold_1 = threshold_1
        self.threshold_2 = threshold_2
        self.anomaly = anomaly

    @property
    def columns(self):
        return ("kleak", "amplitude", "mean_cortisol", "regime")

    def rows(self):
        for point in self.points:
            yield point.row()

    def to_json(self):
        return {"threshold_1": self.threshold_1, "threshold_2": self.threshold_2,
                "reference_amplitude": self.reference_amplitude, "anomaly": self.anomaly,
                "points": len(self.points)}


class Classifier:
    def __init__(self, reference_amplitude: float, healthy_fraction: float = 0.5, disrupted_fraction: float = 0.01):
        if not 0 < disrupted_fraction < healthy_fraction:
            raise BifurcationError("need 0 < disrupted_fraction < healthy_fraction")
        self.reference_amplitude = reference_amplitude
        self.healthy_fraction = healthy_fraction
        self.disrupted_fraction = disrupted_fraction

    def __call__(self, amplitude: float) -> str:
        if amplitude >= self.healthy_fraction * self.reference_amplitude:
            return HEALTHY
        if amplitude >= self.disrupted_fraction * self.reference_amplitude:
            return DAMPENED
        return DISRUPTED


def _evaluate(args) -> BifurcationPoint:
    k_leak, p, drive, cfg, scenario_cfg = args
    ts = integrate(p, drive, k_leak, as_state_array(scenario_cfg.initial_state), cfg)
    window = (scenario_cfg.analysis_start, ts.times[-1])
    rhythm = measure_rhythm(ts, "C", window, min_distance=0.5 * drive.period)
    mean = float(np.mean(ts.channel("C")[ts.window_mask(*window)]))
    logging.debug("k_leak=" + repr(k_leak) + ": amplitude " + repr(rhythm.amplitude) + ", mean C " + repr(mean))
    return BifurcationPoint(k_leak, rhythm.amplitude, mean)


def _refine(lo: float, hi: float, enters, evaluate, resolution: float) -> float:
    """Smallest k in (lo, hi] found to satisfy `enters`, to within `resolution`."""
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if enters(evaluate(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def sweep(kleak_grid: Sequence[float], p: ModelParameters, drive: CircadianDrive,
          cfg: Optional[IntegratorConfig] = None, scenario_cfg: Optional[ScenarioConfig] = None,
          healthy_fraction: float = 0.5, disrupted_fraction: float = 0.01, resolution: float = 0.01,
          jobs: int = 1) -> SweepResult:
    cfg = cfg or IntegratorConfig()
    scenario_cfg = scenario_cfg or ScenarioConfig()
    grid = [float(k) for k in kleak_grid]
    if not grid or any(k < 0 for k in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise BifurcationError("the k_leak grid must be non-negative and strictly ascending")
    if cfg.horizon < 10 * DAY:
        raise BifurcationError("each sweep point needs at least 10 simulated days")

    tasks = [(k, p, drive, cfg, scenario_cfg) for k in grid]
    if grid[0] != 0.0:
        tasks.insert(0, (0.0, p, drive, cfg, scenario_cfg))
    evaluated = ParallelRunner(jobs).map(_evaluate, tasks, label="sweep point")
    reference = evaluated[0].amplitude
    points = evaluated if grid[0] == 0.0 else evaluated[1:]
    if reference <= 0:
        raise BifurcationError("the zero-stress run has no cortisol rhythm to compare against")

    classify = Classifier(reference, healthy_fraction, disrupted_fraction)
    for point in points:
        point.regime = classify(point.amplitude)
    ranks = [_RANK[point.regime] for point in points]
    anomaly = any(b < a for a, b in zip(ranks, ranks[1:]))
    if anomaly:
        logging.warning("reentrant rhythm: regime sequence is not monotone in k_leak")

    def evaluate(k):
        return classify(_evaluate((k, p, drive, cfg, scenario_cfg)).amplitude)

    thresholds = []
    for minimum in (1, 2):
        def enters(regime, minimum=minimum):
            return _RANK[regime] >= minimum
        first = next((i for i, r in enumerate(ranks) if r >= minimum), None)
        if first is None:
            thresholds.append(None)
        elif first == 0:
            thresholds.append(grid[0])
        else:
            thresholds.append(_refine(grid[first - 1], grid[first], enters, evaluate, resolution))
    threshold_1, threshold_2 = thresholds
    if threshold_1 is not None and threshold_2 is not None and threshold_1 > threshold_2:
        # a direct jump to disruption refines both thresholds inside the same bracket
        threshold_1 = threshold_2
    logging.info("thresholds: " + repr(threshold_1) + ", " + repr(threshold_2))
    return SweepResult(points, reference, threshold_1, threshold_2, anomaly)


def recovery_time(p: ModelParameters, drive: CircadianDrive, k_leak: float, perturbation: float = 0.05,
                  fraction: float = 0.1, cfg: Optional[IntegratorConfig] = None) -> Optional[float]:
    """Minutes until a relative cortisol kick of size `perturbation`, applied to
    the frozen-drive equilibrium at `k_leak`, shrinks below `fraction` of its
    initial size and stays there.

    Returns None if the kick has not decayed by the end of the horizon.
    """
    cfg = cfg or IntegratorConfig()
    x_star = find_equilibrium(p, drive, k_leak, cfg=cfg)
    kicked = x_star.copy()
    kicked[IDX_C] *= 1.0 + perturbation
    ts = integrate(p, drive.frozen(), k_leak, kicked, cfg)
    gap = np.abs(ts.channel("C") - x_star[IDX_C])
    if not gap[0] > 0:
        return 0.0
    limit = fraction * gap[0]
    outside = np.flatnonzero(gap > limit)
    if not len(outside):
        return 0.0
    last = int(outside[-1])
    if last == len(gap) - 1:
        return None
    return float(ts.times[last + 1] - ts.times[0])
