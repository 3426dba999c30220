"""Stress input profiles, the healthy/acute/chronic scenarios and rhythm metrics."""
import math
import logging
from typing import List, Optional, Sequence, Tuple, Union
import numpy as np
from scipy.signal import find_peaks
from numpy.lib.stride_tricks import sliding_window_view
from gbaxis.model import GbaError, ModelParameters, CircadianDrive, STATE_NAMES, RESTING_STATE, as_state_array
from gbaxis.integrator import IntegratorConfig, TimeSeries, integrate


DAY = 1440.0
SCENARIO_NAMES = ("healthy", "acute", "chronic")


class ScenarioError(GbaError):
    pass


class InputProfile:
    """Piecewise-constant, right-continuous leak rate u(t)."""
    KINDS = ("constant", "pulse", "step", "custom")

    def __init__(self, kind: str = "constant", baseline: float = 0.1, elevated: float = 0.0,
                 t_on: float = 0.0, t_off: Optional[float] = None,
                 segments: Optional[Sequence[Tuple[float, float]]] = None):
        if kind not in self.KINDS:
            raise ScenarioError("unknown input profile kind " + repr(kind))
        self.kind = kind
        self.baseline = float(baseline)
        self.elevated = float(elevated)
        self.t_on = float(t_on)
        self.t_off = None if t_off is None else float(t_off)
        self.segments: List[Tuple[float, float]] = [(float(t), float(v)) for t, v in (segments or [])]
        self._validate()

    def _validate(self):
        values = [self.baseline, self.elevated] + [v for _, v in self.segments]
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ScenarioError("leak rates must be finite and >= 0")
        if self.kind == "pulse" and (self.t_off is None or not self.t_off > self.t_on):
            raise ScenarioError("a pulse needs t_off > t_on")
        if self.kind == "custom":
            if not self.segments:
                raise ScenarioError("a custom profile needs at least one segment")
            starts = [t for t, _ in self.segments]
            if any(b <= a for a, b in zip(starts, starts[1:])):
                raise ScenarioError("custom segment breakpoints must be strictly increasing")

    @staticmethod
    def constant(level: float) -> 'InputProfile':
        return InputProfile("constant", baseline=level)

    @staticmethod
    def pulse(baseline: float, elevated: float, t_on: float, t_off: float) -> 'InputProfile':
        return InputProfile("pulse", baseline=baseline, elevated=elevated, t_on=t_on, t_off=t_off)

    @staticmethod
    def step(baseline: float, elevated: float, t_on: float) -> 'InputProfile':
        return InputProfile("step", baseline=baseline, elevated=elevated, t_on=t_on)

    @staticmethod
    def custom(segments: Sequence[Tuple[float, float]], baseline: float = 0.0) -> 'InputProfile':
        return InputProfile("custom", baseline=baseline, segments=segments)

    def value(self, t: float) -> float:
        if self.kind == "constant":
            return self.baseline
        if self.kind == "pulse":
            return self.elevated if self.t_on <= t < self.t_off else self.baseline
        if self.kind == "step":
            return self.elevated if t >= self.t_on else self.baseline
        current = self.baseline
        for start, level in self.segments:
            if t < start:
                break
            current = level
        return current

    def breakpoints(self) -> List[float]:
        if self.kind == "pulse":
            return [self.t_on, self.t_off]
        if self.kind == "step":
            return [self.t_on]
        return [t for t, _ in self.segments]

    def to_json(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


class ScenarioConfig:
    def __init__(self, baseline: float = 0.1, elevated: float = 3.0, t_on: float = 2880.0,
                 pulse_duration: float = 720.0, initial_state: Sequence[float] = RESTING_STATE,
                 analysis_start: float = 3 * DAY, final_window: float = 3 * DAY,
                 recovery_tolerance: float = 0.05):
        self.baseline = float(baseline)
        self.elevated = float(elevated)
        self.t_on = float(t_on)
        self.pulse_duration = float(pulse_duration)
        self.initial_state = [float(v) for v in initial_state]
        self.analysis_start = float(analysis_start)
        self.final_window = float(final_window)
        self.recovery_tolerance = float(recovery_tolerance)

    def profile(self, name: str) -> InputProfile:
        if name == "healthy":
            return InputProfile.constant(self.baseline)
        if name == "acute":
            return InputProfile.pulse(self.baseline, self.elevated, self.t_on, self.t_on + self.pulse_duration)
        if name == "chronic":
            return InputProfile.step(self.baseline, self.elevated, self.t_on)
        raise ScenarioError("unknown scenario " + repr(name) + ", expected one of " + ", ".join(SCENARIO_NAMES))


class Rhythm:
    def __init__(self, period: Optional[float], amplitude: float, peaks: np.ndarray, troughs: np.ndarray):
        self.period = period
        self.amplitude = amplitude
        self.peaks = peaks
        self.troughs = troughs

    def __iter__(self):
        return iter((self.period, self.amplitude, self.peaks))


def _away_from_edges(indices: np.ndarray, times: np.ndarray, margin: float) -> np.ndarray:
    at = times[indices]
    return indices[(at - times[0] >= margin) & (times[-1] - at >= margin)]


def measure_rhythm(ts: TimeSeries, channel: str, window: Tuple[float, float],
                   min_distance: Optional[float] = None) -> Rhythm:
    """Period and peak-to-trough amplitude of one channel inside a window.

    Peaks need a prominence of 1% of the window's range; `min_distance`
    (minutes) additionally separates neighbouring peaks and drops extrema
    closer than that to either end of the window, where a cycle is cut off.
    """
    t0, t1 = window
    if t0 < ts.times[0] - 1e-9 or t1 > ts.times[-1] + 1e-9 or not t1 > t0:
        raise ScenarioError("window " + repr(window) + " is not inside the trajectory")
    mask = ts.window_mask(t0, t1)
    times = ts.times[mask]
    values = ts.channel(channel)[mask]
    spread = float(values.max() - values.min())
    if spread == 0:
        return Rhythm(None, 0.0, np.array([]), np.array([]))

    kwargs = {"prominence": 0.01 * spread}
    if min_distance:
        spacing = times[1] - times[0]
        kwargs["distance"] = max(1, int(math.ceil(min_distance / spacing)))
    peaks, _ = find_peaks(values, **kwargs)
    troughs, _ = find_peaks(-values, **kwargs)
    if min_distance:
        peaks = _away_from_edges(peaks, times, min_distance)
        troughs = _away_from_edges(troughs, times, min_distance)
    if len(peaks) < 2:
        return Rhythm(None, spread, times[peaks], times[troughs])
    period = float(np.mean(np.diff(times[peaks])))
    if len(troughs):
        amplitude = float(np.mean(values[peaks]) - np.mean(values[troughs]))
    else:
        amplitude = spread
    return Rhythm(period, max(amplitude, 0.0), times[peaks], times[troughs])


class ScenarioReport:
    def __init__(self, name: str, trajectory: TimeSeries, profile: InputProfile):
        self.name = name
        self.trajectory = trajectory
        self.profile = profile
        self.cortisol_period: Optional[float] = None
        self.cortisol_amplitude: float = 0.0
        self.final_amplitude: float = 0.0
        self.final_mean_cortisol: float = 0.0
        self.recovery_time: Optional[float] = None
        self.cascade = {}

    def to_json(self):
        return {
            "name": self.name,
            "profile": self.profile,
            "cortisol_period": self.cortisol_period,
            "cortisol_amplitude": self.cortisol_amplitude,
            "final_amplitude": self.final_amplitude,
            "final_mean_cortisol": self.final_mean_cortisol,
            "recovery_time": self.recovery_time,
            "cascade": self.cascade,
        }


def _envelope(values: np.ndarray, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """Centred rolling max/min; edges use the shrunken window."""
    half = width // 2
    padded = np.pad(values, half, mode="edge")
    view = sliding_window_view(padded, 2 * half + 1)
    return view.max(axis=1), view.min(axis=1)


def recovery_time(stressed: TimeSeries, reference: TimeSeries, t_release: float,
                  tolerance: float = 0.05, period: float = DAY) -> Optional[float]:
    """Minutes after `t_release` until the cortisol envelope stays within
    `tolerance` (relative to the reference peak level) for a full period."""
    if len(stressed) != len(reference):
        raise ScenarioError("recovery needs trajectories on the same time grid")
    spacing = stressed.times[1] - stressed.times[0]
    width = int(round(period / spacing))
    hi_s, lo_s = _envelope(stressed.channel("C"), width)
    hi_r, lo_r = _envelope(reference.channel("C"), width)
    allowed = tolerance * np.maximum(np.abs(hi_r), 1e-300)
    inside = (np.abs(hi_s - hi_r) <= allowed) & (np.abs(lo_s - lo_r) <= allowed)

    start = int(np.searchsorted(stressed.times, t_release - 1e-9))
    run = 0
    for i in range(start, len(inside)):
        run = run + 1 if inside[i] else 0
        if run > width:
            return float(stressed.times[i - width] - t_release)
    return None


def _cascade(ts: TimeSeries, t0: float):
    mask = ts.window_mask(t0, ts.times[-1])
    times = ts.times[mask]
    out = {}
    for name in STATE_NAMES:
        values = ts.channel(name)[mask]
        i = int(np.argmax(values))
        out[name] = {"peak": float(values[i]), "time": float(times[i])}
    return out


def run_scenario(scenario: Union[str, InputProfile], p: ModelParameters, drive: CircadianDrive,
                 cfg: Optional[IntegratorConfig] = None,
                 scenario_cfg: Optional[ScenarioConfig] = None) -> ScenarioReport:
    cfg = cfg or IntegratorConfig()
    scenario_cfg = scenario_cfg or ScenarioConfig()
    if isinstance(scenario, InputProfile):
        name, profile = "custom", scenario
    else:
        name, profile = scenario, scenario_cfg.profile(scenario)
        if cfg.horizon < 10 * DAY:
            raise ScenarioError("named scenarios need a horizon of at least 10 days, got "
                                + repr(cfg.horizon) + " min")

    history = as_state_array(scenario_cfg.initial_state)
    logging.info("running scenario " + name)
    ts = integrate(p, drive, profile, history, cfg)
    report = ScenarioReport(name, ts, profile)

    horizon = ts.times[-1]
    start = scenario_cfg.analysis_start
    if profile.kind == "pulse":
        start = max(start, profile.t_off)
    if start >= horizon:
        raise ScenarioError("analysis window starts after the end of the run")
    rhythm = measure_rhythm(ts, "C", (start, horizon), min_distance=0.5 * drive.period)
    report.cortisol_period = rhythm.period if len(rhythm.peaks) >= 3 else None
    report.cortisol_amplitude = rhythm.amplitude

    final_start = max(ts.times[0], horizon - scenario_cfg.final_window)
    final = measure_rhythm(ts, "C", (final_start, horizon), min_distance=0.5 * drive.period)
    report.final_amplitude = final.amplitude
    report.final_mean_cortisol = float(np.mean(ts.channel("C")[ts.window_mask(final_start, horizon)]))

    if profile.kind == "pulse":
        reference = integrate(p, drive, InputProfile.constant(profile.baseline), history, cfg)
        report.recovery_time = recovery_time(ts, reference, profile.t_off,
                                             scenario_cfg.recovery_tolerance, drive.period)
        report.cascade = _cascade(ts, profile.t_on)
        if report.recovery_time is None:
            logging.warning("scenario " + name + ": cortisol did not return to the reference rhythm")
    return report
