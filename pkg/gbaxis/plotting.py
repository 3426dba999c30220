"""SVG figures for trajectories, Bode data, capacity curves and bifurcation sweeps."""
import io
import math
from typing import Any, Dict
import matplotlib
matplotlib.use("Agg")
import matplotlib as mpl
from matplotlib.figure import Figure
import numpy as np
from gbaxis.model import GbaError
from gbaxis.printers import atomic_write


PLOT_KINDS = ("timeseries", "bode", "capacity", "bifurcation")
_TIMESERIES_CHANNELS = (("P", "Endotoxin"), ("T", "TNF-alpha"), ("A", "ACTH (pg/mL)"), ("C", "Cortisol (ug/dL)"))


class PlotError(GbaError):
    pass


def _figure(rows: int, width: float = 8.0) -> Figure:
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    height = width * golden_ratio * max(1.0, 0.6 * rows)
    return Figure(figsize=(width, height), facecolor="w")


def _labelled(data: Any) -> Dict[str, Any]:
    if isinstance(data, dict):
        return data
    return {"": data}


def _timeseries(fig: Figure, curves: Dict[str, Any]):
    axes = fig.subplots(len(_TIMESERIES_CHANNELS), 1, sharex=True)
    for ax, (name, label) in zip(axes, _TIMESERIES_CHANNELS):
        for curve_label, ts in curves.items():
            ax.plot(ts.times / 60.0, ts.channel(name), label=curve_label or None, linewidth=1.0)
        ax.set_ylabel(label)
    axes[-1].set_xlabel("Time (h)")


def _bode(fig: Figure, curves: Dict[str, Any]):
    ax_mag, ax_phase = fig.subplots(2, 1, sharex=True)
    for label, response in curves.items():
        ax_mag.semilogx(response.grid, response.magnitude_db, label=label or None)
        ax_phase.semilogx(response.grid, response.phase_deg, label=label or None)
        if response.omega_3db is not None:
            ax_mag.axvline(response.omega_3db, linestyle=":", linewidth=0.8, color="grey")
    ax_mag.set_ylabel("|H| (dB)")
    ax_phase.set_ylabel("Phase (deg)")
    ax_phase.set_xlabel("Angular frequency (rad/min)")


def _capacity(fig: Figure, curves: Dict[str, Any]):
    first = next(iter(curves.values()))
    if isinstance(first, (list, tuple)):
        ax = fig.subplots(1, 1)
        for label, points in curves.items():
            ks = [pt.k_leak for pt in points]
            caps = [np.nan if pt.capacity is None else pt.capacity for pt in points]
            ax.plot(ks, caps, marker="o", label=label or None)
        ax.set_xlabel("k_leak (1/min)")
        ax.set_ylabel("Capacity (bits/min)")
        return
    (ax_eta, ax_cum), (ax_noise, ax_power) = fig.subplots(2, 2)
    for label, sweeps in curves.items():
        nominal = sweeps.nominal
        ax_eta.semilogx(nominal.grid, nominal.eta, label=label or None)
        ax_cum.semilogx(nominal.grid, nominal.cumulative(), label=label or None)
        ax_noise.loglog(sweeps.noise_levels, sweeps.noise_curve, marker="o", label=label or None)
        ax_power.semilogx(sweeps.powers, sweeps.power_curve, marker="o", label=label or None)
    ax_eta.set_ylabel("Spectral efficiency (bits per use)")
    ax_cum.set_ylabel("Cumulative capacity (bits/min)")
    ax_noise.set_xlabel("Noise level")
    ax_noise.set_ylabel("Capacity (bits/min)")
    ax_power.set_xlabel("Power budget")
    for ax in (ax_eta, ax_cum):
        ax.set_xlabel("Angular frequency (rad/min)")


def _bifurcation(fig: Figure, curves: Dict[str, Any]):
    ax = fig.subplots(1, 1)
    for label, result in curves.items():
        ax.plot([pt.k_leak for pt in result.points], [pt.amplitude for pt in result.points],
                marker="o", label=label or None)
        for threshold in (result.threshold_1, result.threshold_2):
            if threshold is not None:
                ax.axvline(threshold, linestyle="--", color="red", linewidth=1.0)
    ax.set_xlabel("k_leak (1/min)")
    ax.set_ylabel("Cortisol amplitude (ug/dL)")


_BUILDERS = {
    "timeseries": _timeseries,
    "bode": _bode,
    "capacity": _capacity,
    "bifurcation": _bifurcation,
}


def _is_empty(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, (list, tuple, dict)):
        return not value
    points = getattr(value, "points", None)
    if points is not None:
        return not points
    grid = getattr(value, "grid", getattr(value, "times", None))
    return grid is not None and not len(grid)


def build_figure(data: Any, kind: str) -> Figure:
    if kind not in _BUILDERS:
        raise PlotError("unknown plot kind " + repr(kind) + ", expected one of " + ", ".join(PLOT_KINDS))
    curves = _labelled(data)
    if not curves or any(_is_empty(v) for v in curves.values()):
        raise PlotError("cannot plot empty " + kind + " data")
    fig = _figure(4 if kind == "timeseries" else 2)
    _BUILDERS[kind](fig, curves)
    if any(curves.keys()):
        fig.axes[0].legend()
    fig.tight_layout()
    return fig


def render_svg(data: Any, kind: str) -> str:
    fig = build_figure(data, kind)
    out = io.StringIO()
    # fixed salt and no date keep the bytes identical across runs
    with mpl.rc_context({"svg.hashsalt": "gbaxis", "svg.fonttype": "path"}):
        fig.savefig(out, format="svg", metadata={"Date": None})
    return out.getvalue()


def emit_plot(data: Any, kind: str, path: str) -> str:
    atomic_write(path, render_svg(data, kind))
    return path
