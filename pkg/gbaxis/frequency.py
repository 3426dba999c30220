"""Delay transfer function H(jw), Bode data, DC gain and half-power bandwidth."""
import logging
from typing import Optional, Sequence, Union
import numpy as np
from scipy.optimize import brentq
from gbaxis.model import GbaError
from gbaxis.steadystate import LinearizedSystem


MAX_CONDITION = 1e12


class FrequencyError(GbaError):
    def __init__(self, message, omega: Optional[float] = None):
        GbaError.__init__(self, message)
        self.omega = omega


def _responses(sys: LinearizedSystem, omegas: np.ndarray) -> np.ndarray:
    """C_out (jwI - J0 - J_hpa e^{-jw tau_hpa} - J_gut e^{-jw tau_gut})^-1 B for every w at once."""
    s = 1j * omegas[:, None, None]
    eye = np.eye(sys.dim)[None, :, :]
    resolvent = (s * eye - sys.J0[None, :, :]
                 - sys.J_hpa[None, :, :] * np.exp(-s * sys.tau_hpa)
                 - sys.J_gut[None, :, :] * np.exp(-s * sys.tau_gut))
    cond = np.linalg.cond(resolvent)
    bad = np.flatnonzero(~(cond <= MAX_CONDITION))
    if len(bad):
        omega = float(omegas[bad[0]])
        raise FrequencyError("resolvent is numerically singular at omega=" + repr(omega)
                             + " rad/min (condition " + repr(float(cond[bad[0]])) + "), close to a resonance "
                             "or bifurcation", omega)
    rhs = np.broadcast_to(sys.B.astype(complex)[None, :, None], (len(omegas), sys.dim, 1))
    v = np.linalg.solve(resolvent, rhs)[:, :, 0]
    return v @ sys.C_out


def transfer_function(sys: LinearizedSystem, omega: Union[float, Sequence[float]], check_stable: bool = True):
    if check_stable:
        sys.require_stable()
    omegas = np.atleast_1d(np.asarray(omega, dtype=float))
    values = _responses(sys, omegas)
    return complex(values[0]) if np.ndim(omega) == 0 else values


class FrequencyResponse:
    def __init__(self, grid: np.ndarray, H: np.ndarray, dc_gain: float, omega_3db: Optional[float]):
        self.grid = grid
        self.H = H
        self.magnitude = np.abs(H)
        self.magnitude_db = 20.0 * np.log10(self.magnitude)
        self.phase_deg = np.degrees(np.unwrap(np.angle(H)))
        self.dc_gain = dc_gain
        self.omega_3db = omega_3db

    def with_zero_phase(self) -> 'FrequencyResponse':
        return FrequencyResponse(self.grid, self.magnitude.astype(complex), self.dc_gain, self.omega_3db)

    @property
    def columns(self):
        return ("omega", "reH", "imH", "mag_db", "phase_deg")

    def rows(self):
        for i in range(len(self.grid)):
            yield [self.grid[i], self.H[i].real, self.H[i].imag, self.magnitude_db[i], self.phase_deg[i]]

    def to_json(self):
        return {"dc_gain": self.dc_gain, "omega_3db": self.omega_3db, "points": len(self.grid),
                "f_min": float(self.grid[0]), "f_max": float(self.grid[-1])}


def bandwidth(sys: LinearizedSystem, grid: np.ndarray, magnitude: np.ndarray, dc_gain: float) -> Optional[float]:
    """First downward crossing of |H(0)|/sqrt(2), refined by bracketing root search."""
    threshold = abs(dc_gain) / np.sqrt(2.0)
    below = np.flatnonzero(magnitude < threshold)
    if not len(below):
        logging.warning("|H| stays above the half-power level up to " + repr(float(grid[-1]))
                        + " rad/min; widen the grid to locate omega_3db")
        return None
    i = int(below[0])
    if i == 0:
        logging.warning("|H| is already below the half-power level at " + repr(float(grid[0]))
                        + " rad/min; lower f_min to locate omega_3db")
        return None

    def excess(log_w):
        return abs(_responses(sys, np.array([np.exp(log_w)]))[0]) - threshold

    root = brentq(excess, np.log(grid[i - 1]), np.log(grid[i]), xtol=1e-14, rtol=1e-14)
    return float(np.exp(root))


def bode(sys: LinearizedSystem, f_min: float = 1e-6, f_max: float = 1.0, points: int = 400,
         check_stable: bool = True) -> FrequencyResponse:
    if check_stable:
        sys.require_stable()
    if not 0 < f_min < f_max or points < 2:
        raise FrequencyError("need 0 < f_min < f_max and at least 2 points")
    grid = np.logspace(np.log10(f_min), np.log10(f_max), int(points))
    H = _responses(sys, grid)
    if not np.all(np.isfinite(H)):
        raise FrequencyError("non-finite transfer function values on the grid")
    dc = sys.dc_gain()
    return FrequencyResponse(grid, H, dc, bandwidth(sys, grid, np.abs(H), dc))
