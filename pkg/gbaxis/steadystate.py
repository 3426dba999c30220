"""Frozen-circadian equilibrium and small-signal linearization around it."""
import logging
from typing import Callable, Optional
import numpy as np
from gbaxis.model import (GbaError, ModelParameters, CircadianDrive, STATE_DIM, STATE_NAMES,
                          IDX_P, IDX_A, IDX_C, IDX_L, NEGATIVE_TOLERANCE, RESTING_STATE,
                          as_state_array, derivative)
from gbaxis.integrator import IntegratorConfig, integrate


RESIDUAL_TOLERANCE = 1e-10
SPARSITY_TOLERANCE = 1e-8
C_OUT = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 0.0])

# delayed entries allowed to be nonzero
HPA_PATTERN = ((IDX_A, IDX_C), (IDX_C, IDX_A))
GUT_PATTERN = ((IDX_L, IDX_C),)


class EquilibriumError(GbaError):
    def __init__(self, message, residual: Optional[float] = None, x: Optional[np.ndarray] = None):
        GbaError.__init__(self, message)
        self.residual = residual
        self.x = x


class LinearizationError(GbaError):
    pass


class UnstableOperatingPointError(GbaError):
    pass


class LinearizedSystem:
    """delta x' = J0 dx(t) + J_hpa dx(t - tau_hpa) + J_gut dx(t - tau_gut) + B du, y = C_out dx."""

    def __init__(self, x_star, u_star: float, J0: np.ndarray, J_hpa: np.ndarray, J_gut: np.ndarray,
                 B: np.ndarray, tau_hpa: float, tau_gut: float, C_out: Optional[np.ndarray] = None,
                 E_bar: float = 1.0, stable: Optional[bool] = None):
        self.x_star = np.asarray(x_star, dtype=float)
        self.u_star = float(u_star)
        self.J0 = np.atleast_2d(np.asarray(J0, dtype=float))
        self.J_hpa = np.atleast_2d(np.asarray(J_hpa, dtype=float))
        self.J_gut = np.atleast_2d(np.asarray(J_gut, dtype=float))
        self.B = np.atleast_1d(np.asarray(B, dtype=float))
        self.C_out = C_OUT.copy() if C_out is None else np.atleast_1d(np.asarray(C_out, dtype=float))
        self.tau_hpa = float(tau_hpa)
        self.tau_gut = float(tau_gut)
        self.E_bar = float(E_bar)
        # None: not probed yet
        self.stable = stable

    @property
    def dim(self) -> int:
        return len(self.B)

    @property
    def J_sum(self) -> np.ndarray:
        return self.J0 + self.J_hpa + self.J_gut

    def dc_gain(self) -> float:
        return float(-self.C_out @ np.linalg.solve(self.J_sum, self.B))

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.J_sum))

    def require_stable(self):
        if self.stable is not True:
            state = "unprobed" if self.stable is None else "unstable"
            raise UnstableOperatingPointError("unstable operating point: u*=" + repr(self.u_star)
                                              + " is " + state + "; frequency analysis needs a "
                                              "locally asymptotically stable equilibrium")

    def to_json(self):
        return {
            "x_star": dict(zip(STATE_NAMES, self.x_star.tolist())) if self.dim == STATE_DIM else self.x_star.tolist(),
            "u_star": self.u_star,
            "E_bar": self.E_bar,
            "tau_hpa": self.tau_hpa,
            "tau_gut": self.tau_gut,
            "J0": self.J0.tolist(),
            "J_hpa": self.J_hpa.tolist(),
            "J_gut": self.J_gut.tolist(),
            "B": self.B.tolist(),
            "C_out": self.C_out.tolist(),
            "stable": self.stable,
            "condition_number": self.condition_number(),
        }


def _residual_function(p: ModelParameters, e_bar: float, u_star: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: derivative(x, x, x, u_star, e_bar, p)


def _fd_jacobian(g: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    jac = np.empty((len(x), len(x)))
    for i in range(len(x)):
        step = max(1e-6, 1e-6 * abs(x[i]))
        plus = x.copy()
        minus = x.copy()
        plus[i] += step
        minus[i] -= step
        jac[:, i] = (g(plus) - g(minus)) / (2.0 * step)
    return jac


def simulated_start(p: ModelParameters, drive: CircadianDrive, u_star: float,
                    days: float = 20.0, initial=None, cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Final state of a constant-input run with the circadian drive frozen at its mean."""
    base = cfg or IntegratorConfig()
    run_cfg = IntegratorConfig(step=base.step, horizon=days * 1440.0, output_spacing=base.output_spacing)
    if initial is None:
        initial = np.array(RESTING_STATE)
    ts = integrate(p, drive.frozen(), u_star, initial, run_cfg)
    return ts.final_state()


def find_equilibrium(p: ModelParameters, drive: CircadianDrive, u_star: float, start=None,
                     max_iter: int = 200, tol: float = RESIDUAL_TOLERANCE,
                     cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Damped Newton on f(x, x, x, u*) = 0 with E frozen at its mean.

    Without `start` the iteration begins from a 20-day frozen-drive run that
    uses the step of `cfg`.
    """
    if not u_star >= 0:
        raise EquilibriumError("u* must be >= 0, got " + repr(u_star))
    x = simulated_start(p, drive, u_star, cfg=cfg) if start is None else as_state_array(start).copy()
    g = _residual_function(p, drive.mean_level, u_star)
    gx = g(x)
    norm = float(np.max(np.abs(gx)))
    best_x, best = x.copy(), norm

    for it in range(max_iter):
        if norm <= tol:
            break
        jac = _fd_jacobian(g, x)
        try:
            dx = np.linalg.solve(jac, -gx)
        except np.linalg.LinAlgError:
            raise EquilibriumError("singular Jacobian in Newton iteration " + str(it), best, best_x)
        damping = 1.0
        while damping > 1e-8:
            trial = np.maximum(x + damping * dx, 0.0)
            g_trial = g(trial)
            n_trial = float(np.max(np.abs(g_trial)))
            if np.isfinite(n_trial) and n_trial < norm:
                break
            damping *= 0.5
        else:
            raise EquilibriumError("Newton line search stalled, best residual " + repr(best), best, best_x)
        x, gx, norm = trial, g_trial, n_trial
        logging.debug("newton " + str(it) + ": residual " + repr(norm) + ", damping " + repr(damping))
        if norm < best:
            best_x, best = x.copy(), norm
    else:
        if norm > tol:
            raise EquilibriumError("Newton did not converge in " + str(max_iter) + " iterations, best residual "
                                   + repr(best), best, best_x)

    if np.any(x < -NEGATIVE_TOLERANCE):
        raise EquilibriumError("nonphysical equilibrium with a negative component: " + repr(x.tolist()), norm, x)
    return np.maximum(x, 0.0)


def _enforce_pattern(name: str, jac: np.ndarray, allowed) -> np.ndarray:
    mask = np.zeros_like(jac, dtype=bool)
    for row, col in allowed:
        mask[row, col] = True
    stray = np.abs(np.where(mask, 0.0, jac))
    if stray.max() > SPARSITY_TOLERANCE:
        row, col = np.unravel_index(int(np.argmax(stray)), jac.shape)
        raise LinearizationError(name + " has a stray entry at (" + STATE_NAMES[row] + ", " + STATE_NAMES[col]
                                 + ") = " + repr(jac[row, col]))
    return np.where(mask, jac, 0.0)


def linearize(p: ModelParameters, x_star, u_star: float, e_bar: float = 1.0) -> LinearizedSystem:
    """Central finite-difference Jacobians with respect to x(t), x(t - tau_hpa), x(t - tau_gut) and u."""
    x_star = as_state_array(x_star)
    J0 = np.empty((STATE_DIM, STATE_DIM))
    J_hpa = np.empty((STATE_DIM, STATE_DIM))
    J_gut = np.empty((STATE_DIM, STATE_DIM))
    for i in range(STATE_DIM):
        step = max(1e-6, 1e-6 * abs(x_star[i]))
        plus = x_star.copy()
        minus = x_star.copy()
        plus[i] += step
        minus[i] -= step
        J0[:, i] = (derivative(plus, x_star, x_star, u_star, e_bar, p)
                    - derivative(minus, x_star, x_star, u_star, e_bar, p)) / (2.0 * step)
        J_hpa[:, i] = (derivative(x_star, plus, x_star, u_star, e_bar, p)
                       - derivative(x_star, minus, x_star, u_star, e_bar, p)) / (2.0 * step)
        J_gut[:, i] = (derivative(x_star, x_star, plus, u_star, e_bar, p)
                       - derivative(x_star, x_star, minus, u_star, e_bar, p)) / (2.0 * step)
    du = max(1e-6, 1e-6 * abs(u_star))
    B = (derivative(x_star, x_star, x_star, u_star + du, e_bar, p)
         - derivative(x_star, x_star, x_star, u_star - du, e_bar, p)) / (2.0 * du)

    J_hpa = _enforce_pattern("J_hpa", J_hpa, HPA_PATTERN)
    J_gut = _enforce_pattern("J_gut", J_gut, GUT_PATTERN)
    stray = np.abs(np.delete(B, IDX_P)).max()
    if stray > SPARSITY_TOLERANCE:
        raise LinearizationError("B has a stray entry outside the P row: " + repr(B.tolist()))
    B = np.zeros(STATE_DIM)
    B[IDX_P] = x_star[IDX_L]
    return LinearizedSystem(x_star, u_star, J0, J_hpa, J_gut, B, p.tau_hpa, p.tau_gut, E_bar=e_bar)


def probe_stability(sys: LinearizedSystem, p: ModelParameters, drive: CircadianDrive,
                    relative: float = 1e-3, spans: int = 3, seed: int = 0,
                    cfg: Optional[IntegratorConfig] = None) -> bool:
    """Perturb x* by `relative` (random signs), simulate with E frozen and require
    the deviation in the last delay span to be smaller than in the first.

    Sets and returns `sys.stable`.
    """
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=STATE_DIM)
    scale = np.where(sys.x_star > 0, sys.x_star, 1.0)
    start = np.maximum(sys.x_star + relative * signs * scale, 0.0)
    span = p.max_delay
    base = cfg or IntegratorConfig()
    run_cfg = IntegratorConfig(step=base.step, horizon=spans * span, output_spacing=base.output_spacing)
    ts = integrate(p, drive.frozen(), sys.u_star, start, run_cfg)
    deviation = np.max(np.abs(ts.states - sys.x_star) / scale, axis=1)
    first = deviation[ts.window_mask(0.0, span)].max()
    last = deviation[ts.window_mask((spans - 1) * span, spans * span)].max()
    sys.stable = bool(np.isfinite(last) and last < first)
    if not sys.stable:
        logging.warning("operating point u*=" + repr(sys.u_star) + " flagged unstable (deviation "
                        + repr(float(first)) + " -> " + repr(float(last)) + ")")
    return sys.stable


def operating_point(p: ModelParameters, drive: CircadianDrive, u_star: float, probe: bool = True,
                    cfg: Optional[IntegratorConfig] = None) -> LinearizedSystem:
    """Equilibrium, linearization and (optionally) the stability probe in one go."""
    x_star = find_equilibrium(p, drive, u_star, cfg=cfg)
    sys = linearize(p, x_star, u_star, drive.mean_level)
    if probe:
        probe_stability(sys, p, drive, cfg=cfg)
    return sys
