"""
Three-stage Radau IIA (order 5) with adaptive steps and dense output

The stage equations are solved for the increments Z_i = Y_i - y_n by a
simplified Newton iteration on the full 3n system
(I - h A (x) J) dZ = -G(Z). J comes from the caller's `jac` when given,
otherwise from forward differences; either way it is reused across steps
until Newton stalls.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field
from scipy.linalg import lu_factor, lu_solve

from config.settings import settings
from utils.errors import DomainError, MaxStepsError, StiffFailureError

Rhs = Callable[[float, np.ndarray], np.ndarray]
Jac = Callable[[float, np.ndarray], np.ndarray]

EPS = np.finfo(float).eps
S6 = np.sqrt(6.0)

C = np.array([(4 - S6) / 10, (4 + S6) / 10, 1.0])
A = np.array([
    [(88 - 7 * S6) / 360, (296 - 169 * S6) / 1800, (-2 + 3 * S6) / 225],
    [(296 + 169 * S6) / 1800, (88 + 7 * S6) / 360, (-2 - 3 * S6) / 225],
    [(16 - S6) / 36, (16 + S6) / 36, 1 / 9],
])

# embedded error estimate: err = (MU_REAL/h I - J)^{-1} (f(y_n) + E.Z / h)
E = np.array([-13 - 7 * S6, -13 + 7 * S6, -1.0]) / 3
MU_REAL = 3 + 3 ** (2 / 3) - 3 ** (1 / 3)

# collocation polynomial q(s) = y_n + sum_k s^k Q_k, Z = V Q
V = C[:, None] ** np.arange(1, 4)[None, :]
V_INV = np.linalg.inv(V)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class IntegratorConfig(BaseModel):
    """Tolerances and limits of one integration"""
    rel_tol: float = Field(default_factory=lambda: settings.integrator.rel_tol, gt=0)
    abs_tol: float = Field(default_factory=lambda: settings.integrator.abs_tol, gt=0)
    initial_step: Optional[float] = Field(default=None, gt=0)
    max_steps: int = Field(default_factory=lambda: settings.integrator.max_steps, gt=0)
    newton_tol: Optional[float] = Field(default=None, gt=0)
    newton_max_iters: int = Field(default_factory=lambda: settings.integrator.newton_max_iters, gt=0)

    @property
    def effective_newton_tol(self) -> float:
        if self.newton_tol is not None:
            return self.newton_tol
        return max(10 * EPS / self.rel_tol, min(0.03, self.rel_tol ** 0.5))

    @classmethod
    def optimization(cls) -> 'IntegratorConfig':
        """Looser tolerances for optimizer inner loops"""
        return cls(rel_tol=settings.integrator.opt_rel_tol, abs_tol=settings.integrator.opt_abs_tol)

    def scaled(self, factor: float) -> 'IntegratorConfig':
        return self.model_copy(update={"rel_tol": self.rel_tol * factor, "abs_tol": self.abs_tol * factor})


@dataclass
class Trajectory:
    """
    Accepted step endpoints plus one collocation polynomial per step

    Args:
        times: Step endpoints, strictly increasing
        states: State at each endpoint (one row per time)
        seg_y: State at the start of each step
        seg_q: Polynomial coefficients Q_1..Q_3 of each step
    """
    times: np.ndarray
    states: np.ndarray
    seg_y: np.ndarray
    seg_q: np.ndarray
    nfev: int = 0
    njev: int = 0
    n_rejected: int = 0
    message: str = "ok"
    _steps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._steps = np.diff(self.times)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def _locate(self, t: np.ndarray):
        if np.any(t < self.t0 - 1e-12 * max(1.0, abs(self.t0))) or np.any(t > self.t_end + 1e-12 * max(1.0, abs(self.t_end))):
            raise DomainError(f"time outside trajectory span [{self.t0}, {self.t_end}]")
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.n_steps - 1)
        s = (t - self.times[idx]) / self._steps[idx]
        return idx, s

    def __call__(self, t):
        """Dense-output state at t (scalar or array); exact at step endpoints"""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx, s = self._locate(t)
        powers = s[:, None] ** np.arange(1, 4)[None, :]
        out = self.seg_y[idx] + np.einsum("mk,mkn->mn", powers, self.seg_q[idx])

        node = np.searchsorted(self.times, t)
        hit = (node < len(self.times)) & (self.times[np.minimum(node, len(self.times) - 1)] == t)
        out[hit] = self.states[node[hit]]
        return out[0] if scalar else out

    def derivative(self, t):
        """Time derivative of the dense-output polynomial"""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx, s = self._locate(t)
        dpowers = np.arange(1, 4)[None, :] * s[:, None] ** np.arange(0, 3)[None, :]
        out = np.einsum("mk,mkn->mn", dpowers, self.seg_q[idx]) / self._steps[idx][:, None]
        return out[0] if scalar else out

    def sample(self, count: int):
        """Uniform grid of `count` times over the span and the states there"""
        grid = np.linspace(self.t0, self.t_end, count)
        return grid, self(grid)


def _rms(x: np.ndarray) -> float:
    return float(np.linalg.norm(x) / np.sqrt(x.size))


def _jacobian(rhs: Rhs, t: float, y: np.ndarray, f0: np.ndarray) -> np.ndarray:
    """Forward differences with step sqrt(eps) * max(|y_j|, 1)"""
    n = len(y)
    jac = np.empty((n, n))
    steps = np.sqrt(EPS) * np.maximum(np.abs(y), 1.0)
    for j in range(n):
        yj = y.copy()
        yj[j] += steps[j]
        jac[:, j] = (rhs(t, yj) - f0) / steps[j]
    return jac


def _evaluate_jacobian(rhs: Rhs, jac: Optional[Jac], t: float, y: np.ndarray, f: np.ndarray):
    """(J, rhs evaluations spent)"""
    if jac is not None:
        return np.asarray(jac(t, y), dtype=float), 0
    return _jacobian(rhs, t, y, f), len(y)


def _initial_step(rhs: Rhs, t0: float, y0: np.ndarray, f0: np.ndarray, span: float, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + np.abs(y0) * cfg.rel_tol
    d0, d1 = _rms(y0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 6)
    return min(100 * h0, h1, span)


def _stage_residual(rhs: Rhs, t: float, y: np.ndarray, h: float, z: np.ndarray):
    f_stages = np.array([rhs(t + C[i] * h, y + z[i]) for i in range(3)])
    return z - h * (A @ f_stages), 3


def _newton(
    rhs: Rhs,
    t: float,
    y: np.ndarray,
    h: float,
    z0: np.ndarray,
    lu,
    scale: np.ndarray,
    tol: float,
    max_iters: int,
):
    """Simplified Newton on the stage increments; returns (converged, Z, nfev)"""
    z = z0.copy()
    nfev = 0
    dz_norm_old = None
    for k in range(max_iters):
        residual, used = _stage_residual(rhs, t, y, h, z)
        nfev += used
        if not np.all(np.isfinite(residual)):
            return False, z, nfev
        dz = lu_solve(lu, -residual.reshape(-1)).reshape(3, -1)
        z += dz
        dz_norm = _rms(dz / scale)
        if dz_norm == 0:
            return True, z, nfev
        if dz_norm_old is not None:
            rate = dz_norm / dz_norm_old
            if rate >= 1 or rate ** (max_iters - k) / (1 - rate) * dz_norm > tol:
                return False, z, nfev
            if rate / (1 - rate) * dz_norm < tol:
                return True, z, nfev
        dz_norm_old = dz_norm
    return False, z, nfev


def integrate(
    rhs: Rhs,
    y0,
    t0: float,
    t1: float,
    cfg: Optional[IntegratorConfig] = None,
    jac: Optional[Jac] = None,
) -> Trajectory:
    """
    Integrate y' = rhs(t, y) from t0 to t1

    Args:
        jac: Analytic Jacobian d rhs / dy; forward differences when None

    Raises:
        StiffFailureError: Newton kept failing after the step fell to its floor
        MaxStepsError: cfg.max_steps accepted steps did not reach t1
    """
    cfg = cfg or IntegratorConfig()
    if not t1 > t0:
        raise DomainError(f"need t1 > t0, got t0={t0}, t1={t1}")

    y = np.array(y0, dtype=float)
    n = len(y)
    eye_full = np.eye(3 * n)
    eye = np.eye(n)
    t = float(t0)

    f = rhs(t, y)
    nfev, njev, n_rejected = 1, 0, 0
    jac_matrix, used = _evaluate_jacobian(rhs, jac, t, y, f)
    nfev += used
    njev += 1
    jac_current = True

    h = cfg.initial_step or _initial_step(rhs, t, y, f, t1 - t0, cfg)
    nfev += 1
    lu = lu_real = None
    newton_tol = cfg.effective_newton_tol

    times: List[float] = [t]
    states: List[np.ndarray] = [y.copy()]
    seg_y: List[np.ndarray] = []
    seg_q: List[np.ndarray] = []
    prev = None  # (h, Q) of the last accepted step, for stage extrapolation

    while t < t1:
        if len(seg_y) >= cfg.max_steps:
            raise MaxStepsError(f"{cfg.max_steps} steps taken, stopped at t={t:.6g} before t1={t1:.6g}")

        h_floor = 10 * EPS * max(abs(t), 1.0)
        if t + h >= t1 or t1 - (t + h) < h_floor:
            if h != t1 - t:
                lu = None
            h = t1 - t

        if lu is None:
            lu = lu_factor(eye_full - h * np.kron(A, jac_matrix))
            lu_real = lu_factor(MU_REAL / h * eye - jac_matrix)

        if prev is None:
            z0 = np.zeros((3, n))
        else:
            h_prev, q_prev = prev
            s = 1 + C * h / h_prev
            z0 = (s[:, None] ** np.arange(1, 4)[None, :]) @ q_prev - q_prev.sum(axis=0)

        scale = cfg.abs_tol + np.abs(y) * cfg.rel_tol
        converged, z, used = _newton(rhs, t, y, h, z0, lu, scale, newton_tol, cfg.newton_max_iters)
        nfev += used

        if not converged:
            if not jac_current:
                jac_matrix, used = _evaluate_jacobian(rhs, jac, t, y, f)
                nfev += used
                njev += 1
                jac_current = True
                lu = None
                logger.debug(f"Newton stalled at t={t:.6g}, h={h:.3g}; refreshed Jacobian")
                continue
            h *= 0.5
            lu = None
            n_rejected += 1
            logger.debug(f"Newton failed at t={t:.6g}; halving step to {h:.3g}")
            if h < h_floor:
                raise StiffFailureError(f"Newton iteration failed at t={t:.6g} with step {h:.3g}")
            continue

        y_new = y + z[2]
        err_vec = lu_solve(lu_real, f + (E @ z) / h)
        err_scale = cfg.abs_tol + np.maximum(np.abs(y), np.abs(y_new)) * cfg.rel_tol
        err = _rms(err_vec / err_scale)

        if not np.isfinite(err) or err > 1:
            factor = MIN_FACTOR if not np.isfinite(err) else max(MIN_FACTOR, SAFETY * err ** (-1 / 5))
            h *= factor
            lu = None
            n_rejected += 1
            if h < h_floor:
                raise StiffFailureError(f"step size fell below {h_floor:.3g} at t={t:.6g}")
            continue

        q = V_INV @ z
        seg_y.append(y.copy())
        seg_q.append(q)
        prev = (h, q)

        t = t1 if h == t1 - t else t + h
        y = y_new
        times.append(t)
        states.append(y.copy())
        f = rhs(t, y)
        nfev += 1
        jac_current = False

        factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** (-1 / 5)))
        if not 1.0 <= factor <= 1.2:
            h *= factor
            lu = None

    logger.debug(
        f"Radau IIA: [{t0:.6g}, {t1:.6g}] in {len(seg_y)} steps "
        f"({n_rejected} rejected, {nfev} rhs evaluations, {njev} Jacobians)"
    )
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        seg_y=np.array(seg_y),
        seg_q=np.array(seg_q),
        nfev=nfev,
        njev=njev,
        n_rejected=n_rejected,
    )


def integrate_fixed(
    rhs: Rhs,
    y0,
    t0: float,
    t1: float,
    h: float,
    cfg: Optional[IntegratorConfig] = None,
    jac: Optional[Jac] = None,
) -> Trajectory:
    """
    Constant-step Radau IIA with Newton iterated to round-off

    The step count is round((t1 - t0) / h); the step is adjusted to land
    on t1 exactly.
    """
    cfg = cfg or IntegratorConfig()
    if not t1 > t0 or h <= 0:
        raise DomainError(f"need t1 > t0 and h > 0, got t0={t0}, t1={t1}, h={h}")

    count = max(1, int(round((t1 - t0) / h)))
    h = (t1 - t0) / count
    y = np.array(y0, dtype=float)
    n = len(y)
    eye_full = np.eye(3 * n)
    nfev = njev = 0

    times, states, seg_y, seg_q = [t0], [y.copy()], [], []
    for step in range(count):
        t = t0 + step * h
        f = rhs(t, y)
        jac_matrix, used = _evaluate_jacobian(rhs, jac, t, y, f)
        nfev += used + 1
        njev += 1
        lu = lu_factor(eye_full - h * np.kron(A, jac_matrix))

        z = np.zeros((3, n))
        for _ in range(50):
            residual, used = _stage_residual(rhs, t, y, h, z)
            nfev += used
            dz = lu_solve(lu, -residual.reshape(-1)).reshape(3, -1)
            z += dz
            if np.max(np.abs(dz)) <= 8 * EPS * max(1.0, np.max(np.abs(z)), np.max(np.abs(y))):
                break
        else:
            raise StiffFailureError(f"fixed-step Newton did not converge at t={t:.6g}")

        seg_y.append(y.copy())
        seg_q.append(V_INV @ z)
        y = y + z[2]
        times.append(t1 if step == count - 1 else t0 + (step + 1) * h)
        states.append(y.copy())

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        seg_y=np.array(seg_y),
        seg_q=np.array(seg_q),
        nfev=nfev,
        njev=njev,
    )
