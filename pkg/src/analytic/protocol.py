"""Closed-form controlled search on the complete graph"""
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np
from loguru import logger

from dynamics.equations import probability_constraint, rhs_contracted, rhs_quotient
from dynamics.models import ControlScheme, ModelParams
from dynamics.state import initial_contracted, MARKED_PHASE, UNMARKED_PHASE
from graphs.reduction import complete_quotient_laplacian
from integrate.peaks import PeakReport, find_first_peak
from integrate.radau import IntegratorConfig, Trajectory, integrate
from utils.errors import ConfigError, DomainError, SingularCouplingError

# relative slack when checking t against [0, t_f]
TIME_SLACK = 1e-12


def _zero(t: float) -> float:
    return 0.0


@dataclass(frozen=True)
class CompleteProtocol:
    """
    Optimal protocol on K_n with N marked nodes

    Args:
        n: Total node count
        n_marked: Marked node count N, with n > 2N
        g: Coupling constant, gamma = g / (n - 2N)
        zeta_marked: Nonlinearity exponent of the marked class
        zeta_unmarked: Nonlinearity exponent of the unmarked class
        u_unmarked: Free control on the unmarked class (zero by default)
    """
    n: int
    n_marked: int
    g: float = 1.0
    zeta_marked: int = 0
    zeta_unmarked: int = 0
    u_unmarked: Callable[[float], float] = field(default=_zero, compare=False)

    def __post_init__(self):
        if self.n_marked < 1:
            raise ConfigError(f"need at least one marked node, got N={self.n_marked}")
        if self.n == 2 * self.n_marked:
            raise SingularCouplingError(f"n = 2N = {self.n}: gamma = g/(n - 2N) is singular")
        if self.n < 2 * self.n_marked:
            raise DomainError(
                f"n = {self.n} < 2N = {2 * self.n_marked}: pad with {minimal_padding(self.n, self.n_marked)} "
                f"unmarked nodes or use the zero-control regime"
            )
        if self.g == 0:
            raise ConfigError("coupling constant g must be nonzero")
        if self.g < 0:
            # from this start g < 0 drains the marked class; the conjugate start with |g| is the same search
            raise ConfigError(f"g = {self.g} < 0 runs the protocol backwards; use g = {-self.g}")

    @property
    def n_unmarked(self) -> int:
        return self.n - self.n_marked

    @property
    def params(self) -> ModelParams:
        return ModelParams(g=self.g, n=self.n, n_marked=self.n_marked)

    @property
    def kappa(self) -> float:
        """Angular rate of the marked amplitude, g sqrt(N (n - N)) / (n - 2N)"""
        return self.g * np.sqrt(self.n_marked * self.n_unmarked) / (self.n - 2 * self.n_marked)

    @property
    def phase0(self) -> float:
        return float(np.arcsin(np.sqrt(self.n_marked / self.n)))

    @property
    def zeta(self) -> np.ndarray:
        return np.array([self.zeta_marked, self.zeta_unmarked])


def end_time(p: CompleteProtocol) -> float:
    """t_f = (n - 2N) acos(sqrt(N/n)) / (g sqrt(N (n - N)))"""
    return float(np.arccos(np.sqrt(p.n_marked / p.n)) / p.kappa)


def _check_window(t, p: CompleteProtocol) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    t_f = end_time(p)
    slack = TIME_SLACK * max(1.0, t_f)
    if np.any(t < -slack) or np.any(t > t_f + slack):
        raise DomainError(f"t outside [0, t_f = {t_f:.12g}]")
    return np.clip(t, 0.0, t_f)


def _as_output(values: np.ndarray):
    return float(values) if values.ndim == 0 else values


def r_star_analytic(t, p: CompleteProtocol):
    """r_* = sin(kappa t + asin(sqrt(N/n))) / sqrt(N) on [0, t_f]"""
    t = _check_window(t, p)
    return _as_output(np.sin(p.kappa * t + p.phase0) / np.sqrt(p.n_marked))


def success_probability(t, p: CompleteProtocol):
    """N r_*^2 along the protocol"""
    t = _check_window(t, p)
    return _as_output(np.sin(p.kappa * t + p.phase0) ** 2)


def success_probability_rate(t, p: CompleteProtocol):
    """d/dt (N r_*^2) = kappa sin(2 (kappa t + phase0))"""
    t = _check_window(t, p)
    return _as_output(p.kappa * np.sin(2 * (p.kappa * t + p.phase0)))


def analytic_control(t: float, p: CompleteProtocol):
    """
    (u, u_*) satisfying u_* r_*^{2 zeta_*} - u r^{2 zeta} = g

    u is the protocol's free unmarked control; r and r_* follow the
    analytic trajectory.
    """
    r_s = r_star_analytic(t, p)
    r = probability_constraint(r_s, p.n, p.n_marked)
    u = float(p.u_unmarked(t))
    u_s = (p.g + u * r ** (2 * p.zeta_unmarked)) / r_s ** (2 * p.zeta_marked)
    return u, u_s


def control_scheme(p: CompleteProtocol) -> ControlScheme:
    """Analytic controls as a two-class scheme, marked class first"""
    def signal(t: float) -> np.ndarray:
        u, u_s = analytic_control(min(max(t, 0.0), end_time(p)), p)
        return np.array([u_s, u])

    return ControlScheme(zeta=p.zeta, signal=signal, label="analytic")


def _feedback_values(p: CompleteProtocol, t: float, r_s: float, r: float) -> np.ndarray:
    u = float(p.u_unmarked(t))
    u_s = (p.g + u * r ** (2 * p.zeta_unmarked)) / r_s ** (2 * p.zeta_marked)
    return np.array([u_s, u])


def feedback_contracted_rhs(p: CompleteProtocol) -> Callable[[float, np.ndarray], np.ndarray]:
    """Contracted system with u_* computed from the current state"""
    params = p.params

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        r = probability_constraint(y[0], p.n, p.n_marked, clip=True)
        values = _feedback_values(p, t, y[0], r)
        scheme = ControlScheme(zeta=p.zeta, signal=lambda _: values, label="feedback")
        return rhs_contracted(t, y, scheme, params, terminal="freeze")

    return rhs


def feedback_cartesian_rhs(p: CompleteProtocol) -> Callable[[float, np.ndarray], np.ndarray]:
    """
    Two-class Cartesian system with state-feedback control

    Defined past t_f, where the unmarked amplitude crosses zero.
    """
    q = complete_quotient_laplacian(p.n, p.n_marked)
    gamma = p.params.gamma

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        r_s, r = np.hypot(y[0], y[2]), np.hypot(y[1], y[3])
        values = _feedback_values(p, t, r_s, r)
        scheme = ControlScheme(zeta=p.zeta, signal=lambda _: values, label="feedback")
        return rhs_quotient(t, y, scheme, gamma, q)

    return rhs


def initial_cartesian(n: int) -> np.ndarray:
    """[Re x_*, Re x, Im x_*, Im x] at t = 0"""
    amplitudes = np.exp(1j * np.array([MARKED_PHASE, UNMARKED_PHASE])) / np.sqrt(n)
    return np.concatenate([amplitudes.real, amplitudes.imag])


def integrate_protocol(
    p: CompleteProtocol,
    cfg: Optional[IntegratorConfig] = None,
    feedback: bool = False,
    t_end: Optional[float] = None,
) -> Trajectory:
    """
    Integrate the contracted system (r_*, Theta) from the optimal start

    With feedback=False the marked control follows the analytic trajectory
    in time; with feedback=True it is computed from the current state.
    """
    t_f = end_time(p)
    t_end = t_f if t_end is None else t_end
    if t_end > t_f * (1 + TIME_SLACK):
        raise DomainError(f"the contracted system ends at t_f = {t_f:.12g}")

    if feedback:
        rhs = feedback_contracted_rhs(p)
    else:
        rhs = partial(rhs_contracted, scheme=control_scheme(p), params=p.params, terminal="freeze")

    traj = integrate(rhs, initial_contracted(p.n), 0.0, t_end, cfg)
    logger.info(
        f"Protocol n={p.n}, N={p.n_marked}, g={p.g}, zeta=({p.zeta_marked}, {p.zeta_unmarked}): "
        f"t_f={t_f:.9f}, N r_*^2(t_end)={p.n_marked * traj.final[0] ** 2:.12f}"
    )
    return traj


def protocol_peak(p: CompleteProtocol, cfg: Optional[IntegratorConfig] = None, overshoot: float = 1.5) -> PeakReport:
    """First maximum of N |x_*|^2 under feedback control, integrated past t_f"""
    traj = integrate(feedback_cartesian_rhs(p), initial_cartesian(p.n), 0.0, overshoot * end_time(p), cfg)
    peak = find_first_peak(traj, lambda y: p.n_marked * (y[0] ** 2 + y[2] ** 2))
    if not peak.interior:
        logger.warning(f"No interior maximum within {overshoot} t_f for n={p.n}, N={p.n_marked}")
    return peak


@dataclass(frozen=True)
class RuntimeClass:
    """Which regime a (n, N) pair falls in"""
    regime: str  # "nonlinear" or "constant"
    end_time: Optional[float]
    padding: int  # virtual unmarked nodes needed for n > 2N


def minimal_padding(n: int, n_marked: int) -> int:
    """Fewest virtual unmarked nodes giving n + padding > 2N"""
    return max(0, 2 * n_marked - n + 1)


def runtime_class(n: int, n_marked: int, g: float = 1.0) -> RuntimeClass:
    if n > 2 * n_marked:
        return RuntimeClass(regime="nonlinear", end_time=end_time(CompleteProtocol(n=n, n_marked=n_marked, g=g)), padding=0)
    return RuntimeClass(regime="constant", end_time=None, padding=minimal_padding(n, n_marked))


def pad_unmarked(n: int, n_marked: int, padding: int, **protocol_args) -> CompleteProtocol:
    """Protocol on K_{n + padding}, the extra nodes unmarked"""
    if padding < 0:
        raise ConfigError(f"padding must be non-negative, got {padding}")
    if n + padding <= 2 * n_marked:
        raise DomainError(
            f"padding {padding} leaves n + padding = {n + padding} <= 2N; need at least {minimal_padding(n, n_marked)}"
        )
    logger.info(f"Padding K_{n} with {padding} unmarked nodes (N={n_marked})")
    return CompleteProtocol(n=n + padding, n_marked=n_marked, **protocol_args)


def linear_regime_peak(
    n: int,
    n_marked: int,
    gamma: float = 1.0,
    cfg: Optional[IntegratorConfig] = None,
    horizon: Optional[float] = None,
) -> PeakReport:
    """
    Zero-control evolution on K_n, first maximum of N |x_*|^2

    The two-class operator has eigenvalues 0 and -n, so one period
    2 pi / (|gamma| n) holds the first maximum.
    """
    if n_marked >= n:
        raise DomainError(f"no unmarked nodes for n={n}, N={n_marked}")
    q = complete_quotient_laplacian(n, n_marked)
    scheme = ControlScheme.zero([0, 0])
    horizon = horizon or 2 * np.pi / (abs(gamma) * n)
    rhs = partial(rhs_quotient, scheme=scheme, gamma=gamma, q=q)
    traj = integrate(rhs, initial_cartesian(n), 0.0, horizon, cfg)
    peak = find_first_peak(traj, lambda y: n_marked * (y[0] ** 2 + y[2] ** 2))
    if not peak.interior:
        logger.warning(f"Zero-control K_{n}: no interior maximum before t={horizon:.6g}")
    logger.info(f"Zero-control K_{n}, N={n_marked}: first peak {peak.value:.6f} at t={peak.time:.6f}")
    return peak
