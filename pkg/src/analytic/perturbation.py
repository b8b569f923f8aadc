"""Measurement error of the complete-graph protocol under control offsets and timing errors"""
from dataclasses import dataclass
from functools import partial
from typing import Iterable, List, Optional

import numpy as np
from loguru import logger

from dynamics.equations import rhs_quotient
from dynamics.models import ControlScheme
from graphs.reduction import complete_quotient_laplacian
from integrate.radau import IntegratorConfig, integrate
from utils.errors import DnlseError, DomainError
from .protocol import CompleteProtocol, end_time, feedback_cartesian_rhs, initial_cartesian


@dataclass(frozen=True)
class PerturbationSpec:
    """Control offsets: u = nu on the unmarked class, u_* = g + nu_* on the marked one"""
    nu_marked: float = 0.0
    nu_unmarked: float = 0.0


@dataclass
class ErrorScanRow:
    n: int
    error: float
    ok: bool = True
    message: str = ""
    timing_error: Optional[float] = None


def _success(y: np.ndarray, n_marked: int) -> float:
    return n_marked * (y[0] ** 2 + y[2] ** 2)


def perturbed_error(
    p: CompleteProtocol,
    pert: PerturbationSpec,
    cfg: Optional[IntegratorConfig] = None,
) -> float:
    """
    E = 1 - N r_*^2(t_f) with constant controls u = nu, u_* = g + nu_*

    t_f is the unperturbed end time. The two-class system is integrated in
    Cartesian form, so perturbed runs that pass r = 0 stay well defined.
    """
    if p.zeta_marked != 0 or p.zeta_unmarked != 0:
        raise DomainError("perturbed_error needs zeta = zeta_* = 0")

    scheme = ControlScheme.constant([0, 0], [p.g + pert.nu_marked, pert.nu_unmarked])
    q = complete_quotient_laplacian(p.n, p.n_marked)
    rhs = partial(rhs_quotient, scheme=scheme, gamma=p.params.gamma, q=q)
    traj = integrate(rhs, initial_cartesian(p.n), 0.0, end_time(p), cfg)
    return float(1.0 - _success(traj.final, p.n_marked))


def timing_error(p: CompleteProtocol, delay: float, cfg: Optional[IntegratorConfig] = None) -> float:
    """E when measuring at t_f + delay under the exact (feedback) control"""
    t_meas = end_time(p) + delay
    if t_meas <= 0:
        raise DomainError(f"measurement time t_f + delay = {t_meas:.6g} is not positive")
    traj = integrate(feedback_cartesian_rhs(p), initial_cartesian(p.n), 0.0, t_meas, cfg)
    return float(1.0 - _success(traj.final, p.n_marked))


def error_scan(
    n_values: Iterable[int],
    pert: PerturbationSpec,
    g: float = 1.0,
    n_marked: int = 1,
    cfg: Optional[IntegratorConfig] = None,
    timing_delay: Optional[float] = None,
) -> List[ErrorScanRow]:
    """One perturbed_error per n; a failing row is flagged instead of aborting the scan"""
    rows = []
    for n in n_values:
        try:
            p = CompleteProtocol(n=int(n), n_marked=n_marked, g=g)
            row = ErrorScanRow(n=int(n), error=perturbed_error(p, pert, cfg))
            if timing_delay is not None:
                row.timing_error = timing_error(p, timing_delay, cfg)
        except DnlseError as e:
            logger.warning(f"Error scan row n={n} failed: {e}")
            row = ErrorScanRow(n=int(n), error=float("nan"), ok=False, message=str(e))
        rows.append(row)
        logger.debug(f"n={row.n}: E={row.error:.6e}")
    logger.info(f"Error scan over {len(rows)} values of n done ({sum(not r.ok for r in rows)} failed)")
    return rows
