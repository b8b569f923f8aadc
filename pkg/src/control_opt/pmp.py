"""
Maximum-principle Hamiltonian and costates of the polar reduced system

State vectors are [r, theta] and costate vectors [lambda, Lambda], one
entry per class. Everything here works for any quotient operator Q;
`structure` may be a ShellDescriptor or the matrix itself.
"""
from dataclasses import dataclass

import numpy as np

from dynamics.equations import POLAR_FLOOR, rhs_polar_quotient
from dynamics.models import ControlScheme, ModelParams
from utils.errors import PolarSingularityError


@dataclass
class Costates:
    """lambda conjugate to the radii, Lambda conjugate to the phases"""
    lam: np.ndarray
    Lam: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.Lam = np.asarray(self.Lam, dtype=float)

    @property
    def theta_sum(self) -> float:
        return float(np.sum(self.Lam))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.lam, self.Lam])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> 'Costates':
        k = len(v) // 2
        return cls(lam=v[:k], Lam=v[k:])

    @classmethod
    def zeros(cls, size: int) -> 'Costates':
        return cls(lam=np.zeros(size), Lam=np.zeros(size))


def _operator(structure) -> np.ndarray:
    if hasattr(structure, "quotient_laplacian"):
        return structure.quotient_laplacian()
    return np.asarray(structure, dtype=float)


def _as_vector(costates) -> np.ndarray:
    return costates.as_vector() if isinstance(costates, Costates) else np.asarray(costates, dtype=float)


def pmp_hamiltonian(
    t: float,
    state: np.ndarray,
    costates,
    scheme: ControlScheme,
    structure,
    params: ModelParams,
) -> float:
    """H = sum_j lambda_j r_j' + Lambda_j theta_j'"""
    q = _operator(structure)
    return float(_as_vector(costates) @ rhs_polar_quotient(t, state, scheme, params.gamma, q))


def costate_rhs(
    t: float,
    state: np.ndarray,
    costates,
    scheme: ControlScheme,
    structure,
    params: ModelParams,
) -> np.ndarray:
    """(lambda', Lambda') = -(dH/dr, dH/dtheta)"""
    q = _operator(structure)
    gamma = params.gamma
    k = len(scheme)
    r, theta = state[:k], state[k:]
    if np.any(r <= POLAR_FLOOR):
        raise PolarSingularityError(f"polar singularity at t={t:.6g}: radius of class {int(np.argmin(r))} vanished")
    v = _as_vector(costates)
    lam, Lam = v[:k], v[k:]

    off = q - np.diag(np.diag(q))
    diff = theta[None, :] - theta[:, None]  # theta_k - theta_j
    qs = off * np.sin(diff)
    qc = off * np.cos(diff)
    u = scheme.values(t)
    zeta = scheme.zeta.astype(float)

    dh_dr = (
        gamma * (lam @ qs)
        - gamma * ((Lam / r) @ qc)
        + Lam * (gamma * (qc @ r) / r ** 2 - 2 * zeta * u * r ** (2 * zeta - 1))
    )
    dh_dtheta = (
        -gamma * lam * (qc @ r)
        + gamma * r * (lam @ qc)
        - gamma * Lam * (qs @ r) / r
        + gamma * r * ((Lam / r) @ qs)
    )
    return -np.concatenate([dh_dr, dh_dtheta])


def control_gradient(state: np.ndarray, costates, scheme: ControlScheme) -> np.ndarray:
    """dH/du_j = -Lambda_j r_j^{2 zeta_j}"""
    k = len(scheme)
    v = _as_vector(costates)
    return -v[k:] * state[:k] ** (2 * scheme.zeta)


def optimality_residual(state: np.ndarray, costates, scheme: ControlScheme) -> float:
    """sum_i Lambda_i r_i^{2 zeta_i}"""
    return float(-np.sum(control_gradient(state, costates, scheme)))


def rhs_state_costate(t: float, z: np.ndarray, scheme: ControlScheme, structure, params: ModelParams) -> np.ndarray:
    """Joint forward system [r, theta, lambda, Lambda]"""
    q = _operator(structure)
    k = len(scheme)
    state, costates = z[:2 * k], z[2 * k:]
    return np.concatenate([
        rhs_polar_quotient(t, state, scheme, params.gamma, q),
        costate_rhs(t, state, costates, scheme, q, params),
    ])
