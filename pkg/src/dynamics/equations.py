"""
DNLSE right-hand sides

Every function has the signature f(t, y, ...) so it can be bound with
functools.partial and handed to the integrator. Cartesian vectors are
[Re x, Im x]; polar vectors are [r, theta].
"""
import numpy as np

from utils.errors import DomainError, PolarSingularityError
from .models import ControlScheme, ModelParams

# radii below this make the polar phase equations meaningless
POLAR_FLOOR = 1e-300


def _nonlinear_weight(radii: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.power(radii, 2 * zeta.astype(float))


def rhs_quotient(t: float, y: np.ndarray, scheme: ControlScheme, gamma: float, q: np.ndarray) -> np.ndarray:
    """
    dx/dt = -i (gamma Q x + u |x|^{2 zeta} x) on one amplitude per class

    Q is the quotient Laplacian of an equitable partition; with singleton
    classes it is the graph Laplacian itself.
    """
    k = len(scheme)
    x = y[:k] + 1j * y[k:]
    u = scheme.values(t)
    nonlinear = u * _nonlinear_weight(np.abs(x), scheme.zeta) * x
    dx = -1j * (gamma * (q @ x) + nonlinear)
    return np.concatenate([dx.real, dx.imag])


def jac_quotient(t: float, y: np.ndarray, scheme: ControlScheme, gamma: float, q: np.ndarray) -> np.ndarray:
    """
    d rhs_quotient / d [Re x, Im x]

    With w = gamma Q x + u |x|^{2 zeta} x the derivative is [Im w, -Re w],
    so each block is the imaginary or negated real part of dw/da, dw/db.
    """
    k = len(scheme)
    a, b = y[:k], y[k:]
    x = a + 1j * b
    rho = a ** 2 + b ** 2
    zeta = scheme.zeta.astype(float)
    u = scheme.values(t)

    weight = np.power(rho, zeta)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(zeta > 0, zeta * np.power(rho, zeta - 1), 0.0)  # d rho^zeta / d rho

    dw_da = gamma * q + np.diag(u * (weight + 2 * slope * a * x))
    dw_db = 1j * gamma * q + np.diag(u * (1j * weight + 2 * slope * b * x))
    return np.block([[dw_da.imag, dw_db.imag], [-dw_da.real, -dw_db.real]])


def rhs_full(t: float, y: np.ndarray, scheme: ControlScheme, params: ModelParams, lap: np.ndarray) -> np.ndarray:
    """Cartesian DNLSE on every node of the graph"""
    return rhs_quotient(t, y, scheme, params.gamma, lap)


def rhs_polar_quotient(t: float, y: np.ndarray, scheme: ControlScheme, gamma: float, q: np.ndarray) -> np.ndarray:
    """
    Polar form of rhs_quotient:

        r_j'     = gamma sum_{k != j} Q_jk r_k sin(theta_k - theta_j)
        theta_j' = -gamma sum_{k != j} Q_jk (r_k / r_j) cos(theta_k - theta_j)
                   - gamma Q_jj - u_j r_j^{2 zeta_j}
    """
    k = len(scheme)
    r, theta = y[:k], y[k:]
    if np.any(r <= POLAR_FLOOR):
        raise PolarSingularityError(f"polar singularity at t={t:.6g}: radius of class {int(np.argmin(r))} vanished")

    off = q - np.diag(np.diag(q))
    diff = theta[None, :] - theta[:, None]
    u = scheme.values(t)

    dr = gamma * (off * np.sin(diff)) @ r
    dtheta = (
        -gamma * ((off * np.cos(diff)) @ r) / r
        - gamma * np.diag(q)
        - u * _nonlinear_weight(r, scheme.zeta)
    )
    return np.concatenate([dr, dtheta])


def rhs_reduced_complete(t: float, y: np.ndarray, scheme: ControlScheme, params: ModelParams) -> np.ndarray:
    """
    Four-variable complete-graph system in (r_*, theta_*, r, theta)

    `scheme` has two classes, marked first.
    """
    r_s, th_s, r, th = y
    if r_s <= POLAR_FLOOR or r <= POLAR_FLOOR:
        raise PolarSingularityError(f"polar singularity at t={t:.6g}: r_*={r_s:.3g}, r={r:.3g}")

    gamma, n, big_n = params.gamma, params.n, params.n_marked
    u_s, u = scheme.values(t)
    z_s, z = scheme.zeta

    d_r_s = gamma * (n - big_n) * r * np.sin(th - th_s)
    d_th_s = -gamma * (big_n - n + (n - big_n) * (r / r_s) * np.cos(th - th_s)) - u_s * r_s ** (2 * z_s)
    d_r = gamma * big_n * r_s * np.sin(th_s - th)
    d_th = -gamma * big_n * ((r_s / r) * np.cos(th_s - th) - 1) - u * r ** (2 * z)
    return np.array([d_r_s, d_th_s, d_r, d_th])


def probability_constraint(r_star, n: int, n_marked: int, clip: bool = False):
    """
    Unmarked radius implied by conservation: r = sqrt((1 - N r_*^2) / (n - N))

    Rounding-level excess over N r_*^2 = 1 maps to r = 0; larger excess is a
    DomainError unless `clip` is set.
    """
    r_star = np.asarray(r_star, dtype=float)
    excess = n_marked * r_star ** 2 - 1
    if not clip and np.any(excess > 1e-12):
        raise DomainError(f"N r_*^2 = {float(np.max(excess)) + 1:.15g} exceeds 1")
    if n == n_marked:
        r = np.zeros_like(r_star)
    else:
        r = np.sqrt(np.clip(-excess, 0.0, None) / (n - n_marked))
    return float(r) if r.ndim == 0 else r


def rhs_contracted(
    t: float,
    y: np.ndarray,
    scheme: ControlScheme,
    params: ModelParams,
    terminal: str = "raise",
) -> np.ndarray:
    """
    Two-variable complete-graph system in (r_*, Theta), Theta = theta - theta_*

        r_*'   = gamma (n - N) r sin(Theta)
        Theta' = gamma ((n - N) r / r_* - N r_* / r) cos(Theta) - g
                 - u r^{2 zeta} + u_* r_*^{2 zeta_*}

    with r from probability_constraint. At r = 0 the success probability is
    1; terminal="freeze" holds the state there instead of raising.
    """
    r_s, big_theta = y
    gamma, n, big_n = params.gamma, params.n, params.n_marked

    r = probability_constraint(r_s, n, big_n, clip=(terminal == "freeze"))
    if r <= POLAR_FLOOR or r_s <= POLAR_FLOOR:
        if terminal == "freeze" and r <= POLAR_FLOOR:
            return np.zeros(2)
        raise PolarSingularityError(f"polar singularity at t={t:.6g}: r_*={r_s:.3g}, r={r:.3g}")

    u_s, u = scheme.values(t)
    z_s, z = scheme.zeta

    d_r_s = gamma * (n - big_n) * r * np.sin(big_theta)
    d_theta = (
        gamma * ((n - big_n) * r / r_s - big_n * r_s / r) * np.cos(big_theta)
        + gamma * (2 * big_n - n)
        - u * r ** (2 * z)
        + u_s * r_s ** (2 * z_s)
    )
    return np.array([d_r_s, d_theta])


def rhs_shells(t: float, y: np.ndarray, scheme: ControlScheme, params: ModelParams, shells) -> np.ndarray:
    """Polar shell system of a shell-regular graph, one (r_i, theta_i) per shell"""
    return rhs_polar_quotient(t, y, scheme, params.gamma, shells.quotient_laplacian())


def rhs_shells_cartesian(t: float, y: np.ndarray, scheme: ControlScheme, params: ModelParams, shells) -> np.ndarray:
    """Cartesian shell system, valid through r_i = 0"""
    return rhs_quotient(t, y, scheme, params.gamma, shells.quotient_laplacian())


def polar_to_cartesian(y: np.ndarray) -> np.ndarray:
    k = len(y) // 2
    x = y[:k] * np.exp(1j * y[k:])
    return np.concatenate([x.real, x.imag])


def cartesian_to_polar(y: np.ndarray) -> np.ndarray:
    k = len(y) // 2
    x = y[:k] + 1j * y[k:]
    return np.concatenate([np.abs(x), np.angle(x)])


def polar_velocity_to_cartesian(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Push a polar derivative through the chart: x' = (r' + i r theta') e^{i theta}"""
    k = len(y) // 2
    r, theta = y[:k], y[k:]
    dx = (dy[:k] + 1j * r * dy[k:]) * np.exp(1j * theta)
    return np.concatenate([dx.real, dx.imag])
