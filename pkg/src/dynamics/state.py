import numpy as np

from .models import SystemState

# marked classes start a quarter turn behind the unmarked ones, so that
# sin(theta - theta_*) = +1 and the marked amplitude grows
MARKED_PHASE = -np.pi / 2
UNMARKED_PHASE = 0.0


def initial_state(structure) -> SystemState:
    """
    Uniform superposition r = 1/sqrt(n) on every class

    `structure` is an EquivalencePartition or a ShellDescriptor; both carry
    `multiplicity` and `marked_flag`.
    """
    multiplicity = np.asarray(structure.multiplicity, dtype=int)
    n = int(multiplicity.sum())
    phases = np.where(np.asarray(structure.marked_flag), MARKED_PHASE, UNMARKED_PHASE)
    radii = np.full(len(multiplicity), 1.0 / np.sqrt(n))
    return SystemState.from_polar(radii, phases, multiplicity)


def initial_contracted(n: int) -> np.ndarray:
    """(r_*, Theta) at t = 0"""
    return np.array([1.0 / np.sqrt(n), UNMARKED_PHASE - MARKED_PHASE])


def initial_reduced_complete(n: int) -> np.ndarray:
    """(r_*, theta_*, r, theta) at t = 0"""
    r0 = 1.0 / np.sqrt(n)
    return np.array([r0, MARKED_PHASE, r0, UNMARKED_PHASE])


def total_probability(state: SystemState) -> float:
    """sum over classes of multiplicity * r^2"""
    return float(np.sum(state.multiplicity * np.abs(state.amplitudes) ** 2))


def total_probability_vector(y: np.ndarray, multiplicity: np.ndarray) -> np.ndarray:
    """total_probability for Cartesian vectors, one per row when 2-d"""
    y = np.asarray(y)
    k = len(multiplicity)
    sq = y[..., :k] ** 2 + y[..., k:] ** 2
    return sq @ np.asarray(multiplicity, dtype=float)
