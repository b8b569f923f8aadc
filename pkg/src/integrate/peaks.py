from dataclasses import dataclass
from typing import Callable

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from .radau import Trajectory

Observable = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class PeakReport:
    """First maximum of an observable; interior=False means an endpoint was returned"""
    time: float
    value: float
    interior: bool


def observable_rate(traj: Trajectory, observable: Observable, t: float) -> float:
    """d/dt observable(y(t)), by a central difference along the dense-output velocity"""
    y = traj(t)
    dy = traj.derivative(t)
    size = np.max(np.abs(dy))
    if size == 0:
        return 0.0
    delta = 1e-5 / size
    return (observable(y + delta * dy) - observable(y - delta * dy)) / (2 * delta)


def find_first_peak(
    traj: Trajectory,
    observable: Observable,
    samples_per_step: int = 8,
    xtol: float = 1e-9,
) -> PeakReport:
    """
    First interior local maximum of observable(y(t))

    The derivative is scanned on a grid refining every integrator step and
    the first + to - sign change is refined with Brent's method.
    """
    fractions = np.linspace(0.0, 1.0, samples_per_step, endpoint=False)
    steps = np.diff(traj.times)
    grid = (traj.times[:-1, None] + fractions[None, :] * steps[:, None]).ravel()
    grid = np.append(grid, traj.t_end)

    def rate(t: float) -> float:
        return observable_rate(traj, observable, t)

    previous = rate(grid[0])
    for left, right in zip(grid[:-1], grid[1:]):
        current = rate(right)
        if previous > 0 and current <= 0:
            if current == 0:
                peak = float(right)
            else:
                peak = float(brentq(rate, left, right, xtol=xtol))
            if peak < traj.t_end:
                return PeakReport(time=peak, value=float(observable(traj(peak))), interior=True)
        previous = current

    start, end = float(observable(traj(traj.t0))), float(observable(traj(traj.t_end)))
    logger.debug(f"No interior peak on [{traj.t0:.6g}, {traj.t_end:.6g}]; reporting the endpoint maximum")
    if start >= end:
        return PeakReport(time=traj.t0, value=start, interior=False)
    return PeakReport(time=traj.t_end, value=end, interior=False)
