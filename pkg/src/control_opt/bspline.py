from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger
from scipy.interpolate import BSpline

from utils.errors import ConfigError, DomainError

DEGREE = 3


def clamped_uniform_knots(count: int, horizon: float, degree: int = DEGREE) -> np.ndarray:
    """count + degree + 1 knots, end knots repeated degree + 1 times"""
    if count < degree + 1:
        raise ConfigError(f"a degree-{degree} spline needs at least {degree + 1} control points, got {count}")
    breaks = np.linspace(0.0, horizon, count - degree + 1)
    return np.concatenate([np.zeros(degree), breaks, np.full(degree, horizon)])


@dataclass
class BSplineControl:
    """
    Cubic B-spline on [0, horizon] with clamped uniform knots

    Args:
        control_points: (m,) for one class or (m, k) for k classes sharing knots
        horizon: End time t_f
        bound: Largest allowed |control point|; by the convex-hull property
            it also bounds |u(t)|
    """
    control_points: np.ndarray
    horizon: float
    bound: float = 20.0
    degree: int = DEGREE
    knots: np.ndarray = field(init=False, repr=False)
    _spline: BSpline = field(init=False, repr=False)

    def __post_init__(self):
        self.control_points = np.asarray(self.control_points, dtype=float)
        if self.horizon <= 0:
            raise DomainError(f"spline horizon must be positive, got {self.horizon}")
        worst = float(np.max(np.abs(self.control_points))) if self.control_points.size else 0.0
        if worst > self.bound:
            raise DomainError(f"control point magnitude {worst:.6g} exceeds bound {self.bound}")
        self.knots = clamped_uniform_knots(len(self.control_points), self.horizon, self.degree)
        self._spline = BSpline(self.knots, self.control_points, self.degree, extrapolate=False)

    @property
    def n_points(self) -> int:
        return len(self.control_points)

    def __call__(self, t):
        return eval_bspline(self, t)

    @classmethod
    def from_file(cls, path: str | Path, horizon: float, bound: float = 20.0) -> 'BSplineControl':
        """
        Control points from a whitespace table: one row per point, one
        column per controlled class, '#' comments allowed
        """
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"spline file not found: {path}")
        try:
            points = np.loadtxt(path, comments="#", ndmin=2)
        except ValueError as e:
            raise ConfigError(f"cannot read spline file {path}: {e}")
        if points.shape[1] == 1:
            points = points[:, 0]
        logger.info(f"Loaded {len(points)} spline control points from {path}")
        return cls(control_points=points, horizon=horizon, bound=bound)


def eval_bspline(c: BSplineControl, t):
    """de Boor evaluation; t must lie in [0, horizon]"""
    t_arr = np.asarray(t, dtype=float)
    slack = 1e-12 * max(1.0, c.horizon)
    if np.any(t_arr < -slack) or np.any(t_arr > c.horizon + slack):
        raise DomainError(f"t outside the knot span [0, {c.horizon:.6g}]")
    values = c._spline(np.clip(t_arr, 0.0, c.horizon))
    if values.ndim == 0:
        return float(values)
    return values
