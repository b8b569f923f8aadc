from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from utils.errors import ConfigError, SingularCouplingError

ControlSignal = Callable[[float], float]
VectorSignal = Callable[[float], np.ndarray]


@dataclass
class SystemState:
    """
    One complex amplitude per equivalence class

    Amplitudes are stored in Cartesian form; radii and phases are views.
    The real vector layout used by the integrators is
    [Re x_0 .. Re x_{k-1}, Im x_0 .. Im x_{k-1}].
    """
    amplitudes: np.ndarray
    multiplicity: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        self.multiplicity = np.asarray(self.multiplicity, dtype=int)
        if self.amplitudes.shape != self.multiplicity.shape:
            raise ValueError("one multiplicity per amplitude is required")

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def phases(self) -> np.ndarray:
        """atan2(im, re) in (-pi, pi]"""
        return np.angle(self.amplitudes)

    @property
    def class_probabilities(self) -> np.ndarray:
        return self.multiplicity * np.abs(self.amplitudes) ** 2

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.amplitudes.real, self.amplitudes.imag])

    @classmethod
    def from_vector(cls, y: np.ndarray, multiplicity: np.ndarray, time: float = 0.0) -> 'SystemState':
        k = len(y) // 2
        return cls(amplitudes=y[:k] + 1j * y[k:], multiplicity=multiplicity, time=time)

    @classmethod
    def from_polar(cls, radii: np.ndarray, phases: np.ndarray, multiplicity: np.ndarray, time: float = 0.0) -> 'SystemState':
        return cls(amplitudes=np.asarray(radii) * np.exp(1j * np.asarray(phases)), multiplicity=multiplicity, time=time)


@dataclass(frozen=True)
class ModelParams:
    """
    Coupling of the Laplacian term

    gamma = g / (n - 2N) unless a coupling is given directly through
    `gamma_override` (needed when n = 2N).
    """
    g: float
    n: int
    n_marked: int
    gamma_override: Optional[float] = None

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.n_marked <= self.n:
            raise ConfigError(f"invalid sizes n={self.n}, N={self.n_marked}")
        if self.gamma_override is None and self.g == 0:
            raise ConfigError("coupling constant g must be nonzero")

    @property
    def gamma(self) -> float:
        if self.gamma_override is not None:
            return float(self.gamma_override)
        if self.n == 2 * self.n_marked:
            raise SingularCouplingError(
                f"gamma = g/(n - 2N) is singular for n = {self.n}, N = {self.n_marked}; give gamma directly"
            )
        return self.g / (self.n - 2 * self.n_marked)

    @classmethod
    def direct(cls, gamma: float, n: int, n_marked: int) -> 'ModelParams':
        """Parameters with the coupling gamma given directly"""
        return cls(g=gamma * (n - 2 * n_marked), n=n, n_marked=n_marked, gamma_override=gamma)


@dataclass(frozen=True)
class ControlScheme:
    """
    Per-class nonlinearity exponent zeta and control signal u(t)

    `signal(t)` returns one control value per class. All nodes of a class
    share exponent and signal, which keeps the graph symmetry.
    """
    zeta: np.ndarray
    signal: VectorSignal = field(compare=False)
    label: str = "custom"

    def __post_init__(self):
        zeta = np.asarray(self.zeta)
        if not np.all(np.equal(np.mod(zeta, 1), 0)):
            raise ConfigError(f"nonlinearity exponents must be integers, got {zeta.tolist()}")
        object.__setattr__(self, "zeta", zeta.astype(int))

    def __len__(self) -> int:
        return len(self.zeta)

    def values(self, t: float) -> np.ndarray:
        return np.asarray(self.signal(t), dtype=float)

    @classmethod
    def zero(cls, zeta: Sequence[int]) -> 'ControlScheme':
        size = len(zeta)
        return cls(zeta=np.asarray(zeta), signal=lambda t: np.zeros(size), label="zero")

    @classmethod
    def constant(cls, zeta: Sequence[int], values: Sequence[float]) -> 'ControlScheme':
        values = np.asarray(values, dtype=float)
        if len(values) != len(zeta):
            raise ConfigError(f"expected {len(zeta)} constant controls, got {len(values)}")
        return cls(zeta=np.asarray(zeta), signal=lambda t: values, label="constant")

    @classmethod
    def per_class(cls, zeta: Sequence[int], signals: Sequence[ControlSignal], label: str = "per-class") -> 'ControlScheme':
        if len(signals) != len(zeta):
            raise ConfigError(f"expected {len(zeta)} control signals, got {len(signals)}")
        signals = tuple(signals)
        return cls(zeta=np.asarray(zeta), signal=lambda t: np.array([u(t) for u in signals]), label=label)

    def lift(self, class_index: np.ndarray) -> 'ControlScheme':
        """Scheme on the nodes of a graph, each node copying its class"""
        class_index = np.asarray(class_index)
        base = self.signal
        return ControlScheme(
            zeta=self.zeta[class_index],
            signal=lambda t: np.asarray(base(t))[class_index],
            label=f"{self.label} (lifted)",
        )
