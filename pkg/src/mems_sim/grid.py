"""Grids, state containers and model parameters."""

from dataclasses import dataclass, field

import numpy as np


class MemsSimError(Exception):
    pass


class DegenerateGeometryError(MemsSimError, ValueError):
    """The gap between the plates is too thin to map onto the rectangle."""


class SolverFailure(MemsSimError, RuntimeError):
    def __init__(self, message, iterations=0, residual=float("nan")):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class Grid1D:
    n_x: int

    def __post_init__(self):
        if self.n_x < 33 or self.n_x % 2 == 0:
            raise ValueError(f"n_x must be odd and >= 33, got {self.n_x}")

    @property
    def x(self):
        return np.linspace(-1.0, 1.0, self.n_x)

    @property
    def h(self):
        return 2.0 / (self.n_x - 1)


@dataclass(frozen=True)
class MappedGrid:
    """Tensor grid on [-1, 1] x [0, 1] in (x, eta), eta = (1 + z) / (1 + u(x))."""

    base: Grid1D
    n_eta: int

    def __post_init__(self):
        if self.n_eta < 17:
            raise ValueError(f"n_eta must be >= 17, got {self.n_eta}")

    @classmethod
    def create(cls, n_x, n_eta):
        return cls(Grid1D(n_x), n_eta)

    @property
    def eta(self):
        return np.linspace(0.0, 1.0, self.n_eta)

    @property
    def deta(self):
        return 1.0 / (self.n_eta - 1)

    @property
    def shape(self):
        return (self.base.n_x, self.n_eta)


@dataclass
class DeflectionState:
    t: float
    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)

    @property
    def min_u(self):
        return float(self.u.min())

    @property
    def max_u(self):
        return float(self.u.max())

    @property
    def clearance(self):
        """min(1 + u), the smallest gap between the plates."""
        return 1.0 + float(self.u.min())

    def validate(self, atol=1e-12):
        if abs(self.u[0]) > atol or abs(self.u[-1]) > atol:
            raise ValueError("deflection must vanish at x = -1 and x = 1")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("deflection contains non-finite values")
        if self.u.min() <= -1.0:
            raise ValueError(f"deflection must stay above -1, min u = {self.u.min():.6g}")
        return self


@dataclass(frozen=True)
class ModelParams:
    lam: float
    epsilon: float
    q: float = 4.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not self.q > 2:
            raise ValueError(f"q must exceed 2, got {self.q}")

    @property
    def reduced(self):
        """True for the vanishing aspect ratio model (epsilon = 0)."""
        return self.epsilon == 0.0


@dataclass
class PotentialField:
    phi: np.ndarray
    gamma_m: np.ndarray
    g: np.ndarray
    residual: float = 0.0
    iterations: int = 0
    info: dict = field(default_factory=dict)

    def max_principle_violation(self):
        """Largest excursion of phi outside [0, 1]."""
        return float(max(0.0, -self.phi.min(), self.phi.max() - 1.0))
