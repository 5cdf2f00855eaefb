"""Finite-dimensional lp geometry: spaces, duality mappings, Lyapunov functionals.

The primal space is E = lp^n with 1 < p <= 2; its dual is lq^n with
1/p + 1/q = 1 (so q >= 2).  E is 2-uniformly convex with constant
mu = 1/(p-1) and the dual is 2-uniformly smooth with constant
kappa = sqrt((q-1)/2).  At p = 2 everything collapses to the Euclidean
case (J is the identity, mu = 1, kappa = 1/sqrt(2)).

In finite dimension, weak and strong convergence coincide, so every
convergence statement downstream is a plain norm statement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpaceDescriptor",
    "PrimalVector",
    "DualVector",
    "duality_map",
    "inverse_duality_map",
    "lyapunov",
    "v_functional",
    "pairing",
    "step_size_cap",
]


@dataclass(frozen=True)
class SpaceDescriptor:
    """The space E = lp^n together with its convexity/smoothness constants.

    q, mu and kappa are derived from p and never stored independently.
    """

    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if not (1.0 < self.p <= 2.0):
            raise ValueError(f"exponent p must lie in (1, 2], got {self.p}")

    @property
    def q(self) -> float:
        """Dual exponent, 1/p + 1/q = 1."""
        return self.p / (self.p - 1.0)

    @property
    def mu(self) -> float:
        """2-uniform convexity constant of lp, 1 < p <= 2."""
        return 1.0 / (self.p - 1.0)

    @property
    def kappa(self) -> float:
        """2-uniform smoothness constant of the dual lq, q >= 2."""
        return math.sqrt((self.q - 1.0) / 2.0)

    def primal_norm(self, coords: np.ndarray) -> float:
        """lp norm of a coordinate array."""
        if self.p == 2.0:
            return float(np.linalg.norm(coords))
        return float(np.sum(np.abs(coords) ** self.p) ** (1.0 / self.p))

    def dual_norm(self, coords: np.ndarray) -> float:
        """lq norm of a coordinate array."""
        if self.p == 2.0:
            return float(np.linalg.norm(coords))
        q = self.q
        return float(np.sum(np.abs(coords) ** q) ** (1.0 / q))


def _as_coords(values, n: int) -> np.ndarray:
    coords = np.asarray(values, dtype=float)
    if coords.shape != (n,):
        raise ValueError(f"expected shape ({n},), got {coords.shape}")
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates must be finite")
    coords = coords.copy()
    coords.setflags(write=False)
    return coords


@dataclass(frozen=True)
class PrimalVector:
    """Element of E = lp^n."""

    coords: np.ndarray
    space: SpaceDescriptor

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_coords(self.coords, self.space.n))

    @property
    def norm(self) -> float:
        return self.space.primal_norm(self.coords)


@dataclass(frozen=True)
class DualVector:
    """Element of E* = lq^n."""

    coords: np.ndarray
    space: SpaceDescriptor

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_coords(self.coords, self.space.n))

    @property
    def norm(self) -> float:
        return self.space.dual_norm(self.coords)


def _same_space(a, b) -> SpaceDescriptor:
    if a.space != b.space:
        raise ValueError("vectors belong to different spaces")
    return a.space


def duality_map_coords(space: SpaceDescriptor, x: np.ndarray) -> np.ndarray:
    """J on raw coordinates: (Jx)_j = ||x||_p^{2-p} sign(x_j)|x_j|^{p-1}.

    Exact identity at p = 2.  J(0) = 0 in all cases.
    """
    p = space.p
    if p == 2.0:
        return x.copy()
    nrm = space.primal_norm(x)
    # |x_j|^{p-1} with p > 1 is well-defined (and 0) at x_j = 0
    return nrm ** (2.0 - p) * np.sign(x) * np.abs(x) ** (p - 1.0)


def inverse_duality_map_coords(space: SpaceDescriptor, xs: np.ndarray) -> np.ndarray:
    """J^{-1} = J_* on raw dual coordinates (the lq duality map)."""
    p = space.p
    if p == 2.0:
        return xs.copy()
    q = space.q
    nrm = space.dual_norm(xs)
    if nrm == 0.0:
        # 2 - q < 0 would otherwise produce 0^{negative}
        return np.zeros_like(xs)
    return nrm ** (2.0 - q) * np.sign(xs) * np.abs(xs) ** (q - 1.0)


def duality_map(x: PrimalVector) -> DualVector:
    """Normalized duality mapping J: E -> E*.

    Satisfies <Jx, x> = ||x||_p^2 = ||Jx||_q^2 and J(tx) = tJx for t > 0.
    """
    return DualVector(duality_map_coords(x.space, x.coords), x.space)


def inverse_duality_map(xstar: DualVector) -> PrimalVector:
    """Inverse duality mapping J^{-1}: E* -> E; J^{-1}(Jx) = x to round-off."""
    return PrimalVector(inverse_duality_map_coords(xstar.space, xstar.coords), xstar.space)


def pairing(xstar: DualVector, x: PrimalVector) -> float:
    """Bilinear pairing <x*, x> = sum_j x*_j x_j."""
    _same_space(xstar, x)
    return float(np.dot(xstar.coords, x.coords))


def lyapunov_coords(space: SpaceDescriptor, x: np.ndarray, y: np.ndarray) -> float:
    """phi(x, y) = ||x||^2 - 2<x, Jy> + ||y||^2 on raw coordinates."""
    jy = duality_map_coords(space, y)
    nx = space.primal_norm(x)
    ny = space.primal_norm(y)
    return nx * nx - 2.0 * float(np.dot(x, jy)) + ny * ny


def lyapunov(x: PrimalVector, y: PrimalVector) -> float:
    """Lyapunov functional phi(x, y) >= (||x|| - ||y||)^2 >= 0.

    The Banach-space surrogate for the squared distance; equals
    ||x - y||_2^2 at p = 2.
    """
    space = _same_space(x, y)
    return lyapunov_coords(space, x.coords, y.coords)


def v_functional(x: PrimalVector, xstar: DualVector) -> float:
    """V(x, x*) = ||x||^2 - 2<x, x*> + ||x*||_q^2 = phi(x, J^{-1}x*)."""
    space = _same_space(x, xstar)
    nx = space.primal_norm(x.coords)
    ns = space.dual_norm(xstar.coords)
    return nx * nx - 2.0 * float(np.dot(x.coords, xstar.coords)) + ns * ns


def step_size_cap(space: SpaceDescriptor, L: float) -> float:
    """Strict upper bound 1/(sqrt(2 mu) kappa L) for admissible step sizes.

    With mu = 1/(p-1) and kappa = sqrt((q-1)/2) this simplifies to (p-1)/L.
    """
    if L <= 0.0:
        raise ValueError(f"Lipschitz bound must be positive, got {L}")
    return 1.0 / (math.sqrt(2.0 * space.mu) * space.kappa * L)
