"""Seeded problem generators and independent solution oracles.

Every generator plants a certified solution where possible (choose x*,
set the affine offset so that A(x*) = 0 exactly in floating point), so
convergence claims can be checked against ground truth.  The coordinate
descent oracle certifies composite minimization at p = 2; for p != 2 the
inclusion residual itself is the ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import PrimalVector, SpaceDescriptor
from .operators import (
    _KIND_ABS,
    _KIND_INTERVAL,
    _KIND_ZERO,
    LipschitzMonotoneMap,
    SeparableConvex,
    affine_map,
    box_indicator,
    l1_term,
    least_squares_gradient,
    zero_function,
)

__all__ = [
    "ProblemInstance",
    "CompositeMinProblem",
    "OracleSolution",
    "gen_skew_vi",
    "gen_strongly_monotone",
    "gen_lasso_like",
    "composite_to_inclusion",
    "coordinate_descent_oracle",
    "brute_force_inclusion_check",
]

CERTIFICATE_TOL = 1e-8


@dataclass(frozen=True)
class ProblemInstance:
    """A monotone inclusion 0 in (A + B)x over a given lp space."""

    space: SpaceDescriptor
    A: LipschitzMonotoneMap
    B: SeparableConvex
    known_solution: Optional[PrimalVector] = None
    solution_unique: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.A.n != self.space.n or self.B.n != self.space.n:
            raise ValueError("operator dimensions do not match the space")
        if self.known_solution is not None:
            res = brute_force_inclusion_check(self, self.known_solution)
            if res > CERTIFICATE_TOL:
                raise ValueError(
                    f"claimed solution fails the inclusion certificate: residual {res:.3e}"
                )


@dataclass(frozen=True)
class CompositeMinProblem:
    """min f(x) + 0.5 ||Mx - b||_2^2 with separable convex f."""

    f: SeparableConvex
    M: np.ndarray
    b_vec: np.ndarray
    planted: Optional[np.ndarray] = None  # generator's sparse target, for diagnostics

    def __post_init__(self):
        if self.M.shape != (self.b_vec.shape[0], self.f.n):
            raise ValueError(
                f"shape mismatch: M {self.M.shape}, b {self.b_vec.shape}, f n={self.f.n}"
            )

    def smooth_value(self, coords: np.ndarray) -> float:
        r = self.M @ coords - self.b_vec
        return 0.5 * float(r @ r)

    def objective(self, coords: np.ndarray) -> float:
        return self.f.value(coords) + self.smooth_value(coords)


@dataclass(frozen=True)
class OracleSolution:
    point: PrimalVector
    objective_value: float
    method: str


def _unit_spectral(M: np.ndarray) -> np.ndarray:
    """Scale a matrix to unit spectral norm (zero matrices pass through)."""
    sigma = float(np.linalg.norm(M, 2))
    return M if sigma == 0.0 else M / sigma


def gen_skew_vi(seed: int, n: int, p: float, skew_weight: float,
                box: tuple[float, float] = (-5.0, 5.0)) -> ProblemInstance:
    """Box-constrained variational inequality with tunable rotation content.

    A(x) = Mx + c with M = w*S + (1-w)*G, S a random skew matrix and G a
    random PSD Gram matrix, both scaled to unit spectral norm; B is the
    box normal cone.  The solution x* is planted strictly inside the box
    by choosing c = -M x*, so A(x*) = 0 exactly.  skew_weight = 1 gives a
    pure rotation field, the classic case where the uncorrected
    forward-backward iteration fails.
    """
    if not (0.0 <= skew_weight <= 1.0):
        raise ValueError("skew_weight must lie in [0, 1]")
    lo, hi = box
    if not lo < hi:
        raise ValueError("box must have nonempty interior")
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, n))
    S = _unit_spectral(0.5 * (R - R.T)) if n > 1 else np.zeros((1, 1))
    P = rng.standard_normal((n, n)) / math.sqrt(n)
    G = _unit_spectral(P.T @ P)
    M = skew_weight * S + (1.0 - skew_weight) * G
    margin = 0.2 * (hi - lo)
    xstar = rng.uniform(lo + margin, hi - margin, n)
    c = -(M @ xstar)
    space = SpaceDescriptor(n, p)
    return ProblemInstance(
        space=space,
        A=affine_map(M, c),
        B=box_indicator(lo, hi, n),
        known_solution=PrimalVector(xstar, space),
        solution_unique=skew_weight < 1.0,
        seed=seed,
    )


def gen_strongly_monotone(seed: int, n: int, p: float, gamma: float) -> ProblemInstance:
    """Unconstrained inclusion with A = Gram + gamma*I, B = 0.

    Strong monotonicity of A makes the planted solution unique.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n, n)) / math.sqrt(n)
    M = _unit_spectral(P.T @ P) + gamma * np.eye(n)
    xstar = rng.standard_normal(n)
    c = -(M @ xstar)
    space = SpaceDescriptor(n, p)
    return ProblemInstance(
        space=space,
        A=affine_map(M, c),
        B=zero_function(n),
        known_solution=PrimalVector(xstar, space),
        solution_unique=True,
        seed=seed,
    )


def gen_lasso_like(seed: int, m: int, n: int, p: float, alpha: float,
                   noise: float = 0.01, sparsity: float = 0.2) -> CompositeMinProblem:
    """l1-regularized least squares with a sparse planted target.

    M has a controlled spectrum (singular values spaced in [0.2, 1.0]);
    b = M x_sparse + noise * gaussian.  alpha only parameterizes the
    regularizer, so instances with the same seed share M and b.
    """
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    rng = np.random.default_rng(seed)
    k = min(m, n)
    U, _ = np.linalg.qr(rng.standard_normal((m, k)))
    V, _ = np.linalg.qr(rng.standard_normal((n, k)))
    singular = np.linspace(1.0, 0.2, k)
    M = U @ np.diag(singular) @ V.T
    x_sparse = np.zeros(n)
    support = rng.choice(n, size=max(1, int(round(sparsity * n))), replace=False)
    x_sparse[support] = rng.uniform(0.5, 1.5, support.size) * rng.choice([-1.0, 1.0], support.size)
    b = M @ x_sparse + noise * rng.standard_normal(m)
    return CompositeMinProblem(l1_term(alpha, n), M, b, planted=x_sparse)


def composite_to_inclusion(cm: CompositeMinProblem, space: SpaceDescriptor) -> ProblemInstance:
    """Rewrite min f + g as 0 in (grad g + df)x with a certified gradient map."""
    if space.n != cm.f.n:
        raise ValueError("space dimension does not match the problem")
    return ProblemInstance(
        space=space,
        A=least_squares_gradient(cm.M, cm.b_vec),
        B=cm.f,
        known_solution=None,
        solution_unique=False,
    )


def coordinate_descent_oracle(cm: CompositeMinProblem, iterations: int = 10_000,
                              stagnation: float = 1e-12) -> OracleSolution:
    """Cyclic exact coordinate minimization of f + 0.5||Mx - b||_2^2.

    Euclidean geometry only; serves as the independent optimum for p = 2
    comparisons.  Stops when a full sweep improves the objective by less
    than `stagnation` relative.
    """
    M, b, f = cm.M, cm.b_vec, cm.f
    n = f.n
    col_sq = np.einsum("ij,ij->j", M, M)
    x = np.zeros(n)
    r = M @ x - b
    obj = cm.objective(x)
    for _ in range(iterations):
        for j in range(n):
            g = float(M[:, j] @ r)
            h = col_sq[j]
            old = x[j]
            if h == 0.0:
                new = _piece_plain_minimizer(f, j, old)
            else:
                new = _piece_prox(f, j, old - g / h, 1.0 / h)
            if new != old:
                r += (new - old) * M[:, j]
                x[j] = new
        new_obj = cm.objective(x)
        if abs(obj - new_obj) <= stagnation * (1.0 + abs(new_obj)):
            obj = new_obj
            break
        obj = new_obj
    space = SpaceDescriptor(n, 2.0)
    return OracleSolution(PrimalVector(x, space), obj, "coordinateDescent")


def _piece_prox(f: SeparableConvex, j: int, v: float, step: float) -> float:
    """Euclidean prox of the j-th piece: argmin_u (u - v)^2/(2 step) + f_j(u)."""
    kind = f._kinds[j]
    if kind == _KIND_ZERO:
        return v
    if kind == _KIND_ABS:
        t = step * f._alpha[j]
        return math.copysign(max(abs(v) - t, 0.0), v)
    if kind == _KIND_INTERVAL:
        return min(max(v, f._lo[j]), f._hi[j])
    return v / (1.0 + step * f._quad[j])


def _piece_plain_minimizer(f: SeparableConvex, j: int, current: float) -> float:
    """argmin of the j-th piece alone (used when a column of M is zero)."""
    kind = f._kinds[j]
    if kind == _KIND_ZERO:
        return current
    if kind == _KIND_INTERVAL:
        return min(max(current, f._lo[j]), f._hi[j])
    return 0.0


def brute_force_inclusion_check(inst: ProblemInstance, candidate: PrimalVector) -> float:
    """lq distance of -A(x) from the product subdifferential of B at x.

    Zero iff the candidate solves 0 in (A + B)x; +inf when a coordinate
    leaves its piece's domain.
    """
    space = inst.space
    if candidate.space != space:
        raise ValueError("candidate lives in a different space")
    coords = candidate.coords
    if not inst.B.contains(coords):
        return math.inf
    target = -inst.A.apply(coords)
    d_lo, d_hi = inst.B.subdifferential_bounds(coords)
    gap = np.maximum(np.maximum(d_lo - target, target - d_hi), 0.0)
    return space.dual_norm(gap)
