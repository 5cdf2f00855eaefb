"""Lipschitz monotone maps A: E -> E* and separable maximal monotone parts B.

A is one of: affine x -> Mx + c with M + M^T positive semidefinite,
the gradient x -> M^T(Mx - b) of the least-squares term 0.5||Mx - b||_2^2,
or the zero map.  Each carries a certified Lipschitz bound valid for the
lp -> lq norm pairing because ||.||_2 <= ||.||_p on E (p <= 2) and
||.||_q <= ||.||_2 on E* (q >= 2).

B is described coordinate-wise by scalar convex pieces with computable
subdifferential intervals; this is what makes the resolvent exactly
solvable downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .geometry import DualVector, PrimalVector

__all__ = [
    "ZeroFn",
    "ScaledAbs",
    "IntervalIndicator",
    "QuadraticPiece",
    "SeparableConvex",
    "zero_function",
    "box_indicator",
    "l1_term",
    "quadratic_term",
    "AffineMap",
    "LeastSquaresGradientMap",
    "ZeroMap",
    "affine_map",
    "least_squares_gradient",
    "zero_map",
    "spectral_norm_power",
    "monotonicity_probe",
    "MonotonicityReport",
    "StrongMonotonicityTag",
]

LIPSCHITZ_INFLATION = 1.01  # guards power-iteration under-estimation


# ---------------------------------------------------------------------------
# scalar convex pieces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroFn:
    """f(t) = 0."""

    def value(self, t: float) -> float:
        return 0.0

    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def contains(self, t: float) -> bool:
        return True

    def subdifferential(self, t: float) -> tuple[float, float]:
        return (0.0, 0.0)


@dataclass(frozen=True)
class ScaledAbs:
    """f(t) = alpha |t| with alpha >= 0."""

    alpha: float

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError("alpha must be nonnegative")

    def value(self, t: float) -> float:
        return self.alpha * abs(t)

    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def contains(self, t: float) -> bool:
        return True

    def subdifferential(self, t: float) -> tuple[float, float]:
        if t == 0.0:
            return (-self.alpha, self.alpha)
        s = self.alpha * math.copysign(1.0, t)
        return (s, s)


@dataclass(frozen=True)
class IntervalIndicator:
    """Indicator of [lo, hi]; subdifferential is the normal cone."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def value(self, t: float) -> float:
        return 0.0 if self.contains(t) else math.inf

    def domain(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi

    def subdifferential(self, t: float) -> tuple[float, float]:
        if not self.contains(t):
            raise ValueError(f"{t} outside the domain [{self.lo}, {self.hi}]")
        if self.lo == self.hi:
            # degenerate interval: the normal cone is the whole line
            return (-math.inf, math.inf)
        return (
            -math.inf if t == self.lo else 0.0,
            math.inf if t == self.hi else 0.0,
        )


@dataclass(frozen=True)
class QuadraticPiece:
    """f(t) = (w/2) t^2 with w >= 0; derivative w t."""

    w: float

    def __post_init__(self):
        if self.w < 0.0:
            raise ValueError("quadratic weight must be nonnegative")

    def value(self, t: float) -> float:
        return 0.5 * self.w * t * t

    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def contains(self, t: float) -> bool:
        return True

    def subdifferential(self, t: float) -> tuple[float, float]:
        return (self.w * t, self.w * t)


Piece = Union[ZeroFn, ScaledAbs, IntervalIndicator, QuadraticPiece]

_KIND_ZERO, _KIND_ABS, _KIND_INTERVAL, _KIND_QUAD = 0, 1, 2, 3


class SeparableConvex:
    """Coordinate-separable convex function f(x) = sum_j f_j(x_j).

    Pieces are compiled into flat parameter arrays so that per-coordinate
    operations (values, subdifferential intervals, resolvent solves)
    vectorize across coordinates of the same kind.
    """

    def __init__(self, pieces):
        pieces = tuple(pieces)
        if not pieces:
            raise ValueError("need at least one piece")
        self.pieces = pieces
        n = len(pieces)
        kinds = np.empty(n, dtype=np.int8)
        alpha = np.zeros(n)
        lo = np.full(n, -math.inf)
        hi = np.full(n, math.inf)
        quad = np.zeros(n)
        for j, piece in enumerate(pieces):
            if isinstance(piece, ZeroFn):
                kinds[j] = _KIND_ZERO
            elif isinstance(piece, ScaledAbs):
                kinds[j] = _KIND_ABS
                alpha[j] = piece.alpha
            elif isinstance(piece, IntervalIndicator):
                kinds[j] = _KIND_INTERVAL
                lo[j], hi[j] = piece.lo, piece.hi
            elif isinstance(piece, QuadraticPiece):
                kinds[j] = _KIND_QUAD
                quad[j] = piece.w
            else:
                raise TypeError(f"unsupported piece {piece!r}")
        self._kinds = kinds
        self._alpha = alpha
        self._lo = lo
        self._hi = hi
        self._quad = quad
        self._all_zero = bool(np.all(kinds == _KIND_ZERO))

    @property
    def n(self) -> int:
        return len(self.pieces)

    def __eq__(self, other):
        return isinstance(other, SeparableConvex) and self.pieces == other.pieces

    def __repr__(self):
        return f"SeparableConvex(n={self.n})"

    def contains(self, coords: np.ndarray) -> bool:
        """True when every coordinate lies in its piece's domain."""
        return bool(np.all((coords >= self._lo) & (coords <= self._hi)))

    def value(self, coords: np.ndarray) -> float:
        """f(x); +inf outside the domain."""
        if not self.contains(coords):
            return math.inf
        total = float(np.dot(self._alpha, np.abs(coords)))
        total += 0.5 * float(np.dot(self._quad, coords * coords))
        return total

    def subdifferential_bounds(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (d_lo, d_hi) with [d_lo_j, d_hi_j] = subdifferential of f_j.

        Coordinates outside their domain get an empty interval encoded as
        (+inf, -inf) so that distances to it evaluate to +inf.
        """
        n = self.n
        d_lo = np.zeros(n)
        d_hi = np.zeros(n)
        kinds = self._kinds

        mask = kinds == _KIND_ABS
        if np.any(mask):
            t = coords[mask]
            a = self._alpha[mask]
            s = np.sign(t) * a
            d_lo[mask] = np.where(t == 0.0, -a, s)
            d_hi[mask] = np.where(t == 0.0, a, s)

        mask = kinds == _KIND_QUAD
        if np.any(mask):
            d_lo[mask] = d_hi[mask] = self._quad[mask] * coords[mask]

        mask = kinds == _KIND_INTERVAL
        if np.any(mask):
            t = coords[mask]
            lo, hi = self._lo[mask], self._hi[mask]
            at_lo = (t == lo) & (lo < hi)
            at_hi = (t == hi) & (lo < hi)
            degenerate = lo == hi
            d_lo[mask] = np.where(at_lo | degenerate, -math.inf, 0.0)
            d_hi[mask] = np.where(at_hi | degenerate, math.inf, 0.0)
            outside = (t < lo) | (t > hi)
            if np.any(outside):
                idx = np.flatnonzero(mask)[outside]
                d_lo[idx], d_hi[idx] = math.inf, -math.inf

        return d_lo, d_hi


def zero_function(n: int) -> SeparableConvex:
    """B = 0 (the resolvent becomes the identity in the dual sense)."""
    return SeparableConvex([ZeroFn()] * n)


def box_indicator(lo, hi, n: int) -> SeparableConvex:
    """Indicator of the box prod_j [lo_j, hi_j]; scalars broadcast."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    return SeparableConvex([IntervalIndicator(float(a), float(b)) for a, b in zip(lo, hi)])


def l1_term(alpha: float, n: int) -> SeparableConvex:
    """f(x) = alpha ||x||_1."""
    return SeparableConvex([ScaledAbs(alpha)] * n)


def quadratic_term(w, n: int) -> SeparableConvex:
    """f(x) = 0.5 sum_j w_j x_j^2; scalar w broadcasts."""
    w = np.broadcast_to(np.asarray(w, dtype=float), (n,))
    return SeparableConvex([QuadraticPiece(float(wj)) for wj in w])


# ---------------------------------------------------------------------------
# Lipschitz monotone maps
# ---------------------------------------------------------------------------

def spectral_norm_power(M: np.ndarray, iterations: int = 200, rel_tol: float = 1e-12) -> float:
    """Largest singular value of M by power iteration on M^T M.

    Stops after `iterations` steps or when the Rayleigh quotient stagnates
    below `rel_tol` relative change.  Deterministic (fixed internal seed).
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iterations):
        w = M.T @ (M @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        lam_new = float(v @ w)
        v = w / norm_w
        if abs(lam_new - lam) <= rel_tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return math.sqrt(max(lam, 0.0))


@dataclass(frozen=True)
class AffineMap:
    """x -> Mx + c, monotone when M + M^T is positive semidefinite."""

    M: np.ndarray
    c: np.ndarray
    lipschitz_bound: float

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def apply(self, coords: np.ndarray) -> np.ndarray:
        return self.M @ coords + self.c

    def __call__(self, x: PrimalVector) -> DualVector:
        return DualVector(self.apply(x.coords), x.space)


@dataclass(frozen=True)
class LeastSquaresGradientMap:
    """Gradient x -> M^T(Mx - b) of g(x) = 0.5 ||Mx - b||_2^2."""

    M: np.ndarray
    b: np.ndarray
    lipschitz_bound: float

    @property
    def n(self) -> int:
        return self.M.shape[1]

    def apply(self, coords: np.ndarray) -> np.ndarray:
        return self.M.T @ (self.M @ coords - self.b)

    def __call__(self, x: PrimalVector) -> DualVector:
        return DualVector(self.apply(x.coords), x.space)


@dataclass(frozen=True)
class ZeroMap:
    """A = 0; reduces the splitting iterations to proximal point steps."""

    n: int
    lipschitz_bound: float = 0.0

    def apply(self, coords: np.ndarray) -> np.ndarray:
        return np.zeros(self.n)

    def __call__(self, x: PrimalVector) -> DualVector:
        return DualVector(self.apply(x.coords), x.space)


LipschitzMonotoneMap = Union[AffineMap, LeastSquaresGradientMap, ZeroMap]


def affine_map(M, c=None, require_monotone: bool = True) -> AffineMap:
    """Build x -> Mx + c with a certified Lipschitz bound.

    require_monotone=False skips the M + M^T PSD check; only diagnostic
    code (e.g. probing anti-monotone maps) should do that.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"affine map needs a square matrix, got {M.shape}")
    n = M.shape[0]
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    if c.shape != (n,):
        raise ValueError(f"offset shape {c.shape} does not match dimension {n}")
    if require_monotone:
        sym_eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
        scale = max(1.0, float(np.max(np.abs(sym_eigs))))
        if sym_eigs[0] < -1e-10 * scale:
            raise ValueError(
                f"M + M^T has negative eigenvalue {sym_eigs[0]:.3e}; map is not monotone"
            )
    bound = LIPSCHITZ_INFLATION * spectral_norm_power(M)
    return AffineMap(M, c, bound)


def least_squares_gradient(M, b) -> LeastSquaresGradientMap:
    """Build the least-squares gradient map with bound 1.01 * sigma_max(M)^2."""
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    if M.ndim != 2 or b.shape != (M.shape[0],):
        raise ValueError(f"incompatible shapes M {M.shape}, b {b.shape}")
    sigma = spectral_norm_power(M)
    return LeastSquaresGradientMap(M, b, LIPSCHITZ_INFLATION * sigma * sigma)


def zero_map(n: int) -> ZeroMap:
    return ZeroMap(n)


@dataclass(frozen=True)
class StrongMonotonicityTag:
    """gamma >= 0; gamma = 0 means merely monotone."""

    gamma: float = 0.0

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")


@dataclass(frozen=True)
class MonotonicityReport:
    min_inner_value: float
    passed: bool


def monotonicity_probe(A: LipschitzMonotoneMap, sample_count: int, seed: int) -> MonotonicityReport:
    """Randomized monotonicity check.

    Draws random pairs and returns the minimum of
    <Ax - Ay, x - y> / ||x - y||_2^2 (Euclidean normalization, so for
    M = P^T P + gamma I the reported minimum approaches gamma).
    Passes iff the minimum is >= -1e-10.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    n = A.n
    worst = math.inf
    for _ in range(sample_count):
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        d = x - y
        denom = float(d @ d)
        if denom == 0.0:
            continue
        value = float((A.apply(x) - A.apply(y)) @ d) / denom
        worst = min(worst, value)
    if math.isinf(worst):
        worst = 0.0
    return MonotonicityReport(worst, worst >= -1e-10)
