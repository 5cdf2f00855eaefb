"""Forward-backward splitting with forward correction in lp geometry.

Three variants of the same two-step recursion for 0 in (A + B)x:

  fixed step   y_n = J_lam^B(J^{-1}(Jx_n - lam_n Ax_n)),
               x_{n+1} = J^{-1}(Jy_n - lam_n(Ay_n - Ax_n)),
               with lam_n in [a, b], b < 1/(sqrt(2 mu) kappa L);
  linesearch   same correction step, lam_n backtracked from gamma by
               factor l until lam ||Ax_n - Ay_n||_q <= theta ||x_n - y_n||_p;
  anchored     the corrected point w_n is averaged in the dual with a
               fixed anchor, Jx_{n+1} = alpha_n Jx_1 + (1 - alpha_n) Jw_n,
               which upgrades convergence to the projection of the anchor
               onto the solution set.

The iteration stops when ||x_n - y_n||_p = 0 exactly (x_n solves the
inclusion) or drops below the configured epsilon.  When a known solution
is supplied, per-iteration Lyapunov descent is verified and violations
warn by default (raise in strict mode, see SPLITTING_STRICT).
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from .geometry import (
    PrimalVector,
    SpaceDescriptor,
    duality_map_coords,
    inverse_duality_map_coords,
    lyapunov_coords,
    step_size_cap,
)
from .operators import SeparableConvex
from .resolvent import resolve_dual_coords

__all__ = [
    "FixedStep",
    "LineSearch",
    "Halpern",
    "SolverConfig",
    "SolveStatus",
    "IterationRecord",
    "SolveReport",
    "RateCertificate",
    "DescentWarning",
    "DescentViolationError",
    "LineSearchBudgetError",
    "tseng_step",
    "line_search_step",
    "solve_fixed",
    "solve_linesearch",
    "solve_halpern",
    "solve",
    "rate_certificate",
]

STRICT_ENV_VAR = "SPLITTING_STRICT"
DESCENT_SLACK = 1e-10
LINESEARCH_TRIAL_BUDGET = 10_000


class DescentWarning(UserWarning):
    """A Lyapunov descent inequality was violated beyond tolerance."""


class DescentViolationError(RuntimeError):
    """Strict-mode version of DescentWarning."""


class LineSearchBudgetError(RuntimeError):
    """Backtracking exhausted its trial budget (input not Lipschitz?)."""


class SolveStatus(Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    EXACT_SOLUTION_HIT = "ExactSolutionHit"


@dataclass(frozen=True)
class FixedStep:
    """Step sizes in [a, b] with b below the cap 1/(sqrt(2 mu) kappa L).

    schedule "constant" uses (a + b)/2 every iteration; "ramp" climbs
    a + n/(n+1)(b - a), the admissible version of the archetypal
    increasing schedule.
    """

    a: float
    b: float
    schedule: str = "constant"

    def __post_init__(self):
        if not (0.0 < self.a <= self.b):
            raise ValueError(f"need 0 < a <= b, got a={self.a}, b={self.b}")
        if self.schedule not in ("constant", "ramp"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass(frozen=True)
class LineSearch:
    """Backtracking from gamma by factor l, acceptance slope theta."""

    gamma: float
    l: float
    theta: float

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if not (0.0 < self.l < 1.0):
            raise ValueError("l must lie in (0, 1)")
        if self.theta <= 0.0:
            raise ValueError("theta must be positive")


@dataclass(frozen=True)
class Halpern:
    """Fixed-step corrected recursion with dual anchoring toward x_1.

    anchor_schedule maps n >= 1 to alpha_n; the default 1/(n+1) satisfies
    alpha_n -> 0 and sum alpha_n = inf.  alpha_n = 0 is allowed and makes
    the step coincide with the plain fixed-step one.
    """

    a: float
    b: float
    schedule: str = "constant"
    anchor_schedule: Optional[Callable[[int], float]] = None

    def __post_init__(self):
        if not (0.0 < self.a <= self.b):
            raise ValueError(f"need 0 < a <= b, got a={self.a}, b={self.b}")
        if self.schedule not in ("constant", "ramp"):
            raise ValueError(f"unknown schedule {self.schedule!r}")

    def alpha(self, n: int) -> float:
        value = 1.0 / (n + 1.0) if self.anchor_schedule is None else float(self.anchor_schedule(n))
        if not (0.0 <= value < 1.0):
            raise ValueError(f"anchor weight alpha_{n} = {value} outside [0, 1)")
        return value


Variant = Union[FixedStep, LineSearch, Halpern]


@dataclass(frozen=True)
class SolverConfig:
    variant: Variant
    epsilon: float = 1e-6
    max_iterations: int = 10_000
    trace_every: int = 1
    strict: Optional[bool] = None  # None: read SPLITTING_STRICT

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")

    def strict_mode(self) -> bool:
        if self.strict is not None:
            return self.strict
        return os.environ.get(STRICT_ENV_VAR) == "1"


@dataclass(frozen=True)
class IterationRecord:
    n: int
    lam: float
    residual: float
    phi_to_solution: Optional[float] = None
    linesearch_trials: Optional[int] = None
    alpha: Optional[float] = None


@dataclass(frozen=True)
class SolveReport:
    status: SolveStatus
    final_point: PrimalVector
    iterations: int
    trace: list[IterationRecord]
    resolvent_calls: int


def _step_interval_cap(space: SpaceDescriptor, L: float, b: float) -> None:
    if L > 0.0:
        cap = step_size_cap(space, L)
        if not b < cap:
            raise ValueError(
                f"upper step size b={b} must be strictly below the cap {cap:.6g} "
                f"(= 1/(sqrt(2 mu) kappa L))"
            )


def _make_lambda_schedule(a: float, b: float, schedule: str) -> Callable[[int], float]:
    if schedule == "constant":
        lam = 0.5 * (a + b)
        return lambda n: lam
    return lambda n: a + (n / (n + 1.0)) * (b - a)


def _start_coords(space: SpaceDescriptor, x1) -> np.ndarray:
    if x1 is None:
        return np.zeros(space.n)
    if isinstance(x1, PrimalVector):
        if x1.space != space:
            raise ValueError("starting point lives in a different space")
        return np.array(x1.coords)
    coords = np.asarray(x1, dtype=float)
    if coords.shape != (space.n,):
        raise ValueError(f"starting point must have shape ({space.n},)")
    return coords.copy()


class _DescentChecker:
    """Verifies the per-iteration Lyapunov descent against a known solution."""

    def __init__(self, space: SpaceDescriptor, xstar: np.ndarray, strict: bool):
        self.space = space
        self.xstar = xstar
        self.strict = strict

    def phi_to(self, coords: np.ndarray) -> float:
        return lyapunov_coords(self.space, self.xstar, coords)

    def check_step(self, n: int, phi_x: float, phi_y_x: float,
                   next_coords: np.ndarray, factor: float) -> None:
        phi_next = self.phi_to(next_coords)
        if not math.isfinite(phi_next):
            self._violation(f"Lyapunov value non-finite at iteration {n}")
        elif phi_next > phi_x + DESCENT_SLACK:
            self._violation(
                f"Lyapunov monotonicity violated at iteration {n}: "
                f"phi={phi_next:.6e} > {phi_x:.6e} + {DESCENT_SLACK}"
            )
        elif phi_next > phi_x - factor * phi_y_x + DESCENT_SLACK:
            self._violation(
                f"quantified descent violated at iteration {n}: "
                f"phi={phi_next:.6e} > {phi_x:.6e} - {factor:.6e}*{phi_y_x:.6e} + {DESCENT_SLACK}"
            )

    def _violation(self, message: str) -> None:
        if self.strict:
            raise DescentViolationError(message)
        warnings.warn(message, DescentWarning, stacklevel=3)


class _Trace:
    """Collects one record per trace_every iterations plus the final one."""

    def __init__(self, every: int):
        self.every = every
        self.rows: list[IterationRecord] = []
        self._last: Optional[IterationRecord] = None

    def add(self, rec: IterationRecord) -> None:
        self._last = rec
        if rec.n % self.every == 0:
            self.rows.append(rec)

    def finish(self) -> list[IterationRecord]:
        if self._last is not None and (not self.rows or self.rows[-1].n != self._last.n):
            self.rows.append(self._last)
        return self.rows


def tseng_step(space: SpaceDescriptor, A, B: SeparableConvex, lam: float,
               x: PrimalVector) -> tuple[PrimalVector, PrimalVector]:
    """One corrected forward-backward step: returns (y, x_next).

    y = J_lam^B(J^{-1}(Jx - lam Ax)) and x_next = J^{-1}(Jy - lam(Ay - Ax)).
    If y equals x exactly, x is a zero of A + B and is returned unchanged.
    """
    if lam <= 0.0:
        raise ValueError("lambda must be positive")
    xc = x.coords
    jx = duality_map_coords(space, xc)
    ax = A.apply(xc)
    yc, _ = resolve_dual_coords(space, B, lam, jx - lam * ax)
    y = PrimalVector(yc, space)
    if np.array_equal(yc, xc):
        return y, x
    ay = A.apply(yc)
    jy = duality_map_coords(space, yc)
    x_next = inverse_duality_map_coords(space, jy - lam * (ay - ax))
    return y, PrimalVector(x_next, space)


def _line_search_coords(space: SpaceDescriptor, A, B: SeparableConvex,
                        gamma: float, l: float, theta: float,
                        jx: np.ndarray, ax: np.ndarray, xc: np.ndarray):
    """Backtrack lam over {gamma, gamma*l, ...}; returns (lam, y, ay, trials)."""
    lam = gamma
    for trial in range(1, LINESEARCH_TRIAL_BUDGET + 1):
        y, _ = resolve_dual_coords(space, B, lam, jx - lam * ax)
        ay = A.apply(y)
        if lam * space.dual_norm(ax - ay) <= theta * space.primal_norm(xc - y):
            return lam, y, ay, trial
        lam *= l
    raise LineSearchBudgetError(
        f"no admissible step after {LINESEARCH_TRIAL_BUDGET} trials; is A Lipschitz?"
    )


def line_search_step(space: SpaceDescriptor, A, B: SeparableConvex, gamma: float,
                     l: float, theta: float, x: PrimalVector) -> tuple[float, PrimalVector]:
    """Largest lam in {gamma, gamma l, gamma l^2, ...} passing the criterion
    lam ||Ax - Ay(lam)||_q <= theta ||x - y(lam)||_p, with its y.

    Terminates with lam >= min(gamma, theta l / L) for L-Lipschitz A.
    """
    _validate_theta(space, theta)
    xc = x.coords
    jx = duality_map_coords(space, xc)
    ax = A.apply(xc)
    lam, y, _, _ = _line_search_coords(space, A, B, gamma, l, theta, jx, ax, xc)
    return lam, PrimalVector(y, space)


def _validate_theta(space: SpaceDescriptor, theta: float) -> None:
    theta_cap = 1.0 / (math.sqrt(2.0 * space.mu) * space.kappa)  # equals p - 1
    if not theta < theta_cap:
        raise ValueError(f"theta={theta} must be strictly below {theta_cap:.6g} (= p - 1)")


def _prepare(problem, config: SolverConfig, x1):
    space = problem.space
    x = _start_coords(space, x1)
    checker = None
    if problem.known_solution is not None:
        checker = _DescentChecker(space, np.array(problem.known_solution.coords),
                                  config.strict_mode())
    return space, problem.A, problem.B, x, checker


def solve_fixed(problem, config: SolverConfig, x1=None, callback=None) -> SolveReport:
    """Run the fixed-step variant until ||x_n - y_n|| <= epsilon.

    Requires a certified Lipschitz bound on A (problem.A.lipschitz_bound);
    the step interval [a, b] is validated against the admissible cap.
    """
    variant = config.variant
    if not isinstance(variant, FixedStep):
        raise TypeError("solve_fixed needs a FixedStep variant")
    space, A, B, x, checker = _prepare(problem, config, x1)
    L = A.lipschitz_bound
    _step_interval_cap(space, L, variant.b)
    lam_of = _make_lambda_schedule(variant.a, variant.b, variant.schedule)

    mu, kappa = space.mu, space.kappa
    trace = _Trace(config.trace_every)
    resolvent_calls = 0
    status = SolveStatus.MAX_ITERATIONS
    final = x
    for n in range(1, config.max_iterations + 1):
        lam = lam_of(n)
        jx = duality_map_coords(space, x)
        ax = A.apply(x)
        y, _ = resolve_dual_coords(space, B, lam, jx - lam * ax)
        resolvent_calls += 1
        residual = space.primal_norm(x - y)
        if not math.isfinite(residual):
            raise ValueError(
                f"iterates diverged at iteration {n}; check the Lipschitz certificate"
            )
        phi_x = checker.phi_to(x) if checker else None
        trace.add(IterationRecord(n, lam, residual, phi_x))
        if callback is not None:
            callback(n, x, y)
        if residual == 0.0:
            status, final = SolveStatus.EXACT_SOLUTION_HIT, x
            break
        if residual <= config.epsilon:
            status, final = SolveStatus.CONVERGED, y
            break
        ay = A.apply(y)
        jy = duality_map_coords(space, y)
        x_next = inverse_duality_map_coords(space, jy - lam * (ay - ax))
        if checker is not None:
            factor = 1.0 - 2.0 * kappa**2 * lam**2 * L**2 * mu
            checker.check_step(n, phi_x, lyapunov_coords(space, y, x), x_next, factor)
        x = x_next
        final = y
    return SolveReport(status, PrimalVector(final, space), n, trace.finish(), resolvent_calls)


def solve_linesearch(problem, config: SolverConfig, x1=None, callback=None) -> SolveReport:
    """Run the backtracking variant; no Lipschitz estimate of A is needed."""
    variant = config.variant
    if not isinstance(variant, LineSearch):
        raise TypeError("solve_linesearch needs a LineSearch variant")
    space, A, B, x, checker = _prepare(problem, config, x1)
    _validate_theta(space, variant.theta)

    mu, kappa = space.mu, space.kappa
    factor = 1.0 - 2.0 * kappa**2 * variant.theta**2 * mu
    trace = _Trace(config.trace_every)
    resolvent_calls = 0
    status = SolveStatus.MAX_ITERATIONS
    final = x
    for n in range(1, config.max_iterations + 1):
        jx = duality_map_coords(space, x)
        ax = A.apply(x)
        lam, y, ay, trials = _line_search_coords(
            space, A, B, variant.gamma, variant.l, variant.theta, jx, ax, x
        )
        resolvent_calls += trials
        residual = space.primal_norm(x - y)
        if not math.isfinite(residual):
            raise ValueError(
                f"iterates diverged at iteration {n}; check the Lipschitz certificate"
            )
        phi_x = checker.phi_to(x) if checker else None
        trace.add(IterationRecord(n, lam, residual, phi_x, linesearch_trials=trials))
        if callback is not None:
            callback(n, x, y)
        if residual == 0.0:
            status, final = SolveStatus.EXACT_SOLUTION_HIT, x
            break
        if residual <= config.epsilon:
            status, final = SolveStatus.CONVERGED, y
            break
        jy = duality_map_coords(space, y)
        x_next = inverse_duality_map_coords(space, jy - lam * (ay - ax))
        if checker is not None:
            checker.check_step(n, phi_x, lyapunov_coords(space, y, x), x_next, factor)
        x = x_next
        final = y
    return SolveReport(status, PrimalVector(final, space), n, trace.finish(), resolvent_calls)


def solve_halpern(problem, config: SolverConfig, x1, callback=None) -> SolveReport:
    """Run the anchored variant; converges in norm to the generalized
    projection of the anchor x1 onto the solution set."""
    variant = config.variant
    if not isinstance(variant, Halpern):
        raise TypeError("solve_halpern needs a Halpern variant")
    space, A, B, x, checker = _prepare(problem, config, x1)
    L = A.lipschitz_bound
    _step_interval_cap(space, L, variant.b)
    lam_of = _make_lambda_schedule(variant.a, variant.b, variant.schedule)
    jx1 = duality_map_coords(space, x)

    mu, kappa = space.mu, space.kappa
    trace = _Trace(config.trace_every)
    resolvent_calls = 0
    status = SolveStatus.MAX_ITERATIONS
    final = x
    for n in range(1, config.max_iterations + 1):
        lam = lam_of(n)
        alpha = variant.alpha(n)
        jx = duality_map_coords(space, x)
        ax = A.apply(x)
        y, _ = resolve_dual_coords(space, B, lam, jx - lam * ax)
        resolvent_calls += 1
        residual = space.primal_norm(x - y)
        if not math.isfinite(residual):
            raise ValueError(
                f"iterates diverged at iteration {n}; check the Lipschitz certificate"
            )
        phi_x = checker.phi_to(x) if checker else None
        trace.add(IterationRecord(n, lam, residual, phi_x, alpha=alpha))
        if callback is not None:
            callback(n, x, y)
        if residual == 0.0:
            status, final = SolveStatus.EXACT_SOLUTION_HIT, x
            break
        if residual <= config.epsilon:
            status, final = SolveStatus.CONVERGED, y
            break
        ay = A.apply(y)
        jy = duality_map_coords(space, y)
        jw = jy - lam * (ay - ax)
        w = inverse_duality_map_coords(space, jw)
        if checker is not None:
            # the corrected point obeys the un-anchored descent inequality
            factor = 1.0 - 2.0 * kappa**2 * lam**2 * L**2 * mu
            checker.check_step(n, phi_x, lyapunov_coords(space, y, x), w, factor)
        if alpha == 0.0:
            # exact passthrough: the anchored recursion degenerates to the plain one
            x = w
        else:
            x = inverse_duality_map_coords(space, alpha * jx1 + (1.0 - alpha) * jw)
        final = y
    return SolveReport(status, PrimalVector(final, space), n, trace.finish(), resolvent_calls)


def solve(problem, config: SolverConfig, x1=None, callback=None) -> SolveReport:
    """Dispatch on the configured variant."""
    if isinstance(config.variant, FixedStep):
        return solve_fixed(problem, config, x1, callback)
    if isinstance(config.variant, LineSearch):
        return solve_linesearch(problem, config, x1, callback)
    return solve_halpern(problem, config, x1, callback)


@dataclass(frozen=True)
class RateCertificate:
    passed: bool
    worst_ratio: float


def rate_certificate(space: SpaceDescriptor, L: float, b: float, phi1: float,
                     trace: list[IterationRecord], slack: float = 1e-12) -> RateCertificate:
    """Check min_{k<=n} ||x_k - y_k||^2 <= mu phi1 / (n (1 - 2 kappa^2 b^2 L^2 mu)).

    phi1 is the Lyapunov gap phi(x*, x_1) of the starting point; the bound
    uses the upper step size b uniformly, the conservative reading of the
    O(1/sqrt(n)) residual rate.
    """
    if phi1 < 0.0:
        raise ValueError("phi1 must be nonnegative")
    mu, kappa = space.mu, space.kappa
    denom = 1.0 - 2.0 * kappa**2 * b**2 * L**2 * mu
    if denom <= 0.0:
        raise ValueError(f"step bound b={b} is not admissible for L={L} (denominator {denom:.3e})")
    running_min = math.inf
    worst = 0.0
    passed = True
    for rec in trace:
        running_min = min(running_min, rec.residual**2)
        bound = mu * phi1 / (rec.n * denom)
        if running_min > bound + slack:
            passed = False
        if bound > 0.0:
            worst = max(worst, running_min / bound)
        elif running_min > slack:
            worst = math.inf
    return RateCertificate(passed, worst)
