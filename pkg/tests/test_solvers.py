import math

import numpy as np
import pytest

from lpsplit import (
    AffineMap,
    DescentViolationError,
    DescentWarning,
    FixedStep,
    Halpern,
    LineSearch,
    LineSearchBudgetError,
    PrimalVector,
    ProblemInstance,
    SolveStatus,
    SolverConfig,
    SpaceDescriptor,
    affine_map,
    box_indicator,
    gen_skew_vi,
    gen_strongly_monotone,
    l1_term,
    line_search_step,
    rate_certificate,
    solve,
    solve_fixed,
    solve_halpern,
    solve_linesearch,
    step_size_cap,
    tseng_step,
    zero_function,
    zero_map,
)
from lpsplit.solvers import IterationRecord

from _reference import tseng_fixed_euclid, tseng_halpern_euclid, tseng_linesearch_euclid

ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


def fixed_config(problem, frac_a=0.1, frac_b=0.9, **kw):
    cap = step_size_cap(problem.space, problem.A.lipschitz_bound)
    return SolverConfig(FixedStep(frac_a * cap, frac_b * cap), **kw)


class TestTsengStep:
    def test_skew_hand_example(self):
        # M = [[0,-1],[1,0]], x = (1,0), lam = 0.1:
        # Ax = (0,1), y = (1,-0.1), Ay = (0.1,1), x_next = (0.99,-0.1)
        sp = SpaceDescriptor(2, 2.0)
        A = affine_map(ROTATION)
        y, x_next = tseng_step(sp, A, zero_function(2), 0.1, PrimalVector([1.0, 0.0], sp))
        np.testing.assert_allclose(y.coords, [1.0, -0.1], atol=1e-15)
        np.testing.assert_allclose(x_next.coords, [0.99, -0.1], atol=1e-15)

    def test_solution_is_stationary(self):
        prob = gen_strongly_monotone(0, 6, 2.0, gamma=1.0)
        xstar = prob.known_solution
        y, x_next = tseng_step(prob.space, prob.A, prob.B, 0.1, xstar)
        assert np.array_equal(y.coords, xstar.coords)
        assert np.array_equal(x_next.coords, xstar.coords)

    def test_zero_operator_reduces_to_resolvent_step(self):
        sp = SpaceDescriptor(2, 1.5)
        B = l1_term(0.5, 2)
        x = PrimalVector([2.0, -1.0], sp)
        y, x_next = tseng_step(sp, zero_map(2), B, 0.7, x)
        np.testing.assert_allclose(x_next.coords, y.coords, atol=1e-14)

    def test_rejects_nonpositive_lambda(self):
        sp = SpaceDescriptor(2, 2.0)
        with pytest.raises(ValueError):
            tseng_step(sp, zero_map(2), zero_function(2), 0.0, PrimalVector([1.0, 0.0], sp))


class TestSolveFixed:
    def test_exact_solution_hit_at_start(self):
        prob = gen_strongly_monotone(1, 8, 2.0, gamma=1.0)
        rep = solve_fixed(prob, fixed_config(prob), x1=prob.known_solution)
        assert rep.status is SolveStatus.EXACT_SOLUTION_HIT
        assert rep.iterations == 1
        assert np.array_equal(rep.final_point.coords, prob.known_solution.coords)

    def test_exact_hit_inside_box(self):
        prob = gen_skew_vi(2, 4, 2.0, skew_weight=0.5)
        rep = solve_fixed(prob, fixed_config(prob), x1=prob.known_solution)
        assert rep.status is SolveStatus.EXACT_SOLUTION_HIT

    def test_matches_euclidean_reference(self):
        for seed in range(3):
            prob = gen_skew_vi(seed, 6, 2.0, skew_weight=0.6, box=(-2.0, 2.0))
            cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
            lam = 0.5 * cap
            cfg = SolverConfig(FixedStep(lam, lam), epsilon=1e-30, max_iterations=80)
            seen = []
            solve_fixed(prob, cfg, np.zeros(6),
                        callback=lambda n, x, y: seen.append((x.copy(), y.copy())))
            ref = tseng_fixed_euclid(prob.A, prob.B, lambda n: lam, np.zeros(6), 80)
            assert len(seen) == len(ref)
            for (x_a, y_a), (x_b, y_b) in zip(seen, ref):
                np.testing.assert_allclose(x_a, x_b, atol=1e-10)
                np.testing.assert_allclose(y_a, y_b, atol=1e-10)

    def test_converges_and_certifies(self):
        prob = gen_strongly_monotone(3, 20, 1.5, gamma=1.0)
        rep = solve_fixed(prob, fixed_config(prob, epsilon=1e-8, max_iterations=50_000))
        assert rep.status is SolveStatus.CONVERGED
        assert rep.trace[-1].residual <= 1e-8

    def test_lyapunov_monotone_along_run(self):
        prob = gen_strongly_monotone(4, 12, 1.25, gamma=1.0)
        rep = solve_fixed(prob, fixed_config(prob, epsilon=1e-8, max_iterations=50_000))
        phis = [rec.phi_to_solution for rec in rep.trace]
        assert all(b <= a + 1e-10 for a, b in zip(phis[:-1], phis[1:]))

    def test_ramp_schedule_stays_in_interval(self):
        prob = gen_strongly_monotone(5, 6, 1.5, gamma=1.0)
        cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
        a, b = 0.2 * cap, 0.8 * cap
        cfg = SolverConfig(FixedStep(a, b, schedule="ramp"), epsilon=1e-30, max_iterations=50)
        rep = solve_fixed(prob, cfg)
        lams = [rec.lam for rec in rep.trace]
        assert all(a <= lam < b for lam in lams)
        assert lams == sorted(lams)

    def test_step_bound_validation(self):
        prob = gen_strongly_monotone(6, 4, 1.5, gamma=1.0)
        cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
        with pytest.raises(ValueError):
            solve_fixed(prob, SolverConfig(FixedStep(0.1 * cap, cap)))

    def test_variant_type_checked(self):
        prob = gen_strongly_monotone(6, 4, 1.5, gamma=1.0)
        with pytest.raises(TypeError):
            solve_fixed(prob, SolverConfig(LineSearch(1.0, 0.5, 0.3)))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(FixedStep(0.1, 0.2), epsilon=0.0)
        with pytest.raises(ValueError):
            SolverConfig(FixedStep(0.1, 0.2), max_iterations=0)
        with pytest.raises(ValueError):
            SolverConfig(FixedStep(0.1, 0.2), trace_every=0)
        with pytest.raises(ValueError):
            FixedStep(0.3, 0.2)
        with pytest.raises(ValueError):
            FixedStep(0.1, 0.2, schedule="sawtooth")

    def test_trace_every_keeps_final_row(self):
        prob = gen_strongly_monotone(7, 6, 2.0, gamma=1.0)
        rep = solve_fixed(prob, fixed_config(prob, epsilon=1e-9, trace_every=7))
        assert rep.trace[-1].n == rep.iterations
        interior = [rec.n for rec in rep.trace[:-1]]
        assert all(n % 7 == 0 for n in interior)


class TestDescentChecks:
    def _problem_with_fake_bound(self):
        # understate the Lipschitz bound so the admissible cap is wrong
        prob = gen_strongly_monotone(8, 10, 2.0, gamma=2.0)
        fake = AffineMap(prob.A.M, prob.A.c, lipschitz_bound=0.5 * prob.A.lipschitz_bound)
        return ProblemInstance(prob.space, fake, prob.B,
                               known_solution=prob.known_solution,
                               solution_unique=True, seed=8)

    def test_violation_warns_by_default(self):
        bad = self._problem_with_fake_bound()
        cap = step_size_cap(bad.space, bad.A.lipschitz_bound)
        cfg = SolverConfig(FixedStep(0.95 * cap, 0.95 * cap), epsilon=1e-12,
                           max_iterations=50)
        with pytest.warns(DescentWarning):
            solve_fixed(bad, cfg, x1=bad.known_solution.coords + 1.0)

    def test_violation_raises_in_strict_mode(self):
        bad = self._problem_with_fake_bound()
        cap = step_size_cap(bad.space, bad.A.lipschitz_bound)
        cfg = SolverConfig(FixedStep(0.95 * cap, 0.95 * cap), epsilon=1e-12,
                           max_iterations=50, strict=True)
        with pytest.raises(DescentViolationError):
            solve_fixed(bad, cfg, x1=bad.known_solution.coords + 1.0)

    def test_strict_mode_from_environment(self, monkeypatch):
        monkeypatch.setenv("SPLITTING_STRICT", "1")
        assert SolverConfig(FixedStep(0.1, 0.2)).strict_mode()
        monkeypatch.delenv("SPLITTING_STRICT")
        assert not SolverConfig(FixedStep(0.1, 0.2)).strict_mode()


class TestLineSearch:
    def test_constant_operator_accepts_gamma(self):
        sp = SpaceDescriptor(2, 2.0)
        A = affine_map(np.zeros((2, 2)), np.array([0.3, -0.7]))
        lam, _ = line_search_step(sp, A, zero_function(2), 2.0, 0.5, 0.9,
                                  PrimalVector([1.0, 1.0], sp))
        assert lam == 2.0

    def test_fixed_point_accepts_gamma(self):
        prob = gen_strongly_monotone(9, 5, 2.0, gamma=1.0)
        lam, y = line_search_step(prob.space, prob.A, prob.B, 1.5, 0.5, 0.9,
                                  prob.known_solution)
        assert lam == 1.5
        assert np.array_equal(y.coords, prob.known_solution.coords)

    def test_bracket_on_stiff_operator(self):
        # sigma_max = 10, gamma = 1, l = 0.5, theta = 0.9: lam in [0.045, 1]
        sp = SpaceDescriptor(2, 2.0)
        A = affine_map(10.0 * ROTATION)
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = PrimalVector(rng.uniform(-2, 2, 2), sp)
            lam, _ = line_search_step(sp, A, zero_function(2), 1.0, 0.5, 0.9, x)
            assert 0.045 * (1 - 1e-12) <= lam <= 1.0

    def test_theta_cap_enforced(self):
        sp = SpaceDescriptor(2, 1.5)
        x = PrimalVector([1.0, 0.0], sp)
        with pytest.raises(ValueError):
            line_search_step(sp, zero_map(2), zero_function(2), 1.0, 0.5, 0.5, x)

    def test_budget_error_for_discontinuous_operator(self):
        class SignField:
            n = 1
            lipschitz_bound = 0.0

            def apply(self, coords):
                return np.where(coords >= 0.0, 1.0, -1.0)

        # starting exactly at the discontinuity, every trial flips the sign
        sp = SpaceDescriptor(1, 2.0)
        with pytest.raises(LineSearchBudgetError):
            line_search_step(sp, SignField(), zero_function(1), 1.0, 0.5, 0.9,
                             PrimalVector([0.0], sp))

    def test_matches_euclidean_reference(self):
        for seed in range(3):
            prob = gen_skew_vi(seed, 5, 2.0, skew_weight=0.4, box=(-2.0, 2.0))
            gamma, l, theta = 1.0, 0.5, 0.7
            cfg = SolverConfig(LineSearch(gamma, l, theta), epsilon=1e-30, max_iterations=60)
            seen = []
            rep = solve_linesearch(prob, cfg, np.zeros(5),
                                   callback=lambda n, x, y: seen.append((x.copy(), y.copy())))
            ref = tseng_linesearch_euclid(prob.A, prob.B, gamma, l, theta, np.zeros(5), 60)
            for (x_a, y_a), (x_b, y_b, lam_b) in zip(seen, ref):
                np.testing.assert_allclose(x_a, x_b, atol=1e-10)
                np.testing.assert_allclose(y_a, y_b, atol=1e-10)
            lams = [rec.lam for rec in rep.trace]
            assert lams == [r[2] for r in ref]

    def test_agrees_with_fixed_step_solution(self):
        prob = gen_strongly_monotone(10, 10, 1.5, gamma=1.0)
        rep_f = solve_fixed(prob, fixed_config(prob, epsilon=1e-9, max_iterations=100_000))
        cfg_l = SolverConfig(LineSearch(1.0, 0.5, 0.9 * 0.5), epsilon=1e-9, max_iterations=100_000)
        rep_l = solve_linesearch(prob, cfg_l)
        diff = prob.space.primal_norm(rep_f.final_point.coords - rep_l.final_point.coords)
        assert diff <= 1e-6

    def test_zero_operator_uses_gamma_every_iteration(self):
        sp = SpaceDescriptor(3, 1.5)
        prob = ProblemInstance(sp, zero_map(3), l1_term(0.3, 3))
        cfg = SolverConfig(LineSearch(0.8, 0.5, 0.4), epsilon=1e-12, max_iterations=50)
        rep = solve_linesearch(prob, cfg, np.array([2.0, -1.0, 0.5]))
        assert all(rec.lam == 0.8 for rec in rep.trace)
        assert all(rec.linesearch_trials == 1 for rec in rep.trace)


class TestHalpern:
    def test_alpha_zero_reproduces_fixed_step_bitwise(self):
        prob = gen_strongly_monotone(11, 7, 1.25, gamma=1.0)
        cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
        a, b = 0.2 * cap, 0.8 * cap
        x1 = np.linspace(-1.0, 1.0, 7)
        cfg_f = SolverConfig(FixedStep(a, b), epsilon=1e-30, max_iterations=60)
        cfg_h = SolverConfig(Halpern(a, b, anchor_schedule=lambda n: 0.0),
                             epsilon=1e-30, max_iterations=60)
        traj_f, traj_h = [], []
        rep_f = solve_fixed(prob, cfg_f, x1, callback=lambda n, x, y: traj_f.append((x.copy(), y.copy())))
        rep_h = solve_halpern(prob, cfg_h, x1, callback=lambda n, x, y: traj_h.append((x.copy(), y.copy())))
        assert len(traj_f) == len(traj_h)
        for (x_a, y_a), (x_b, y_b) in zip(traj_f, traj_h):
            assert np.array_equal(x_a, x_b)
            assert np.array_equal(y_a, y_b)
        assert np.array_equal(rep_f.final_point.coords, rep_h.final_point.coords)

    def test_matches_euclidean_reference(self):
        prob = gen_skew_vi(12, 5, 2.0, skew_weight=0.5, box=(-3.0, 3.0))
        cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
        lam = 0.4 * cap
        x1 = np.full(5, 0.25)
        cfg = SolverConfig(Halpern(lam, lam), epsilon=1e-30, max_iterations=80)
        seen = []
        solve_halpern(prob, cfg, x1, callback=lambda n, x, y: seen.append((x.copy(), y.copy())))
        ref = tseng_halpern_euclid(prob.A, prob.B, lambda n: lam,
                                   lambda n: 1.0 / (n + 1.0), x1, 80)
        for (x_a, y_a), (x_b, y_b) in zip(seen, ref):
            np.testing.assert_allclose(x_a, x_b, atol=1e-10)
            np.testing.assert_allclose(y_a, y_b, atol=1e-10)

    def test_anchor_at_solution_stays_close(self):
        prob = gen_strongly_monotone(13, 6, 2.0, gamma=2.0)
        cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
        cfg = SolverConfig(Halpern(0.3 * cap, 0.7 * cap), epsilon=1e-8, max_iterations=200_000)
        rep = solve_halpern(prob, cfg, prob.known_solution)
        assert rep.status in (SolveStatus.EXACT_SOLUTION_HIT, SolveStatus.CONVERGED)
        err = prob.space.primal_norm(rep.final_point.coords - prob.known_solution.coords)
        assert err <= 1e-6

    def test_alpha_recorded_in_trace(self):
        prob = gen_strongly_monotone(14, 4, 2.0, gamma=1.0)
        cfg = SolverConfig(Halpern(0.1, 0.2), epsilon=1e-30, max_iterations=5)
        rep = solve_halpern(prob, cfg, np.zeros(4))
        assert [rec.alpha for rec in rep.trace] == [1.0 / (n + 1.0) for n in range(1, 6)]

    def test_invalid_anchor_weight_rejected(self):
        prob = gen_strongly_monotone(14, 4, 2.0, gamma=1.0)
        cfg = SolverConfig(Halpern(0.1, 0.2, anchor_schedule=lambda n: 1.5), max_iterations=3)
        with pytest.raises(ValueError):
            solve_halpern(prob, cfg, np.zeros(4))


class TestSolveDispatch:
    def test_routes_by_variant(self):
        prob = gen_strongly_monotone(15, 4, 2.0, gamma=1.0)
        cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
        for variant in (FixedStep(0.5 * cap, 0.5 * cap),
                        LineSearch(1.0, 0.5, 0.9),
                        Halpern(0.5 * cap, 0.5 * cap)):
            rep = solve(prob, SolverConfig(variant, epsilon=1e-7, max_iterations=100_000),
                        x1=np.ones(4))
            err = prob.space.primal_norm(rep.final_point.coords - prob.known_solution.coords)
            assert err <= 1e-3


class TestRateCertificate:
    def test_anchored_at_solution_passes_trivially(self):
        sp = SpaceDescriptor(4, 1.5)
        trace = [IterationRecord(n, 0.1, 0.0, 0.0) for n in range(1, 11)]
        cert = rate_certificate(sp, 1.0, 0.1, 0.0, trace)
        assert cert.passed and cert.worst_ratio == 0.0

    def test_solver_trace_passes(self):
        prob = gen_strongly_monotone(16, 12, 1.5, gamma=1.0)
        cap = step_size_cap(prob.space, prob.A.lipschitz_bound)
        b = 0.9 * cap
        cfg = SolverConfig(FixedStep(0.1 * cap, b), epsilon=1e-9, max_iterations=50_000)
        rep = solve_fixed(prob, cfg)
        cert = rate_certificate(prob.space, prob.A.lipschitz_bound, b,
                                rep.trace[0].phi_to_solution, rep.trace)
        assert cert.passed
        assert cert.worst_ratio <= 1.0

    def test_inflated_residuals_fail(self):
        sp = SpaceDescriptor(4, 2.0)
        trace = [IterationRecord(n, 0.1, 10.0, None) for n in range(1, 50)]
        cert = rate_certificate(sp, 1.0, 0.1, 1e-6, trace)
        assert not cert.passed
        assert cert.worst_ratio > 1.0

    def test_inadmissible_step_bound_rejected(self):
        sp = SpaceDescriptor(4, 2.0)
        with pytest.raises(ValueError):
            rate_certificate(sp, 1.0, 2.0, 1.0, [])
