import math

import numpy as np
import pytest

from lpsplit import (
    AffineMap,
    IntervalIndicator,
    PrimalVector,
    QuadraticPiece,
    ScaledAbs,
    SeparableConvex,
    SpaceDescriptor,
    ZeroFn,
    affine_map,
    box_indicator,
    l1_term,
    least_squares_gradient,
    monotonicity_probe,
    quadratic_term,
    spectral_norm_power,
    zero_function,
    zero_map,
)

P_VALUES = (1.25, 1.5, 2.0)


class TestPieces:
    def test_scaled_abs_subdifferential(self):
        piece = ScaledAbs(1.0)
        assert piece.subdifferential(0.0) == (-1.0, 1.0)
        assert piece.subdifferential(2.0) == (1.0, 1.0)
        assert piece.subdifferential(-0.5) == (-1.0, -1.0)

    def test_interval_interior_and_faces(self):
        piece = IntervalIndicator(0.0, 1.0)
        assert piece.subdifferential(0.5) == (0.0, 0.0)
        assert piece.subdifferential(0.0) == (-math.inf, 0.0)
        assert piece.subdifferential(1.0) == (0.0, math.inf)

    def test_interval_outside_domain_errors(self):
        piece = IntervalIndicator(0.0, 1.0)
        with pytest.raises(ValueError):
            piece.subdifferential(1.5)

    def test_quadratic_derivative(self):
        assert QuadraticPiece(2.0).subdifferential(3.0) == (6.0, 6.0)

    def test_zero_fn(self):
        assert ZeroFn().subdifferential(12.3) == (0.0, 0.0)
        assert ZeroFn().value(12.3) == 0.0

    def test_values(self):
        assert ScaledAbs(2.0).value(-3.0) == 6.0
        assert QuadraticPiece(4.0).value(3.0) == 18.0
        assert IntervalIndicator(0.0, 1.0).value(2.0) == math.inf
        assert IntervalIndicator(0.0, 1.0).value(0.5) == 0.0

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            ScaledAbs(-1.0)
        with pytest.raises(ValueError):
            QuadraticPiece(-0.1)
        with pytest.raises(ValueError):
            IntervalIndicator(2.0, 1.0)

    @pytest.mark.parametrize("piece", [
        ZeroFn(), ScaledAbs(0.7), IntervalIndicator(-1.0, 2.0), QuadraticPiece(1.3),
    ])
    def test_subdifferential_is_monotone(self, piece):
        lo, hi = piece.domain()
        rng = np.random.default_rng(0)
        ts = np.sort(rng.uniform(max(lo, -5.0), min(hi, 5.0), 200))
        for t1, t2 in zip(ts[:-1], ts[1:]):
            if t1 == t2:
                continue
            _, d_plus = piece.subdifferential(t1)
            d_minus, _ = piece.subdifferential(t2)
            assert d_plus <= d_minus + 1e-15


class TestSeparableConvex:
    def test_value_sums_pieces(self):
        f = SeparableConvex([ScaledAbs(1.0), QuadraticPiece(2.0), ZeroFn()])
        assert f.value(np.array([-2.0, 3.0, 7.0])) == pytest.approx(2.0 + 9.0)

    def test_value_infinite_outside_domain(self):
        f = box_indicator(0.0, 1.0, 2)
        assert f.value(np.array([0.5, 2.0])) == math.inf

    def test_subdifferential_bounds_match_pieces(self):
        pieces = [ScaledAbs(1.5), IntervalIndicator(0.0, 1.0), QuadraticPiece(2.0), ZeroFn()]
        f = SeparableConvex(pieces)
        coords = np.array([0.0, 1.0, -2.0, 9.0])
        d_lo, d_hi = f.subdifferential_bounds(coords)
        for j, piece in enumerate(pieces):
            lo, hi = piece.subdifferential(coords[j])
            assert d_lo[j] == lo and d_hi[j] == hi

    def test_out_of_domain_encoded_as_empty(self):
        f = box_indicator(0.0, 1.0, 2)
        d_lo, d_hi = f.subdifferential_bounds(np.array([0.5, 3.0]))
        assert d_lo[1] == math.inf and d_hi[1] == -math.inf

    def test_constructors(self):
        assert zero_function(3).n == 3
        assert l1_term(0.5, 4).pieces[0] == ScaledAbs(0.5)
        assert quadratic_term(2.0, 2).pieces[1] == QuadraticPiece(2.0)
        box = box_indicator([-1.0, 0.0], 1.0, 2)
        assert box.pieces[0] == IntervalIndicator(-1.0, 1.0)
        assert box.pieces[1] == IntervalIndicator(0.0, 1.0)


class TestSpectralCertification:
    def test_identity_inflated(self):
        A = affine_map(np.eye(2))
        assert A.lipschitz_bound == pytest.approx(1.01, rel=1e-9)

    def test_diagonal(self):
        # power iteration against the numpy SVD oracle
        M = np.diag([3.0, 1.0])
        assert spectral_norm_power(M) == pytest.approx(np.linalg.svd(M)[1][0], rel=1e-10)
        assert affine_map(M).lipschitz_bound == pytest.approx(3.03, rel=1e-9)

    def test_least_squares_square_of_sigma(self):
        A = least_squares_gradient(np.array([[2.0]]), np.array([0.0]))
        assert A.lipschitz_bound == pytest.approx(4.04, rel=1e-9)

    def test_random_matrix_vs_svd(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            M = rng.standard_normal((7, 7))
            assert spectral_norm_power(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)

    def test_zero_matrix(self):
        assert spectral_norm_power(np.zeros((3, 3))) == 0.0


class TestMapEvaluation:
    def test_zero_map(self):
        sp = SpaceDescriptor(2, 1.5)
        A = zero_map(2)
        out = A(PrimalVector([1.0, -2.0], sp))
        assert np.all(out.coords == 0.0)
        assert A.lipschitz_bound == 0.0

    def test_affine_identity(self):
        sp = SpaceDescriptor(2, 2.0)
        A = affine_map(np.eye(2))
        assert np.array_equal(A(PrimalVector([1.0, 2.0], sp)).coords, [1.0, 2.0])

    def test_least_squares_gradient_of_half_norm(self):
        sp = SpaceDescriptor(3, 2.0)
        A = least_squares_gradient(np.eye(3), np.zeros(3))
        x = PrimalVector([1.0, -2.0, 0.5], sp)
        np.testing.assert_allclose(A(x).coords, x.coords)

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            affine_map(np.ones((2, 3)))
        with pytest.raises(ValueError):
            affine_map(np.eye(2), np.zeros(3))
        with pytest.raises(ValueError):
            least_squares_gradient(np.eye(2), np.zeros(3))

    def test_monotonicity_validation(self):
        with pytest.raises(ValueError):
            affine_map(-np.eye(2))
        # skew matrices are monotone (symmetric part zero)
        affine_map(np.array([[0.0, -1.0], [1.0, 0.0]]))


class TestLipschitzProperty:
    @pytest.mark.parametrize("p", P_VALUES)
    def test_certified_bound_holds_in_lp_lq(self, p):
        rng = np.random.default_rng(11)
        sp = SpaceDescriptor(6, p)
        R = rng.standard_normal((6, 6))
        maps = [
            affine_map(R @ R.T + 0.3 * np.eye(6), rng.standard_normal(6)),
            least_squares_gradient(rng.standard_normal((9, 6)), rng.standard_normal(9)),
        ]
        for A in maps:
            L = A.lipschitz_bound
            for _ in range(500):
                x = rng.uniform(-3, 3, 6)
                y = rng.uniform(-3, 3, 6)
                lhs = sp.dual_norm(A.apply(x) - A.apply(y))
                assert lhs <= L * sp.primal_norm(x - y) * (1.0 + 1e-12)


class TestMonotonicityProbe:
    def test_zero_map_passes_with_zero(self):
        report = monotonicity_probe(zero_map(3), 100, seed=0)
        assert report.passed and report.min_inner_value == 0.0

    def test_skew_map_passes_near_zero(self):
        # skew part contributes exactly (x-y)^T M (x-y) = 0
        A = affine_map(np.array([[0.0, -1.0], [1.0, 0.0]]))
        report = monotonicity_probe(A, 500, seed=1)
        assert report.passed
        assert abs(report.min_inner_value) <= 1e-12

    def test_anti_monotone_fails(self):
        A = affine_map(-np.eye(2), require_monotone=False)
        report = monotonicity_probe(A, 100, seed=2)
        assert not report.passed
        assert report.min_inner_value == pytest.approx(-1.0, rel=1e-12)

    def test_psd_constructions_pass(self):
        rng = np.random.default_rng(3)
        for seed in range(5):
            P = rng.standard_normal((5, 5))
            A = affine_map(P @ P.T, rng.standard_normal(5))
            assert monotonicity_probe(A, 200, seed=seed).passed

    def test_requires_samples(self):
        with pytest.raises(ValueError):
            monotonicity_probe(zero_map(2), 0, seed=0)


class TestCocoercivity:
    def test_least_squares_gradient_is_cocoercive(self):
        rng = np.random.default_rng(4)
        M = rng.standard_normal((8, 5))
        A = least_squares_gradient(M, rng.standard_normal(8))
        L = A.lipschitz_bound
        for _ in range(500):
            x = rng.uniform(-2, 2, 5)
            y = rng.uniform(-2, 2, 5)
            g = A.apply(x) - A.apply(y)
            inner = float(g @ (x - y))
            assert inner >= float(g @ g) / L - 1e-10
