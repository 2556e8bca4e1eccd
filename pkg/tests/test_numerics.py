import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from bfsurf import numerics, reg
from bfsurf.errors import (
    IntegrandUnderflowError,
    InvalidIntegrandError,
    LaplaceFailureError,
    NotPositiveDefiniteError,
)


def log_normal_pdf(mean, var):
    return lambda t: -0.5 * np.log(2 * np.pi * var) - (np.asarray(t) - mean) ** 2 / (2 * var)


def log_gamma_pdf(shape, rate):
    def f(t):
        t = np.asarray(t, dtype=float)
        return shape * math.log(rate) - gammaln(shape) + (shape - 1) * np.log(t) - rate * t

    return f


class TestLogTrapezoid:
    def test_standard_normal_mass(self):
        spec = numerics.QuadratureSpec(-8.0, 8.0, 2001, "identity")
        assert numerics.log_trapezoid(log_normal_pdf(0.0, 1.0), spec) == pytest.approx(0.0, abs=1e-8)

    def test_gamma_mass_log_transform(self):
        spec = numerics.QuadratureSpec(-15.0, 10.0, 2001, "log")
        assert numerics.log_trapezoid(log_gamma_pdf(2.0, 3.0), spec) == pytest.approx(0.0, abs=1e-6)

    def test_slope_model_integrand_matches_mc_oracle(self, fig1_data, base_hypers):
        """The precision integral agrees with 10^6-draw prior sampling."""
        quad_value = reg.log_marginal_m1(fig1_data, base_hypers)
        mc_value, se = reg.mc_oracle_log_marginal(fig1_data, base_hypers, "M1", 10**6, seed=2)
        assert abs(quad_value - mc_value) < 3 * se

    def test_mesh_refinement_on_precision_integrands(self, base_hypers):
        """Halving the mesh changes every corpus integrand by < 1e-6."""
        spec = numerics.DEFAULT_PRECISION_QUAD
        for seed in (1, 2, 3):
            data = reg.simulate_regression(30, 0.0, 2.5, 1.0, seed=seed)
            for hypers in (base_hypers, reg.RegressionHypers(mu=-2.0, phi=50.0, a=2.0, b=0.5)):
                coarse = reg.log_marginal_m1(data, hypers, spec)
                fine = reg.log_marginal_m1(data, hypers, spec.refine())
                assert abs(coarse - fine) < 1e-6

    def test_constant_shift_linearity(self):
        spec = numerics.QuadratureSpec(-8.0, 8.0, 501, "identity")
        f = log_normal_pdf(0.5, 2.0)
        kappa = 137.25
        base = numerics.log_trapezoid(f, spec)
        shifted = numerics.log_trapezoid(lambda t: f(t) + kappa, spec)
        assert shifted - base == pytest.approx(kappa, abs=1e-9)

    def test_all_minus_inf_is_underflow(self):
        spec = numerics.QuadratureSpec(0.0, 1.0, 11, "identity")
        with pytest.raises(IntegrandUnderflowError, match="integrand underflow"):
            numerics.log_trapezoid(lambda t: np.full_like(np.asarray(t, float), -np.inf), spec)

    def test_nan_is_invalid(self):
        spec = numerics.QuadratureSpec(0.0, 1.0, 11, "identity")
        with pytest.raises(InvalidIntegrandError, match="invalid integrand"):
            numerics.log_trapezoid(lambda t: np.where(np.asarray(t) > 0.5, np.nan, 0.0), spec)

    def test_scalar_only_callable_supported(self):
        spec = numerics.QuadratureSpec(-8.0, 8.0, 1001, "identity")

        def scalar_f(t):
            if isinstance(t, np.ndarray):
                raise TypeError("scalar only")
            return -0.5 * math.log(2 * math.pi) - 0.5 * t * t

        assert numerics.log_trapezoid(scalar_f, spec) == pytest.approx(0.0, abs=1e-8)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            numerics.QuadratureSpec(1.0, 0.0, 10)
        with pytest.raises(ValueError):
            numerics.QuadratureSpec(0.0, 1.0, 1)
        with pytest.raises(ValueError):
            numerics.QuadratureSpec(0.0, 1.0, 10, "sqrt")


class TestLaplace:
    def test_gaussian_is_exact(self):
        f = log_normal_pdf(3.0, 4.0)
        value = numerics.laplace_log_integral(lambda t: float(f(t)), 0.0, (-50.0, 50.0))
        assert value == pytest.approx(0.0, abs=1e-9)

    def test_gamma_20_2_against_dense_trapezoid_and_analytic(self):
        """Laplace on a skewed peaked integrand: small but nonzero bias.

        For a gamma density with shape a the mode-based Laplace value is
        exactly (a-1)log(a-1) - (a-1) + log(2*pi*(a-1))/2 - lgamma(a); its
        deviation from the true log-mass (0) is the Stirling remainder,
        about 1/(12(a-1)) = 4.2e-3 at a = 20.  The implementation must hit
        the analytic Laplace value tightly and the dense-quadrature truth
        within the Stirling budget.
        """
        a = 20.0
        f = log_gamma_pdf(a, 2.0)
        scalar_f = lambda t: float(f(t))
        laplace = numerics.laplace_log_integral(scalar_f, 5.0, (1e-6, 60.0))
        spec = numerics.QuadratureSpec(-6.0, 5.0, 10_001, "log")
        dense = numerics.log_trapezoid(f, spec)
        analytic = (a - 1) * math.log(a - 1) - (a - 1) + 0.5 * math.log(
            2 * math.pi * (a - 1)) - gammaln(a)
        assert laplace == pytest.approx(analytic, abs=1e-4)
        assert laplace == pytest.approx(dense, abs=6e-3)

    def test_boundary_maximum_fails(self):
        with pytest.raises(LaplaceFailureError, match="laplace failure"):
            numerics.laplace_log_integral(lambda t: t, 0.0, (-1.0, 1.0))

    @given(
        mean=st.floats(-3.0, 3.0),
        var=st.floats(0.1, 10.0),
        offset=st.floats(-5.0, 5.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_matches_trapezoid_for_gaussians(self, mean, var, offset):
        f = log_normal_pdf(mean, var)
        shifted = lambda t: f(t) + offset
        sd = math.sqrt(var)
        lo, hi = mean - 10 * sd, mean + 10 * sd
        laplace = numerics.laplace_log_integral(lambda t: float(shifted(t)), mean + 0.5, (lo, hi))
        trap = numerics.log_trapezoid(shifted, numerics.QuadratureSpec(lo, hi, 4001, "identity"))
        assert laplace == pytest.approx(trap, abs=1e-8)


class TestCholLogdetSolve:
    def test_identity(self):
        logdet, x = numerics.chol_logdet_solve(np.eye(3), np.eye(3))
        assert logdet == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(x, np.eye(3), atol=1e-14)

    def test_diagonal_determinant(self):
        logdet, _ = numerics.chol_logdet_solve(np.diag([2.0, 8.0]), np.eye(2))
        assert logdet == pytest.approx(math.log(16.0), abs=1e-12)

    def test_wishart_residual(self):
        """Solution residual of a random SPD system stays below 1e-10."""
        gen = np.random.default_rng(42)
        root = gen.normal(size=(12, 5))
        a = root.T @ root
        b = gen.normal(size=(5, 3))
        _, x = numerics.chol_logdet_solve(a, b)
        assert np.max(np.abs(a @ x - b)) < 1e-10

    def test_one_by_one_exact(self):
        for a in (2.0, 0.37, 1234.5):
            logdet, x = numerics.chol_logdet_solve(np.array([[a]]), np.array([[1.0]]))
            assert logdet == math.log(a)
            assert x[0, 0] == 1.0 / a

    def test_batched_matches_loop(self):
        gen = np.random.default_rng(7)
        mats = np.stack([m @ m.T + 0.5 * np.eye(3) for m in gen.normal(size=(6, 3, 3))])
        rhs = gen.normal(size=(6, 3, 2))
        logdets, xs = numerics.chol_logdet_solve(mats, rhs)
        for k in range(6):
            ld, x = numerics.chol_logdet_solve(mats[k], rhs[k])
            assert logdets[k] == pytest.approx(ld, rel=1e-12)
            np.testing.assert_allclose(xs[k], x, atol=1e-12)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError, match="not positive definite"):
            numerics.chol_logdet_solve(np.array([[1.0, 0.0], [0.0, -1.0]]), np.eye(2))

    def test_jitter_ladder_rescues_singular(self):
        singular = np.ones((3, 3))
        logdet, _ = numerics.chol_logdet_solve(singular, np.eye(3))
        assert np.isfinite(logdet)
