import numpy as np
import pytest

from adanet.kernel import InvalidInputError, make_rng
from adanet.losses import boosting_distribution, margin_error, surrogate


class TestSurrogate:
    def test_exponential_at_zero(self):
        val, deriv = surrogate("exponential", 0.0)
        assert val == pytest.approx(1.0)
        assert deriv == pytest.approx(1.0)

    def test_logistic_at_zero(self):
        val, deriv = surrogate("logistic", 0.0)
        assert val == pytest.approx(np.log(2.0))
        assert deriv == pytest.approx(0.5)

    def test_exponential_at_one(self):
        val, deriv = surrogate("exponential", 1.0)
        assert val == pytest.approx(np.e)
        assert deriv == pytest.approx(np.e)

    def test_logistic_stable_large_negative(self):
        val, deriv = surrogate("logistic", -800.0)
        assert val == pytest.approx(0.0, abs=1e-300)
        assert deriv == pytest.approx(0.0, abs=1e-300)

    def test_logistic_stable_large_positive(self):
        val, deriv = surrogate("logistic", 800.0)
        assert val == pytest.approx(800.0)
        assert deriv == pytest.approx(1.0)

    def test_derivative_matches_finite_difference(self):
        rng = make_rng(0)
        xs = rng.normal(size=100) * 3
        h = 1e-6
        for kind in ("exponential", "logistic"):
            _, deriv = surrogate(kind, xs)
            up, _ = surrogate(kind, xs + h)
            dn, _ = surrogate(kind, xs - h)
            fd = (up - dn) / (2 * h)
            np.testing.assert_allclose(deriv, fd, rtol=1e-6, atol=1e-8)

    def test_convexity(self):
        rng = make_rng(1)
        for kind in ("exponential", "logistic"):
            for _ in range(100):
                a, b = rng.normal(size=2) * 3
                t = rng.random()
                mid, _ = surrogate(kind, t * a + (1 - t) * b)
                va, _ = surrogate(kind, a)
                vb, _ = surrogate(kind, b)
                assert mid <= t * va + (1 - t) * vb + 1e-12

    def test_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            surrogate("hinge", 0.0)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            surrogate("logistic", np.inf)


class TestMarginError:
    def test_zero_function(self):
        assert margin_error(np.zeros(5), np.ones(5), 0.0) == 1.0

    def test_all_margins_exceed_rho(self):
        y = np.array([1.0, -1.0, 1.0])
        assert margin_error(y * 1.0, y, 0.5) == 0.0

    def test_one_of_two(self):
        y = np.ones(2)
        scores = np.array([0.2, 0.8])
        assert margin_error(scores, y, 0.5) == 0.5

    def test_negative_rho_rejected(self):
        with pytest.raises(InvalidInputError):
            margin_error(np.zeros(2), np.ones(2), -0.1)

    def test_monotone_in_rho(self):
        rng = make_rng(2)
        scores = rng.normal(size=50)
        labels = np.sign(rng.normal(size=50))
        labels[labels == 0] = 1.0
        errs = [margin_error(scores, labels, r) for r in (0.0, 0.2, 0.5, 1.0)]
        assert all(a <= b for a, b in zip(errs, errs[1:]))


class TestBoostingDistribution:
    def test_zero_function_uniform(self):
        for kind in ("exponential", "logistic"):
            d = boosting_distribution(kind, np.zeros(4), np.ones(4))
            np.testing.assert_allclose(d.weights, np.full(4, 0.25))

    def test_exponential_two_point(self):
        # margins y*f = (0, 1) -> weights proportional to (e, 1)
        y = np.ones(2)
        scores = np.array([0.0, 1.0])
        d = boosting_distribution("exponential", scores, y)
        e = np.e
        np.testing.assert_allclose(d.weights, [e / (e + 1), 1 / (e + 1)])
        assert d.normalizer == pytest.approx(e + 1)

    def test_logistic_uniform_m3(self):
        d = boosting_distribution("logistic", np.zeros(3), np.ones(3))
        np.testing.assert_allclose(d.weights, np.full(3, 1 / 3))

    def test_weights_normalized(self):
        rng = make_rng(3)
        for kind in ("exponential", "logistic"):
            scores = rng.normal(size=30) * 2
            labels = np.where(rng.random(30) > 0.5, 1.0, -1.0)
            d = boosting_distribution(kind, scores, labels)
            assert d.weights.sum() == pytest.approx(1.0)
            assert np.all(d.weights >= 0)

    def test_exponential_overflow_safe(self):
        # huge negative margins would overflow a naive implementation
        y = np.ones(3)
        scores = np.array([-800.0, -700.0, 0.0])
        d = boosting_distribution("exponential", scores, y)
        assert np.all(np.isfinite(d.weights))
        assert d.weights.sum() == pytest.approx(1.0)
        assert d.weights[0] == pytest.approx(1.0)

    def test_normalizer_matches_derivative_sum(self):
        rng = make_rng(4)
        scores = rng.normal(size=20)
        labels = np.where(rng.random(20) > 0.5, 1.0, -1.0)
        for kind in ("exponential", "logistic"):
            d = boosting_distribution(kind, scores, labels)
            _, deriv = surrogate(kind, 1.0 - labels * scores)
            assert d.normalizer == pytest.approx(float(deriv.sum()), rel=1e-9)
