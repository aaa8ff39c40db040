import numpy as np
import pytest

from conftest import labelled, random_dataset, simple_spec
from stepglm.errors import ConfigError, ResponseDomainError
from stepglm.glm import deviance, score_and_info
from stepglm.model import SubsampleData


def loglik(data, spec, beta, phi=1.0):
    """Total log-likelihood up to β-free constants (φ=1 families exact)."""
    eta = spec.link.clamp(data.x @ beta)
    mu = spec.link.inverse(eta)
    y = data.y
    kind = spec.family.kind
    if kind == "binomial":
        return float(np.sum(y * np.log(mu) + (1 - y) * np.log1p(-mu)))
    if kind == "poisson":
        return float(np.sum(y * np.log(mu) - mu))
    if kind == "gaussian":
        return float(-0.5 * np.sum((y - mu) ** 2) / phi)
    # gamma with unit shape
    return float(np.sum(-y / mu - np.log(mu)) / phi)


class TestExamples:
    def test_single_row_binomial(self):
        data = SubsampleData(np.array([[1.0]]), np.array([1.0]))
        spec = simple_spec("binomial", "logit", p=1)
        si = score_and_info(data, spec, labelled([0.0], ["(Intercept)"]))
        assert si.u == pytest.approx([0.5])
        assert si.info.ravel() == pytest.approx([0.25])
        assert si.n_rows == 1

    def test_single_row_poisson(self):
        data = SubsampleData(np.array([[1.0]]), np.array([2.0]))
        spec = simple_spec("poisson", "log", p=1)
        si = score_and_info(data, spec, labelled([0.0], ["(Intercept)"]))
        assert si.u == pytest.approx([1.0])
        assert si.info.ravel() == pytest.approx([1.0])

    def test_matches_per_row_brute_force(self):
        rng = np.random.default_rng(3)
        spec = simple_spec("binomial", "logit", p=3)
        data, _ = random_dataset(rng, "binomial", n=50, p=3)
        beta = labelled(rng.standard_normal(3), spec.labels())
        si = score_and_info(data, spec, beta)
        u = np.zeros(3)
        info = np.zeros((3, 3))
        for i in range(data.n):
            eta = float(data.x[i] @ beta.values)
            mu = 1 / (1 + np.exp(-np.clip(eta, -30, 30)))
            u += data.x[i] * (data.y[i] - mu)
            info += mu * (1 - mu) * np.outer(data.x[i], data.x[i])
        assert si.u == pytest.approx(u, rel=1e-12)
        assert si.info == pytest.approx(info, rel=1e-12)

    def test_dimension_mismatch(self):
        data = SubsampleData(np.ones((5, 2)), np.zeros(5))
        spec = simple_spec("binomial", "logit", p=3)
        with pytest.raises(ConfigError):
            score_and_info(data, spec, labelled(np.zeros(3), spec.labels()))

    def test_invalid_response(self):
        data = SubsampleData(np.ones((3, 1)), np.array([0.0, 1.0, 3.0]))
        spec = simple_spec("binomial", "logit", p=1)
        with pytest.raises(ResponseDomainError):
            score_and_info(data, spec, labelled([0.0], ["(Intercept)"]))


FAMILY_LINKS = [
    ("binomial", "logit"),
    ("poisson", "log"),
    ("gaussian", "identity"),
    ("gamma", "log"),
]


class TestCalculusConsistency:
    @pytest.mark.parametrize("family,link", FAMILY_LINKS)
    def test_score_matches_loglik_gradient(self, family, link):
        rng = np.random.default_rng(11)
        spec = simple_spec(family, link, p=4)
        for _ in range(5):
            data, _ = random_dataset(rng, family, n=50, p=4, beta_scale=0.3)
            beta = 0.3 * rng.standard_normal(4)
            si = score_and_info(data, spec, labelled(beta, spec.labels()))
            h = 1e-6
            grad = np.zeros(4)
            for j in range(4):
                e = np.zeros(4)
                e[j] = h
                grad[j] = (loglik(data, spec, beta + e) - loglik(data, spec, beta - e)) / (2 * h)
            assert np.allclose(si.u, grad, rtol=1e-5, atol=1e-5)

    @pytest.mark.parametrize("family,link", [
        ("binomial", "logit"), ("poisson", "log"), ("gaussian", "identity"),
    ])
    def test_info_matches_neg_hessian_for_canonical(self, family, link):
        rng = np.random.default_rng(13)
        spec = simple_spec(family, link, p=3)
        data, _ = random_dataset(rng, family, n=50, p=3, beta_scale=0.3)
        beta = 0.3 * rng.standard_normal(3)
        si = score_and_info(data, spec, labelled(beta, spec.labels()))
        h = 1e-5
        hess = np.zeros((3, 3))
        for j in range(3):
            for k in range(3):
                ej, ek = np.zeros(3), np.zeros(3)
                ej[j], ek[k] = h, h
                hess[j, k] = (
                    loglik(data, spec, beta + ej + ek)
                    - loglik(data, spec, beta + ej - ek)
                    - loglik(data, spec, beta - ej + ek)
                    + loglik(data, spec, beta - ej - ek)
                ) / (4 * h * h)
        assert np.allclose(si.info, -hess, rtol=1e-4, atol=1e-4)

    @pytest.mark.parametrize("family,link", FAMILY_LINKS)
    def test_additivity_over_partitions(self, family, link):
        rng = np.random.default_rng(17)
        spec = simple_spec(family, link, p=3)
        data, _ = random_dataset(rng, family, n=101, p=3)
        beta = labelled(0.3 * rng.standard_normal(3), spec.labels())
        whole = score_and_info(data, spec, beta, with_pearson=True)
        cut = 37
        a = score_and_info(SubsampleData(data.x[:cut], data.y[:cut]), spec, beta, with_pearson=True)
        b = score_and_info(SubsampleData(data.x[cut:], data.y[cut:]), spec, beta, with_pearson=True)
        merged = a + b
        assert merged.u == pytest.approx(whole.u, rel=1e-12)
        assert merged.info == pytest.approx(whole.info, rel=1e-12)
        assert merged.n_rows == whole.n_rows
        assert merged.deviance == pytest.approx(whole.deviance, rel=1e-12)
        assert merged.pearson == pytest.approx(whole.pearson, rel=1e-12)

    def test_info_symmetric(self):
        rng = np.random.default_rng(19)
        spec = simple_spec("poisson", "log", p=4)
        data, _ = random_dataset(rng, "poisson", n=80, p=4)
        si = score_and_info(data, spec, labelled(0.2 * rng.standard_normal(4), spec.labels()))
        assert np.array_equal(si.info, si.info.T)


class TestDeviance:
    def test_gaussian_perfect_fit_is_zero(self):
        x = np.column_stack([np.ones(4), np.arange(4.0)])
        beta = np.array([1.0, 2.0])
        data = SubsampleData(x, x @ beta)
        spec = simple_spec("gaussian", "identity", p=2)
        assert deviance(data, spec, labelled(beta, spec.labels())) == 0.0

    def test_binomial_single_row(self):
        data = SubsampleData(np.array([[1.0]]), np.array([1.0]))
        spec = simple_spec("binomial", "logit", p=1)
        d = deviance(data, spec, labelled([0.0], ["(Intercept)"]))
        assert d == pytest.approx(2 * np.log(2), rel=1e-12)

    def test_poisson_saturated_is_zero(self):
        x = np.ones((3, 1))
        data = SubsampleData(x, np.array([1.0, 1.0, 1.0]))
        spec = simple_spec("poisson", "log", p=1)
        assert deviance(data, spec, labelled([0.0], ["(Intercept)"])) == pytest.approx(0.0, abs=1e-12)

    def test_deviance_nonnegative(self):
        rng = np.random.default_rng(23)
        for family, link in FAMILY_LINKS:
            spec = simple_spec(family, link, p=3)
            data, _ = random_dataset(rng, family, n=60, p=3)
            d = deviance(data, spec, labelled(0.2 * rng.standard_normal(3), spec.labels()))
            assert d >= 0.0
