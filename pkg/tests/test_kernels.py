import json

import numpy as np
import pytest

from metricgp.field import build_field_model
from metricgp.graph import path_graph, random_connected_graph, random_points
from metricgp.kernels import (KernelError, KernelSpec, cauchy_scalar, certify, compose_kernel,
                              eval_multivariate_kernel, kernel_cov, matern_scalar, mixture_kernel,
                              sg_normalizer, sg_scalar)
from metricgp.metric import distance_D
from specgen import GRAPH_FAMILIES, invalid_spec, random_certified_spec


def test_scalar_families_at_zero():
    assert sg_scalar(0.0, 1.0, 2.0, 0.5) == pytest.approx(1.0)
    assert matern_scalar(np.array([0.0]), 1.0, 1.5)[0] == 1.0
    assert cauchy_scalar(0.0, 1.0, 2.0) == 1.0


def test_matern_half_is_exponential():
    t = np.linspace(0, 10, 21)
    np.testing.assert_allclose(matern_scalar(t, 0.7, 0.5), np.exp(-np.sqrt(t / 0.7)), rtol=1e-12)


def test_sg_limits():
    t = np.array([0.1, 1.0, 4.0])
    # alpha -> inf with nu > 0 gives the Cauchy member with exponent nu
    np.testing.assert_allclose(sg_scalar(t, 1e9, 2.0, 1.5), cauchy_scalar(t, 2.0, 1.5), rtol=1e-6)


def test_sg_overflow_diagnostic():
    with pytest.raises(KernelError, match="argument"):
        sg_scalar(np.array([1e4]), 1.0, 1e-300, 800.0)


def test_invalid_scalar_params():
    for f, args in ((matern_scalar, (1.0, -1.0, 1.0)), (cauchy_scalar, (1.0, 0.0, 1.0)),
                    (sg_scalar, (1.0, 1.0, -1.0, 1.0))):
        with pytest.raises(KernelError):
            f(*args)


def test_compose_exp_power_one():
    D = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(compose_kernel("exp", "power", D, 1.0), np.exp(-D))
    with pytest.raises(KernelError):
        compose_kernel(lambda t: t, "power", D)
    np.testing.assert_allclose(compose_kernel(lambda t: 1 / (1 + t), "power", D, override=True), 1 / (1 + D))


def test_mixture_atoms():
    D = np.zeros((2, 2))
    np.testing.assert_allclose(mixture_kernel([(1.0, np.eye(2)), (2.0, np.ones((2, 2)))], 1.0, D),
                               np.eye(2) + np.ones((2, 2)))
    with pytest.raises(KernelError):
        mixture_kernel([(1.0, np.array([[1.0, 2.0], [2.0, 1.0]]))], 1.0, D)


def test_sg2_parsimonious_bound():
    P = {"sigma1": 1.0, "sigma2": 1.0, "alpha1": 1.0, "alpha2": 2.0, "alpha12": 1 / 3,
         "beta1": 1.0, "beta2": 3.0, "beta12": 2.0, "nu1": 0.5, "nu2": 1.5, "nu12": 1.0, "rho": 0.0}
    bound = np.sqrt(sg_normalizer(1, 1, 0.5) * sg_normalizer(2, 3, 1.5) / sg_normalizer(1 / 3, 2, 1.0) ** 2)
    ok = KernelSpec("sg2", {**P, "rho": 0.99 * bound}).certified()
    bad = KernelSpec("sg2", {**P, "rho": 1.01 * bound}).certified()
    assert ok.certificate.theorem_applied == "T4A" and ok.certificate.valid
    assert not bad.certificate.valid


def test_matern_counterexample_rejected_with_witness():
    spec = invalid_spec("matern_p")
    cert = certify(spec)
    # the matrix conditions alone pass; only the mixing-density check fails
    assert cert.theorem_applied == "T5A" and not cert.valid
    assert [c.condition for c in cert.failing()] == ["mixing density positive semidefinite on a log grid"]
    spec.override = True
    rng = np.random.default_rng(5)
    g = random_connected_graph(rng, 6)
    m = build_field_model(g, 2, 1.0, 0.5)
    assert np.linalg.eigvalsh(kernel_cov(spec, m, random_points(g, 16, rng)))[0] < -0.1


@pytest.mark.parametrize("family", GRAPH_FAMILIES)
def test_invalid_specs_rejected(family):
    s = invalid_spec(family).certified()
    assert not s.certificate.valid and s.certificate.failing()
    m = build_field_model(path_graph(3), 2, 1.0)
    with pytest.raises(KernelError):
        kernel_cov(s, m, [])


@pytest.mark.parametrize("family", GRAPH_FAMILIES)
def test_certified_specs_are_psd(family, rng):
    for _ in range(3):
        p = 2 if family == "sg2" else int(rng.integers(2, 4))
        s = random_certified_spec(family, p, rng)
        g = random_connected_graph(rng, 6)
        m = build_field_model(g, p, float(rng.uniform(0.3, 2)), float(rng.uniform(0, 1)))
        K = kernel_cov(s, m, random_points(g, 10, rng))
        assert np.linalg.eigvalsh(K)[0] >= -1e-8


def test_spec_json_roundtrip(rng):
    s = random_certified_spec("matern_p", 3, rng)
    doc = json.loads(json.dumps(s.to_json()))
    assert doc["certificate"]["sampled"] is True
    t = KernelSpec.from_json(doc).certified()
    assert t.certificate.valid
    for k in ("sigma", "alpha", "nu"):
        np.testing.assert_array_equal(t.params[k], s.params[k])


def test_p_mismatch(rng):
    s = random_certified_spec("cauchy_p", 3, rng)
    m = build_field_model(path_graph(3), 2, 1.0)
    with pytest.raises(KernelError, match="p=3"):
        kernel_cov(s, m, [])


def test_eval_pair_matches_metric():
    s = KernelSpec("composed", {"psi": "exp", "g": "power"}).certified()
    m = build_field_model(path_graph(3), 3, 1.32092)
    from metricgp.graph import Point

    u1, u2 = Point.at_vertex("v1"), Point.at_vertex("v3")
    K = eval_multivariate_kernel(s, m, u1, u2)
    D = distance_D(m, u1, u2)
    assert K[0, 0] == pytest.approx(np.exp(-D.diag)) and K[0, 1] == pytest.approx(np.exp(-D.off))


def test_unknown_family():
    with pytest.raises(KernelError):
        KernelSpec("gaussian", {})
