import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from lisfdr import EdgeClass, EmissionParams, Graph, MissingParameterError, ModelParams
from lisfdr.graph import build_chain
from lisfdr.model import (
    coupling_to_matrix,
    log_emission,
    log_joint_unnormalized,
    log_prior_unnormalized,
    logistic,
    matrix_to_coupling,
    node_log_emissions,
)

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def test_prior_single_edge():
    g = build_chain(2)
    p = ModelParams({EdgeClass.DEFAULT: 1.0})
    assert log_prior_unnormalized([1, 1], p, g) == 1.0
    assert log_prior_unnormalized([0, 1], p, g) == 0.0


def test_prior_chain_with_bias():
    p = ModelParams({EdgeClass.DEFAULT: 2.0}, h=0.5)
    assert log_prior_unnormalized([1, 1, 0], p, build_chain(3)) == pytest.approx(3.0)


def test_prior_missing_class():
    g = Graph.from_edges(2, [(0, 1, EdgeClass.HIGH)])
    with pytest.raises(MissingParameterError):
        log_prior_unnormalized([0, 0], ModelParams({EdgeClass.LOW: 1.0}), g)


def test_prior_rejects_wrong_length():
    with pytest.raises(ValueError):
        log_prior_unnormalized([0, 1], ModelParams(), build_chain(3))


def test_matrix_to_coupling_examples():
    assert matrix_to_coupling(0.5) == 0.0
    assert matrix_to_coupling(0.8) == pytest.approx(math.log(4))
    for p in np.arange(0.2, 0.81, 0.1):
        assert logistic(matrix_to_coupling(p)) == pytest.approx(p)
        assert coupling_to_matrix(matrix_to_coupling(p)) == pytest.approx(p)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_matrix_to_coupling_domain(bad):
    with pytest.raises(ValueError):
        matrix_to_coupling(bad)


def test_log_emission_examples():
    psi = EmissionParams(2.0, 1.0)
    assert log_emission(0.0, 0, psi) == pytest.approx(-0.9189385332, abs=1e-10)
    assert log_emission(2.0, 1, psi) == pytest.approx(-HALF_LOG_2PI)
    assert log_emission(2.0, 1, EmissionParams(2.0, 2.0)) == pytest.approx(-HALF_LOG_2PI - math.log(2))


@given(st.floats(-8, 8), st.floats(-3, 3), st.floats(0.2, 3))
def test_log_emission_matches_scipy(x, mu, sigma):
    psi = EmissionParams(mu, sigma)
    assert log_emission(x, 0, psi) == pytest.approx(norm.logpdf(x), abs=1e-12)
    assert log_emission(x, 1, psi) == pytest.approx(norm.logpdf(x, mu, sigma), abs=1e-12)


def test_sigma_must_be_positive():
    with pytest.raises(ValueError):
        EmissionParams(2.0, 0.0)


def test_params_reject_nonfinite():
    with pytest.raises(ValueError):
        ModelParams({EdgeClass.DEFAULT: float("inf")})
    with pytest.raises(ValueError):
        ModelParams(h=float("nan"))


def test_params_accept_string_keys():
    p = ModelParams({"high": 1.0, "default": 0.5})
    assert p.phi == {EdgeClass.HIGH: 1.0, EdgeClass.DEFAULT: 0.5}


def test_joint_examples():
    g1 = Graph.from_edges(1, [])
    assert log_joint_unnormalized([0], [0.0], ModelParams(), g1) == pytest.approx(-0.9189385332, abs=1e-10)
    p = ModelParams({EdgeClass.DEFAULT: math.log(4)}, 0.0, EmissionParams(2.0, 1.0))
    val = log_joint_unnormalized([0, 0], [0.0, 0.0], p, build_chain(2))
    assert val == pytest.approx(math.log(4) - 2 * 0.9189385332, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_joint_is_prior_plus_emission(seed):
    gen = np.random.default_rng(seed)
    m = int(gen.integers(1, 9))
    g = build_chain(m)
    theta = gen.integers(0, 2, m)
    x = gen.normal(size=m)
    p = ModelParams({EdgeClass.DEFAULT: float(gen.normal())}, float(gen.normal()), EmissionParams(1.5, 0.7))
    expected = log_prior_unnormalized(theta, p, g) + float(np.sum(log_emission(x, theta, p.psi)))
    assert log_joint_unnormalized(theta, x, p, g) == pytest.approx(expected)


def test_partition_function_finite():
    g = build_chain(12)
    p = ModelParams({EdgeClass.DEFAULT: 2.0}, -1.0)
    total = sum(math.exp(log_prior_unnormalized(np.array(t), p, g)) for t in itertools.product((0, 1), repeat=12))
    assert math.isfinite(total) and total > 0


def test_edge_override_equal_to_shared():
    gen = np.random.default_rng(3)
    g = build_chain(6)
    shared = ModelParams({EdgeClass.DEFAULT: 0.7}, 0.2)
    per_edge = shared.with_(edge_phi=np.full(g.n_edges, 0.7))
    for _ in range(20):
        theta = gen.integers(0, 2, 6)
        assert log_prior_unnormalized(theta, per_edge, g) == pytest.approx(log_prior_unnormalized(theta, shared, g))


def test_joint_invariant_under_edge_order():
    edges = [(0, 1, EdgeClass.HIGH), (1, 2, EdgeClass.LOW), (2, 3, EdgeClass.HIGH)]
    p = ModelParams({EdgeClass.HIGH: 1.3, EdgeClass.LOW: -0.4}, 0.1)
    a = Graph.from_edges(4, edges)
    b = Graph.from_edges(4, [(j, i, c) for i, j, c in reversed(edges)])
    theta, x = [1, 0, 0, 1], [0.3, -1.0, 2.0, 0.5]
    assert log_joint_unnormalized(theta, x, p, a) == pytest.approx(log_joint_unnormalized(theta, x, p, b))


def test_node_mu_override():
    psi = EmissionParams(2.0, 1.0, node_mu=np.array([0.0, 3.0]))
    le = node_log_emissions(np.array([0.0, 3.0]), psi)
    assert le[0, 1] == pytest.approx(-HALF_LOG_2PI)
    assert le[1, 1] == pytest.approx(-HALF_LOG_2PI)
