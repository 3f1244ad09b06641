"""Posterior marginals P(theta_i = 0 | x), the local index of significance.

Three routes: exhaustive enumeration (small graphs, used as a test oracle),
exact sum-product on forests, and systematic-scan Gibbs sampling for graphs
with cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit, logsumexp

from . import _kernels
from .errors import GraphSizeError, StructureError
from .graph import Graph
from .model import ModelParams, edge_couplings, log_emission, node_log_emissions
from .seeds import kernel_seed

MAX_ENUMERATION_NODES = 20


class PairwiseMarginals(NamedTuple):
    edge_agree: np.ndarray  # P(theta_i == theta_j | x) per edge
    node_p1: np.ndarray  # P(theta_i == 1 | x) per node


class Posterior(NamedTuple):
    lis: np.ndarray
    pairwise: PairwiseMarginals


@dataclass(frozen=True)
class McmcConfig:
    sweeps: int = 20_000
    burn_in: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.sweeps > self.burn_in >= 0:
            raise ValueError("need sweeps > burn_in >= 0")


def _check_x(x, g: Graph) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (g.m,):
        raise ValueError(f"x has shape {x.shape}, graph has {g.m} nodes")
    if not np.all(np.isfinite(x)):
        raise ValueError("statistics must be finite")
    return x


def node_field(x: np.ndarray, params: ModelParams) -> np.ndarray:
    """Bias plus log-likelihood ratio log f1(x_i) - log f0(x_i)."""
    le = node_log_emissions(x, params.psi)
    return params.h + le[:, 1] - le[:, 0]


def all_configurations(m: int) -> np.ndarray:
    codes = np.arange(2**m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(np.int8)


def enumerate_marginals(g: Graph, params: ModelParams, x) -> Posterior:
    """Exact marginals by summing the joint over all 2^m configurations."""
    if g.m > MAX_ENUMERATION_NODES:
        raise GraphSizeError(f"enumeration limited to {MAX_ENUMERATION_NODES} nodes, got {g.m}")
    x = _check_x(x, g)
    thetas = all_configurations(g.m)
    phi = edge_couplings(params, g)
    le = node_log_emissions(x, params.psi)
    agree = thetas[:, g.edges[:, 0]] == thetas[:, g.edges[:, 1]]
    logp = agree @ phi + params.h * thetas.sum(axis=1)
    logp = logp + np.where(thetas == 1, le[:, 1], le[:, 0]).sum(axis=1)
    w = np.exp(logp - logsumexp(logp))
    p1 = w @ thetas
    edge_agree = w @ agree if g.n_edges else np.zeros(0)
    return Posterior(1.0 - p1, PairwiseMarginals(np.asarray(edge_agree, dtype=float), p1))


def _parent_couplings(g: Graph, phi: np.ndarray):
    fo = g.forest_order
    parent_phi = np.zeros(g.m)
    has_parent = fo.parent >= 0
    parent_phi[has_parent] = phi[fo.parent_edge[has_parent]]
    return fo, parent_phi


def forest_pass(g: Graph, phi: np.ndarray, node_pot: np.ndarray):
    """Run sum-product on a forest; returns ``(p1, edge_agree, up, log_z)``."""
    if not g.is_acyclic:
        raise StructureError("belief propagation needs an acyclic graph; use gibbs_marginals")
    fo, parent_phi = _parent_couplings(g, phi)
    p1, agree_child, up, log_z = _kernels.forest_sum_product(fo.order, fo.parent, parent_phi, node_pot)
    edge_agree = np.empty(g.n_edges)
    has_parent = fo.parent >= 0
    edge_agree[fo.parent_edge[has_parent]] = agree_child[has_parent]
    return p1, edge_agree, up, log_z


def bp_marginals(g: Graph, params: ModelParams, x) -> Posterior:
    """Exact marginals on an acyclic graph (forward-backward on chains)."""
    x = _check_x(x, g)
    le = node_log_emissions(x, params.psi)
    node_pot = np.column_stack([le[:, 0], le[:, 1] + params.h])
    p1, edge_agree, _, _ = forest_pass(g, edge_couplings(params, g), node_pot)
    p1 = np.clip(p1, 0.0, 1.0)
    return Posterior(1.0 - p1, PairwiseMarginals(np.clip(edge_agree, 0.0, 1.0), p1))


def gibbs_conditional(i: int, theta, x_i: float, params: ModelParams, g: Graph) -> float:
    """P(theta_i = 1 | neighbours of i, x_i)."""
    theta = np.asarray(theta)
    if theta.shape != (g.m,):
        raise ValueError("theta length does not match graph")
    psi = params.psi
    if psi.node_mu is not None:
        mu = float(np.asarray(psi.node_mu)[i])
        log_f1 = -0.5 * math.log(2 * math.pi) - math.log(psi.sigma1) - 0.5 * ((x_i - mu) / psi.sigma1) ** 2
    else:
        log_f1 = log_emission(x_i, 1, psi)
    s = params.h + log_f1 - log_emission(x_i, 0, psi)
    indptr, nbrs, eids = g.csr
    phi = edge_couplings(params, g)
    sl = slice(indptr[i], indptr[i + 1])
    s += float(np.sum(phi[eids[sl]] * (2 * theta[nbrs[sl]].astype(float) - 1)))
    return float(expit(s))


def _csr_couplings(g: Graph, phi: np.ndarray):
    indptr, nbrs, eids = g.csr
    return indptr, nbrs, phi[eids]


def gibbs_marginals(g: Graph, params: ModelParams, x, cfg: McmcConfig = McmcConfig()) -> Posterior:
    """Monte Carlo marginals from a single systematic-scan chain.

    The chain starts at theta_i = 1 where f1(x_i) > f0(x_i).
    """
    x = _check_x(x, g)
    field = node_field(x, params)
    theta = (field - params.h > 0).astype(np.int8)
    indptr, nbrs, nbr_phi = _csr_couplings(g, edge_couplings(params, g))
    ones, agree = _kernels.gibbs_chain(
        indptr, nbrs, nbr_phi, field, theta, g.edges, cfg.sweeps, cfg.burn_in, kernel_seed(cfg.seed, "gibbs")
    )
    kept = cfg.sweeps - cfg.burn_in
    p1 = ones / kept
    return Posterior(1.0 - p1, PairwiseMarginals(agree / kept, p1))


def posterior(g: Graph, params: ModelParams, x, mcmc: McmcConfig | None = None) -> Posterior:
    """Exact BP on forests, Gibbs otherwise."""
    if g.is_acyclic:
        return bp_marginals(g, params, x)
    return gibbs_marginals(g, params, x, mcmc or McmcConfig())
