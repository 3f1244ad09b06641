"""Draw ground truth from the MRF prior and statistics given the truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import StructureError
from .graph import Graph
from .model import EmissionParams, ModelParams, edge_couplings
from .inference import forest_pass
from .seeds import kernel_seed, rng


@dataclass(frozen=True)
class PriorSampleConfig:
    method: str = "exact"  # "exact" (forests only) or "gibbs"
    sweeps: int = 1000
    burn_in: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("exact", "gibbs"):
            raise ValueError(f"unknown prior sampling method {self.method!r}")
        if not self.sweeps > self.burn_in >= 0:
            raise ValueError("need sweeps > burn_in >= 0")


def _prior_up(g: Graph, params: ModelParams):
    phi = edge_couplings(params, g)
    node_pot = np.zeros((g.m, 2))
    node_pot[:, 1] = params.h
    _, _, up, _ = forest_pass(g, phi, node_pot)
    fo = g.forest_order
    parent_phi = np.zeros(g.m)
    has_parent = fo.parent >= 0
    parent_phi[has_parent] = phi[fo.parent_edge[has_parent]]
    return fo, parent_phi, up


def sample_prior_batch(g: Graph, params: ModelParams, n: int, cfg: PriorSampleConfig = PriorSampleConfig()) -> np.ndarray:
    """``(n, m)`` int8 array of independent prior draws.

    Exact draws sample the root from its marginal and then each child from
    its conditional given the parent and its own subtree. Gibbs draws run
    ``n`` independent prior-only chains for ``cfg.sweeps`` sweeps each.
    """
    if cfg.method == "exact":
        if not g.is_acyclic:
            raise StructureError("exact prior sampling needs an acyclic graph")
        fo, parent_phi, up = _prior_up(g, params)
        u = rng(cfg.seed, "prior-exact").random((n, g.m))
        out = np.empty((n, g.m), dtype=np.int8)
        for r in range(n):
            _kernels.ancestral_sample(fo.order, fo.parent, parent_phi, up, u[r], out[r])
        return out
    start_p = 1.0 / (1.0 + np.exp(-params.h))
    particles = (rng(cfg.seed, "prior-gibbs-init").random((n, g.m)) < start_p).astype(np.int8)
    indptr, nbrs, eids = g.csr
    nbr_phi = edge_couplings(params, g)[eids]
    field = np.full(g.m, float(params.h))
    _kernels.advance_particles(
        indptr, nbrs, nbr_phi, field, particles, g.edges, np.zeros(g.n_edges, dtype=np.int64), 1, cfg.sweeps,
        kernel_seed(cfg.seed, "prior-gibbs"),
    )
    return particles


def sample_prior(g: Graph, params: ModelParams, cfg: PriorSampleConfig = PriorSampleConfig()) -> np.ndarray:
    return sample_prior_batch(g, params, 1, cfg)[0]


def sample_observations(theta, psi: EmissionParams, mu_override=None, seed: int = 0) -> np.ndarray:
    """x_i ~ N(0, 1) for nulls and N(mu_i, sigma1^2) for alternatives."""
    theta = np.asarray(theta)
    m = theta.size
    if mu_override is not None:
        mu = np.asarray(mu_override, dtype=float)
        if mu.shape != (m,):
            raise ValueError("mu_override length does not match theta")
    else:
        mu = psi.alt_means(m)
    z = rng(seed, "observations").standard_normal(m)
    return np.where(theta == 1, mu + psi.sigma1 * z, z)
