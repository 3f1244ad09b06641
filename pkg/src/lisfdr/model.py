"""MRF-coupled two-group Gaussian mixture.

The latent truth ``theta`` follows a binary pairwise MRF whose log density is

    sum_edges phi[class(e)] * I(theta_i == theta_j) + h * sum_i theta_i

(up to a constant), and ``x_i | theta_i`` is N(0, 1) for nulls and
N(mu1, sigma1^2) for alternatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
from scipy.special import expit

from .errors import MissingParameterError
from .graph import EdgeClass, Graph

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class EmissionParams:
    mu1: float = 2.0
    sigma1: float = 1.0
    # per-node alternative means; overrides mu1 when given (heterogeneous scenarios)
    node_mu: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.sigma1 > 0:
            raise ValueError(f"sigma1 must be positive, got {self.sigma1}")

    def alt_means(self, m: int) -> np.ndarray | float:
        if self.node_mu is None:
            return self.mu1
        mu = np.asarray(self.node_mu, dtype=float)
        if mu.shape != (m,):
            raise ValueError(f"node_mu has shape {mu.shape}, expected ({m},)")
        return mu


@dataclass(frozen=True)
class ModelParams:
    phi: Mapping[EdgeClass, float] = field(default_factory=lambda: {EdgeClass.DEFAULT: 0.0})
    h: float = 0.0
    psi: EmissionParams = field(default_factory=EmissionParams)
    # per-edge couplings; overrides phi when given (heterogeneous scenarios)
    edge_phi: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        phi = {EdgeClass(k) if not isinstance(k, str) else EdgeClass.from_key(k): float(v) for k, v in self.phi.items()}
        if not all(math.isfinite(v) for v in phi.values()):
            raise ValueError("coupling parameters must be finite")
        if not math.isfinite(self.h):
            raise ValueError("bias must be finite")
        object.__setattr__(self, "phi", phi)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @classmethod
    def shared(cls, coupling: float, h: float = 0.0, mu1: float = 2.0, sigma1: float = 1.0) -> "ModelParams":
        """One coupling for every edge class."""
        return cls({c: coupling for c in EdgeClass}, h, EmissionParams(mu1, sigma1))


def logistic(z):
    return expit(z)


def matrix_to_coupling(p: float) -> float:
    """Map the diagonal of a symmetric 2x2 edge potential to the log-odds coupling."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"matrix potential must be in (0, 1), got {p}")
    return math.log(p / (1.0 - p))


def coupling_to_matrix(c: float) -> float:
    return float(expit(c))


def edge_couplings(params: ModelParams, g: Graph) -> np.ndarray:
    if params.edge_phi is not None:
        phi = np.asarray(params.edge_phi, dtype=float)
        if phi.shape != (g.n_edges,):
            raise ValueError(f"edge_phi has shape {phi.shape}, expected ({g.n_edges},)")
        return phi
    table = np.zeros(len(EdgeClass))
    for c in g.present_classes:
        if c not in params.phi:
            raise MissingParameterError(f"no coupling for edge class {c.key!r}")
        table[int(c)] = params.phi[c]
    return table[g.classes]


def log_emission(x, theta, psi: EmissionParams):
    """Log density of ``x`` under the null (theta=0) or alternative (theta=1)."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta)
    mu = psi.alt_means(x.size) if psi.node_mu is not None else psi.mu1
    null = -LOG_SQRT_2PI - 0.5 * x**2
    alt = -LOG_SQRT_2PI - math.log(psi.sigma1) - 0.5 * ((x - mu) / psi.sigma1) ** 2
    out = np.where(theta == 1, alt, null)
    return float(out) if out.ndim == 0 else out


def node_log_emissions(x: np.ndarray, psi: EmissionParams) -> np.ndarray:
    """``(m, 2)`` array of log f0(x_i), log f1(x_i)."""
    x = np.asarray(x, dtype=float)
    mu = psi.alt_means(len(x))
    out = np.empty((len(x), 2))
    out[:, 0] = -LOG_SQRT_2PI - 0.5 * x**2
    out[:, 1] = -LOG_SQRT_2PI - math.log(psi.sigma1) - 0.5 * ((x - mu) / psi.sigma1) ** 2
    return out


def log_prior_unnormalized(theta, params: ModelParams, g: Graph) -> float:
    theta = np.asarray(theta)
    if theta.shape != (g.m,):
        raise ValueError(f"theta has length {theta.size}, graph has {g.m} nodes")
    phi = edge_couplings(params, g)
    agree = theta[g.edges[:, 0]] == theta[g.edges[:, 1]]
    return float(np.sum(phi * agree) + params.h * np.sum(theta))


def log_joint_unnormalized(theta, x, params: ModelParams, g: Graph) -> float:
    theta = np.asarray(theta)
    x = np.asarray(x, dtype=float)
    if x.shape != theta.shape:
        raise ValueError("theta and x lengths differ")
    return log_prior_unnormalized(theta, params, g) + float(np.sum(log_emission(x, theta, params.psi)))
