"""Parameter learning from a single observed statistic vector.

EM alternates an E-step (exact BP on forests, Gibbs otherwise) with an M-step
that refits the MRF couplings by persistent contrastive divergence and the
alternative emission by weighted maximum likelihood.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DegeneratePosteriorError, DivergenceError
from .graph import EdgeClass, Graph
from .inference import McmcConfig, PairwiseMarginals, bp_marginals, gibbs_marginals
from .model import EmissionParams, ModelParams
from .seeds import child_seed, kernel_seed, rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcdConfig:
    particles: int = 100
    inner_steps: int = 5
    initial_rate: float = 1.0
    decay: float = 0.02
    max_updates: int = 50
    min_updates: int = 3
    tolerance: float = 2e-3
    max_step: float = 1.0

    def __post_init__(self):
        if self.particles < 1 or self.inner_steps < 1:
            raise ValueError("particles and inner_steps must be >= 1")
        if not self.initial_rate > 0:
            raise ValueError("initial_rate must be positive")
        if self.max_updates < 1:
            raise ValueError("max_updates must be >= 1")


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 50
    param_tolerance: float = 5e-3
    window: int = 5
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    exact_estep: bool | None = None  # None: exact BP whenever the graph is acyclic
    pcd: PcdConfig = field(default_factory=PcdConfig)
    init: ModelParams | None = None
    learn_bias: bool = False
    learn_sigma: bool = True
    sigma_floor: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.param_tolerance > 0:
            raise ValueError("param_tolerance must be positive")


class SufficientStats(NamedTuple):
    """Expected per-class agreement counts and expected number of alternatives."""

    agree: dict
    alt: float

    def vector(self, classes) -> np.ndarray:
        return np.array([self.agree[c] for c in classes] + [self.alt])


def data_stats(pm: PairwiseMarginals, g: Graph) -> SufficientStats:
    agree = {c: float(np.sum(pm.edge_agree[g.classes == int(c)])) for c in g.present_classes}
    return SufficientStats(agree, float(np.sum(pm.node_p1)))


def model_stats_exact(g: Graph, phi: dict, h: float) -> SufficientStats:
    """Prior expectations of the sufficient statistics via one BP pass (forests only)."""
    # f1 == f0 when mu1 = 0 and sigma1 = 1, so the posterior is the prior
    params = ModelParams(phi, h, EmissionParams(0.0, 1.0))
    return data_stats(bp_marginals(g, params, np.zeros(g.m)).pairwise, g)


class PersistentChains:
    """PCD-n learner whose particles survive between M-steps."""

    def __init__(self, g: Graph, cfg: PcdConfig = PcdConfig(), seed: int = 0, learn_bias: bool = True):
        self.g = g
        self.cfg = cfg
        self.seed = seed
        self.learn_bias = learn_bias
        self.classes = g.present_classes
        self.compact = np.zeros(len(EdgeClass), dtype=np.int64)
        for k, c in enumerate(self.classes):
            self.compact[int(c)] = k
        self.edge_class = self.compact[g.classes]
        self.counts = np.array([np.sum(g.classes == int(c)) for c in self.classes] + [g.m], dtype=float)
        self.particles = (rng(seed, "pcd-init").random((cfg.particles, g.m)) < 0.5).astype(np.int8)
        self.updates = 0
        self.last_gradient = None

    def _learned(self) -> np.ndarray:
        n = len(self.classes)
        return np.arange(n + 1) if self.learn_bias else np.arange(n)

    def fit(self, target: SufficientStats, phi: dict, h: float) -> tuple[dict, float]:
        cfg = self.cfg
        g = self.g
        indptr, nbrs, eids = g.csr
        idx = self._learned()
        theta = np.array([phi.get(c, 0.0) for c in self.classes] + [h], dtype=float)
        tvec = target.vector(self.classes)
        for step in range(cfg.max_updates):
            edge_phi = theta[self.edge_class]
            stats = _kernels.advance_particles(
                indptr, nbrs, edge_phi[eids], np.full(g.m, theta[-1]), self.particles, g.edges,
                self.edge_class, len(self.classes), cfg.inner_steps, kernel_seed(self.seed, "pcd", self.updates),
            )
            self.updates += 1
            grad = tvec[idx] - stats[:, idx].mean(axis=0)
            scaled = grad / np.maximum(self.counts[idx], 1.0)
            self.last_gradient = scaled
            if step >= cfg.min_updates and np.max(np.abs(scaled)) <= cfg.tolerance:
                break
            if len(idx) == 1:
                cov = np.atleast_2d(np.var(stats[:, idx[0]], ddof=1))
            else:
                cov = np.cov(stats[:, idx], rowvar=False)
            cov = cov + np.diag(1e-2 * np.maximum(self.counts[idx], 1.0) * 0.25 / cfg.particles + 1e-6)
            direction = np.linalg.solve(cov, grad)
            rate = cfg.initial_rate / (1.0 + cfg.decay * self.updates)
            delta = np.clip(rate * direction, -cfg.max_step, cfg.max_step)
            theta[idx] += delta
            if not np.all(np.isfinite(theta)):
                raise DivergenceError(f"non-finite parameter after PCD update {self.updates}")
        new_phi = dict(phi)
        for k, c in enumerate(self.classes):
            new_phi[c] = float(theta[k])
        return new_phi, float(theta[-1])


def pcd_fit(
    target: SufficientStats,
    g: Graph,
    cfg: PcdConfig = PcdConfig(),
    start: tuple[dict, float] = ({EdgeClass.DEFAULT: 0.0}, 0.0),
    seed: int = 0,
    learn_bias: bool = True,
) -> tuple[dict, float]:
    """Fit couplings (and bias) so the prior reproduces ``target`` moments."""
    return PersistentChains(g, cfg, seed, learn_bias).fit(target, dict(start[0]), start[1])


def update_psi(
    x,
    lis,
    sigma_floor: float = 0.1,
    min_weight: float = 1e-3,
    learn_sigma: bool = True,
    sigma: float = 1.0,
) -> EmissionParams:
    """Weighted MLE of the alternative N(mu1, sigma1^2) with weights 1 - LIS."""
    x = np.asarray(x, dtype=float)
    w = 1.0 - np.asarray(lis, dtype=float)
    if x.shape != w.shape:
        raise ValueError("x and lis lengths differ")
    total = float(w.sum())
    if total < min_weight:
        raise DegeneratePosteriorError(f"posterior weight on alternatives is {total:.3g}")
    mu1 = float(w @ x / total)
    if learn_sigma:
        sigma = math.sqrt(float(w @ (x - mu1) ** 2 / total))
    return EmissionParams(mu1, max(sigma, sigma_floor))


class EmResult(NamedTuple):
    params: ModelParams
    lis: np.ndarray
    iterations: int
    converged: bool
    trace: list


def _flat(params: ModelParams, classes) -> np.ndarray:
    return np.array([params.phi[c] for c in classes] + [params.h, params.psi.mu1, params.psi.sigma1])


def em_fit(g: Graph, x, cfg: EmConfig = EmConfig()) -> EmResult:
    """EM with a PCD M-step; returns the final parameters and LIS."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.m,):
        raise ValueError(f"x has shape {x.shape}, graph has {g.m} nodes")
    classes = g.present_classes
    init = cfg.init or ModelParams({c: 0.0 for c in classes}, 0.0, EmissionParams(2.0, 1.0))
    params = ModelParams({c: init.phi.get(c, 0.0) for c in classes}, init.h, init.psi)
    exact = g.is_acyclic if cfg.exact_estep is None else cfg.exact_estep
    chains = PersistentChains(g, cfg.pcd, child_seed(cfg.seed, "pcd"), cfg.learn_bias)
    history = [_flat(params, classes)]
    trace = []
    converged = False

    def infer(p, it):
        if exact:
            return bp_marginals(g, p, x)
        mc = McmcConfig(cfg.mcmc.sweeps, cfg.mcmc.burn_in, child_seed(cfg.seed, "estep", it))
        return gibbs_marginals(g, p, x, mc)

    it = 0
    for it in range(1, cfg.max_iters + 1):
        post = infer(params, it)
        target = data_stats(post.pairwise, g)
        try:
            phi, h = chains.fit(target, dict(params.phi), params.h)
            psi = update_psi(x, post.lis, cfg.sigma_floor, learn_sigma=cfg.learn_sigma, sigma=params.psi.sigma1)
        except (DivergenceError, DegeneratePosteriorError) as exc:
            exc.iteration = it
            raise
        params = ModelParams(phi, h, psi)
        flat = _flat(params, classes)
        change = float(np.max(np.abs(flat - history[-1])))
        history.append(flat)
        row = {"iteration": it, "estep": "bp" if exact else "gibbs", "max_change": change}
        row.update({f"phi.{c.key}": params.phi[c] for c in classes})
        row.update({"bias": params.h, "mu1": params.psi.mu1, "sigma1": params.psi.sigma1})
        trace.append(row)
        log.debug("em iteration %d: %s", it, row)
        recent = np.array(history[-cfg.window :])
        if (
            change <= cfg.param_tolerance
            and len(history) > cfg.window
            and np.max(recent.max(axis=0) - recent.min(axis=0)) <= 2 * cfg.param_tolerance
        ):
            converged = True
            break
    post = infer(params, it + 1)
    return EmResult(params, post.lis, it, converged, trace)
