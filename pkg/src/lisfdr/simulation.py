"""Replicated simulation studies.

A replication draws the truth and statistics, runs every requested procedure
at every nominal level, and tabulates the outcome against the truth.
Procedures: OR (LIS with the generating parameters), LIS (LIS with EM
estimates), BH, AP (adaptive p-value) and localFDR.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import genetic
from .errors import DegeneratePosteriorError, DivergenceError, ScenarioError
from .graph import EdgeClass, Graph, build_chain, build_grid, build_perfect_binary_tree
from .inference import McmcConfig, posterior
from .learning import EmConfig, PcdConfig, em_fit
from .model import EmissionParams, ModelParams, matrix_to_coupling
from .procedures import (
    CountsTable,
    adaptive_p,
    bh,
    counts_from_truth,
    lis_stepup,
    local_fdr_scores,
    two_proportion_z,
    z_to_pvalue,
)
from .sampling import PriorSampleConfig, sample_observations, sample_prior
from .seeds import child_seed, rng

log = logging.getLogger(__name__)

PROCEDURES = ("OR", "LIS", "BH", "AP", "localFDR")
STRUCTURES = ("chain", "tree", "grid", "edgelist", "genetic")


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    structure_kind: str = "chain"
    structure_m: int = 500
    structure_height: int = 8
    structure_rows: int = 30
    structure_cols: int = 30
    structure_path: str = ""
    phi_center: float = 0.8
    phi_delta: float = 0.0
    mu_center: float = 2.0
    mu_delta: float = 0.0
    sigma1: float = 1.0
    bias: float = 0.0
    bias_learn: bool = False
    alpha: tuple = (0.10,)
    replications: int = 100
    procedures: tuple = PROCEDURES
    oracle: bool = True
    seed: int = 0
    pvalue_sided: str = "upper"
    prior_method: str = "auto"
    prior_sweeps: int = 1000
    prior_burn_in: int = 500
    em_max_iters: int = 50
    em_tolerance: float = 5e-3
    em_learn_sigma: str = "auto"  # auto: learn sigma1 only for asymptotic tests
    mcmc_sweeps: int = 20_000
    mcmc_burn_in: int = 100
    pcd_particles: int = 100
    pcd_inner_steps: int = 5
    asymptotic_n: int = 0
    asymptotic_base_p: float = 0.5
    genetic_snps: int = 1200
    genetic_typed_fraction: float = 0.283  # 685 of 2420 SNPs on the reference array
    genetic_block_mean: float = 16.0
    genetic_copy_prob: float = 0.95
    genetic_causal: int = 10
    genetic_t: float = 0.5
    genetic_model: str = "additive"
    genetic_rr: float = 1.3
    genetic_cases: int = 250
    genetic_controls: int = 250
    genetic_test: str = "z"
    genetic_thresholds: tuple = (0.25, 0.5, 0.8)

    def __post_init__(self):
        if self.structure_kind not in STRUCTURES:
            raise ScenarioError(f"unknown structure {self.structure_kind!r}")
        lo = self.phi_center - self.phi_delta / 2
        hi = self.phi_center + self.phi_delta / 2
        if not (0 < lo and hi < 1 and self.phi_delta >= 0):
            raise ScenarioError("phi band must stay inside (0, 1)")
        if self.mu_delta < 0 or self.sigma1 <= 0:
            raise ScenarioError("mu.delta must be >= 0 and sigma1 > 0")
        if self.replications < 1:
            raise ScenarioError("need at least one replication")
        if not self.alpha or not all(0 < a < 1 for a in self.alpha):
            raise ScenarioError("every alpha must lie in (0, 1)")
        unknown = set(self.procedures) - set(PROCEDURES)
        if unknown:
            raise ScenarioError(f"unknown procedures {sorted(unknown)}")
        if self.structure_kind == "genetic":
            if self.genetic_model not in genetic.MODELS:
                raise ScenarioError(f"unknown genetic model {self.genetic_model!r}")
            if self.genetic_test not in ("z", "catt"):
                raise ScenarioError(f"unknown test {self.genetic_test!r}")
        if self.pvalue_sided not in ("upper", "two"):
            raise ScenarioError("pvalue.sided must be 'upper' or 'two'")
        if self.em_learn_sigma.lower() not in ("auto", "true", "false", "yes", "no", "1", "0", "on", "off"):
            raise ScenarioError("em.learn_sigma must be auto, true or false")
        if self.prior_method not in ("auto", "exact", "gibbs"):
            raise ScenarioError("prior.method must be auto, exact or gibbs")

    @property
    def genetic_mode(self) -> bool:
        return self.structure_kind == "genetic"

    @property
    def asymptotic_mode(self) -> bool:
        return self.asymptotic_n > 0

    @property
    def learn_sigma(self) -> bool:
        if self.em_learn_sigma == "auto":
            return self.genetic_mode or self.asymptotic_mode
        return _coerce(self.em_learn_sigma, True)

    def em_config(self, seed: int) -> EmConfig:
        return EmConfig(
            max_iters=self.em_max_iters,
            param_tolerance=self.em_tolerance,
            mcmc=McmcConfig(self.mcmc_sweeps, self.mcmc_burn_in, seed),
            pcd=PcdConfig(particles=self.pcd_particles, inner_steps=self.pcd_inner_steps),
            learn_bias=self.bias_learn,
            learn_sigma=self.learn_sigma,
            seed=seed,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            key = f.name.replace("_", ".", 1) if "_" in f.name else f.name
            lines.append(f"{key} = {format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(format_value(u) for u in v)
    return str(v)


def full_scale(sc: Scenario) -> Scenario:
    """Full-size structures: m=3000 chain, height-12 tree, 100x100 grid, 2420 SNPs, 500 replications
    (100 for the genetic scenario)."""
    return replace(
        sc,
        structure_m=3000,
        structure_height=12,
        structure_rows=100,
        structure_cols=100,
        genetic_snps=2420,
        replications=100 if sc.genetic_mode else 500,
    )


class Replication(NamedTuple):
    index: int
    truth: np.ndarray
    scores: dict  # procedure -> score vector (smaller is more significant)
    counts: dict  # (procedure, alpha) -> CountsTable
    failures: dict  # procedure -> error message
    em_iterations: int


def build_structure(sc: Scenario) -> tuple[Graph, genetic.LdPanel | None]:
    kind = sc.structure_kind
    if kind == "chain":
        return build_chain(sc.structure_m), None
    if kind == "tree":
        return build_perfect_binary_tree(sc.structure_height), None
    if kind == "grid":
        return build_grid(sc.structure_rows, sc.structure_cols), None
    if kind == "edgelist":
        from .io import read_edge_file

        recs, m = read_edge_file(sc.structure_path)
        return Graph.from_edges(m, [(r.i, r.j) for r in recs]), None
    panel = genetic.make_panel(
        sc.genetic_snps,
        rng(sc.seed, "ld-panel"),
        mean_block=sc.genetic_block_mean,
        copy_prob=sc.genetic_copy_prob,
        typed_fraction=sc.genetic_typed_fraction,
    )
    return genetic.panel_graph(panel, sc.genetic_thresholds), panel


def _true_params(sc: Scenario, g: Graph, gen: np.random.Generator) -> ModelParams:
    edge_phi = None
    if sc.phi_delta > 0:
        lo, hi = sc.phi_center - sc.phi_delta / 2, sc.phi_center + sc.phi_delta / 2
        p = gen.uniform(lo, hi, size=g.n_edges)
        edge_phi = np.log(p / (1 - p))
    node_mu = None
    if sc.mu_delta > 0:
        node_mu = gen.uniform(sc.mu_center - sc.mu_delta / 2, sc.mu_center + sc.mu_delta / 2, size=g.m)
    c = matrix_to_coupling(sc.phi_center)
    return ModelParams(
        {k: c for k in EdgeClass}, sc.bias, EmissionParams(sc.mu_center, sc.sigma1, node_mu), edge_phi=edge_phi
    )


def effect_for_mean_z(mu: float, n: int, base_p: float) -> float:
    """Difference p+ - p- whose pooled z statistic has approximately mean ``mu``."""
    half = n / 2

    def gap(d):
        pbar = base_p + d / 2
        return d / math.sqrt(pbar * (1 - pbar) * 2 / half) - mu

    upper = 1.0 - base_p - 1e-9
    if gap(upper) < 0:
        return upper
    return brentq(gap, 0.0, upper)


def _asymptotic_statistics(sc: Scenario, theta: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    half = sc.asymptotic_n // 2
    if half < 1:
        raise ScenarioError("asymptotic.n must be at least 2")
    d = effect_for_mean_z(sc.mu_center, sc.asymptotic_n, sc.asymptotic_base_p)
    p_neg = np.full(theta.size, sc.asymptotic_base_p)
    p_pos = np.where(theta == 1, sc.asymptotic_base_p + d, sc.asymptotic_base_p)
    heads_pos = gen.binomial(half, p_pos)
    heads_neg = gen.binomial(half, p_neg)
    return two_proportion_z(heads_pos, half, heads_neg, half)


def draw_replication(sc: Scenario, g: Graph, panel, rep_seed: int):
    """Truth, statistics and the generating parameters for one replication."""
    if sc.genetic_mode:
        gen = rng(rep_seed, "genetic")
        causal = np.sort(gen.choice(panel.n_snps, size=sc.genetic_causal, replace=False))
        theta = genetic.associated(panel, causal, sc.genetic_t)
        cases, controls = genetic.sample_case_control(
            panel, causal, sc.genetic_model, sc.genetic_rr, sc.genetic_cases, sc.genetic_controls, gen
        )
        x = genetic.association_statistics(cases[:, panel.typed], controls[:, panel.typed], sc.genetic_test)
        return theta, x, None
    true = _true_params(sc, g, rng(rep_seed, "params"))
    method = sc.prior_method
    if method == "auto":
        method = "exact" if g.is_acyclic else "gibbs"
    prior_cfg = PriorSampleConfig(method, sc.prior_sweeps, sc.prior_burn_in, child_seed(rep_seed, "theta"))
    theta = sample_prior(g, true, prior_cfg)
    if sc.asymptotic_mode:
        x = _asymptotic_statistics(sc, theta, rng(rep_seed, "bernoulli"))
    else:
        x = sample_observations(theta, true.psi, seed=child_seed(rep_seed, "x"))
    return theta, x, true


def oracle_null_proportion(g: Graph, true: ModelParams, theta) -> float:
    """Average prior null probability under the generating model.

    Exact by prior-only BP on forests and 1/2 by symmetry when h = 0;
    otherwise the realised null fraction of this replication stands in.
    """
    if g.is_acyclic:
        prior_only = true.with_(psi=EmissionParams(0.0, 1.0))
        pi0 = float(np.mean(posterior(g, prior_only, np.zeros(g.m)).lis))
    elif true.h == 0:
        pi0 = 0.5
    else:
        pi0 = 1.0 - float(np.mean(theta))
    return float(np.clip(pi0, 1e-6, 1 - 1e-6))


def run_replication(sc: Scenario, rep_seed: int, index: int = 0, structure=None) -> Replication:
    g, panel = structure if structure is not None else build_structure(sc)
    theta, x, true = draw_replication(sc, g, panel, rep_seed)
    mcmc = McmcConfig(sc.mcmc_sweeps, sc.mcmc_burn_in, child_seed(rep_seed, "oracle-mcmc"))
    procs = [p for p in sc.procedures if not (p == "OR" and (true is None or not sc.oracle))]
    scores, failures = {}, {}
    em_iters = 0
    pvals = z_to_pvalue(x, sc.pvalue_sided)

    fitted = None
    if "LIS" in procs or not sc.oracle or true is None:
        try:
            res = em_fit(g, x, sc.em_config(child_seed(rep_seed, "em")))
            fitted = res
            em_iters = res.iterations
            scores["LIS"] = res.lis
        except (DivergenceError, DegeneratePosteriorError, np.linalg.LinAlgError) as exc:
            log.warning("replication %d: learning failed: %s", index, exc)
            failures["LIS"] = f"{type(exc).__name__}: {exc}"

    if "OR" in procs:
        scores["OR"] = posterior(g, true, x, mcmc).lis

    if sc.oracle and true is not None:
        pi0 = oracle_null_proportion(g, true, theta)
        psi = true.psi
    elif fitted is not None:
        pi0 = float(np.clip(np.mean(fitted.lis), 1e-6, 1 - 1e-6))
        psi = fitted.params.psi
    else:
        pi0, psi = None, None

    if "BH" in procs:
        scores["BH"] = pvals
    if "AP" in procs:
        if pi0 is None:
            failures["AP"] = "no null proportion available"
        else:
            scores["AP"] = pvals
    if "localFDR" in procs:
        if pi0 is None:
            failures["localFDR"] = "no emission parameters available"
        else:
            scores["localFDR"] = local_fdr_scores(x, pi0, psi)

    counts = {}
    for alpha in sc.alpha:
        for proc, s in scores.items():
            if proc in ("OR", "LIS", "localFDR"):
                d = lis_stepup(s, alpha)
            elif proc == "BH":
                d = bh(s, alpha)
            else:
                d = adaptive_p(s, alpha, pi0)
            counts[(proc, alpha)] = counts_from_truth(theta, d)
    ordered = {p: scores[p] for p in procs if p in scores}
    return Replication(index, np.asarray(theta, dtype=np.int8), ordered, counts, failures, em_iters)


@dataclass
class MetricsRow:
    procedure: str
    alpha: float
    fdr: float
    fnr: float
    atp: float
    tp: int
    fdr_se: float
    fnr_se: float
    atp_se: float
    n: int


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return float("nan"), float("nan")
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), se


def summarize(procedure: str, alpha: float, tables: list[CountsTable]) -> MetricsRow:
    fdr, fdr_se = _mean_se([t.fdp for t in tables])
    fnr, fnr_se = _mean_se([t.fnp for t in tables])
    atp, atp_se = _mean_se([t.N11 for t in tables])
    return MetricsRow(procedure, alpha, fdr, fnr, atp, int(sum(t.N11 for t in tables)), fdr_se, fnr_se, atp_se, len(tables))


@dataclass
class MetricsReport:
    scenario: Scenario
    rows: list[MetricsRow]
    counts: dict  # (procedure, alpha) -> list of CountsTable in replication order
    failures: dict  # procedure -> number of failed replications
    replications: list[Replication] = field(default_factory=list, repr=False)

    def row(self, procedure: str, alpha: float | None = None) -> MetricsRow:
        alpha = self.scenario.alpha[0] if alpha is None else alpha
        for r in self.rows:
            if r.procedure == procedure and math.isclose(r.alpha, alpha):
                return r
        raise KeyError((procedure, alpha))


def _run_one(args):
    sc, index, structure = args
    return run_replication(sc, child_seed(sc.seed, "rep", index), index, structure)


def run_scenario(sc: Scenario, threads: int = 1) -> MetricsReport:
    structure = build_structure(sc)
    jobs = [(sc, r, structure) for r in range(sc.replications)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(_run_one, jobs))
    else:
        reps = [_run_one(j) for j in jobs]
    reps.sort(key=lambda r: r.index)
    counts: dict = {}
    failures: dict = {}
    for rep in reps:
        for key, table in rep.counts.items():
            counts.setdefault(key, []).append(table)
        for proc in rep.failures:
            failures[proc] = failures.get(proc, 0) + 1
    if not counts:
        raise ScenarioError("every replication failed")
    rows = []
    for proc in sc.procedures:
        for alpha in sc.alpha:
            if (proc, alpha) in counts:
                rows.append(summarize(proc, alpha, counts[(proc, alpha)]))
    return MetricsReport(sc, rows, counts, failures, reps)


class CurvePoints(NamedTuple):
    fpr: np.ndarray
    tpr: np.ndarray
    recall: np.ndarray
    precision: np.ndarray  # empty when no replication has a positive

    @property
    def pr_empty(self) -> bool:
        return len(self.precision) == 0


def _sweep(score: np.ndarray, truth: np.ndarray):
    """Cumulative TP/FP counts at each distinct score threshold (ascending)."""
    order = np.argsort(score, kind="stable")
    s = score[order]
    t = truth[order].astype(bool)
    tp = np.cumsum(t)
    fp = np.cumsum(~t)
    last = np.r_[s[1:] != s[:-1], True]
    return tp[last], fp[last]


def roc_pr_points(runs, grid_size: int = 101) -> CurvePoints:
    """Vertically averaged ROC and PR curves over replications.

    ``runs`` is a sequence of ``(scores, truth)`` pairs; smaller scores rank
    first. ROC: the best TPR reachable at FPR <= each grid value. PR:
    interpolated precision (best precision at recall >= each grid value).
    """
    runs = list(runs)
    if not runs:
        raise ValueError("need at least one replication")
    grid = np.linspace(0.0, 1.0, grid_size)
    tprs, precs = [], []
    for score, truth in runs:
        score = np.asarray(score, dtype=float)
        truth = np.asarray(truth)
        pos = int(truth.sum())
        neg = len(truth) - pos
        if pos == 0:
            continue
        tp, fp = _sweep(score, truth)
        tp = np.r_[0, tp]
        fp = np.r_[0, fp]
        tpr = tp / pos
        if neg > 0:
            fpr = fp / neg
            idx = np.searchsorted(fpr, grid, side="right") - 1
            tprs.append(np.maximum.accumulate(tpr)[idx])
        recall = tp[1:] / pos
        precision = tp[1:] / np.maximum(tp[1:] + fp[1:], 1)
        best = np.maximum.accumulate(precision[::-1])[::-1]
        j = np.searchsorted(recall, grid, side="left")
        precs.append(np.where(j < len(best), best[np.minimum(j, len(best) - 1)], 0.0))
    if not precs:
        return CurvePoints(np.array([]), np.array([]), np.array([]), np.array([]))
    if tprs:
        fpr_out, tpr_out = grid, np.mean(tprs, axis=0)
    else:
        fpr_out, tpr_out = np.array([]), np.array([])
    return CurvePoints(fpr_out, tpr_out, grid, np.mean(precs, axis=0))


def scenario_from_dict(values: dict) -> Scenario:
    """Build a scenario from dotted ``key -> string`` pairs."""
    kinds = {f.name: f for f in fields(Scenario)}
    defaults = Scenario()
    kwargs = {}
    for key, raw in values.items():
        name = key.strip().replace(".", "_")
        if name not in kinds:
            raise ScenarioError(f"unknown scenario key {key!r}")
        current = getattr(defaults, name)
        try:
            kwargs[name] = _coerce(raw, current)
        except ValueError as exc:
            raise ScenarioError(f"bad value for {key!r}: {raw!r}") from exc
    return Scenario(**kwargs)


def _coerce(raw: str, like):
    raw = raw.strip()
    if isinstance(like, bool):
        if raw.lower() in ("true", "yes", "1", "on"):
            return True
        if raw.lower() in ("false", "no", "0", "off"):
            return False
        raise ValueError(raw)
    if isinstance(like, tuple):
        items = [u.strip() for u in raw.split(",") if u.strip()]
        if like and isinstance(like[0], float):
            return tuple(float(u) for u in items)
        return tuple(items)
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def scenario_dict(sc: Scenario) -> dict:
    return asdict(sc)
