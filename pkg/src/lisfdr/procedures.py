"""Decision rules and individual test statistics.

Every rule here rejects the hypotheses with the smallest scores (LIS values,
local fdr values or p-values).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateTableError
from .model import EmissionParams, node_log_emissions


class Decision(NamedTuple):
    rejected: np.ndarray  # bool, one per hypothesis
    k: int
    order: np.ndarray  # stable ascending order of the scores

    def ranks(self) -> np.ndarray:
        r = np.empty(len(self.order), dtype=np.int64)
        r[self.order] = np.arange(1, len(self.order) + 1)
        return r


class CountsTable(NamedTuple):
    N00: int
    N10: int
    N01: int
    N11: int

    @property
    def R(self) -> int:
        return self.N10 + self.N11

    @property
    def S(self) -> int:
        return self.N00 + self.N01

    @property
    def m0(self) -> int:
        return self.N00 + self.N10

    @property
    def m1(self) -> int:
        return self.N01 + self.N11

    @property
    def m(self) -> int:
        return self.R + self.S

    @property
    def fdp(self) -> float:
        return self.N10 / max(self.R, 1)

    @property
    def fnp(self) -> float:
        return self.N01 / max(self.S, 1)


def _stable_order(scores: np.ndarray) -> np.ndarray:
    return np.argsort(scores, kind="stable")


def _shrink_to_tie_block(sorted_scores: np.ndarray, k: int) -> int:
    # a tie block is rejected whole or not at all
    m = len(sorted_scores)
    if 0 < k < m and sorted_scores[k - 1] == sorted_scores[k]:
        k = int(np.searchsorted(sorted_scores, sorted_scores[k - 1], side="left"))
    return k


def _decision(order: np.ndarray, k: int, m: int) -> Decision:
    rejected = np.zeros(m, dtype=bool)
    rejected[order[:k]] = True
    return Decision(rejected, k, order)


def lis_stepup(lis, alpha: float) -> Decision:
    """Reject the k smallest scores, k the longest prefix with mean <= alpha."""
    lis = np.asarray(lis, dtype=float)
    m = len(lis)
    order = _stable_order(lis)
    s = lis[order]
    means = np.cumsum(s) / np.arange(1, m + 1)
    ok = np.nonzero(means <= alpha)[0]
    k = int(ok[-1]) + 1 if len(ok) else 0
    return _decision(order, _shrink_to_tie_block(s, k), m)


def bh(pvals, alpha: float) -> Decision:
    """Benjamini-Hochberg step-up."""
    p = np.asarray(pvals, dtype=float)
    m = len(p)
    order = _stable_order(p)
    s = p[order]
    ok = np.nonzero(s <= alpha * np.arange(1, m + 1) / m)[0]
    k = int(ok[-1]) + 1 if len(ok) else 0
    return _decision(order, _shrink_to_tie_block(s, k), m)


def adaptive_p(pvals, alpha: float, pi0: float) -> Decision:
    """BH at level alpha / pi0 (capped at 1)."""
    if not pi0 > 0:
        raise ValueError(f"pi0 must be positive, got {pi0}")
    return bh(pvals, min(alpha / pi0, 1.0))


def local_fdr_scores(x, pi0: float, psi: EmissionParams) -> np.ndarray:
    """pi0 f0 / (pi0 f0 + (1 - pi0) f1), the independence-model posterior null probability."""
    if not 0 < pi0 < 1:
        raise ValueError(f"pi0 must be in (0, 1), got {pi0}")
    le = node_log_emissions(np.asarray(x, dtype=float), psi)
    log_odds = (math.log1p(-pi0) + le[:, 1]) - (math.log(pi0) + le[:, 0])
    return 1.0 / (1.0 + np.exp(log_odds))


def z_to_pvalue(z, sided: str = "upper"):
    """``sided`` is "upper" (one-sided, large z significant) or "two"."""
    z = np.asarray(z, dtype=float)
    if sided == "upper":
        out = ndtr(-z)
    elif sided == "two":
        out = 2.0 * ndtr(-np.abs(z))
    else:
        raise ValueError(f"unknown sidedness {sided!r}")
    return float(out) if out.ndim == 0 else out


def two_proportion_z(heads_pos, n_pos, heads_neg, n_neg):
    """Pooled two-proportion z statistic (vectorised over heads counts)."""
    if np.any(np.asarray(n_pos) < 1) or np.any(np.asarray(n_neg) < 1):
        raise ValueError("group sizes must be >= 1")
    a = np.asarray(heads_pos, dtype=float)
    b = np.asarray(heads_neg, dtype=float)
    pooled = (a + b) / (n_pos + n_neg)
    var = pooled * (1.0 - pooled) * (1.0 / n_pos + 1.0 / n_neg)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 0, (a / n_pos - b / n_neg) / np.sqrt(np.where(var > 0, var, 1.0)), 0.0)
    return float(z) if z.ndim == 0 else z


def catt(table) -> float:
    """Cochran-Armitage trend test with scores (0, 1, 2).

    ``table`` is 2x3: row 0 cases, row 1 controls, columns genotype 0/1/2.
    The variance is the exact permutation variance given the margins,
    i.e. the asymptotic form times N / (N - 1).
    """
    return float(catt_many(np.asarray(table, dtype=float)[None])[0])


def catt_many(tables) -> np.ndarray:
    """Vectorised ``catt`` over an ``(n, 2, 3)`` stack of tables."""
    t = np.asarray(tables, dtype=float)
    cases = t[:, 0, :]
    n = t.sum(axis=1)
    N = n.sum(axis=1)
    R = cases.sum(axis=1)
    s = np.array([0.0, 1.0, 2.0])
    if np.any(N < 2):
        raise DegenerateTableError("table needs at least two individuals")
    mean_s = n @ s / N
    var_s = n @ s**2 / N - mean_s**2
    var = R * (N - R) / N * var_s * N / (N - 1)
    if np.any(var <= 1e-12):
        raise DegenerateTableError("trend statistic has zero variance")
    return (cases @ s - R * mean_s) / np.sqrt(var)


def counts_from_truth(theta, decision: Decision | np.ndarray) -> CountsTable:
    theta = np.asarray(theta).astype(bool)
    rej = decision.rejected if isinstance(decision, Decision) else np.asarray(decision, dtype=bool)
    if theta.shape != rej.shape:
        raise ValueError("truth and decision lengths differ")
    return CountsTable(
        N00=int(np.sum(~theta & ~rej)),
        N10=int(np.sum(~theta & rej)),
        N01=int(np.sum(theta & ~rej)),
        N11=int(np.sum(theta & rej)),
    )
