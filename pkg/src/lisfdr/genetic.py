"""Synthetic linkage-disequilibrium panels and case/control genotypes.

SNPs are split into independent blocks of geometric size. Inside a block a
haplotype is a Markov chain along the SNPs: each allele copies its left
neighbour with probability ``copy_prob`` and is otherwise drawn fresh from
the block's allele frequency, so r^2 decays geometrically with distance.
Allele 1 is the risk allele at causal SNPs, and copying only induces
positive correlation, so associated SNPs carry positive statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, R2Record, build_max_r2_graph
from .procedures import catt_many, two_proportion_z

MODELS = ("additive", "dominant", "recessive")


@dataclass(frozen=True)
class LdPanel:
    block: np.ndarray  # block id per SNP
    maf: np.ndarray
    copy_prob: float
    typed: np.ndarray  # indices of typed SNPs (the hypotheses)
    r2: np.ndarray  # (n_snps, n_snps) reference r^2, zero across blocks

    @property
    def n_snps(self) -> int:
        return len(self.maf)


def draw_haplotypes(panel_block, maf, copy_prob, n, gen: np.random.Generator) -> np.ndarray:
    n_snps = len(maf)
    fresh = gen.random((n, n_snps)) < maf
    copy = gen.random((n, n_snps)) < copy_prob
    h = np.empty((n, n_snps), dtype=np.int8)
    h[:, 0] = fresh[:, 0]
    for j in range(1, n_snps):
        same_block = panel_block[j] == panel_block[j - 1]
        if same_block:
            h[:, j] = np.where(copy[:, j], h[:, j - 1], fresh[:, j])
        else:
            h[:, j] = fresh[:, j]
    return h


def make_panel(
    n_snps: int,
    gen: np.random.Generator,
    mean_block: float = 8.0,
    copy_prob: float = 0.9,
    maf_range: tuple[float, float] = (0.1, 0.5),
    typed_fraction: float = 1.0,
    n_reference: int = 2000,
) -> LdPanel:
    sizes = []
    while sum(sizes) < n_snps:
        sizes.append(int(gen.geometric(1.0 / mean_block)))
    sizes[-1] -= sum(sizes) - n_snps
    block = np.repeat(np.arange(len(sizes)), sizes)
    # one allele frequency per block keeps the copy chain stationary, so r^2 = copy_prob ** (2 * distance)
    maf = gen.uniform(*maf_range, size=len(sizes))[block]
    ref = draw_haplotypes(block, maf, copy_prob, n_reference, gen).astype(float)
    r2 = np.zeros((n_snps, n_snps))
    for b in np.unique(block):
        idx = np.nonzero(block == b)[0]
        if len(idx) < 2:
            continue
        sub = ref[:, idx]
        sd = sub.std(axis=0)
        ok = sd > 0
        c = np.zeros((len(idx), len(idx)))
        if ok.sum() >= 2:
            c[np.ix_(ok, ok)] = np.corrcoef(sub[:, ok], rowvar=False) ** 2
        r2[np.ix_(idx, idx)] = c
    np.fill_diagonal(r2, 1.0)
    n_typed = max(1, int(round(typed_fraction * n_snps)))
    typed = np.sort(gen.choice(n_snps, size=n_typed, replace=False))
    return LdPanel(block, maf, copy_prob, typed, r2)


def panel_records(panel: LdPanel) -> list[R2Record]:
    """Within-block r^2 among typed SNPs, indexed by position in ``panel.typed``."""
    pos = {int(s): k for k, s in enumerate(panel.typed)}
    out = []
    for a, sa in enumerate(panel.typed):
        for sb in panel.typed[a + 1 :]:
            if panel.block[sa] != panel.block[sb]:
                continue
            out.append(R2Record(a, pos[int(sb)], float(min(max(panel.r2[sa, sb], 0.0), 1.0))))
    return out


def panel_graph(panel: LdPanel, thresholds=(0.25, 0.5, 0.8)) -> Graph:
    return build_max_r2_graph(panel_records(panel), len(panel.typed), thresholds)


def associated(panel: LdPanel, causal: np.ndarray, t: float) -> np.ndarray:
    """Typed SNPs whose r^2 with any causal SNP exceeds ``t``."""
    return (panel.r2[np.ix_(panel.typed, causal)] > t).any(axis=1).astype(np.int8)


def relative_risk(genotype: np.ndarray, model: str, rr: float) -> np.ndarray:
    if model == "additive":
        return 1.0 + (rr - 1.0) * genotype / 2.0
    if model == "dominant":
        return np.where(genotype >= 1, rr, 1.0)
    if model == "recessive":
        return np.where(genotype == 2, rr, 1.0)
    raise ValueError(f"unknown genetic model {model!r}; choose from {MODELS}")


def sample_case_control(
    panel: LdPanel,
    causal: np.ndarray,
    model: str,
    rr: float,
    n_cases: int,
    n_controls: int,
    gen: np.random.Generator,
    prevalence: float = 0.05,
    pool_factor: int = 8,
) -> tuple[np.ndarray, np.ndarray]:
    """Genotypes (0/1/2) of cases and controls at every SNP.

    A population pool is drawn and cases are picked with probability
    proportional to their disease risk, controls proportional to one minus it.
    """
    if model not in MODELS:
        raise ValueError(f"unknown genetic model {model!r}; choose from {MODELS}")
    pool = pool_factor * (n_cases + n_controls)
    geno = draw_haplotypes(panel.block, panel.maf, panel.copy_prob, pool, gen) + draw_haplotypes(
        panel.block, panel.maf, panel.copy_prob, pool, gen
    )
    risk = prevalence * np.prod(relative_risk(geno[:, causal], model, rr), axis=1)
    risk = np.clip(risk, 0.0, 1.0)
    cases = gen.choice(pool, size=n_cases, replace=False, p=risk / risk.sum())
    rest = np.setdiff1d(np.arange(pool), cases)
    w = 1.0 - risk[rest]
    controls = gen.choice(rest, size=n_controls, replace=False, p=w / w.sum())
    return geno[cases], geno[controls]


def association_statistics(case_geno: np.ndarray, control_geno: np.ndarray, test: str = "z") -> np.ndarray:
    """Per-SNP allelic two-proportion z or CATT; monomorphic SNPs get 0."""
    nc, nn = len(case_geno), len(control_geno)
    if test == "z":
        return two_proportion_z(case_geno.sum(axis=0), 2 * nc, control_geno.sum(axis=0), 2 * nn)
    if test == "catt":
        tables = np.stack(
            [np.stack([(case_geno == k).sum(axis=0), (control_geno == k).sum(axis=0)], axis=1) for k in range(3)],
            axis=2,
        )
        counts = tables.sum(axis=1)
        poly = (counts > 0).sum(axis=1) >= 2
        out = np.zeros(tables.shape[0])
        if poly.any():
            out[poly] = catt_many(tables[poly])
        return out
    raise ValueError(f"unknown test {test!r}")
