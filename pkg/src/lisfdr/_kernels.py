"""Compiled inner loops: tree sum-product, Gibbs sweeps, ancestral sampling.

All state is binary and every message is kept in log space as a pair of
floats. Kernels seed numba's own generator from a 32-bit seed so that a
call is reproducible regardless of what ran before it.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _lse(a, b):
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def forest_sum_product(order, parent, parent_phi, node_pot):
    """Two-pass sum-product on a forest.

    ``parent_phi[v]`` is the coupling on the edge from ``v`` to its parent.
    Returns ``(p1, agree, up, log_z)`` where ``p1[v] = P(theta_v = 1)``,
    ``agree[v] = P(theta_v == theta_parent(v))`` (NaN at roots), ``up`` holds
    the upward beliefs and ``log_z`` is the log partition function.
    """
    m = order.shape[0]
    up = node_pot.copy()
    msg_up = np.zeros((m, 2))
    down = np.zeros((m, 2))
    log_z = 0.0
    for k in range(m - 1, -1, -1):
        v = order[k]
        p = parent[v]
        if p < 0:
            continue
        c = parent_phi[v]
        m0 = _lse(up[v, 0] + c, up[v, 1])
        m1 = _lse(up[v, 0], up[v, 1] + c)
        norm = _lse(m0, m1)
        msg_up[v, 0] = m0 - norm
        msg_up[v, 1] = m1 - norm
        log_z += norm
        up[p, 0] += msg_up[v, 0]
        up[p, 1] += msg_up[v, 1]
    for k in range(m):
        v = order[k]
        if parent[v] < 0:
            log_z += _lse(up[v, 0], up[v, 1])
    p1 = np.empty(m)
    agree = np.full(m, np.nan)
    for k in range(m):
        v = order[k]
        p = parent[v]
        if p >= 0:
            c = parent_phi[v]
            cav0 = up[p, 0] + down[p, 0] - msg_up[v, 0]
            cav1 = up[p, 1] + down[p, 1] - msg_up[v, 1]
            d0 = _lse(cav0 + c, cav1)
            d1 = _lse(cav0, cav1 + c)
            norm = _lse(d0, d1)
            down[v, 0] = d0 - norm
            down[v, 1] = d1 - norm
            j00 = up[v, 0] + cav0 + c
            j11 = up[v, 1] + cav1 + c
            j01 = up[v, 0] + cav1
            j10 = up[v, 1] + cav0
            same = _lse(j00, j11)
            diff = _lse(j01, j10)
            agree[v] = 1.0 / (1.0 + math.exp(diff - same))
        b0 = up[v, 0] + down[v, 0]
        b1 = up[v, 1] + down[v, 1]
        p1[v] = 1.0 / (1.0 + math.exp(b0 - b1))
    return p1, agree, up, log_z


@njit(cache=True)
def ancestral_sample(order, parent, parent_phi, up, uniforms, out):
    """Draw one configuration given upward beliefs from ``forest_sum_product``."""
    for k in range(order.shape[0]):
        v = order[k]
        p = parent[v]
        if p < 0:
            l0 = up[v, 0]
            l1 = up[v, 1]
        else:
            c = parent_phi[v]
            tp = out[p]
            l0 = up[v, 0] + (c if tp == 0 else 0.0)
            l1 = up[v, 1] + (c if tp == 1 else 0.0)
        prob1 = 1.0 / (1.0 + math.exp(l0 - l1))
        out[v] = 1 if uniforms[k] < prob1 else 0


@njit(cache=True, inline="always")
def _sweep(indptr, nbrs, nbr_phi, field, theta):
    m = theta.shape[0]
    for i in range(m):
        s = field[i]
        for k in range(indptr[i], indptr[i + 1]):
            s += nbr_phi[k] * (2 * theta[nbrs[k]] - 1)
        if s >= 0:
            prob1 = 1.0 / (1.0 + math.exp(-s))
        else:
            e = math.exp(s)
            prob1 = e / (1.0 + e)
        theta[i] = 1 if np.random.random() < prob1 else 0


@njit(cache=True)
def gibbs_chain(indptr, nbrs, nbr_phi, field, theta, edges, sweeps, burn_in, seed):
    """Systematic-scan Gibbs; ``theta`` is updated in place.

    Returns per-node counts of theta=1 and per-edge agreement counts over the
    kept (post burn-in) sweeps.
    """
    np.random.seed(seed)
    m = theta.shape[0]
    n_edges = edges.shape[0]
    ones = np.zeros(m, dtype=np.int64)
    agree = np.zeros(n_edges, dtype=np.int64)
    for t in range(sweeps):
        _sweep(indptr, nbrs, nbr_phi, field, theta)
        if t >= burn_in:
            for i in range(m):
                ones[i] += theta[i]
            for e in range(n_edges):
                if theta[edges[e, 0]] == theta[edges[e, 1]]:
                    agree[e] += 1
    return ones, agree


@njit(cache=True)
def advance_particles(indptr, nbrs, nbr_phi, field, particles, edges, edge_class, n_classes, sweeps, seed):
    """Advance every particle ``sweeps`` Gibbs sweeps in place.

    Returns a ``(P, n_classes + 1)`` matrix: per-class agreement counts
    followed by the number of ones, one row per particle.
    """
    np.random.seed(seed)
    n_part = particles.shape[0]
    n_edges = edges.shape[0]
    stats = np.zeros((n_part, n_classes + 1))
    for q in range(n_part):
        theta = particles[q]
        for _ in range(sweeps):
            _sweep(indptr, nbrs, nbr_phi, field, theta)
        for e in range(n_edges):
            if theta[edges[e, 0]] == theta[edges[e, 1]]:
                stats[q, edge_class[e]] += 1.0
        total = 0
        for i in range(theta.shape[0]):
            total += theta[i]
        stats[q, n_classes] = total
    return stats
