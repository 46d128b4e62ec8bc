"""Vectorised Bell-state kernels and the symmetric-tree Monte-Carlo.

Each kernel exists twice: a loop form compiled with numba and a numpy form.
``purify_batch``, ``swap_batch`` and ``symmetric_cost_samples`` dispatch to
whichever backend ``_accel.USE_NUMBA`` selects; the ``*_numba`` and
``*_numpy`` names are always available for benchmarking and cross-checks.
"""

from __future__ import annotations

import numpy as np

from . import _accel


def _purify_loop(s1, s2):
    n = s1.shape[0]
    p = np.empty(n)
    out = np.empty((n, 4))
    for i in range(n):
        a1, b1, c1, d1 = s1[i, 0], s1[i, 1], s1[i, 2], s1[i, 3]
        a2, b2, c2, d2 = s2[i, 0], s2[i, 1], s2[i, 2], s2[i, 3]
        p[i] = (a1 + b1) * (a2 + b2) + (c1 + d1) * (c2 + d2)
        na = a1 * a2 + b1 * b2
        nb = a1 * b2 + b1 * a2
        nc = c1 * d2 + d1 * c2
        nd = c1 * c2 + d1 * d2
        total = na + nb + nc + nd
        out[i, 0] = na / total
        out[i, 1] = nb / total
        out[i, 2] = nc / total
        out[i, 3] = nd / total
    return p, out


def _swap_loop(s1, s2):
    n = s1.shape[0]
    out = np.empty((n, 4))
    for i in range(n):
        a1, b1, c1, d1 = s1[i, 0], s1[i, 1], s1[i, 2], s1[i, 3]
        a2, b2, c2, d2 = s2[i, 0], s2[i, 1], s2[i, 2], s2[i, 3]
        a = a1 * a2 + b1 * b2 + c1 * c2 + d1 * d2
        b = a1 * b2 + b1 * a2 + c1 * d2 + d1 * c2
        c = a1 * c2 + c1 * a2 + b1 * d2 + d1 * b2
        d = a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2
        total = a + b + c + d
        out[i, 0] = a / total
        out[i, 1] = b / total
        out[i, 2] = c / total
        out[i, 3] = d / total
    return out


def _symmetric_cost_loop(p_rounds, trials, seed):
    # Depth-first construction of one symmetric tree per trial; held[k] is
    # the number of finished round-k pairs waiting for a partner (0 or 1,
    # momentarily 2).
    np.random.seed(seed)
    rounds = p_rounds.shape[0]
    costs = np.empty(trials, np.int64)
    held = np.zeros(rounds + 1, np.int64)
    for t in range(trials):
        held[:] = 0
        cost = 0
        while held[rounds] == 0:
            cost += 1
            held[0] += 1
            k = 0
            while k < rounds and held[k] == 2:
                held[k] = 0
                if np.random.random() < p_rounds[k]:
                    held[k + 1] += 1
                k += 1
        costs[t] = cost
    return costs


def purify_batch_numpy(s1, s2):
    s1 = _as_states(s1)
    s2 = _as_states(s2)
    a1, b1, c1, d1 = s1.T
    a2, b2, c2, d2 = s2.T
    p = (a1 + b1) * (a2 + b2) + (c1 + d1) * (c2 + d2)
    num = np.stack(
        [a1 * a2 + b1 * b2, a1 * b2 + b1 * a2, c1 * d2 + d1 * c2, c1 * c2 + d1 * d2],
        axis=1,
    )
    return p, num / num.sum(axis=1, keepdims=True)


def swap_batch_numpy(s1, s2):
    s1 = _as_states(s1)
    s2 = _as_states(s2)
    a1, b1, c1, d1 = s1.T
    a2, b2, c2, d2 = s2.T
    out = np.stack(
        [
            a1 * a2 + b1 * b2 + c1 * c2 + d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 + d1 * c2,
            a1 * c2 + c1 * a2 + b1 * d2 + d1 * b2,
            a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2,
        ],
        axis=1,
    )
    return out / out.sum(axis=1, keepdims=True)


def symmetric_cost_samples_numpy(p_rounds, trials, seed):
    """Base-pair cost of ``trials`` independent symmetric trees.

    Works level by level from the top: the number of attempts behind every
    round-k pair is geometric in ``p_rounds[k-1]`` and each attempt eats two
    round-(k-1) pairs, whose own costs are then summed with ``reduceat``.
    """
    p_rounds = np.asarray(p_rounds, dtype=float)
    rng = np.random.default_rng(seed)
    if p_rounds.size == 0:
        return np.ones(trials, dtype=np.int64)
    counts = [trials]
    attempts = []
    for p in p_rounds[::-1]:
        g = rng.geometric(p, size=counts[-1])
        attempts.append(g)
        counts.append(2 * int(g.sum()))
    costs = np.ones(counts[-1], dtype=np.int64)
    for g in reversed(attempts):
        width = 2 * g
        starts = np.concatenate(([0], np.cumsum(width)[:-1]))
        costs = np.add.reduceat(costs, starts)
    return costs


def _as_states(x):
    return np.ascontiguousarray(x, dtype=np.float64).reshape(-1, 4)


purify_batch_numba = _accel.njit(_purify_loop)
swap_batch_numba = _accel.njit(_swap_loop)
symmetric_cost_samples_numba = _accel.njit(_symmetric_cost_loop)

if _accel.USE_NUMBA:

    def purify_batch(s1, s2):
        return purify_batch_numba(_as_states(s1), _as_states(s2))

    def swap_batch(s1, s2):
        return swap_batch_numba(_as_states(s1), _as_states(s2))

    def symmetric_cost_samples(p_rounds, trials, seed):
        return symmetric_cost_samples_numba(np.asarray(p_rounds, dtype=float), int(trials), int(seed))

    BACKEND = "numba"
else:
    purify_batch = purify_batch_numpy
    swap_batch = swap_batch_numpy
    symmetric_cost_samples = symmetric_cost_samples_numpy
    BACKEND = "numpy"
