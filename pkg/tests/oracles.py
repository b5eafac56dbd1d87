"""Independent brute-force references used to check the library.

Deliberately simple and slow: plain enumeration with no shared code paths
with the implementations under test.
"""

import itertools
import math

import numpy as np


def round_half_away_scalar(x: float) -> int:
    """Nearest integer, halves away from zero."""
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def brute_children(parents_z, parents_cost, r, ybreve, layer, k):
    """All-children oracle: 2k+1 children per parent, global top k.

    Enumerates, for every parent, the integer values at ``layer`` within
    k steps of the rounded unconstrained minimizer (more than enough to
    contain the k globally cheapest children), then selects the k smallest
    costs.  Returns (children_z, children_cost) sorted by cost, ties broken
    by parent order then enumeration order.
    """
    parents_z = np.asarray(parents_z)
    parents_cost = np.asarray(parents_cost, dtype=float)
    n = r.shape[0]
    rnn = r[layer, layer]
    entries = []
    order = 0
    for p in range(parents_z.shape[0]):
        resid = ybreve[layer] - float(
            np.dot(r[layer, layer + 1 :], parents_z[p, layer + 1 :].astype(float))
        )
        center = round_half_away_scalar(resid / rnn)
        for offset in range(-k, k + 1):
            z = center + offset
            cost = parents_cost[p] + (resid - rnn * z) ** 2
            entries.append((cost, order, p, z))
            order += 1
    entries.sort(key=lambda e: (e[0], e[1]))
    top = entries[:k]
    out_z = np.empty((len(top), n), dtype=np.int64)
    out_cost = np.empty(len(top))
    for i, (cost, _, p, z) in enumerate(top):
        out_z[i] = parents_z[p]
        out_z[i, layer] = z
        out_cost[i] = cost
    return out_z, out_cost


def exhaustive_mld(h, y, levels):
    """Exact ML solution by full enumeration of the PAM grid."""
    n = h.shape[1]
    points = [2.0 * i - (levels - 1) for i in range(levels)]
    best = math.inf
    best_s = None
    for cand in itertools.product(points, repeat=n):
        s = np.array(cand)
        d = float(np.sum((y - h @ s) ** 2))
        if d < best:
            best = d
            best_s = s
    return best_s, best


def mmse_estimate(h, y, noise_var, symbol_var):
    """Textbook linear MMSE estimate (normal equations form)."""
    n = h.shape[1]
    g = h.T @ h + (noise_var / (2.0 * symbol_var)) * np.eye(n)
    return np.linalg.solve(g, h.T @ y)
