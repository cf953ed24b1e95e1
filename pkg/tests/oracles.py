"""Slow, definition-level reference implementations used only by the tests."""

import itertools
from decimal import Decimal, getcontext

import numpy as np


def all_configs(n):
    return ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)


def naive_successor(edges_per_layer, n, tau, master, c):
    """Successor computed from edge lists with plain loops."""
    k = len(edges_per_layer)
    out = []
    for v in range(n):
        fired = []
        for i in range(k):
            nb = {v} | {b for a, b in edges_per_layer[i] if a == v} | {a for a, b in edges_per_layer[i] if b == v}
            fired.append(sum(int(c[u]) for u in nb) >= tau[i][v])
        out.append(any(fired) if master == "or" else all(fired))
    return np.array(out, dtype=bool)


def vertex_columns(problem, r):
    """Per vertex, every achievable tuple of outputs over the entries of r."""
    from msyds.dynamics import MasterKind, layer_scores

    net = problem.net
    s = layer_scores(net, r)
    cols = []
    for v in range(net.n):
        if problem.unknown_mask[v]:
            taus = np.array(list(itertools.product(*[range(net.degrees[i, v] + 3) for i in range(net.k)])))
        else:
            taus = problem.known_tau[:, v][None]
        fired = s[:, :, v][None] >= taus[:, :, None]
        out = fired.any(1) if problem.master is MasterKind.OR else fired.all(1)
        cols.append({tuple(map(bool, o)) for o in out})
    return cols


def brute_shattered(problem, r):
    """Try every pair of achievable (CA, CB) per entry and every selection."""
    m, n = len(r), problem.net.n
    cols = vertex_columns(problem, r)
    vals = []
    for j in range(m):
        per_v = [sorted({c[j] for c in cols[v]}) for v in range(n)]
        vals.append(list(itertools.product(*per_v)))
    for choice in itertools.product(*[list(itertools.combinations(v, 2)) for v in vals]):
        if all(
            all(tuple((choice[j][0] if phi >> j & 1 else choice[j][1])[v] for j in range(m)) in cols[v]
                for v in range(n))
            for phi in range(1 << m)
        ):
            return True
    return False


def consistent_thresholds(problem, before, after):
    """All unknown threshold tables consistent with the examples, by enumeration."""
    from msyds.dynamics import MasterKind, layer_scores

    net = problem.net
    s = layer_scores(net, before)
    per_vertex = {}
    for v in problem.unknown:
        ok = []
        for t in itertools.product(*[range(net.degrees[i, v] + 3) for i in range(net.k)]):
            fired = s[:, :, v] >= np.array(t)[:, None]
            out = fired.any(0) if problem.master is MasterKind.OR else fired.all(0)
            if np.array_equal(out, after[:, v]):
                ok.append(t)
        per_vertex[int(v)] = ok
    return per_vertex


getcontext().prec = 60


def dec_ln(x):
    return Decimal(x).ln()


def pac_size_decimal(eps, delta, sigma, k):
    sk = Decimal(sigma * k)
    val = sk * (sk / Decimal(str(delta))).ln() / Decimal(str(eps))
    return int(val.to_integral_value(rounding="ROUND_CEILING"))


def pmac_size_decimal(eps, delta, beta, sigma, k):
    val = Decimal(k) * (Decimal(sigma * k) / Decimal(str(delta))).ln() / (Decimal(str(eps)) * Decimal(str(beta)))
    return int(val.to_integral_value(rounding="ROUND_CEILING"))


def generic_decimal(eps, delta, sigma, k, davg):
    return (Decimal(sigma * k) * Decimal(davg).ln() + (1 / Decimal(str(delta))).ln()) / Decimal(str(eps))
