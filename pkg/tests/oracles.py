"""Independent brute-force and LP reference implementations used by the tests.

None of these reuse the package's solvers: isomorphisms are enumerated
explicitly, transport problems go through scipy's LP solver, and path counts
come from direct recursion over edges.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.stats import wasserstein_distance

from filtra.trees import leaf, node

# Nested tuple trees: ("L", label) or ("N", [(weight, subtree), ...]).


def from_tree(t):
    if t.is_leaf:
        return ("L", 0 if t.label is None else t.label)
    return ("N", [(w, from_tree(c)) for w, c in t.children])


def to_tree(nt):
    if nt[0] == "L":
        return leaf(nt[1])
    return node((w, to_tree(c)) for w, c in nt[1])


def from_path_tree(pt):
    if pt.is_leaf:
        return ("L", 0 if pt.label is None else pt.label)
    return ("N", [(w, from_path_tree(c)) for w, c in pt.children])


def leaves(nt, mass=1):
    if nt[0] == "L":
        yield mass, nt[1]
        return
    for w, c in nt[1]:
        yield from leaves(c, mass * w)


def isomorphisms(a, b):
    """Every weight-preserving isomorphism, as a list of (leaf mass, label_a, label_b)."""
    if a[0] == "L" or b[0] == "L":
        if a[0] == b[0]:
            yield [(1, a[1], b[1])]
        return
    ca, cb = a[1], b[1]
    if len(ca) != len(cb):
        return
    for perm in itertools.permutations(range(len(cb))):
        if any(ca[i][0] != cb[perm[i]][0] for i in range(len(ca))):
            continue
        options = [list(isomorphisms(ca[i][1], cb[perm[i]][1])) for i in range(len(ca))]
        if any(not o for o in options):
            continue
        for combo in itertools.product(*options):
            out = []
            for i, leafmap in enumerate(combo):
                w = ca[i][0]
                out.extend((w * m, x, y) for m, x, y in leafmap)
            yield out


def orbit_bruteforce(a, b):
    """Minimum over explicit isomorphisms, or None when there is none."""
    best = None
    for iso in isomorphisms(a, b):
        cost = sum(m * abs(x - y) for m, x, y in iso)
        if best is None or cost < best:
            best = cost
    return best


def count_isomorphisms(a, b) -> int:
    return sum(1 for _ in isomorphisms(a, b))


def transport_lp(supply, demand, cost) -> float:
    m, n = len(supply), len(demand)
    c = np.asarray(cost, dtype=float).ravel()
    a_eq = []
    b_eq = []
    for i in range(m):
        row = np.zeros(m * n)
        row[i * n : (i + 1) * n] = 1
        a_eq.append(row)
        b_eq.append(float(supply[i]))
    for j in range(n):
        row = np.zeros(m * n)
        row[j::n] = 1
        a_eq.append(row)
        b_eq.append(float(demand[j]))
    res = linprog(c, A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=[(0, None)] * (m * n), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def nested_lp(a, b) -> float:
    """Recursive Kantorovich distance with every node-pair problem solved by scipy's LP."""
    if a[0] == "L" and b[0] == "L":
        return float(abs(a[1] - b[1]))
    cost = [[nested_lp(x, y) for _, y in b[1]] for _, x in a[1]]
    return transport_lp([w for w, _ in a[1]], [w for w, _ in b[1]], cost)


def plain_scipy(a, b) -> float:
    la = list(leaves(a))
    lb = list(leaves(b))
    return float(
        wasserstein_distance(
            [float(x) for _, x in la], [float(x) for _, x in lb], [float(m) for m, _ in la], [float(m) for m, _ in lb]
        )
    )


def assignment_scipy(cost) -> float:
    c = np.asarray(cost, dtype=float)
    r, k = linear_sum_assignment(c)
    return float(c[r, k].sum())


def count_paths(graph, v) -> int:
    """Path count by plain recursion over predecessor edges."""
    if v == graph.root:
        return 1
    return sum(m * count_paths(graph, u) for u, m in graph.preds[v])


# ---------------------------------------------------------------- random trees


def _weights(rng: random.Random, b: int):
    if b == 1:
        return [Fraction(1)]
    if rng.random() < 0.45:
        return [Fraction(1, b)] * b
    raw = [rng.randint(1, 3) for _ in range(b)]
    return [Fraction(x, sum(raw)) for x in raw]


def random_shape(rng: random.Random, rank: int, max_branch: int = 2):
    """Unlabeled nested tree of the given rank; equal-weight siblings often share a shape."""
    if rank == 0:
        return ("L", None)
    b = rng.randint(1, max_branch)
    ws = _weights(rng, b)
    kids = []
    for i, w in enumerate(ws):
        if i and w == ws[i - 1] and rng.random() < 0.6:
            kids.append((w, kids[-1][1]))
        else:
            kids.append((w, random_shape(rng, rank - 1, max_branch)))
    return ("N", kids)


def random_labeling(rng: random.Random, shape, labels=(0, 1, 2)):
    if shape[0] == "L":
        return ("L", rng.choice(labels))
    kids = [(w, random_labeling(rng, c, labels)) for w, c in shape[1]]
    rng.shuffle(kids)
    return ("N", kids)
