"""Exact small-scale optimal transport: transportation simplex, assignment, and 1-d W1.

All routines work over any ordered field the arithmetic module supplies
(Fraction, Q5) as well as floats.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Sequence


def transport_cost(supply: Sequence, demand: Sequence, cost: Sequence[Sequence]):
    """Minimum of sum c[i][j] x[i][j] over couplings x of ``supply`` and ``demand``.

    Transportation simplex with a northwest-corner start, MODI potentials and
    Bland's smallest-index rule for both entering and leaving cells.  Zero
    masses are dropped up front.
    """
    rows = [i for i, a in enumerate(supply) if a != 0]
    cols = [j for j, b in enumerate(demand) if b != 0]
    a = [supply[i] for i in rows]
    b = [demand[j] for j in cols]
    c = [[cost[i][j] for j in cols] for i in rows]
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        return 0
    if m == 1:
        return sum(b[j] * c[0][j] for j in range(n))
    if n == 1:
        return sum(a[i] * c[i][0] for i in range(m))

    # northwest corner: exactly m + n - 1 basic cells forming a spanning tree
    x: dict[tuple[int, int], object] = {}
    ra, rb = list(a), list(b)
    i = j = 0
    while i < m and j < n:
        q = ra[i] if ra[i] < rb[j] else rb[j]
        x[(i, j)] = q
        ra[i] -= q
        rb[j] -= q
        if ra[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1

    guard = 50 * (m + n) ** 3 + 1000
    for _ in range(guard):
        u, v = _potentials(x, c, m, n)
        enter = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in x and c[i][j] - u[i] - v[j] < 0:
                    enter = (i, j)
                    break
            if enter is not None:
                break
        if enter is None:
            return sum(c[i][j] * q for (i, j), q in x.items())
        cycle = _cycle(x, enter, m, n)
        minus = cycle[1::2]
        theta = min(x[cell] for cell in minus)
        leave = min(cell for cell in minus if x[cell] == theta)
        for k, cell in enumerate(cycle):
            if k == 0:
                x[cell] = theta
            elif k % 2 == 1:
                x[cell] = x[cell] - theta
            else:
                x[cell] = x[cell] + theta
        del x[leave]
    raise RuntimeError("transportation simplex did not converge")


def _potentials(x, c, m, n):
    u: list = [None] * m
    v: list = [None] * n
    adj_r: list[list[int]] = [[] for _ in range(m)]
    adj_c: list[list[int]] = [[] for _ in range(n)]
    for i, j in x:
        adj_r[i].append(j)
        adj_c[j].append(i)
    u[0] = 0 * c[0][0]
    todo = deque([("r", 0)])
    while todo:
        kind, k = todo.popleft()
        if kind == "r":
            for j in adj_r[k]:
                if v[j] is None:
                    v[j] = c[k][j] - u[k]
                    todo.append(("c", j))
        else:
            for i in adj_c[k]:
                if u[i] is None:
                    u[i] = c[i][k] - v[k]
                    todo.append(("r", i))
    if any(t is None for t in u) or any(t is None for t in v):
        raise RuntimeError("basis is not a spanning tree")
    return u, v


def _cycle(x, enter, m, n):
    """Cells of the pivot cycle, starting with the entering cell, alternating sign."""
    i0, j0 = enter
    adj: dict = {}
    for i, j in x:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start, goal = ("r", i0), ("c", j0)
    parent = {start: None}
    todo = deque([start])
    while todo:
        node = todo.popleft()
        if node == goal:
            break
        for nxt in adj.get(node, ()):
            if nxt not in parent:
                parent[nxt] = node
                todo.append(nxt)
    nodes = []
    node = goal
    while node is not None:
        nodes.append(node)
        node = parent[node]
    nodes.reverse()  # row i0 ... column j0
    cells = [enter]
    for p, q in zip(nodes, nodes[1:]):
        cells.append((p[1], q[1]) if p[0] == "r" else (q[1], p[1]))
    return cells


def assignment(cost: Sequence[Sequence]) -> tuple[object, list[int]]:
    """Exact minimum-cost perfect matching on a square matrix.

    Returns (total, perm) with row i matched to column perm[i].  Ties are broken
    toward the lexicographically smallest permutation for sizes up to 4
    (enumeration), and by the potentials method beyond that.
    """
    n = len(cost)
    if n == 0:
        return 0, []
    if n <= 4:
        best = None
        for perm in itertools.permutations(range(n)):
            total = sum(cost[i][perm[i]] for i in range(n))
            if best is None or total < best[0]:
                best = (total, list(perm))
        return best
    return _hungarian(cost)


def _hungarian(cost):
    n = len(cost)
    inf = float("inf")
    zero = 0 * cost[0][0]
    u = [zero] * (n + 1)
    v = [zero] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = inf, -1
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    perm = [0] * n
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return sum(cost[i][perm[i]] for i in range(n)), perm


def wasserstein_1d(dist_a: dict, dist_b: dict):
    """W1 between two finitely supported distributions on the real line ({value: mass})."""
    points = sorted(set(dist_a) | set(dist_b))
    total = 0
    cdf = 0
    for x, nxt in zip(points, points[1:]):
        cdf = cdf + dist_a.get(x, 0) - dist_b.get(x, 0)
        total = total + abs(cdf) * (nxt - x)
    return total
