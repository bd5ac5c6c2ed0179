"""Distances between labeled measured trees, the criterion statistic and epsilon-entropy."""

from __future__ import annotations

import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .arith import format_weight
from .graph import Equipment, GradedGraph, SizeError
from .measures import AgreeingMeasure
from .transport import assignment, transport_cost, wasserstein_1d
from .trees import CylinderFunction, PathTree, Tree, TreeBuilder, delta_partition, truncate

ENTROPY_VERTEX_CAP = 4096
EXACT_COVER_LIMIT = 20


class Semantics(str, enum.Enum):
    ORBIT = "orbit"
    NESTED = "nested"
    PLAIN = "plain"


class NonIsomorphicError(ValueError):
    """No weight-preserving isomorphism exists between the two trees."""


class RankMismatchError(ValueError):
    pass


def _label(t: Tree):
    return 0 if t.label is None else t.label


class DistanceEngine:
    """Memoized distances keyed on interned-tree uid pairs.

    The memo tables are insert-only and their values are functions of the keys,
    so concurrent use can at worst repeat work.
    """

    def __init__(self):
        self._orbit: dict = {}
        self._nested: dict = {}
        self._leafdist: dict = {}

    def clear(self) -> None:
        self._orbit.clear()
        self._nested.clear()
        self._leafdist.clear()

    def distance(self, a: Tree, b: Tree, semantics: Semantics = Semantics.ORBIT):
        semantics = Semantics(semantics)
        if a.rank != b.rank:
            raise RankMismatchError(f"ranks differ: {a.rank} vs {b.rank}")
        if semantics is Semantics.ORBIT:
            return self.orbit(a, b)
        if semantics is Semantics.NESTED:
            return self.nested(a, b)
        return self.plain(a, b)

    # -- isomorphism orbit
    def orbit(self, a: Tree, b: Tree):
        if a is b:
            return 0
        if a.shape is not b.shape:
            raise NonIsomorphicError("trees are not isomorphic as measured trees")
        if a.is_leaf:
            return abs(_label(a) - _label(b))
        key = (a.uid, b.uid) if a.uid < b.uid else (b.uid, a.uid)
        hit = self._orbit.get(key)
        if hit is not None:
            return hit
        groups: dict = {}
        for w, c in a.children:
            groups.setdefault((w, c.shape.code), ([], []))[0].append(c)
        for w, c in b.children:
            groups[(w, c.shape.code)][1].append(c)
        total = 0
        for (w, _), (xs, ys) in groups.items():
            if len(xs) == 1:
                total = total + w * self.orbit(xs[0], ys[0])
                continue
            cost = [[self.orbit(x, y) for y in ys] for x in xs]
            best, _ = assignment(cost)
            total = total + w * best
        self._orbit[key] = total
        return total

    # -- recursive Kantorovich
    def nested(self, a: Tree, b: Tree):
        if a is b:
            return 0
        if a.is_leaf:
            return abs(_label(a) - _label(b))
        key = (a.uid, b.uid) if a.uid < b.uid else (b.uid, a.uid)
        hit = self._nested.get(key)
        if hit is not None:
            return hit
        cost = [[self.nested(x, y) for _, y in b.children] for _, x in a.children]
        val = transport_cost([w for w, _ in a.children], [w for w, _ in b.children], cost)
        self._nested[key] = val
        return val

    # -- transport of leaf-label laws
    def leaf_distribution(self, t: Tree) -> dict:
        hit = self._leafdist.get(t.uid)
        if hit is not None:
            return hit
        if t.is_leaf:
            out = {_label(t): 1}
        else:
            out = {}
            for w, c in t.children:
                for lab, m in self.leaf_distribution(c).items():
                    out[lab] = out.get(lab, 0) + w * m
        self._leafdist[t.uid] = out
        return out

    def plain(self, a: Tree, b: Tree):
        if a is b:
            return 0
        return wasserstein_1d(self.leaf_distribution(a), self.leaf_distribution(b))


ENGINE = DistanceEngine()


def tree_distance(t1, t2, semantics: Semantics = Semantics.ORBIT, engine: Optional[DistanceEngine] = None):
    """Distance between two labeled trees of equal rank.

    Orbit raises NonIsomorphicError when the underlying measured trees differ.
    """
    a = t1.canonical() if isinstance(t1, PathTree) else t1
    b = t2.canonical() if isinstance(t2, PathTree) else t2
    return (engine or ENGINE).distance(a, b, semantics)


# ---------------------------------------------------------------- criterion statistic


@dataclass
class StatisticRecord:
    n: int
    S_n: object
    eps_n: object
    pairs_evaluated: int
    semantics: str
    eps_exact: bool = True

    def row(self) -> list:
        return [self.n, _fmt(self.S_n), _fmt(self.eps_n), self.pairs_evaluated, self.semantics]


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return format_weight(x)


@dataclass
class LevelData:
    vertices: list
    masses: dict
    cells: list
    trees: dict


def _level_data(graph, equipment, measure, f, n, horizon=None) -> LevelData:
    if n > measure.depth:
        raise ValueError(f"level {n} beyond measure depth {measure.depth}")
    labeled = TreeBuilder(graph, equipment, f)
    lv = measure.levels[n]
    cells = [[v for v in cell if lv.get(v, 0)] for cell in delta_partition(graph, equipment, n)]
    cells = [c for c in cells if c]
    trees = {}
    for cell in cells:
        for v in cell:
            t = labeled.tree(v)
            trees[v] = truncate(t, horizon) if horizon is not None else t
    verts = [v for cell in cells for v in cell]
    return LevelData(verts, {v: lv[v] for v in verts}, cells, trees)


def _pair_distances(pairs, trees, semantics, threads: int, engine: DistanceEngine) -> dict:
    def one(pair):
        v, w = pair
        return pair, engine.distance(trees[v], trees[w], semantics)

    if threads and threads > 1 and len(pairs) > 64:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(one, pairs, chunksize=256))
    return dict(one(p) for p in pairs)


def criterion_statistic(
    graph: GradedGraph,
    equipment: Equipment,
    measure: AgreeingMeasure,
    f: CylinderFunction,
    n: int,
    semantics: Semantics = Semantics.ORBIT,
    threads: int = 1,
    horizon: Optional[int] = None,
    engine: Optional[DistanceEngine] = None,
) -> StatisticRecord:
    """Expected within-class distance S_n and its epsilon form eps_n at level n."""
    semantics = Semantics(semantics)
    engine = engine or ENGINE
    data = _level_data(graph, equipment, measure, f, n, horizon)
    pairs = [p for cell in data.cells for p in itertools.combinations(cell, 2)]
    dist = _pair_distances(pairs, data.trees, semantics, threads, engine)
    num = 0
    for (v, w), d in dist.items():
        num = num + 2 * data.masses[v] * data.masses[w] * d
    den = 0
    for cell in data.cells:
        mc = sum(data.masses[v] for v in cell)
        den = den + mc * mc
    s_n = num / den if den else 0
    eps, exact = epsilon_form(data.cells, data.masses, dist)
    return StatisticRecord(n, s_n, eps, len(pairs), semantics.value, exact)


def min_weight_vertex_cover(vertices: Sequence, weight: dict, edges: Sequence[tuple]) -> tuple[object, bool]:
    """Minimum total weight of a vertex set touching every edge.

    Exact branch and bound on components of at most EXACT_COVER_LIMIT vertices,
    greedy (weight per uncovered degree) beyond.  Returns (value, exact flag).
    """
    adj: dict = {v: set() for v in vertices}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen: set = set()
    total = 0
    exact = True
    for s in vertices:
        if s in seen or not adj[s]:
            continue
        comp, todo = [], [s]
        seen.add(s)
        while todo:
            x = todo.pop()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        if len(comp) <= EXACT_COVER_LIMIT:
            total = total + _cover_exact(comp, weight, adj)
        else:
            exact = False
            total = total + _cover_greedy(comp, weight, adj)
    return total, exact


def _cover_exact(comp, weight, adj):
    best = [sum(weight[v] for v in comp)]

    def rec(alive: frozenset, acc):
        if acc >= best[0]:
            return
        pick = None
        for v in alive:
            deg = len(adj[v] & alive)
            if deg and (pick is None or deg > pick[1]):
                pick = (v, deg)
        if pick is None:
            best[0] = acc
            return
        v = pick[0]
        rec(alive - {v}, acc + weight[v])
        nb = adj[v] & alive
        rec(alive - nb - {v}, acc + sum(weight[u] for u in nb))

    rec(frozenset(comp), 0)
    return best[0]


def _cover_greedy(comp, weight, adj):
    alive = set(comp)
    total = 0
    while True:
        cand = [(weight[v] / len(adj[v] & alive), v) for v in alive if adj[v] & alive]
        if not cand:
            return total
        _, v = min(cand, key=lambda t: (t[0], str(t[1])))
        total = total + weight[v]
        alive.discard(v)


def epsilon_form(cells, masses, dist) -> tuple[object, bool]:
    """Smallest eps such that deleting mass <= eps leaves all within-class distances <= eps.

    The removal cost f(t) for a threshold t is a minimum-weight vertex cover of
    the pairs farther apart than t; it only changes at pair distances, so the
    optimum is min over thresholds t_k of max(t_k, f(t_k)).
    """
    thresholds = sorted({0} | set(dist.values()))
    verts = [v for c in cells for v in c]
    exact_all = True
    cache: dict = {}

    def removal(t):
        nonlocal exact_all
        if t not in cache:
            val, ex = min_weight_vertex_cover(verts, masses, [p for p, d in dist.items() if d > t])
            exact_all = exact_all and ex
            cache[t] = val
        return cache[t]

    # f is nonincreasing; find the first threshold where f(t) <= t
    lo, hi = 0, len(thresholds) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if removal(thresholds[mid]) <= thresholds[mid]:
            hi = mid
        else:
            lo = mid + 1
    best = thresholds[lo] if removal(thresholds[lo]) <= thresholds[lo] else removal(thresholds[lo])
    if lo > 0:
        prev = removal(thresholds[lo - 1])
        if prev < best:
            best = prev
    return best, exact_all


# ---------------------------------------------------------------- trajectories


@dataclass
class VerdictConfig:
    standard_below: float = 1e-3
    nonstandard_above: float = 0.05
    tail: int = 3


@dataclass
class Trajectory:
    records: list
    verdict: str
    nonincreasing: bool
    semantics: str
    config: VerdictConfig = field(default_factory=VerdictConfig)


def verdict_of(records: Sequence[StatisticRecord], config: VerdictConfig = VerdictConfig()) -> str:
    if not records:
        return "inconclusive"
    if float(records[-1].S_n) < config.standard_below:
        return "standardness-consistent"
    tail = records[-config.tail :]
    if len(tail) == config.tail and min(float(r.S_n) for r in tail) > config.nonstandard_above:
        return "nonstandardness-consistent"
    return "inconclusive"


def statistic_trajectory(
    graph: GradedGraph,
    equipment: Equipment,
    measure: AgreeingMeasure,
    f: CylinderFunction,
    n_range: Iterable[int],
    semantics: Semantics = Semantics.ORBIT,
    threads: int = 1,
    config: VerdictConfig = VerdictConfig(),
    horizon: Optional[int] = None,
) -> Trajectory:
    records = [criterion_statistic(graph, equipment, measure, f, n, semantics, threads, horizon) for n in n_range]
    nonincreasing = all(b.S_n <= a.S_n for a, b in zip(records, records[1:]))
    return Trajectory(records, verdict_of(records, config), nonincreasing, Semantics(semantics).value, config)


# ---------------------------------------------------------------- epsilon-entropy


def distance_table(graph, equipment, measure, f, n, semantics=Semantics.ORBIT, threads=1, engine=None):
    """Vertices, masses and within-class distances for level n; cross-class pairs are absent (infinite)."""
    engine = engine or ENGINE
    data = _level_data(graph, equipment, measure, f, n)
    if len(data.vertices) > ENTROPY_VERTEX_CAP:
        raise SizeError(f"level {n} has {len(data.vertices)} weighted vertices, cap {ENTROPY_VERTEX_CAP}")
    pairs = [p for cell in data.cells for p in itertools.combinations(cell, 2)]
    return data, _pair_distances(pairs, data.trees, Semantics(semantics), threads, engine)


def greedy_cover(vertices: Sequence[str], masses: dict, cell_of: dict, dist: dict, eps) -> int:
    """Greedy count of radius-eps balls (centers among the vertices) covering mass >= 1 - eps."""
    order = sorted(vertices, key=lambda v: (-masses[v], v))
    balls = {}
    for c in order:
        ball = {c}
        for w in vertices:
            if w != c and cell_of[w] == cell_of[c]:
                d = dist.get((c, w), dist.get((w, c)))
                if d <= eps:
                    ball.add(w)
        balls[c] = ball
    covered: set = set()
    covered_mass = 0
    target = 1 - eps
    count = 0
    while covered_mass < target:
        best, gain = None, None
        for c in order:
            g = sum(masses[w] for w in balls[c] - covered)
            if gain is None or g > gain:
                best, gain = c, g
        if not gain:
            break
        covered |= balls[best]
        covered_mass = covered_mass + gain
        count += 1
    return count


def epsilon_entropy(
    graph: GradedGraph,
    equipment: Equipment,
    measure: AgreeingMeasure,
    f: CylinderFunction,
    n: int,
    semantics: Semantics = Semantics.ORBIT,
    eps=0.1,
    threads: int = 1,
) -> int:
    data, dist = distance_table(graph, equipment, measure, f, n, semantics, threads)
    cell_of = {v: i for i, cell in enumerate(data.cells) for v in cell}
    return greedy_cover(data.vertices, data.masses, cell_of, dist, eps)
