"""Markov measures on path spaces, stored as consistent level distributions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional, Sequence

import numpy as np

from .arith import Q5, as_exact, format_weight, is_exact, parse_weight
from .graph import (
    ROOT,
    Edge,
    Equipment,
    GradedGraph,
    Path,
    ValidationError,
    build_words_Z,
    central_equipment,
    check_path,
    path_end,
    WORDS_Z_MAX_DEPTH,
)

MEASURE_SCHEMA = "filtra.measure/1"


@dataclass
class AgreeingMeasure:
    """Level distributions m_0..m_N consistent with an equipment."""

    equipment: Equipment
    levels: list  # list of {vertex: probability}

    @property
    def graph(self) -> GradedGraph:
        return self.equipment.graph

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def mass(self, v: str):
        return self.levels[self.graph.level_of[v]].get(v, 0)

    def check(self, tol: float = 1e-12) -> None:
        """Raise ValidationError unless every level sums to one and projects onto the one below."""
        exact = all(is_exact(x) for lv in self.levels for x in lv.values())
        close = (lambda a, b: a == b) if exact else (lambda a, b: abs(float(a) - float(b)) <= tol)
        for n, lv in enumerate(self.levels):
            if set(lv) - set(self.graph.levels[n]):
                raise ValidationError(f"level {n} mentions vertices outside the graph")
            if any(x < 0 for x in lv.values()):
                raise ValidationError(f"level {n} has a negative mass")
            if not close(sum(lv.values()), 1):
                raise ValidationError(f"level {n} masses sum to {format_weight(sum(lv.values()))}")
        for n in range(self.depth, 0, -1):
            below = project_level(self.equipment, self.levels[n])
            for u in self.graph.levels[n - 1]:
                if not close(below.get(u, 0), self.levels[n - 1].get(u, 0)):
                    raise ValidationError(f"inconsistent mass at {u} (level {n - 1})")

    def cylinder_prob(self, path: Path):
        check_path(self.graph, path)
        n = len(path)
        if n > self.depth:
            raise ValidationError(f"path length {n} exceeds measure depth {self.depth}")
        p = self.levels[n].get(path_end(self.graph, path), 0)
        for u, v, c in path:
            p = p * self.equipment.weight(u, v, c)
        return p

    def truncated(self, depth: int) -> "AgreeingMeasure":
        return AgreeingMeasure(self.equipment, self.levels[: depth + 1])

    @classmethod
    def from_top(cls, equipment: Equipment, top: dict) -> "AgreeingMeasure":
        """Extend a distribution on level N downward through the equipment."""
        graph = equipment.graph
        n = graph.level_of[next(iter(top))]
        levels = [dict(top)]
        for _ in range(n):
            levels.append(project_level(equipment, levels[-1]))
        levels.reverse()
        return cls(equipment, levels)


def project_level(equipment: Equipment, dist: dict) -> dict:
    """One step of the projection: delta_v maps to sum over copies of lambda * delta_u."""
    out: dict = {}
    for v, mv in dist.items():
        if not mv:
            continue
        for u, _, lam in equipment.incoming(v):
            out[u] = out.get(u, 0) + mv * lam
    return out


def _check_open_unit(p):
    if not 0 < p < 1:
        raise ValueError(f"probability {format_weight(p)} must lie strictly between 0 and 1")


def pascal_bernoulli_measure(
    graph: GradedGraph, p, equipment: Optional[Equipment] = None, exact: bool = True, depth: Optional[int] = None
) -> AgreeingMeasure:
    """m_n(n, k) = C(n, k) p^k (1 - p)^(n - k) on a Pascal graph."""
    p = as_exact(p) if exact else float(p)
    _check_open_unit(p)
    q = 1 - p
    equipment = equipment or central_equipment(graph, exact=exact)
    depth = graph.depth if depth is None else depth
    levels = []
    for n in range(depth + 1):
        lv = {}
        for v in graph.levels[n]:
            _, k = graph.payloads[v]
            lv[v] = comb(n, k) * p**k * q ** (n - k)
        levels.append(lv)
    return AgreeingMeasure(equipment, levels)


def mixture(measures: Sequence[AgreeingMeasure], weights: Sequence) -> AgreeingMeasure:
    if len(measures) != len(weights) or not measures:
        raise ValueError("need one weight per measure")
    eq = measures[0].equipment
    depth = min(m.depth for m in measures)
    levels = []
    for n in range(depth + 1):
        lv: dict = {}
        for m, w in zip(measures, weights):
            for v, x in m.levels[n].items():
                lv[v] = lv.get(v, 0) + w * x
        levels.append(lv)
    return AgreeingMeasure(eq, levels)


def uniform_path_measure(graph: GradedGraph, equipment: Optional[Equipment] = None) -> AgreeingMeasure:
    """Uniform distribution on paths to the top level, pushed down through the equipment.

    With the central equipment of the Pascal graph this is Bernoulli(1/2)."""
    equipment = equipment or central_equipment(graph)
    dims = graph.dims()
    top = graph.levels[-1]
    total = sum(dims[v] for v in top)
    return AgreeingMeasure.from_top(equipment, {v: Fraction(dims[v], total) for v in top})


def two_state_chain_measure(p, depth: int) -> tuple[GradedGraph, Equipment, AgreeingMeasure]:
    """Symmetric two-state chain with matrix (p q; q p) and uniform stationary law.

    Level-n vertex ``n:s`` is the state at time n.  Level-1 vertices receive a
    double edge from the root whose copy index is the state at time 0, so every
    vertex has exactly two incoming copies.
    """
    p = as_exact(p)
    _check_open_unit(p)
    q = 1 - p
    levels = [[ROOT]] + [[f"{n}:0", f"{n}:1"] for n in range(1, depth + 1)]
    edges = [Edge(ROOT, "1:0", 2), Edge(ROOT, "1:1", 2)]
    lam = {(ROOT, "1:0"): (p, q), (ROOT, "1:1"): (q, p)}
    for n in range(2, depth + 1):
        for s in (0, 1):
            for t in (0, 1):
                u, v = f"{n - 1}:{s}", f"{n}:{t}"
                edges.append(Edge(u, v))
                lam[(u, v)] = (p if s == t else q,)
    payloads = {v: int(v.split(":")[1]) for lv in levels[1:] for v in lv}
    graph = GradedGraph(levels, edges, payloads, family=f"two_state:{format_weight(p)}:{depth}")
    eq = Equipment(graph, lam)
    half = Fraction(1, 2)
    measure = AgreeingMeasure(eq, [{ROOT: Fraction(1)}] + [{v: half for v in lv} for lv in levels[1:]])
    return graph, eq, measure


def golden_lambda(exact: bool = True):
    """Positive root of x**2 + x = 1."""
    g = Q5.golden()
    return g if exact else float(g)


def fibonacci_chain_measure(depth: int, exact: bool = True) -> tuple[GradedGraph, Equipment, AgreeingMeasure]:
    """Stationary chain with matrix (lam^2 lam; 1 0), lam^2 + lam = 1.

    Stationary law is (lam, lam^2); cotransitions into 0 are lam^2 from 0 and
    lam from 1, and state 1 is entered only from 0.  Level-1 vertices carry one
    root copy per possible state at time 0, as in the two-state chain.
    """
    lam = golden_lambda(exact)
    one = Q5(1) if exact else 1.0
    lam2 = lam * lam
    levels = [[ROOT]] + [[f"{n}:0", f"{n}:1"] for n in range(1, depth + 1)]
    edges = [Edge(ROOT, "1:0", 2), Edge(ROOT, "1:1", 1)]
    weights = {(ROOT, "1:0"): (lam2, lam), (ROOT, "1:1"): (one,)}
    for n in range(2, depth + 1):
        a0, a1, b0, b1 = f"{n - 1}:0", f"{n - 1}:1", f"{n}:0", f"{n}:1"
        edges += [Edge(a0, b0), Edge(a1, b0), Edge(a0, b1)]
        weights[(a0, b0)] = (lam2,)
        weights[(a1, b0)] = (lam,)
        weights[(a0, b1)] = (one,)
    graph = GradedGraph(levels, edges, {v: int(v.split(":")[1]) for lv in levels[1:] for v in lv}, family=f"fibonacci:{depth}")
    eq = Equipment(graph, weights)
    measure = AgreeingMeasure(eq, [{ROOT: one}] + [{lv[0]: lam, lv[1]: lam2} for lv in levels[1:]])
    return graph, eq, measure


def cocycle_value(equipment: Equipment, s: Path, t: Path):
    """Product of lambda along ``t`` divided by the product along ``s``; the paths must end together."""
    graph = equipment.graph
    check_path(graph, s)
    check_path(graph, t)
    if len(s) != len(t) or path_end(graph, s) != path_end(graph, t):
        raise ValueError("paths are not cofinal")
    num = 1
    den = 1
    for u, v, c in t:
        num = num * equipment.weight(u, v, c)
    for u, v, c in s:
        den = den * equipment.weight(u, v, c)
    if is_exact(num) and is_exact(den) and not isinstance(num, Q5) and not isinstance(den, Q5):
        return Fraction(num) / Fraction(den)
    return num / den


# ---------------------------------------------------------------- sampling


class PathSampler:
    """Precomputed float tables for drawing paths from a measure."""

    def __init__(self, measure: AgreeingMeasure):
        self.measure = measure
        self._top: dict[int, tuple[list[str], np.ndarray]] = {}
        self._down: dict[str, tuple[list, np.ndarray]] = {}

    def _top_table(self, n: int):
        if n not in self._top:
            lv = self.measure.levels[n]
            verts = [v for v in self.measure.graph.levels[n] if lv.get(v, 0)]
            probs = np.array([float(lv[v]) for v in verts])
            self._top[n] = (verts, np.cumsum(probs / probs.sum()))
        return self._top[n]

    def _down_table(self, v: str):
        if v not in self._down:
            inc = self.measure.equipment.incoming(v)
            probs = np.array([float(lam) for _, _, lam in inc])
            self._down[v] = ([(u, c) for u, c, _ in inc], np.cumsum(probs / probs.sum()))
        return self._down[v]

    def sample(self, n: int, rng: np.random.Generator) -> Path:
        if n > self.measure.depth:
            raise ValueError(f"level {n} beyond measure depth {self.measure.depth}")
        verts, cdf = self._top_table(n)
        v = verts[min(int(np.searchsorted(cdf, rng.random(), side="right")), len(verts) - 1)]
        steps = []
        root = self.measure.graph.root
        while v != root:
            choices, ccdf = self._down_table(v)
            u, c = choices[min(int(np.searchsorted(ccdf, rng.random(), side="right")), len(choices) - 1)]
            steps.append((u, v, c))
            v = u
        steps.reverse()
        return tuple(steps)


def sample_path(measure: AgreeingMeasure, n: int, seed) -> Path:
    return PathSampler(measure).sample(n, np.random.default_rng(seed))


def sample_paths(measure: AgreeingMeasure, n: int, count: int, seed) -> list[Path]:
    rng = np.random.default_rng(seed)
    sampler = PathSampler(measure)
    return [sampler.sample(n, rng) for _ in range(count)]


def rwrs_words_sample(scenery_seed, walk_seed, n: int) -> Path:
    """A path in the words-of-Z graph from a random scenery and a random walk.

    The scenery is a uniform 0/1 colouring of the integers in [-n, n].  The
    walk's increments decide, step by step, whether the observed window grows
    on the right (+1) or on the left (-1); the level-k vertex is the scenery
    read on the current window of length k.  The level-1 root copy is drawn
    from the first increment.
    """
    if not 1 <= n <= WORDS_Z_MAX_DEPTH:
        raise ValueError(f"n must lie in 1..{WORDS_Z_MAX_DEPTH}")
    scenery = np.random.default_rng(scenery_seed).integers(0, 2, size=2 * n + 1)
    steps_pm = np.random.default_rng(walk_seed).integers(0, 2, size=n) * 2 - 1
    colour = lambda x: str(int(scenery[x + n]))
    lo = hi = 0
    word = colour(0)
    path = [(ROOT, word, 0 if steps_pm[0] > 0 else 1)]
    for k in range(1, n):
        if steps_pm[k] > 0:
            hi += 1
            new = word + colour(hi)
            copy = 0
        else:
            lo -= 1
            new = colour(lo) + word
            copy = 1 if new[:-1] == new[1:] else 0
        path.append((word, new, copy))
        word = new
    return tuple(path)


def words_Z_uniform_measure(depth: int) -> AgreeingMeasure:
    graph = build_words_Z(depth)
    return uniform_path_measure(graph, central_equipment(graph))


# ---------------------------------------------------------------- JSON


def measure_to_dict(measure: AgreeingMeasure, graph_ref: str = "") -> dict:
    return {
        "schema": MEASURE_SCHEMA,
        "graph": graph_ref or measure.graph.family,
        "levels": [
            {v: format_weight(lv[v]) for v in measure.graph.levels[n] if v in lv}
            for n, lv in enumerate(measure.levels)
        ],
    }


def measure_from_dict(data: dict, equipment: Equipment, exact: bool = True) -> AgreeingMeasure:
    levels = [{v: parse_weight(x, exact=exact) for v, x in lv.items()} for lv in data["levels"]]
    m = AgreeingMeasure(equipment, levels)
    m.check()
    return m


def save_measure(path, measure: AgreeingMeasure, graph_ref: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measure_to_dict(measure, graph_ref), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_measure(path, equipment: Equipment, exact: bool = True) -> AgreeingMeasure:
    with open(path, encoding="utf-8") as fh:
        return measure_from_dict(json.load(fh), equipment, exact=exact)
