"""Graded multigraphs with a single root, cotransition equipments, and classic constructors."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .arith import as_exact, format_weight, is_exact, parse_weight

ROOT = "∅"
GRAPH_SCHEMA = "filtra.graph/1"
DEFAULT_PATH_CAP = 2**16
ORDERED_PAIRS_MAX_DEPTH = 5
WORDS_Z_MAX_DEPTH = 24


class SizeError(RuntimeError):
    """A computation would exceed a configured size cap."""


class ValidationError(ValueError):
    """Structural invariant violated by an input graph, equipment or measure."""


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    mult: int = 1


# One edge copy: (source vertex, target vertex, copy index).
Step = tuple
# A path from the root: steps ordered from level 0 upward.
Path = tuple


class GradedGraph:
    """Levels of vertex ids plus multiplicity-weighted edges between adjacent levels.

    Instances are treated as immutable once constructed.
    """

    def __init__(
        self,
        levels: list[list[str]],
        edges: Iterable[Edge],
        payloads: Optional[dict] = None,
        family: str = "custom",
    ):
        self.levels: list[list[str]] = [list(lv) for lv in levels]
        self.payloads: dict = dict(payloads or {})
        self.family = family
        self.level_of: dict[str, int] = {}
        for n, lv in enumerate(self.levels):
            for v in lv:
                if v in self.level_of:
                    raise ValidationError(f"duplicate vertex id {v!r}")
                self.level_of[v] = n
        merged: dict[tuple[str, str], int] = {}
        for e in edges:
            key = (e.src, e.dst)
            merged[key] = merged.get(key, 0) + int(e.mult)
        self.edges: list[Edge] = [Edge(s, d, m) for (s, d), m in merged.items()]
        self.preds: dict[str, list[tuple[str, int]]] = {v: [] for v in self.level_of}
        self.succs: dict[str, list[tuple[str, int]]] = {v: [] for v in self.level_of}
        for e in self.edges:
            if e.src not in self.level_of or e.dst not in self.level_of:
                raise ValidationError(f"edge {e.src!r}->{e.dst!r} references unknown vertex")
            self.preds[e.dst].append((e.src, e.mult))
            self.succs[e.src].append((e.dst, e.mult))
        # deterministic predecessor order: level order of the source
        order = {v: i for lv in self.levels for i, v in enumerate(lv)}
        for v in self.preds:
            self.preds[v].sort(key=lambda t: order[t[0]])
            self.succs[v].sort(key=lambda t: order[t[0]])
        self._order = order
        self._dims: Optional[dict[str, int]] = None
        self.check()

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self) -> str:
        return self.levels[0][0]

    def index_in_level(self, v: str) -> int:
        return self._order[v]

    def check(self) -> None:
        if not self.levels or len(self.levels[0]) != 1:
            raise ValidationError("level 0 must contain exactly one vertex")
        for e in self.edges:
            if e.mult < 1:
                raise ValidationError(f"edge {e.src!r}->{e.dst!r} has multiplicity {e.mult}")
            if self.level_of[e.dst] != self.level_of[e.src] + 1:
                raise ValidationError(f"edge {e.src!r}->{e.dst!r} does not join adjacent levels")
        for n, lv in enumerate(self.levels):
            for v in lv:
                if n >= 1 and not self.preds[v]:
                    raise ValidationError(f"vertex {v!r} at level {n} has no incoming edge")
                if n < self.depth and not self.succs[v]:
                    raise ValidationError(f"vertex {v!r} at level {n} has no outgoing edge")

    def incoming(self, v: str) -> list[tuple[str, int]]:
        """Incoming edge copies of ``v`` as (predecessor, copy index) pairs."""
        return [(u, c) for u, m in self.preds[v] for c in range(m)]

    def in_degree(self, v: str) -> int:
        return sum(m for _, m in self.preds[v])

    def out_degree(self, v: str) -> int:
        return sum(m for _, m in self.succs[v])

    def mult(self, u: str, v: str) -> int:
        for w, m in self.preds[v]:
            if w == u:
                return m
        return 0

    def dims(self) -> dict[str, int]:
        if self._dims is None:
            d: dict[str, int] = {self.root: 1}
            for lv in self.levels[1:]:
                for v in lv:
                    d[v] = sum(d[u] * m for u, m in self.preds[v])
            self._dims = d
        return self._dims

    def truncate(self, depth: int) -> "GradedGraph":
        if depth >= self.depth:
            return self
        keep = set(itertools.chain.from_iterable(self.levels[: depth + 1]))
        return GradedGraph(
            self.levels[: depth + 1],
            [e for e in self.edges if e.dst in keep],
            {v: p for v, p in self.payloads.items() if v in keep},
            self.family,
        )

    def __repr__(self):
        sizes = [len(lv) for lv in self.levels]
        return f"GradedGraph({self.family}, level sizes {sizes})"


def dim(graph: GradedGraph, v: str) -> int:
    """Number of root-to-``v`` paths, counting edge multiplicities."""
    if v not in graph.level_of:
        raise KeyError(f"unknown vertex {v!r}")
    return graph.dims()[v]


@dataclass
class Equipment:
    """Cotransition probabilities: ``lam[(u, v)]`` holds one weight per edge copy u->v."""

    graph: GradedGraph
    lam: dict = field(default_factory=dict)

    def weight(self, u: str, v: str, copy: int):
        return self.lam[(u, v)][copy]

    def incoming(self, v: str) -> list[tuple[str, int, object]]:
        """(predecessor, copy, weight) for every incoming copy of ``v``."""
        out = []
        for u, m in self.graph.preds[v]:
            ws = self.lam[(u, v)]
            for c in range(m):
                out.append((u, c, ws[c]))
        return out

    @property
    def exact(self) -> bool:
        return all(is_exact(w) for ws in self.lam.values() for w in ws)


def central_equipment(graph: GradedGraph, exact: bool = True) -> Equipment:
    """lambda(u->v copy) = dim(u) / sum of dim over all incoming copies of v."""
    dims = graph.dims()
    lam = {}
    for lv in graph.levels[1:]:
        for v in lv:
            total = dims[v]
            for u, m in graph.preds[v]:
                w = Fraction(dims[u], total) if exact else dims[u] / total
                lam[(u, v)] = (w,) * m
    return Equipment(graph, lam)


@dataclass(frozen=True)
class Violation:
    vertex: str
    kind: str
    detail: str

    def as_dict(self) -> dict:
        return {"vertex": self.vertex, "kind": self.kind, "detail": self.detail}


def validate_equipment(graph: GradedGraph, equipment: Equipment, tol: float = 1e-12) -> Optional[Violation]:
    """Return the first violated equipment invariant, or None when everything checks out."""
    for lv in graph.levels[1:]:
        for v in lv:
            total = 0
            exact = True
            for u, m in graph.preds[v]:
                ws = equipment.lam.get((u, v))
                if ws is None:
                    return Violation(v, "missing weight", f"no lambda for edge {u}->{v}")
                if len(ws) != m:
                    return Violation(v, "copy count", f"edge {u}->{v} has {m} copies but {len(ws)} weights")
                for w in ws:
                    if not w > 0:
                        return Violation(v, "zero weight", f"non-positive lambda {format_weight(w)} on {u}->{v}")
                    if w > 1:
                        return Violation(v, "weight above one", f"lambda {format_weight(w)} on {u}->{v}")
                    exact = exact and is_exact(w)
                    total = total + w
            ok = total == 1 if exact else abs(float(total) - 1.0) <= tol
            if not ok:
                return Violation(v, "not normalized", f"incoming lambda sums to {format_weight(total)}")
    extra = set(equipment.lam) - {(e.src, e.dst) for e in graph.edges}
    if extra:
        u, v = sorted(extra)[0]
        return Violation(v, "unknown edge", f"lambda stored for absent edge {u}->{v}")
    return None


def enumerate_paths(graph: GradedGraph, v: str, cap: int = DEFAULT_PATH_CAP) -> list[Path]:
    """All root-to-``v`` paths as tuples of (src, dst, copy) steps ordered upward."""
    d = dim(graph, v)
    if d > cap:
        raise SizeError(f"dim({v}) = {d} exceeds path cap {cap}")

    def rec(w: str) -> Iterator[Path]:
        if w == graph.root:
            yield ()
            return
        for u, c in graph.incoming(w):
            for p in rec(u):
                yield p + ((u, w, c),)

    return list(rec(v))


def path_end(graph: GradedGraph, path: Path) -> str:
    return path[-1][1] if path else graph.root


def check_path(graph: GradedGraph, path: Path) -> None:
    """Raise ValidationError unless ``path`` is a valid root-anchored path."""
    prev = graph.root
    for i, step in enumerate(path):
        if len(step) != 3:
            raise ValidationError(f"step {i} is not a (src, dst, copy) triple")
        u, v, c = step
        if u != prev:
            raise ValidationError(f"step {i} starts at {u!r}, expected {prev!r}")
        m = graph.mult(u, v) if v in graph.level_of else 0
        if not 0 <= c < m:
            raise ValidationError(f"step {i}: no copy {c} of edge {u!r}->{v!r}")
        prev = v


# ---------------------------------------------------------------- constructors


def build_pascal(depth: int) -> GradedGraph:
    if depth < 1:
        raise ValueError("depth must be at least 1")
    vid = lambda n, k: ROOT if n == 0 else f"{n},{k}"
    levels = [[vid(n, k) for k in range(n + 1)] for n in range(depth + 1)]
    edges = []
    for n in range(1, depth + 1):
        for k in range(n + 1):
            if k >= 1:
                edges.append(Edge(vid(n - 1, k - 1), vid(n, k)))
            if k <= n - 1:
                edges.append(Edge(vid(n - 1, k), vid(n, k)))
    payloads = {vid(n, k): (n, k) for n in range(depth + 1) for k in range(n + 1)}
    return GradedGraph(levels, edges, payloads, family=f"pascal:{depth}")


def build_glimm(arities: list[int]) -> GradedGraph:
    arities = list(arities)
    if not arities:
        raise ValueError("need at least one arity")
    if any(r < 2 for r in arities):
        raise ValueError("arities must be at least 2")
    levels = [[ROOT]] + [[str(n)] for n in range(1, len(arities) + 1)]
    edges = [Edge(levels[n - 1][0], levels[n][0], r) for n, r in enumerate(arities, start=1)]
    payloads = {levels[n][0]: n for n in range(len(levels))}
    return GradedGraph(levels, edges, payloads, family="glimm:" + ",".join(map(str, arities)))


def _partitions(n: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def rec(rest: int, cap: int, acc: tuple[int, ...]):
        if rest == 0:
            out.append(acc)
            return
        for part in range(min(rest, cap), 0, -1):
            rec(rest - part, part, acc + (part,))

    rec(n, n, ())
    return out


def build_young(depth: int) -> GradedGraph:
    if depth < 1:
        raise ValueError("depth must be at least 1")
    vid = lambda lam: ROOT if not lam else ",".join(map(str, lam))
    levels, edges, payloads = [], [], {}
    for n in range(depth + 1):
        parts = _partitions(n)
        levels.append([vid(p) for p in parts])
        for p in parts:
            payloads[vid(p)] = p
            for i in range(len(p)):
                # remove one box from row i if the result is still a partition
                if i + 1 < len(p) and p[i] - 1 < p[i + 1]:
                    continue
                q = list(p)
                q[i] -= 1
                q = tuple(x for x in q if x > 0)
                edges.append(Edge(vid(q), vid(p)))
    return GradedGraph(levels, edges, payloads, family=f"young:{depth}")


def build_ordered_pairs(depth: int) -> GradedGraph:
    """Level 1: two vertices, each with a double edge from the root.  Level n >= 2:
    ordered pairs (a, b) of level n-1 vertices, with one edge copy to each component."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if depth > ORDERED_PAIRS_MAX_DEPTH:
        raise SizeError(f"ordered_pairs depth {depth} exceeds cap {ORDERED_PAIRS_MAX_DEPTH}")
    levels = [[ROOT], ["1:0", "1:1"]]
    edges = [Edge(ROOT, "1:0", 2), Edge(ROOT, "1:1", 2)]
    payloads: dict = {ROOT: (), "1:0": 0, "1:1": 1}
    for n in range(2, depth + 1):
        prev = levels[-1]
        size = len(prev)
        cur = []
        for a in range(size):
            for b in range(size):
                v = f"{n}:{a * size + b}"
                cur.append(v)
                payloads[v] = (prev[a], prev[b])
                edges.append(Edge(prev[a], v))
                edges.append(Edge(prev[b], v))
        levels.append(cur)
    return GradedGraph(levels, edges, payloads, family=f"ordered_pairs:{depth}")


def build_words_Z(depth: int) -> GradedGraph:
    """Binary words of length n; each word is joined to its prefix and its suffix of length n-1."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if depth > WORDS_Z_MAX_DEPTH:
        raise SizeError(f"words_Z depth {depth} exceeds cap {WORDS_Z_MAX_DEPTH}")
    levels = [[ROOT], ["0", "1"]]
    edges = [Edge(ROOT, "0", 2), Edge(ROOT, "1", 2)]
    for n in range(2, depth + 1):
        words = ["".join(bits) for bits in itertools.product("01", repeat=n)]
        levels.append(words)
        for w in words:
            edges.append(Edge(w[:-1], w))
            edges.append(Edge(w[1:], w))
    payloads = {w: w for lv in levels[1:] for w in lv}
    return GradedGraph(levels, edges, payloads, family=f"words_Z:{depth}")


FAMILIES = ("pascal", "glimm", "young", "ordered_pairs", "words_Z")


def build_family(spec: str, depth: Optional[int] = None) -> GradedGraph:
    """Build from ``name[:depth]``; Glimm takes ``glimm:r1,r2,...`` or ``glimm:arity`` with depth."""
    name, _, arg = spec.partition(":")
    if name == "glimm":
        if arg and "," in arg:
            return build_glimm([int(x) for x in arg.split(",")])
        arity = int(arg) if arg else 2
        if depth is None:
            raise ValueError("glimm needs a depth")
        return build_glimm([arity] * depth)
    if arg:
        depth = int(arg)
    if depth is None:
        raise ValueError(f"family {name!r} needs a depth")
    builders = {
        "pascal": build_pascal,
        "young": build_young,
        "ordered_pairs": build_ordered_pairs,
        "words_Z": build_words_Z,
    }
    if name not in builders:
        raise ValueError(f"unknown family {name!r}; expected one of {FAMILIES}")
    return builders[name](depth)


# ---------------------------------------------------------------- JSON


def _payload_to_json(p):
    if isinstance(p, tuple):
        return [_payload_to_json(x) for x in p]
    return p


def _payload_from_json(p):
    if isinstance(p, list):
        return tuple(_payload_from_json(x) for x in p)
    return p


def graph_to_dict(graph: GradedGraph, equipment: Optional[Equipment] = None) -> dict:
    edges = []
    for e in sorted(graph.edges, key=lambda e: (graph.level_of[e.dst], graph.index_in_level(e.dst), graph.index_in_level(e.src))):
        rec = {"from": e.src, "to": e.dst, "mult": e.mult}
        if equipment is not None:
            rec["lambda"] = [format_weight(w) for w in equipment.lam[(e.src, e.dst)]]
        edges.append(rec)
    out = {"schema": GRAPH_SCHEMA, "family": graph.family, "levels": graph.levels, "edges": edges}
    if graph.payloads:
        out["payloads"] = {v: _payload_to_json(p) for v, p in graph.payloads.items()}
    return out


def graph_from_dict(data: dict, exact: bool = True) -> tuple[GradedGraph, Optional[Equipment]]:
    if "levels" not in data or "edges" not in data:
        raise ValidationError("graph JSON needs 'levels' and 'edges'")
    edges = [Edge(r["from"], r["to"], int(r.get("mult", 1))) for r in data["edges"]]
    payloads = {v: _payload_from_json(p) for v, p in data.get("payloads", {}).items()}
    graph = GradedGraph(data["levels"], edges, payloads, data.get("family", "custom"))
    with_lambda = [r for r in data["edges"] if "lambda" in r]
    if not with_lambda:
        return graph, None
    if len(with_lambda) != len(data["edges"]):
        raise ValidationError("lambda must be given on every edge or on none")
    lam: dict = {}
    for r in data["edges"]:
        key = (r["from"], r["to"])
        lam[key] = lam.get(key, ()) + tuple(parse_weight(w, exact=exact) for w in r["lambda"])
    eq = Equipment(graph, lam)
    bad = validate_equipment(graph, eq)
    if bad is not None:
        raise ValidationError(f"equipment invalid at {bad.vertex}: {bad.kind} ({bad.detail})")
    return graph, eq


def save_graph(path, graph: GradedGraph, equipment: Optional[Equipment] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(graph, equipment), fh, ensure_ascii=False, indent=1)
        fh.write("\n")


def load_graph(path, exact: bool = True) -> tuple[GradedGraph, Optional[Equipment]]:
    with open(path, encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh), exact=exact)


def equipment_from_weights(graph: GradedGraph, weights: dict) -> Equipment:
    """Build an equipment from ``{(u, v): [w, ...]}`` with weights coerced to exact values."""
    return Equipment(graph, {k: tuple(as_exact(w) for w in ws) for k, ws in weights.items()})
