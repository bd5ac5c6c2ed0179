"""Measured trees of paths, canonical codes and the delta-partition of a level.

Two representations live here:

* ``PathTree`` keeps every path explicitly (leaf payload = the full path).  It is
  what ``tree_of_paths`` returns and what brute-force oracles walk.
* ``Tree`` is hash-consed: a node is identified by its canonical code, so equal
  subtrees are one Python object.  Vertex trees of a whole level are built by a
  level-by-level recurrence and share structure.

Canonical code: a leaf serializes as ``L`` (unlabeled) or ``L|<label>``; an
internal node serializes as ``N(w1:c1;w2:c2;...)`` with children sorted by
(weight, child code) and weights in the arithmetic module's text form.  The
code is the SHA-256 hex digest of that string.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from itertools import count
from typing import Callable, Iterator, Optional

from .arith import format_weight, is_exact
from .graph import DEFAULT_PATH_CAP, ROOT, Equipment, GradedGraph, Path, SizeError, dim


class Tree:
    __slots__ = ("children", "label", "code", "shape", "rank", "uid", "leaves")

    def __repr__(self):
        kind = "leaf" if not self.children else f"rank {self.rank}"
        return f"Tree({kind}, {self.code[:10]})"

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def labeled(self) -> bool:
        return self.shape is not self


_TABLE: dict[str, Tree] = {}
_LOCK = threading.Lock()
_UIDS = count()


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _intern(code: str, build: Callable[[Tree], None]) -> Tree:
    t = _TABLE.get(code)
    if t is not None:
        return t
    node = Tree()
    node.code = code
    build(node)
    with _LOCK:
        t = _TABLE.get(code)
        if t is None:
            node.uid = next(_UIDS)
            _TABLE[code] = node
            t = node
    return t


def leaf(label=None) -> Tree:
    text = "L" if label is None else f"L|{format_weight(label)}"
    code = _digest(text)

    def build(node: Tree):
        node.children = ()
        node.label = label
        node.rank = 0
        node.leaves = 1
        node.shape = node if label is None else leaf(None)

    return _intern(code, build)


def node(children) -> Tree:
    """Internal node from (weight, subtree) pairs; the child order given is irrelevant."""
    kids = tuple(sorted(((w, t) for w, t in children), key=lambda wt: (wt[0], wt[1].code)))
    if not kids:
        raise ValueError("an internal node needs at least one child")
    ranks = {t.rank for _, t in kids}
    if len(ranks) != 1:
        raise ValueError("children of a node must share one rank")
    total = sum(w for w, _ in kids)
    if all(is_exact(w) for w, _ in kids):
        if total != 1:
            raise ValueError(f"child weights sum to {format_weight(total)}, not 1")
    elif abs(float(total) - 1.0) > 1e-9:
        raise ValueError(f"child weights sum to {float(total)}, not 1")
    if any(not w > 0 for w, _ in kids):
        raise ValueError("child weights must be positive")
    text = "N(" + ";".join(f"{format_weight(w)}:{t.code}" for w, t in kids) + ")"
    code = _digest(text)

    def build(nd: Tree):
        nd.children = kids
        nd.label = None
        nd.rank = ranks.pop() + 1
        nd.leaves = sum(t.leaves for _, t in kids)
        labeled = any(t.labeled for _, t in kids)
        nd.shape = node((w, t.shape) for w, t in kids) if labeled else nd

    return _intern(code, build)


def interned_count() -> int:
    return len(_TABLE)


def canonical_code(tree) -> str:
    """Hex code of the underlying measured tree (labels ignored)."""
    if isinstance(tree, PathTree):
        tree = tree.canonical()
    return tree.shape.code


def labeled_code(tree) -> str:
    if isinstance(tree, PathTree):
        tree = tree.canonical()
    return tree.code


def leaf_measures(tree: Tree) -> Iterator[tuple[object, object]]:
    """(leaf measure, label) for every leaf, in canonical order."""

    def rec(t: Tree, mass):
        if t.is_leaf:
            yield mass, t.label
            return
        for w, c in t.children:
            yield from rec(c, mass * w)

    yield from rec(tree, 1)


def dump(tree, indent: str = "  ") -> str:
    """Indented text rendering for debugging."""
    if isinstance(tree, PathTree):
        tree = tree.canonical()
    lines: list[str] = []

    def rec(t: Tree, depth: int, w):
        head = "" if w is None else f"{format_weight(w)} "
        if t.is_leaf:
            tail = "leaf" if t.label is None else f"leaf label={format_weight(t.label)}"
        else:
            tail = f"node {t.code[:12]}"
        lines.append(f"{indent * depth}{head}{tail}")
        for cw, c in t.children:
            rec(c, depth + 1, cw)

    rec(tree, 0, None)
    return "\n".join(lines)


def truncate(tree: Tree, horizon: int) -> Tree:
    """Keep the top ``horizon`` generations; deeper subtrees collapse to a leaf
    carrying their mean label."""
    if horizon <= 0 or tree.is_leaf:
        if tree.is_leaf:
            return tree
        mean = sum(m * lab for m, lab in leaf_measures(tree) if lab is not None)
        return leaf(mean)
    return node((w, truncate(c, horizon - 1)) for w, c in tree.children)


# ---------------------------------------------------------------- cylinder functions


@dataclass(frozen=True)
class CylinderFunction:
    """A function of the first ``depth`` steps of a path, given as a lookup table."""

    depth: int
    table: dict = field(hash=False, compare=False)
    name: str = "f"

    def __call__(self, path: Path):
        if len(path) < self.depth:
            raise ValueError(f"path of length {len(path)} shorter than function depth {self.depth}")
        return self.table[tuple(path[: self.depth])]

    def affine(self, a, b, name: Optional[str] = None) -> "CylinderFunction":
        return CylinderFunction(self.depth, {k: a * v + b for k, v in self.table.items()}, name or f"{a}*{self.name}+{b}")

    def values(self) -> set:
        return set(self.table.values())


def cylinder_from(graph: GradedGraph, depth: int, fn: Callable[[Path], object], name: str = "f") -> CylinderFunction:
    """Tabulate ``fn`` on every path prefix of length ``depth``."""
    table = {}
    for v in graph.levels[depth]:
        for p in _paths_to(graph, v):
            table[p] = fn(p)
    return CylinderFunction(depth, table, name)


def _paths_to(graph: GradedGraph, v: str) -> Iterator[Path]:
    if v == graph.root:
        yield ()
        return
    for u, c in graph.incoming(v):
        for p in _paths_to(graph, u):
            yield p + ((u, v, c),)


def constant_function(graph: GradedGraph, value=1) -> CylinderFunction:
    return cylinder_from(graph, 1, lambda p: value, name=f"const:{value}")


def first_step_indicator(graph: GradedGraph, target: Optional[str] = None) -> CylinderFunction:
    """1 if the first step enters ``target`` (default: the last level-1 vertex), else 0."""
    target = graph.levels[1][-1] if target is None else target
    if target not in graph.levels[1]:
        raise ValueError(f"{target!r} is not a level-1 vertex")
    return cylinder_from(graph, 1, lambda p: int(p[0][1] == target), name=f"first-step:{target}")


def first_copy_indicator(graph: GradedGraph, copy: int = 0) -> CylinderFunction:
    """1 if the first step uses edge copy ``copy``, else 0."""
    return cylinder_from(graph, 1, lambda p: int(p[0][2] == copy), name=f"first-copy:{copy}")


# ---------------------------------------------------------------- explicit path trees


@dataclass
class PathTree:
    """Tree of paths to a vertex.  A node stands for a path segment from
    ``vertex`` up to the root vertex of the tree; leaves sit at the graph root
    and carry the full path."""

    vertex: str
    segment: Path
    children: list = field(default_factory=list)  # (weight, PathTree)
    label: object = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def rank(self) -> int:
        return 0 if self.is_leaf else 1 + self.children[0][1].rank

    def leaves(self) -> Iterator[tuple[object, Path, object]]:
        """(conditional measure, path, label) for each leaf."""

        def rec(t: PathTree, mass):
            if t.is_leaf:
                yield mass, t.segment, t.label
                return
            for w, c in t.children:
                yield from rec(c, mass * w)

        yield from rec(self, 1)

    def canonical(self) -> Tree:
        if self.is_leaf:
            return leaf(self.label)
        return node((w, c.canonical()) for w, c in self.children)


def tree_of_paths(graph: GradedGraph, equipment: Equipment, v: str, cap: int = DEFAULT_PATH_CAP) -> PathTree:
    """All paths into ``v`` arranged as a tree rooted at ``v``; child weight = lambda of the added edge copy."""
    if dim(graph, v) > cap:
        raise SizeError(f"dim({v}) = {dim(graph, v)} exceeds cap {cap}")

    def rec(w: str, seg: Path) -> PathTree:
        t = PathTree(w, seg)
        for u, c, lam in equipment.incoming(w) if w != graph.root else ():
            t.children.append((lam, rec(u, ((u, w, c),) + seg)))
        return t

    return rec(v, ())


def attach_labels(tree: PathTree, f: CylinderFunction) -> PathTree:
    """Copy of ``tree`` with every leaf labeled by ``f`` of its path."""
    if f.depth > tree.rank:
        raise ValueError(f"function depth {f.depth} exceeds tree rank {tree.rank}")

    def rec(t: PathTree) -> PathTree:
        if t.is_leaf:
            return PathTree(t.vertex, t.segment, [], f(t.segment))
        return PathTree(t.vertex, t.segment, [(w, rec(c)) for w, c in t.children])

    return rec(tree)


# ---------------------------------------------------------------- shared vertex trees


class TreeBuilder:
    """Memoized hash-consed vertex trees for one equipped graph and optional labeling.

    Below the labeling depth k a vertex tree cannot be labeled on its own (labels
    depend on the path), so level-k trees are built from explicit paths and every
    higher level uses the recurrence T(v) = node{(lambda, T(u)) : copies u->v}.
    """

    def __init__(self, graph: GradedGraph, equipment: Equipment, f: Optional[CylinderFunction] = None, cap: int = DEFAULT_PATH_CAP):
        self.graph = graph
        self.equipment = equipment
        self.f = f
        self.cap = cap
        self._memo: dict[str, Tree] = {}
        self._filled = self.base_level - 1

    @property
    def base_level(self) -> int:
        return 0 if self.f is None else self.f.depth

    def tree(self, v: str) -> Tree:
        t = self._memo.get(v)
        if t is not None:
            return t
        n = self.graph.level_of[v]
        if n < self.base_level:
            raise ValueError(f"labeled trees need level >= {self.base_level}, got {n}")
        if self.f is None and n == 0:
            t = leaf()
        elif n == self.base_level:
            t = attach_labels(tree_of_paths(self.graph, self.equipment, v, self.cap), self.f).canonical()
        else:
            # fill lower levels bottom-up so deep graphs never recurse deeply
            while self._filled < n - 1:
                for u in self.graph.levels[self._filled + 1]:
                    self.tree(u)
                self._filled += 1
            t = node((lam, self._memo[u]) for u, _, lam in self.equipment.incoming(v))
        self._memo[v] = t
        return t

    def level(self, n: int) -> dict[str, Tree]:
        return {v: self.tree(v) for v in self.graph.levels[n]}


def vertex_trees(graph: GradedGraph, equipment: Equipment, n: int, f: Optional[CylinderFunction] = None) -> dict[str, Tree]:
    return TreeBuilder(graph, equipment, f).level(n)


def delta_partition(graph: GradedGraph, equipment: Equipment, n: int, builder: Optional[TreeBuilder] = None) -> list[list[str]]:
    """Level-n vertices grouped by measured-tree code, cells in order of first appearance."""
    builder = builder or TreeBuilder(graph, equipment)
    cells: dict[str, list[str]] = {}
    for v in graph.levels[n]:
        cells.setdefault(builder.tree(v).shape.code, []).append(v)
    return list(cells.values())


def level_codes(graph: GradedGraph, equipment: Equipment, n: int, builder: Optional[TreeBuilder] = None) -> dict[str, str]:
    builder = builder or TreeBuilder(graph, equipment)
    return {v: builder.tree(v).code for v in graph.levels[n]}


__all__ = [
    "ROOT",
    "Tree",
    "leaf",
    "node",
    "canonical_code",
    "labeled_code",
    "leaf_measures",
    "dump",
    "truncate",
    "CylinderFunction",
    "cylinder_from",
    "constant_function",
    "first_step_indicator",
    "first_copy_indicator",
    "PathTree",
    "tree_of_paths",
    "attach_labels",
    "TreeBuilder",
    "vertex_trees",
    "delta_partition",
    "level_codes",
    "interned_count",
]
