"""Finite filtrations, their Markov realization as an equipped graph, and finite isomorphism."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from .arith import as_exact, format_weight, parse_weight
from .graph import ROOT, Edge, Equipment, GradedGraph, ValidationError, enumerate_paths
from .measures import AgreeingMeasure
from .trees import Tree, leaf, node

FILTRATION_SCHEMA = "filtra.filtration/1"


@dataclass
class FiniteFiltration:
    """Atoms with positive masses and a decreasing chain of partitions xi_0 (singletons) .. xi_N."""

    atoms: list  # [(id, mass)]
    partitions: list  # partitions[k] = list of blocks (lists of atom ids)
    labels: Optional[dict] = None

    def __post_init__(self):
        self.atoms = [(str(a), as_exact(m)) for a, m in self.atoms]
        self.partitions = [[[str(a) for a in block] for block in part] for part in self.partitions]
        self.validate()

    @property
    def depth(self) -> int:
        return len(self.partitions) - 1

    @property
    def mass(self) -> dict:
        return dict(self.atoms)

    def validate(self) -> None:
        ids = [a for a, _ in self.atoms]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate atom ids")
        if any(not m > 0 for _, m in self.atoms):
            raise ValidationError("atom masses must be positive")
        if sum(m for _, m in self.atoms) != 1:
            raise ValidationError("atom masses must sum to 1")
        if not self.partitions:
            raise ValidationError("need at least the singleton partition")
        universe = set(ids)
        owner_prev = None
        for k, part in enumerate(self.partitions):
            owner: dict = {}
            for i, block in enumerate(part):
                if not block:
                    raise ValidationError(f"empty block in partition {k}")
                for a in block:
                    if a in owner:
                        raise ValidationError(f"atom {a} appears twice in partition {k}")
                    owner[a] = i
            if set(owner) != universe:
                raise ValidationError(f"partition {k} does not cover the atoms exactly")
            if k == 0 and any(len(b) != 1 for b in part):
                raise ValidationError("partition 0 must consist of singletons")
            if owner_prev is not None:
                for block in self.partitions[k - 1]:
                    if len({owner[a] for a in block}) != 1:
                        raise ValidationError(f"partition {k - 1} does not refine partition {k}")
            owner_prev = owner
        if self.labels is not None and set(self.labels) != universe:
            raise ValidationError("labels must be given for every atom")

    def block_trees(self) -> list:
        """Per level k, a list of (block, mass, Tree) for every xi_k block."""
        mass = self.mass
        out = []
        tree_of: dict = {}
        for k, part in enumerate(self.partitions):
            level = []
            for block in part:
                key = frozenset(block)
                bm = sum(mass[a] for a in block)
                if k == 0:
                    a = block[0]
                    t = leaf(None if self.labels is None else self.labels[a])
                else:
                    subs = [b for b in self.partitions[k - 1] if b[0] in key]
                    t = node((sum(mass[a] for a in b) / bm, tree_of[frozenset(b)]) for b in subs)
                tree_of[key] = t
                level.append((block, bm, t))
            out.append(level)
        return out

    def invariant(self) -> list:
        """Per level: measured-tree code -> total mass of the blocks having it."""
        out = []
        for level in self.block_trees():
            agg: dict = {}
            for _, bm, t in level:
                agg[t.code] = agg.get(t.code, 0) + bm
            out.append(agg)
        return out


def finite_isomorphism_check(a: FiniteFiltration, b) -> bool:
    """True iff the two filtrations carry the same type-to-mass distribution at every level."""
    if isinstance(b, Realization):
        b = b.as_filtration()
    if a.depth != b.depth:
        raise ValueError(f"depth mismatch: {a.depth} vs {b.depth}")
    return a.invariant() == b.invariant()


@dataclass
class Realization:
    graph: GradedGraph
    equipment: Equipment
    measure: AgreeingMeasure
    atom_paths: dict  # atom id -> path
    depth: int
    labels: Optional[dict] = None

    def as_filtration(self) -> FiniteFiltration:
        if self.depth == 0:
            atoms = [(a, self.measure.cylinder_prob(p)) for a, p in self.atom_paths.items()]
            return FiniteFiltration(atoms, [[[a] for a, _ in atoms]], self.labels)
        f = graph_filtration(self.graph, self.equipment, self.measure, self.depth)
        if self.labels is not None:
            by_path = {repr(p): a for a, p in self.atom_paths.items()}
            f = FiniteFiltration(f.atoms, f.partitions, {pid: self.labels[by_path[pid]] for pid, _ in f.atoms})
        return f


def realize(filtration: FiniteFiltration) -> Realization:
    """Markov realization: level-k vertices are the types of xi_k blocks (one vertex per
    block at the top level), and edge copies rank sub-blocks of a block by decreasing mass."""
    filtration.validate()
    mass = filtration.mass
    labels = filtration.labels
    n_top = filtration.depth

    if n_top == 0:
        levels = [[ROOT], [f"1:{i}" for i in range(len(filtration.atoms))]]
        edges = [Edge(ROOT, v) for v in levels[1]]
        graph = GradedGraph(levels, edges, {}, family="realized:0")
        eq = Equipment(graph, {(ROOT, v): (Fraction(1),) for v in levels[1]})
        measure = AgreeingMeasure(eq, [{ROOT: Fraction(1)}, {v: m for v, (_, m) in zip(levels[1], filtration.atoms)}])
        paths = {a: ((ROOT, v, 0),) for v, (a, _) in zip(levels[1], filtration.atoms)}
        return Realization(graph, eq, measure, paths, 0, labels)

    trees = filtration.block_trees()
    vertex_of: dict = {}  # (k, frozenset(block)) -> vertex id
    levels: list = [[ROOT]]
    level_mass: list = [{ROOT: Fraction(1)}]
    for a, _ in filtration.atoms:
        vertex_of[(0, frozenset([a]))] = ROOT
    for k in range(1, n_top + 1):
        ids: dict = {}
        lv_mass: dict = {}
        for j, (block, bm, t) in enumerate(trees[k]):
            key = t.code if k < n_top else j
            if key not in ids:
                ids[key] = f"{k}:{len(ids)}"
            v = ids[key]
            vertex_of[(k, frozenset(block))] = v
            lv_mass[v] = lv_mass.get(v, 0) + bm
        levels.append(list(ids.values()))
        level_mass.append(lv_mass)

    def sub_order(k: int, block: Sequence[str]):
        """Sub-blocks of a xi_k block grouped by vertex, each group sorted into copy order."""
        key = frozenset(block)
        bm = sum(mass[a] for a in block)
        groups: dict = {}
        for b in filtration.partitions[k - 1]:
            if b[0] in key:
                w = sum(mass[a] for a in b) / bm
                u = vertex_of[(k - 1, frozenset(b))]
                lab = "" if (k > 1 or labels is None) else format_weight(labels[b[0]])
                groups.setdefault(u, []).append((-w, lab, min(b), b))
        for u in groups:
            groups[u].sort()
        return groups

    edges: list = []
    lam: dict = {}
    copy_of: dict = {}  # (k-1, frozenset(sub-block)) -> copy index
    done: set = set()
    for k in range(1, n_top + 1):
        for block, _, _ in trees[k]:
            v = vertex_of[(k, frozenset(block))]
            groups = sub_order(k, block)
            for u, items in groups.items():
                for c, (_, _, _, b) in enumerate(items):
                    copy_of[(k - 1, frozenset(b))] = c
                if v in done:
                    if lam[(u, v)] != tuple(-w for w, *_ in items):
                        raise AssertionError(f"blocks of type {v} disagree on cotransitions")
                    continue
                edges.append(Edge(u, v, len(items)))
                lam[(u, v)] = tuple(-w for w, *_ in items)
            done.add(v)

    graph = GradedGraph(levels, edges, {}, family=f"realized:{n_top}")
    eq = Equipment(graph, lam)
    measure = AgreeingMeasure(eq, level_mass)

    owner = [{a: frozenset(block) for block in part for a in block} for part in filtration.partitions]
    paths: dict = {}
    for a, _ in filtration.atoms:
        steps = []
        for k in range(1, n_top + 1):
            lower = owner[k - 1][a]
            steps.append((vertex_of[(k - 1, lower)], vertex_of[(k, owner[k][a])], copy_of[(k - 1, lower)]))
        paths[a] = tuple(steps)
    return Realization(graph, eq, measure, paths, n_top, labels)


def graph_filtration(graph: GradedGraph, equipment: Equipment, measure: AgreeingMeasure, depth: int) -> FiniteFiltration:
    """Tail filtration of the paths to level ``depth``: xi_k groups paths that agree from level k on."""
    atoms, keys = [], []
    for v in graph.levels[depth]:
        if not measure.levels[depth].get(v, 0):
            continue
        for p in enumerate_paths(graph, v):
            pr = measure.cylinder_prob(p)
            if pr:
                atoms.append((repr(p), pr))
                keys.append(p)
    partitions = []
    for k in range(depth + 1):
        blocks: dict = {}
        for (aid, _), p in zip(atoms, keys):
            if k == 0:
                tail = (aid,)
            elif k == depth:
                tail = (p[-1][1],)
            else:
                tail = (p[k - 1][1], p[k:])
            blocks.setdefault(tail, []).append(aid)
        partitions.append(list(blocks.values()))
    return FiniteFiltration(atoms, partitions)


def bernoulli_filtration(probs: Sequence, depth: int) -> FiniteFiltration:
    """Words of length ``depth`` with i.i.d. letters; xi_k groups words agreeing in positions >= k."""
    probs = [as_exact(p) for p in probs]
    if sum(probs) != 1 or any(not p > 0 for p in probs):
        raise ValueError("probabilities must be positive and sum to 1")
    atoms = []
    for word in product(range(len(probs)), repeat=depth):
        m = Fraction(1)
        for x in word:
            m *= probs[x]
        atoms.append(("".join(map(str, word)), m))
    partitions = []
    for k in range(depth + 1):
        blocks: dict = {}
        for w, _ in atoms:
            blocks.setdefault(w[k:], []).append(w)
        partitions.append(list(blocks.values()))
    return FiniteFiltration(atoms, partitions)


def random_filtration(seed, depth: int = 4, max_atoms: int = 64, mass_values: Sequence[int] = (1, 2, 3)) -> FiniteFiltration:
    """Seeded random hierarchy: small integer masses normalized, blocks merged in groups of 1 to 3."""
    rng = random.Random(seed)
    n_atoms = rng.randint(max(2, depth), max_atoms)
    raw = [rng.choice(mass_values) for _ in range(n_atoms)]
    total = sum(raw)
    atoms = [(f"a{i}", Fraction(x, total)) for i, x in enumerate(raw)]
    partitions = [[[a] for a, _ in atoms]]
    for _ in range(depth):
        prev = list(partitions[-1])
        rng.shuffle(prev)
        merged, i = [], 0
        while i < len(prev):
            size = rng.randint(1, 3)
            merged.append([a for b in prev[i : i + size] for a in b])
            i += size
        partitions.append(merged)
    return FiniteFiltration(atoms, partitions)


def filtration_to_dict(f: FiniteFiltration) -> dict:
    out = {
        "schema": FILTRATION_SCHEMA,
        "atoms": [{"id": a, "mass": format_weight(m)} for a, m in f.atoms],
        "partitions": f.partitions,
    }
    if f.labels is not None:
        out["labels"] = {a: format_weight(x) for a, x in f.labels.items()}
    return out


def filtration_from_dict(data: dict) -> FiniteFiltration:
    atoms = [(r["id"], parse_weight(r["mass"])) for r in data["atoms"]]
    labels = data.get("labels")
    if labels is not None:
        labels = {a: parse_weight(x) for a, x in labels.items()}
    return FiniteFiltration(atoms, data["partitions"], labels)


def load_filtration(path) -> FiniteFiltration:
    with open(path, encoding="utf-8") as fh:
        return filtration_from_dict(json.load(fh))
