"""Minimal-model quotient: merge vertices of a level whose measured trees coincide."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .graph import ROOT, Edge, Equipment, GradedGraph
from .measures import AgreeingMeasure
from .trees import TreeBuilder


class RepresentativeError(AssertionError):
    """Two code-equal vertices disagreed on their grouped incoming structure."""


@dataclass
class MinimalizationResult:
    graph: GradedGraph
    equipment: Equipment
    vertex_map: dict  # original vertex -> quotient vertex
    codes: dict  # quotient vertex -> measured-tree code

    def classes(self) -> dict:
        out: dict = {}
        for v, q in self.vertex_map.items():
            out.setdefault(q, []).append(v)
        return out


def _grouped_incoming(equipment: Equipment, v: str, vmap: dict) -> tuple:
    """Incoming copies of v grouped by predecessor class, weights sorted within a group."""
    groups: dict = {}
    for u, _, lam in equipment.incoming(v):
        groups.setdefault(vmap[u], []).append(lam)
    return tuple(sorted((q, tuple(sorted(ws))) for q, ws in groups.items()))


def minimize(graph: GradedGraph, equipment: Equipment, depth: Optional[int] = None) -> MinimalizationResult:
    depth = graph.depth if depth is None else min(depth, graph.depth)
    builder = TreeBuilder(graph, equipment)
    vmap: dict = {graph.root: ROOT}
    levels: list = [[ROOT]]
    codes: dict = {ROOT: builder.tree(graph.root).code}
    edges: list = []
    lam: dict = {}
    for n in range(1, depth + 1):
        classes: dict = {}
        for v in graph.levels[n]:
            classes.setdefault(builder.tree(v).code, []).append(v)
        level = []
        for i, (code, members) in enumerate(classes.items()):
            q = f"{n}:{i}"
            level.append(q)
            codes[q] = code
            for v in members:
                vmap[v] = q
        for code, members in classes.items():
            q = vmap[members[0]]
            structure = _grouped_incoming(equipment, members[0], vmap)
            for other in members[1:]:
                if _grouped_incoming(equipment, other, vmap) != structure:
                    raise RepresentativeError(f"{other} and {members[0]} share a code but not their incoming structure")
            for p, ws in structure:
                edges.append(Edge(p, q, len(ws)))
                lam[(p, q)] = ws
        levels.append(level)
    qgraph = GradedGraph(levels, edges, {}, family=f"minimal({graph.family})")
    return MinimalizationResult(qgraph, Equipment(qgraph, lam), vmap, codes)


def is_minimal(graph: GradedGraph, equipment: Equipment, depth: Optional[int] = None) -> bool:
    depth = graph.depth if depth is None else min(depth, graph.depth)
    builder = TreeBuilder(graph, equipment)
    for n in range(1, depth + 1):
        codes = [builder.tree(v).code for v in graph.levels[n]]
        if len(set(codes)) != len(codes):
            return False
    return True


def pushforward_measure(result: MinimalizationResult, measure: AgreeingMeasure) -> AgreeingMeasure:
    depth = min(measure.depth, result.graph.depth)
    levels = []
    for n in range(depth + 1):
        lv: dict = {}
        for v, x in measure.levels[n].items():
            q = result.vertex_map[v]
            lv[q] = lv.get(q, 0) + x
        levels.append(lv)
    return AgreeingMeasure(result.equipment, levels)


def level_type_masses(graph: GradedGraph, equipment: Equipment, measure: AgreeingMeasure, n: int) -> dict:
    """Measured-tree code -> total level-n mass of vertices with that code."""
    builder = TreeBuilder(graph, equipment)
    out: dict = {}
    for v, x in measure.levels[n].items():
        c = builder.tree(v).shape.code
        out[c] = out.get(c, 0) + x
    return out
