"""Projections between level simplices, Omega_m point clouds and the extremality spread."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .graph import Equipment, SizeError
from .measures import AgreeingMeasure, project_level

OMEGA_POINT_CAP = 200_000


def project(equipment: Equipment, n: int, m: int, point: dict) -> dict:
    """Exact image of a level-n distribution at level m (m <= n)."""
    if m > n:
        raise ValueError(f"cannot project level {n} up to level {m}")
    graph = equipment.graph
    for v in point:
        if graph.level_of.get(v) != n:
            raise ValueError(f"{v!r} is not a level-{n} vertex")
    out = dict(point)
    for _ in range(n - m):
        out = project_level(equipment, out)
    return out


def step_matrix(equipment: Equipment, n: int) -> sparse.csr_matrix:
    """Row v (level n) holds the float cotransition weights onto level n-1."""
    graph = equipment.graph
    below = {u: i for i, u in enumerate(graph.levels[n - 1])}
    rows, cols, vals = [], [], []
    for i, v in enumerate(graph.levels[n]):
        for u, _, lam in equipment.incoming(v):
            rows.append(i)
            cols.append(below[u])
            vals.append(float(lam))
    shape = (len(graph.levels[n]), len(graph.levels[n - 1]))
    return sparse.csr_matrix((vals, (rows, cols)), shape=shape)


def projection_matrix(equipment: Equipment, n: int, m: int) -> np.ndarray:
    """Dense float matrix whose row v is the projection of delta_v from level n to level m."""
    if m > n:
        raise ValueError(f"cannot project level {n} up to level {m}")
    size = len(equipment.graph.levels[n])
    mat = np.eye(size)
    for k in range(n, m, -1):
        mat = np.asarray((step_matrix(equipment, k).T @ mat.T).T)
    return mat


def omega_points(equipment: Equipment, m: int, N: int) -> np.ndarray:
    """Rows are the level-m images of the level-N vertex masses; their hull contains Omega_m."""
    if N <= m:
        raise ValueError("need N > m")
    if len(equipment.graph.levels[N]) > OMEGA_POINT_CAP:
        raise SizeError(f"level {N} exceeds the point-cloud cap {OMEGA_POINT_CAP}")
    return projection_matrix(equipment, N, m)


def hull_contains(points: np.ndarray, x: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether ``x`` is a convex combination of the rows of ``points`` (LP feasibility)."""
    pts = np.asarray(points, dtype=float)
    k = pts.shape[0]
    a_eq = np.vstack([pts.T, np.ones((1, k))])
    b_eq = np.concatenate([np.asarray(x, dtype=float), [1.0]])
    res = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    if res.status != 0:
        return False
    return bool(np.abs(a_eq @ res.x - b_eq).max() <= max(tol, 1e-7))


def hull_nested(inner: np.ndarray, outer: np.ndarray) -> bool:
    return all(hull_contains(outer, row) for row in np.asarray(inner))


def level_vector(measure: AgreeingMeasure, n: int) -> np.ndarray:
    lv = measure.levels[n]
    return np.array([float(lv.get(v, 0)) for v in measure.graph.levels[n]])


def extremality_spread(measure: AgreeingMeasure, m: int, N: int, projection: Optional[np.ndarray] = None) -> float:
    """Mean l1 distance between the level-m image of a level-N vertex (drawn from m_N) and m_m.

    Zero exactly when the law of the projected point is a point mass at m_m."""
    if N > measure.depth:
        raise ValueError(f"measure defined only up to level {measure.depth}")
    proj = projection_matrix(measure.equipment, N, m) if projection is None else projection
    weights = level_vector(measure, N)
    target = level_vector(measure, m)
    return float(weights @ np.abs(proj - target).sum(axis=1))
