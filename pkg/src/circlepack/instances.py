"""Small named plane graphs and random instance generators."""

from __future__ import annotations

import math
import random
from typing import Sequence

import numpy as np

from .planegraph import GraphError, PlaneGraph, check_two_connected, is_triangulation


def from_drawing(points: Sequence[Sequence[float]], edges: Sequence[Sequence[int]],
                 outer: Sequence[int]) -> PlaneGraph:
    """Build a rotation system from a straight-line planar drawing."""
    pts = np.asarray(points, dtype=float)
    nbrs: list[list[int]] = [[] for _ in range(len(pts))]
    for u, v in edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    rotation = []
    for v, nb in enumerate(nbrs):
        d = pts[nb] - pts[v]
        order = np.argsort(np.arctan2(d[:, 1], d[:, 0]), kind="stable")
        rotation.append([nb[i] for i in order])
    return PlaneGraph(rotation, outer)


def _face_outer(rotation: Sequence[Sequence[int]], u: int, v: int) -> PlaneGraph:
    # the face left of u -> v stays bounded; the one left of v -> u becomes outer
    g = _loose(rotation)
    walk = g.faces[g.left_face(v, u)]
    return PlaneGraph(rotation, tuple(reversed(walk)))


def _loose(rotation: Sequence[Sequence[int]]) -> PlaneGraph:
    # any face works as a placeholder outer cycle while probing
    tmp = [list(nb) for nb in rotation]
    u = 0
    v = tmp[0][0]
    walk = [u]
    a, b = u, v
    # follow the face left of u -> v using the package convention
    while b != u:
        walk.append(b)
        k = tmp[b].index(a)
        a, b = b, tmp[b][(k - 1) % len(tmp[b])]
    return PlaneGraph(rotation, tuple(reversed(walk)))


def k3() -> PlaneGraph:
    return PlaneGraph([[1, 2], [2, 0], [0, 1]], (0, 1, 2))


def k4() -> PlaneGraph:
    pts = [(0, 0), (2, 0), (1, math.sqrt(3)), (1, 0.6)]
    edges = [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)]
    return from_drawing(pts, edges, (0, 1, 2))


def octahedron() -> PlaneGraph:
    pts = [(0, 0), (4, 0), (2, 3.46), (2, 0.8), (2.7, 1.8), (1.3, 1.8)]
    edges = [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3),
             (3, 0), (3, 1), (4, 1), (4, 2), (5, 2), (5, 0)]
    return from_drawing(pts, edges, (0, 1, 2))


_ICOSAHEDRON = [
    [8, 7, 11, 5, 1], [5, 6, 2, 8, 0], [6, 3, 9, 8, 1], [6, 4, 10, 9, 2],
    [6, 5, 11, 10, 3], [6, 1, 0, 11, 4], [4, 3, 2, 1, 5], [0, 8, 9, 10, 11],
    [0, 1, 2, 9, 7], [2, 3, 10, 7, 8], [3, 4, 11, 7, 9], [0, 7, 10, 4, 5],
]


def icosahedron() -> PlaneGraph:
    return _face_outer(_ICOSAHEDRON, 0, 8)


def cube() -> PlaneGraph:
    pts = [(0, 0), (4, 0), (4, 4), (0, 4), (1, 1), (3, 1), (3, 3), (1, 3)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4),
             (0, 4), (1, 5), (2, 6), (3, 7)]
    return from_drawing(pts, edges, (0, 1, 2, 3))


def cycle(k: int) -> PlaneGraph:
    return PlaneGraph([[(v + 1) % k, (v - 1) % k] for v in range(k)], tuple(range(k)))


NAMED = {
    "k3": k3,
    "k4": k4,
    "octahedron": octahedron,
    "icosahedron": icosahedron,
    "cube": cube,
    "c4": lambda: cycle(4),
}


def stacked(n_vertices: int, seed: int | None = 0, deep: bool = False) -> PlaneGraph:
    """Random stacked triangulation (Apollonian network) on ``n_vertices`` vertices.

    Starts from K4 and repeatedly inserts a vertex into a uniformly random
    bounded face, joining it to the three corners.  With ``deep`` the new
    vertex always goes into the most recently created face.
    """
    if n_vertices < 4:
        raise ValueError("stacked triangulations need at least 4 vertices")
    rng = random.Random(seed)
    rotation = [list(nb) for nb in k4().rotation]
    # bounded faces as counterclockwise corner triples
    faces = [(0, 1, 3), (1, 2, 3), (2, 0, 3)]
    for c in range(4, n_vertices):
        k = len(faces) - 1 if deep else rng.randrange(len(faces))
        a, b, d = faces[k]
        rotation.append([a, b, d])
        # the face left of x -> y sits just after y in the rotation of x
        for x, y in ((a, b), (b, d), (d, a)):
            nb = rotation[x]
            nb.insert(nb.index(y) + 1, c)
        faces[k] = (a, b, c)
        faces.append((b, d, c))
        faces.append((d, a, c))
    return PlaneGraph(rotation, (0, 1, 2))


def random_two_connected(n_vertices: int, seed: int | None = 0, drop: float = 0.3) -> PlaneGraph:
    """Random 2-connected plane graph: a stacked triangulation with edges removed.

    Interior edges are deleted in random order whenever the result keeps
    every face a simple cycle; the outer triangle is never touched.
    """
    rng = random.Random(seed)
    g = stacked(n_vertices, seed=rng.randrange(2**31))
    rotation = [list(nb) for nb in g.rotation]
    outer = set(g.outer_cycle)
    candidates = [(int(u), int(v)) for u, v in g.edges() if not (u in outer and v in outer)]
    rng.shuffle(candidates)
    target = int(drop * len(candidates))
    removed = 0
    for u, v in candidates:
        if removed >= target:
            break
        if len(rotation[u]) <= 2 or len(rotation[v]) <= 2:
            continue
        rotation[u].remove(v)
        rotation[v].remove(u)
        try:
            h = PlaneGraph(rotation, g.outer_cycle)
            check_two_connected(h)
        except GraphError:
            rotation[u].append(v)
            rotation[u][:] = _restore(g.rotation[u], rotation[u])
            rotation[v].append(u)
            rotation[v][:] = _restore(g.rotation[v], rotation[v])
            continue
        removed += 1
    return PlaneGraph(rotation, g.outer_cycle)


def _restore(reference: Sequence[int], current: Sequence[int]) -> list[int]:
    keep = set(current)
    return [w for w in reference if w in keep]


__all__ = [
    "from_drawing", "k3", "k4", "octahedron", "icosahedron", "cube", "cycle",
    "stacked", "random_two_connected", "NAMED", "is_triangulation",
]
