"""Combinatorial plane graphs stored as rotation systems.

Conventions used throughout the package:

* ``rotation[v]`` lists the neighbours of ``v`` in counterclockwise order
  of the intended drawing.
* Every half-edge ``u -> v`` owns the face on its left.  The face walk
  continues with ``v -> w`` where ``w`` is the neighbour preceding ``u`` in
  the rotation of ``v`` (the clockwise successor of ``u``).  Bounded faces
  are therefore walked counterclockwise and the outer face clockwise.
* The face lying between consecutive neighbours ``rotation[v][i]`` and
  ``rotation[v][i + 1]`` is the left face of ``v -> rotation[v][i]``.
* The outer cycle is given counterclockwise (interior on the left), i.e.
  as the reverse of the outer face walk.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GraphError(ValueError):
    """Raised when a rotation system does not describe a valid plane graph."""


class NotPlanarError(GraphError):
    pass


class ParallelEdgeError(GraphError):
    pass


class BridgeError(GraphError):
    pass


class CutVertexError(GraphError):
    pass


class NotTriangulationError(GraphError):
    pass


class PlaneGraph:
    """A connected simple plane graph given by its rotation system.

    Parameters
    ----------
    rotation:
        ``rotation[v]`` is the counterclockwise list of neighbours of ``v``.
    outer:
        The boundary of the outer face listed counterclockwise.  Any
        rotation of the cycle is accepted.
    """

    def __init__(self, rotation: Sequence[Sequence[int]], outer: Sequence[int]):
        self.rotation: tuple[tuple[int, ...], ...] = tuple(tuple(int(w) for w in nb) for nb in rotation)
        self.n = len(self.rotation)
        if self.n < 3:
            raise GraphError(f"need at least 3 vertices, got {self.n}")
        self._check_simple()

        # half-edge h = offset[v] + i is v -> rotation[v][i]
        deg = np.array([len(nb) for nb in self.rotation], dtype=np.int64)
        self.offset = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=self.offset[1:])
        self._pos = [{w: i for i, w in enumerate(nb)} for nb in self.rotation]
        nh = int(self.offset[-1])
        self.tail = np.repeat(np.arange(self.n), deg)
        self.head = np.fromiter((w for nb in self.rotation for w in nb), dtype=np.int64, count=nh)

        twin = np.empty(nh, dtype=np.int64)
        nxt = np.empty(nh, dtype=np.int64)
        for v, nb in enumerate(self.rotation):
            base = self.offset[v]
            d = len(nb)
            for i, w in enumerate(nb):
                j = self._pos[w][v]
                twin[base + i] = self.offset[w] + j
                # next of v -> w is w -> (neighbour before v around w)
                nxt[base + i] = self.offset[w] + (j - 1) % len(self.rotation[w])
        self.twin = twin
        self.next = nxt
        self.m = nh // 2

        self._check_connected()

        face_of = np.full(nh, -1, dtype=np.int64)
        faces: list[tuple[int, ...]] = []
        face_start: list[int] = []
        for h in range(nh):
            if face_of[h] >= 0:
                continue
            fid = len(faces)
            walk = []
            e = h
            while face_of[e] < 0:
                face_of[e] = fid
                walk.append(int(self.tail[e]))
                e = nxt[e]
            if e != h:
                raise NotPlanarError("face traversal did not close; rotation system is inconsistent")
            faces.append(tuple(walk))
            face_start.append(h)
        self.face_of = face_of
        self.faces: tuple[tuple[int, ...], ...] = tuple(faces)
        self.face_start = np.array(face_start, dtype=np.int64)

        if self.n - self.m + len(self.faces) != 2:
            raise NotPlanarError(
                f"Euler check failed: V - E + F = {self.n} - {self.m} + {len(self.faces)} != 2 "
                "(rotation system is not planar)"
            )

        self.outer_cycle: tuple[int, ...] = tuple(int(v) for v in outer)
        self.outer_face = self._locate_outer(self.outer_cycle)

    # ------------------------------------------------------------------
    def _check_simple(self) -> None:
        for v, nb in enumerate(self.rotation):
            seen = set()
            for w in nb:
                if w == v:
                    raise GraphError(f"loop at vertex {v}")
                if not 0 <= w < len(self.rotation):
                    raise GraphError(f"vertex {v} lists unknown neighbour {w}")
                if w in seen:
                    raise ParallelEdgeError(f"parallel edge between {v} and {w}")
                seen.add(w)
        for v, nb in enumerate(self.rotation):
            for w in nb:
                if v not in self.rotation[w]:
                    raise GraphError(f"edge {v}-{w} is missing from the rotation of {w}")

    def _check_connected(self) -> None:
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for w in self.rotation[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        if not seen.all():
            missing = np.flatnonzero(~seen)[:5].tolist()
            raise GraphError(f"graph is disconnected (unreachable vertices include {missing})")

    def _locate_outer(self, cycle: tuple[int, ...]) -> int:
        if len(cycle) < 3:
            raise GraphError("outer cycle needs at least 3 vertices")
        a, b = cycle[0], cycle[1]
        if a not in self._pos[b]:
            raise GraphError(f"outer cycle uses non-edge {a}-{b}")
        # interior lies left of a -> b, so the outer face is left of b -> a
        fid = int(self.face_of[self.halfedge(b, a)])
        walk = self.faces[fid]
        if sorted(walk) != sorted(cycle) or len(walk) != len(cycle):
            raise GraphError(f"outer cycle {list(cycle)} is not a face boundary (counterclockwise)")
        k = walk.index(cycle[0])
        if tuple(reversed(walk[k + 1:] + walk[:k + 1])) != cycle:
            raise GraphError(f"outer cycle {list(cycle)} is not a face boundary (counterclockwise)")
        return fid

    # ------------------------------------------------------------------
    def halfedge(self, u: int, v: int) -> int:
        return int(self.offset[u] + self._pos[u][v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._pos[u]

    def left_face(self, u: int, v: int) -> int:
        return int(self.face_of[self.halfedge(u, v)])

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        mask = self.tail < self.head
        return np.stack([self.tail[mask], self.head[mask]], axis=1)

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    def __repr__(self) -> str:
        return f"PlaneGraph(n={self.n}, m={self.m}, faces={len(self.faces)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PlaneGraph):
            return NotImplemented
        return self.rotation == other.rotation and self.outer_face == other.outer_face \
            and self.faces[self.outer_face] == other.faces[other.outer_face]

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class DualGraph:
    """Faces of a plane graph and the primal/dual edge bijection.

    Primal edge ``k`` (``edges[k] = (u, v)``, ``u < v``) is dual to the
    edge joining ``edge_faces[k] = (left of u->v, left of v->u)``.
    """

    faces: tuple[tuple[int, ...], ...]
    outer_face: int
    edges: np.ndarray
    edge_faces: np.ndarray
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.faces)

    def dual_edge(self, k: int) -> tuple[int, int]:
        f, g = self.edge_faces[k]
        return int(f), int(g)

    def primal_edge(self, k: int) -> tuple[int, int]:
        u, v = self.edges[k]
        return int(u), int(v)

    def edge_index(self, f: int, g: int) -> list[int]:
        """Indices of the dual edges joining faces ``f`` and ``g``."""
        ef = self.edge_faces
        hit = ((ef[:, 0] == f) & (ef[:, 1] == g)) | ((ef[:, 0] == g) & (ef[:, 1] == f))
        return np.flatnonzero(hit).tolist()


def build_faces(g: PlaneGraph) -> DualGraph:
    edges = g.edges()
    ef = np.empty_like(edges)
    for k, (u, v) in enumerate(edges):
        ef[k, 0] = g.left_face(int(u), int(v))
        ef[k, 1] = g.left_face(int(v), int(u))
    adj: list[list[int]] = [[] for _ in g.faces]
    for f, h in ef:
        adj[f].append(int(h))
        adj[h].append(int(f))
    return DualGraph(g.faces, g.outer_face, edges, ef, tuple(tuple(a) for a in adj))


def is_triangulation(g: PlaneGraph) -> bool:
    return all(len(f) == 3 for f in g.faces)


def check_two_connected(g: PlaneGraph) -> None:
    """Raise BridgeError or CutVertexError unless every face is a simple cycle."""
    bridges = np.flatnonzero(g.face_of == g.face_of[g.twin])
    if bridges.size:
        h = int(bridges[0])
        raise BridgeError(
            f"edge {g.tail[h]}-{g.head[h]} is a bridge; split the graph at bridges before packing"
        )
    for fid, walk in enumerate(g.faces):
        if len(set(walk)) != len(walk):
            seen = set()
            for v in walk:
                if v in seen:
                    raise CutVertexError(
                        f"vertex {v} is a cut vertex (face {fid} visits it twice); "
                        "input must be 2-connected"
                    )
                seen.add(v)


@dataclass(frozen=True)
class AngleGraph:
    """Reduced angle graph: vertex/face incidences without the outer face.

    H-vertices ``0 .. n_primal-1`` are the primal vertices; H-vertex
    ``n_primal + j`` is the ``j``-th bounded face of ``graph``.
    """

    graph: PlaneGraph
    n_primal: int
    face_ids: np.ndarray          # H F-vertex j -> face id in graph
    fvertex: np.ndarray           # face id -> H vertex (-1 for the outer face)
    edges: np.ndarray             # (m_H, 2) pairs (v, f)
    rotation: tuple[tuple[int, ...], ...]
    cyclic: np.ndarray            # False for pinned vertices, whose rotation is a linear fan
    pinned: tuple[int, int, int]
    outer_fvertices: tuple[int, int, int]
    quads: np.ndarray             # (q, 4) bounded faces (u, f, v, g), uv primal and fg dual
    quad_edge: np.ndarray         # primal edge index of each quad
    free: np.ndarray              # H ids of free vertices
    free_index: np.ndarray        # H id -> position in free (-1 when pinned)

    @property
    def n(self) -> int:
        return self.n_primal + len(self.face_ids)

    @property
    def n_free(self) -> int:
        return len(self.free)

    def is_fvertex(self, u: int) -> bool:
        return u >= self.n_primal

    @property
    def boundary(self) -> tuple[int, ...]:
        s, t = self.pinned, self.outer_fvertices
        return (s[0], t[0], s[1], t[1], s[2], t[2])

    def neighbours(self, u: int) -> tuple[int, ...]:
        return self.rotation[u]


def build_angle_graph(g: PlaneGraph) -> AngleGraph:
    if not is_triangulation(g):
        bad = next(f for f in g.faces if len(f) != 3)
        raise NotTriangulationError(f"angle graph needs a triangulation; found face of size {len(bad)}")
    nv = g.n
    outer = g.outer_face
    face_ids = np.array([f for f in range(len(g.faces)) if f != outer], dtype=np.int64)
    fvertex = np.full(len(g.faces), -1, dtype=np.int64)
    fvertex[face_ids] = nv + np.arange(len(face_ids))

    s = g.outer_cycle
    rotation: list[tuple[int, ...]] = []
    cyclic = np.ones(nv + len(face_ids), dtype=bool)
    for v in range(nv):
        nb = g.rotation[v]
        fans = [int(fvertex[g.left_face(v, w)]) for w in nb]
        if v in s:
            # start the fan right after the outer face
            k = fans.index(-1)
            fans = fans[k + 1:] + fans[:k]
            cyclic[v] = False
        rotation.append(tuple(fans))
    for f in face_ids:
        rotation.append(tuple(g.faces[f]))

    edges = np.array([(v, f) for v in range(nv) for f in rotation[v]], dtype=np.int64)

    t = tuple(int(fvertex[g.left_face(s[i], s[(i + 1) % 3])]) for i in range(3))

    pe = g.edges()
    quads = []
    qedge = []
    for k, (u, v) in enumerate(pe):
        f = fvertex[g.left_face(int(u), int(v))]
        h = fvertex[g.left_face(int(v), int(u))]
        if f >= 0 and h >= 0:
            quads.append((u, f, v, h))
            qedge.append(k)

    free_mask = np.ones(nv + len(face_ids), dtype=bool)
    free_mask[list(s)] = False
    free = np.flatnonzero(free_mask)
    free_index = np.full(len(free_mask), -1, dtype=np.int64)
    free_index[free] = np.arange(len(free))

    return AngleGraph(
        graph=g,
        n_primal=nv,
        face_ids=face_ids,
        fvertex=fvertex,
        edges=edges,
        rotation=tuple(rotation),
        cyclic=cyclic,
        pinned=(int(s[0]), int(s[1]), int(s[2])),
        outer_fvertices=t,
        quads=np.array(quads, dtype=np.int64).reshape(-1, 4),
        quad_edge=np.array(qedge, dtype=np.int64),
        free=free,
        free_index=free_index,
    )


@dataclass(frozen=True)
class StarTriangulation:
    graph: PlaneGraph
    added: tuple[int, ...]
    original: np.ndarray  # vertex of the triangulation -> original vertex, -1 for added ones

    def __iter__(self):
        return iter((self.graph, self.added, self.original))


def star_triangulate(g: PlaneGraph) -> StarTriangulation:
    """Add one vertex inside every face of size > 3, joined to the whole boundary."""
    check_two_connected(g)
    n0 = g.n
    if is_triangulation(g):
        return StarTriangulation(g, (), np.arange(n0))

    centre: dict[int, int] = {}
    for fid, walk in enumerate(g.faces):
        if len(walk) > 3:
            centre[fid] = n0 + len(centre)

    rotation: list[list[int]] = []
    for v, nb in enumerate(g.rotation):
        new = []
        for w in nb:
            new.append(w)
            c = centre.get(g.left_face(v, w))
            if c is not None:
                new.append(c)
        rotation.append(new)
    for fid in centre:
        rotation.append(list(g.faces[fid]))

    # the outer face becomes the first triangle along the old outer walk
    if g.outer_face in centre:
        walk = g.faces[g.outer_face]
        a, b = walk[0], walk[1]
        tri_walk = (a, b, centre[g.outer_face])
        outer = tuple(reversed(tri_walk))
    else:
        outer = g.outer_cycle
    tri = PlaneGraph(rotation, outer)
    original = np.concatenate([np.arange(n0), np.full(len(centre), -1)])
    return StarTriangulation(tri, tuple(range(n0, n0 + len(centre))), original)
