"""Residual suite for approximate primal-dual circle packings.

Every residual is measured against the local scale of the circles involved,
so a packing is only judged good if its smallest circles are right.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .layout import OUTER_CENTRE, OUTER_RADIUS, Layout
from .objective import LogRadii, kernel_F1
from .planegraph import AngleGraph

# free vertices close a full turn of kites; each corner of the outer triangle sees pi/3
FREE_TARGET = math.pi
PINNED_TARGET = math.pi / 6

# Radii are doubles, so a small circle wedged against a large one is only
# pinned down to about 1e-16 of the large radius; relative residuals of the
# smallest circles then scale like 1e-16 * R.  Past this ratio that floor
# can exceed 1e-6.
SUPPORTED_LOG10_RATIO = 9.0


@dataclass
class AngleResiduals:
    free: np.ndarray
    pinned: np.ndarray

    @property
    def max(self) -> float:
        return float(self.free.max()) if self.free.size else 0.0

    @property
    def mean(self) -> float:
        return float(self.free.mean()) if self.free.size else 0.0


def angle_sums(H: AngleGraph, x: LogRadii) -> np.ndarray:
    """Sum of ``arctan(r_w / r_u)`` over the H-neighbours ``w`` of every vertex ``u``."""
    X = x.full()
    u, w = H.edges[:, 0], H.edges[:, 1]
    d = X[w] - X[u]
    return np.bincount(u, kernel_F1(d), H.n) + np.bincount(w, kernel_F1(-d), H.n)


def angle_residuals(H: AngleGraph, x: LogRadii) -> AngleResiduals:
    s = angle_sums(H, x)
    return AngleResiduals(
        free=np.abs(s[H.free] - FREE_TARGET),
        pinned=np.abs(s[list(H.pinned)] - PINNED_TARGET),
    )


def ratio_diagnostics(x: LogRadii) -> tuple[float, bool]:
    """``(log R, log R <= n log 2n)`` with ``R = r_max / r_min``.

    ``n`` counts the vertices of H together with the outer face, whose
    circle has radius 1 and therefore never changes ``R``.
    """
    X = x.full()
    X = np.append(X, 0.0)
    log_ratio = float(X.max() - X.min())
    n = x.H.n + 1
    return log_ratio, log_ratio <= n * math.log(2 * n)


@dataclass
class PackingReport:
    n_primal: int = 0
    n_dual: int = 0
    angle_max: float = 0.0
    angle_mean: float = 0.0
    pinned_angle_max: float = 0.0
    primal_tangency_max: float = 0.0
    primal_tangency_mean: float = 0.0
    dual_tangency_max: float = 0.0
    dual_tangency_mean: float = 0.0
    orthogonality_max: float = 0.0
    coincidence_max: float = 0.0
    log_ratio: float = 0.0
    ratio: float | None = 1.0
    ratio_bound_ok: bool = True
    supported_range: bool = True
    placement_discrepancy: float = 0.0
    placement_discrepancy_relative: float = 0.0
    overlap_pairs: int | None = None
    overlap_max: float | None = None
    solver: dict | None = field(default=None)

    @property
    def geometric_max(self) -> float:
        return max(self.primal_tangency_max, self.dual_tangency_max,
                   self.orthogonality_max, self.coincidence_max)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PackingReport":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown report fields: {sorted(unknown)}")
        return cls(**d)


def _norm(v: np.ndarray) -> np.ndarray:
    return np.hypot(v[:, 0], v[:, 1])


def geometric_residuals(H: AngleGraph, layout: Layout) -> dict:
    """Tangency, orthogonality and tangency-point residuals over every primal edge.

    The dual partner of a primal edge on the outer triangle is the edge to the
    outer face, whose circle is the unit incircle; there the dual circle sits
    inside it and the tangency is internal.
    """
    if layout.hi.shape != (H.n, 2) or not np.all(np.isfinite(layout.hi)):
        raise ValueError("layout does not hold a finite position for every vertex")
    g = H.graph
    r = layout.radii
    pe = g.edges()
    u, v = pe[:, 0], pe[:, 1]
    f = np.array([H.fvertex[g.left_face(a, b)] for a, b in pe.tolist()], dtype=np.int64)
    h = np.array([H.fvertex[g.left_face(b, a)] for a, b in pe.tolist()], dtype=np.int64)
    # orient so that f is always a bounded face
    swap = f < 0
    f[swap], h[swap] = h[swap], f[swap]
    inner = h >= 0

    duv = layout.difference(u, v)
    luv = _norm(duv)
    primal = np.abs(luv - (r[u] + r[v])) / (r[u] + r[v])

    centre = np.asarray(OUTER_CENTRE)
    hh = np.where(inner, h, f)
    dfg = layout.difference(f, hh)
    rg = np.where(inner, r[hh], OUTER_RADIUS)
    lfg = _norm(dfg)
    # an outer pair crosses a side of the triangle; its dual direction is the
    # outward normal of that side (the centre-to-centre direction degenerates
    # when the face circle is the incircle itself, as for a single triangle)
    out = ~inner
    normal = np.stack([duv[out, 1], -duv[out, 0]], axis=1) / luv[out, None]
    away = np.einsum("ij,ij->i", normal, layout.positions[u[out]] - centre)
    normal *= np.sign(away)[:, None]
    to_centre = _norm(layout.positions[f[out]] - centre)
    target = np.where(inner, r[f] + rg, 0.0)
    dist = lfg.copy()
    dist[out] = to_centre
    target[out] = OUTER_RADIUS - r[f[out]]
    dual = np.abs(dist - target) / (r[f] + rg)
    dfg[out] = normal
    lfg[out] = 1.0

    cos = np.abs(np.einsum("ij,ij->i", duv, dfg)) / (luv * lfg)

    # tangency point of u,v minus that of f and its partner, relative to p_f
    duf = layout.difference(f, u)
    t_uv = duf + r[u][:, None] * duv / luv[:, None]
    t_fg = r[f][:, None] * dfg / lfg[:, None]
    smallest = np.minimum(np.minimum(r[u], r[v]), np.minimum(r[f], rg))
    coincide = _norm(t_uv - t_fg) / smallest

    return {
        "primal_tangency_max": float(primal.max()),
        "primal_tangency_mean": float(primal.mean()),
        "dual_tangency_max": float(dual.max()),
        "dual_tangency_mean": float(dual.mean()),
        "orthogonality_max": float(cos.max()),
        "coincidence_max": float(coincide.max()),
    }


def primal_tangency(layout: Layout, edges: np.ndarray) -> np.ndarray:
    """Relative tangency residual of the given primal edges only."""
    r = layout.radii
    u, v = edges[:, 0], edges[:, 1]
    d = _norm(layout.difference(u, v))
    return np.abs(d - (r[u] + r[v])) / (r[u] + r[v])


def overlap_check(layout: Layout, vertices: np.ndarray, adjacent: set[tuple[int, int]],
                  limit: int = 1000) -> tuple[int, float]:
    """Brute-force search for overlapping circles among non-adjacent ``vertices``.

    Returns the number of offending pairs and the largest overlap depth
    relative to the smaller radius.  Meant as an oracle for small inputs.
    """
    vs = np.asarray(vertices, dtype=np.int64)
    if len(vs) > limit:
        raise ValueError(f"overlap check is quadratic; refusing {len(vs)} circles (limit {limit})")
    r = layout.radii[vs]
    i, j = np.triu_indices(len(vs), 1)
    d = _norm(layout.difference(vs[i], vs[j]))
    depth = (r[i] + r[j] - d) / np.minimum(r[i], r[j])
    keep = np.array([(min(a, b), max(a, b)) not in adjacent
                     for a, b in zip(vs[i].tolist(), vs[j].tolist())], dtype=bool)
    depth = depth[keep]
    bad = depth > 1e-6
    return int(bad.sum()), float(depth.max(initial=0.0))


def build_report(H: AngleGraph, x: LogRadii, layout: Layout, solver: dict | None = None,
                 check_overlap: bool = False) -> PackingReport:
    ang = angle_residuals(H, x)
    log_ratio, bound_ok = ratio_diagnostics(x)
    rep = PackingReport(
        n_primal=H.n_primal,
        n_dual=H.n - H.n_primal,
        angle_max=ang.max,
        angle_mean=ang.mean,
        pinned_angle_max=float(ang.pinned.max()),
        log_ratio=log_ratio,
        ratio=math.exp(log_ratio) if log_ratio < 700 else None,
        ratio_bound_ok=bound_ok,
        supported_range=log_ratio <= SUPPORTED_LOG10_RATIO * math.log(10),
        placement_discrepancy=layout.max_discrepancy,
        placement_discrepancy_relative=layout.max_relative_discrepancy,
        solver=solver,
        **geometric_residuals(H, layout),
    )
    if check_overlap:
        pe = H.graph.edges()
        adj = {(int(a), int(b)) for a, b in pe}
        count, depth = overlap_check(layout, np.arange(H.n_primal), adj)
        # dual circles of faces sharing an edge are tangent; others must be disjoint
        dual_adj = set()
        for a, b in pe.tolist():
            f = H.fvertex[H.graph.left_face(a, b)]
            h = H.fvertex[H.graph.left_face(b, a)]
            if f >= 0 and h >= 0:
                dual_adj.add((min(f, h), max(f, h)))
        c2, d2 = overlap_check(layout, np.arange(H.n_primal, H.n), dual_adj, limit=2 * 1000)
        rep.overlap_pairs = count + c2
        rep.overlap_max = max(depth, d2)
    return rep
