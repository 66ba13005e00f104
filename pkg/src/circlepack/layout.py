"""Placing circle centres from radii by a breadth-first walk over kites.

Around a placed vertex ``u`` the kites of consecutive neighbours are
tangent, so once the direction of ``u -> w_prev`` is known the next
neighbour ``w`` in counterclockwise order sits at direction

    alpha(u, w) = alpha(u, w_prev) + arctan(r_prev / r_u) + arctan(r_w / r_u)

and distance ``sqrt(r_u^2 + r_w^2)``.  Only approximately-good edges are
crossed.  Coordinates are carried as unevaluated sums ``hi + lo`` so that
circles many orders of magnitude below the outer triangle keep their local
geometry.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .objective import LogRadii
from .planegraph import AngleGraph

SQRT3 = math.sqrt(3.0)
OUTER_CENTRE = (SQRT3, 1.0)
OUTER_RADIUS = 1.0
# 2*pi split into a double and its rounding error, for wrapping angles
_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16


class LayoutError(RuntimeError):
    def __init__(self, unplaced: list[int]):
        head = ", ".join(map(str, unplaced[:10]))
        super().__init__(
            f"{len(unplaced)} vertices could not be reached through approximately-good edges "
            f"(first: {head}); radii are probably far from converged"
        )
        self.unplaced = unplaced


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _dd_add(hi: float, lo: float, b: float) -> tuple[float, float]:
    s, e = _two_sum(hi, b)
    e += lo
    h = s + e
    return h, e - (h - s)


def _wrap(a: float) -> float:
    """Bring an angle into [-pi, pi] without inheriting the rounding of 2*pi."""
    if a > math.pi:
        return (a - _TWO_PI_HI) - _TWO_PI_LO
    if a < -math.pi:
        return (a + _TWO_PI_HI) + _TWO_PI_LO
    return a


def _reverse(a: float) -> float:
    return a - math.pi if a > 0 else a + math.pi


def classify_edges(H: AngleGraph, x: LogRadii | np.ndarray, eps: float = 0.0) -> np.ndarray:
    """Boolean mask over ``H.edges``: True where the edge is approximately-good.

    An edge is approximately-good when its radius ratio lies within
    ``[(1-eps)/(1+eps) / (2n), (1+eps)/(1-eps) * 2n]`` with ``n = |V(H)|``.
    """
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 1/2)")
    X = x.full() if isinstance(x, LogRadii) else np.asarray(x, dtype=float)
    if X.shape == (H.n_free,):
        from .objective import full_log_radii
        X = full_log_radii(H, X)
    bound = math.log(2 * H.n) + math.log((1 + eps) / (1 - eps))
    diff = np.abs(X[H.edges[:, 0]] - X[H.edges[:, 1]])
    return diff <= bound


@dataclass
class Layout:
    """Circle centres for every vertex of the angle graph.

    ``hi + lo`` is the position; ``positions`` rounds it to doubles.
    ``parent[u]`` is the vertex ``u`` was placed from (-1 for the three
    pinned corners).
    """

    H: AngleGraph
    radii: np.ndarray
    hi: np.ndarray
    lo: np.ndarray
    parent: np.ndarray
    alpha: dict = field(repr=False)
    eps: float = 0.0
    max_discrepancy: float = 0.0
    max_relative_discrepancy: float = 0.0
    discrepancy_checks: int = 0

    @property
    def positions(self) -> np.ndarray:
        return self.hi + self.lo

    def difference(self, u, w) -> np.ndarray:
        """``p_w - p_u`` evaluated from the extended representation (vectorised)."""
        return (self.hi[w] - self.hi[u]) + (self.lo[w] - self.lo[u])

    @property
    def outer_centre(self) -> tuple[float, float]:
        return OUTER_CENTRE

    @property
    def outer_radius(self) -> float:
        return OUTER_RADIUS

    def provenance(self) -> list[tuple[int, int]]:
        return [(int(p), u) for u, p in enumerate(self.parent) if p >= 0]


def place_vertices(H: AngleGraph, x: LogRadii, eps: float = 0.0) -> Layout:
    X = x.full()
    r = x.radii()
    good_mask = classify_edges(H, X, eps)
    good = set()
    for (u, w), ok in zip(H.edges.tolist(), good_mask.tolist()):
        if ok:
            good.add((u, w))
            good.add((w, u))

    n = H.n
    hi = np.zeros((n, 2))
    lo = np.zeros((n, 2))
    placed = np.zeros(n, dtype=bool)
    parent = np.full(n, -1, dtype=np.int64)
    alpha: dict[tuple[int, int], float] = {}
    rot = H.rotation
    pos = [{w: i for i, w in enumerate(nb)} for nb in rot]
    rl = r.tolist()

    s1, s2, s3 = H.pinned
    rs = rl[s1]
    corners = {s1: (0.0, 0.0), s2: (2 * SQRT3, 0.0), s3: (SQRT3, 3.0)}
    for s, (px, py) in corners.items():
        hi[s] = (px, py)
        placed[s] = True

    queue: deque[tuple[int, int]] = deque()
    stats = {"abs": 0.0, "rel": 0.0, "count": 0}

    def put(u: int, w: int, a: float) -> None:
        """Place w from u at direction a, or compare against its existing spot."""
        ru, rw = rl[u], rl[w]
        dist = math.hypot(ru, rw)
        ox, oy = dist * math.cos(a), dist * math.sin(a)
        cx = _dd_add(hi[u, 0], lo[u, 0], ox)
        cy = _dd_add(hi[u, 1], lo[u, 1], oy)
        if placed[w]:
            dx = (cx[0] - hi[w, 0]) + (cx[1] - lo[w, 0])
            dy = (cy[0] - hi[w, 1]) + (cy[1] - lo[w, 1])
            gap = math.hypot(dx, dy)
            stats["abs"] = max(stats["abs"], gap)
            stats["rel"] = max(stats["rel"], gap / rw)
            stats["count"] += 1
        else:
            hi[w] = (cx[0], cy[0])
            lo[w] = (cx[1], cy[1])
            placed[w] = True
            parent[w] = u
        if (u, w) not in alpha:
            alpha[(u, w)] = a
            alpha[(w, u)] = _reverse(a)
            queue.append((u, w))
            queue.append((w, u))

    # seed the outer cycle of H: t_i hangs off the side s_i s_{i+1}
    side = [0.0, 2 * math.pi / 3, 4 * math.pi / 3]
    for i, t in enumerate(H.outer_fvertices):
        a, b = H.pinned[i], H.pinned[(i + 1) % 3]
        half = math.atan(rl[t] / rs)
        put(a, t, side[i] + half)
        put(b, t, side[i] + math.pi - half)

    while queue:
        u, w = queue.popleft()
        a = alpha[(u, w)]
        nb = rot[u]
        k = pos[u][w]
        deg = len(nb)
        ru = rl[u]
        tw = math.atan(rl[w] / ru)
        for step in (1, -1):
            j = k + step
            if H.cyclic[u]:
                j %= deg
            elif not 0 <= j < deg:
                continue
            c = nb[j]
            if c == w or (u, c) not in good or (u, c) in alpha:
                continue
            tc = math.atan(rl[c] / ru)
            put(u, c, _wrap(a + step * (tw + tc)))

    if not placed.all():
        raise LayoutError(np.flatnonzero(~placed).tolist())

    return Layout(
        H=H, radii=r, hi=hi, lo=lo, parent=parent, alpha=alpha, eps=eps,
        max_discrepancy=stats["abs"], max_relative_discrepancy=stats["rel"],
        discrepancy_checks=stats["count"],
    )


def default_eps(log_radius_error: float) -> float:
    """Classification slack from the solver's log-radius error estimate."""
    if not math.isfinite(log_radius_error):
        return 0.49
    return min(0.49, math.expm1(abs(log_radius_error)))
