"""End-to-end runs: angle graph, radii, layout, residuals, solution document."""

from __future__ import annotations

import math
import platform
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from . import __version__
from .io import FORMAT_VERSION, SOLUTION_FORMAT, Instance, instance_from_graph
from .layout import OUTER_CENTRE, OUTER_RADIUS, Layout, default_eps, place_vertices
from .objective import LogRadii
from .planegraph import AngleGraph, PlaneGraph, StarTriangulation, build_angle_graph, star_triangulate
from .solver import SolveReport, SolverConfig, minimize
from .verify import PackingReport, build_report, overlap_check, primal_tangency

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3

# geometric residuals are always reported; they only decide the exit code
# when a tolerance is given, since their size follows the angle tolerance
GEOMETRIC_TOLERANCE: float | None = None


def position_critical_tolerance(n: int) -> float:
    """Angle tolerance shrinking like ``1/n^2``, for runs where positions matter most."""
    return max(1e-4 / n ** 2, 1e-13)


def _as_instance(inst: Instance | PlaneGraph) -> Instance:
    return inst if isinstance(inst, Instance) else instance_from_graph(inst)


def _pair(hi: np.ndarray, lo: np.ndarray, k: int) -> dict:
    return {"x": float(hi[k, 0] + lo[k, 0]), "y": float(hi[k, 1] + lo[k, 1]),
            "x_lo": float(lo[k, 0]), "y_lo": float(lo[k, 1])}


@dataclass
class PDSolution:
    """Primal-dual packing of a triangulation together with its certificate."""

    instance: Instance
    H: AngleGraph
    x: LogRadii
    layout: Layout | None
    report: PackingReport | None
    solve: SolveReport
    config: SolverConfig
    geometric_tolerance: float | None = GEOMETRIC_TOLERANCE
    error: str | None = None

    @property
    def converged(self) -> bool:
        return self.solve.converged and self.layout is not None

    @property
    def within_tolerance(self) -> bool:
        if self.report is None or self.report.angle_max > self.solve.tolerance:
            return False
        tol = self.geometric_tolerance
        return tol is None or self.report.geometric_max <= tol

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.converged and self.within_tolerance else EXIT_NOT_CONVERGED

    @property
    def status(self) -> str:
        if self.error:
            return self.error
        if not self.solve.converged:
            return f"not converged: {self.solve.message}"
        if not self.within_tolerance:
            return "residuals above tolerance"
        return "ok"

    def radii(self) -> np.ndarray:
        return self.x.radii()

    def to_dict(self, timings: bool = False) -> dict:
        H, lab = self.H, self.instance.labels
        r = self.radii()
        primal, dual = [], []
        if self.layout is not None:
            hi, lo = self.layout.hi, self.layout.lo
            for v in range(H.n_primal):
                primal.append({"label": lab[v], **_pair(hi, lo, v), "r": float(r[v])})
            for j, fid in enumerate(H.face_ids):
                k = H.n_primal + j
                face = [lab[v] for v in H.graph.faces[fid]]
                dual.append({"face": face, **_pair(hi, lo, k), "r": float(r[k])})
        report = self.report.to_dict() if self.report is not None else None
        if report is not None:
            report["solver"] = self.solve.to_dict(timings)
        return {
            "format": SOLUTION_FORMAT,
            "version": FORMAT_VERSION,
            "command": "pdpack",
            "status": self.status,
            "converged": self.converged,
            "primal": primal,
            "dual": dual,
            "outer_circle": {"x": OUTER_CENTRE[0], "y": OUTER_CENTRE[1], "r": OUTER_RADIUS},
            "report": report if report is not None else {"solver": self.solve.to_dict(timings)},
            "provenance": _provenance(self.config, self.geometric_tolerance),
        }


def _provenance(cfg: SolverConfig, geom_tol: float) -> dict:
    return {
        "config": asdict(cfg),
        "geometric_tolerance": geom_tol,
        "circlepack": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def run_pdpack(inst: Instance | PlaneGraph, cfg: SolverConfig | None = None, *,
               check_overlap: bool = False, position_critical: bool = False,
               geometric_tolerance: float | None = GEOMETRIC_TOLERANCE) -> PDSolution:
    """Pack a triangulation; the input must already be one (see ``run_pack`` otherwise)."""
    inst = _as_instance(inst)
    cfg = cfg or SolverConfig()
    H = build_angle_graph(inst.graph)
    if position_critical and cfg.tol is None:
        cfg = SolverConfig(**{**asdict(cfg), "tol": position_critical_tolerance(H.n)})
    x, solve = minimize(H, cfg)
    sol = PDSolution(inst, H, x, None, None, solve, cfg, geometric_tolerance)
    try:
        layout = place_vertices(H, x, default_eps(solve.log_radius_error))
    except Exception as exc:  # layout failure is reported, not raised
        sol.error = f"layout failed: {exc}"
        return sol
    sol.layout = layout
    sol.report = build_report(H, x, layout, check_overlap=check_overlap)
    return sol


@dataclass
class PrimalReport:
    """Residuals of the primal packing left after discarding duals and added vertices."""

    n: int = 0
    tangency_max: float = 0.0
    tangency_mean: float = 0.0
    log_ratio: float = 0.0
    pd_log_ratio: float = 0.0
    ratio_consistent: bool = True
    overlap_pairs: int | None = None
    overlap_max: float | None = None
    added_vertices: int = 0
    pd: dict | None = field(default=None)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PackSolution:
    instance: Instance
    star: StarTriangulation
    pd: PDSolution
    report: PrimalReport | None

    @property
    def converged(self) -> bool:
        return self.pd.converged

    @property
    def within_tolerance(self) -> bool:
        if self.report is None or self.pd.report is None:
            return False
        if self.pd.report.angle_max > self.pd.solve.tolerance:
            return False
        tol = self.pd.geometric_tolerance
        return tol is None or self.report.tangency_max <= tol

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.converged and self.within_tolerance else EXIT_NOT_CONVERGED

    @property
    def status(self) -> str:
        if self.pd.error or not self.pd.solve.converged:
            return self.pd.status
        return "ok" if self.within_tolerance else "residuals above tolerance"

    def radii(self) -> np.ndarray:
        return self.pd.radii()[: self.instance.n]

    def to_dict(self, timings: bool = False) -> dict:
        lab = self.instance.labels
        r = self.radii()
        primal = []
        if self.pd.layout is not None:
            hi, lo = self.pd.layout.hi, self.pd.layout.lo
            primal = [{"label": lab[v], **_pair(hi, lo, v), "r": float(r[v])}
                      for v in range(self.instance.n)]
        report = self.report.to_dict() if self.report is not None else {}
        pd = self.pd.to_dict(timings)["report"]
        report["pd"] = pd
        return {
            "format": SOLUTION_FORMAT,
            "version": FORMAT_VERSION,
            "command": "pack",
            "status": self.status,
            "converged": self.converged,
            "primal": primal,
            "edges": [[lab[u], lab[v]] for u, v in self.instance.graph.edges().tolist()],
            "report": report,
            "provenance": _provenance(self.pd.config, self.pd.geometric_tolerance),
        }


def run_pack(inst: Instance | PlaneGraph, cfg: SolverConfig | None = None, *,
             check_overlap: bool = False, position_critical: bool = False,
             geometric_tolerance: float | None = GEOMETRIC_TOLERANCE) -> PackSolution:
    """Pack a 2-connected plane graph through its star triangulation."""
    inst = _as_instance(inst)
    star = star_triangulate(inst.graph)
    labels = inst.labels + tuple(f"+{k}" for k in range(len(star.added)))
    tri = Instance(star.graph, labels, True)
    pd = run_pdpack(tri, cfg, position_critical=position_critical,
                    geometric_tolerance=geometric_tolerance)
    if pd.layout is None:
        return PackSolution(inst, star, pd, None)
    n = inst.n
    edges = inst.graph.edges()
    res = primal_tangency(pd.layout, edges)
    X = pd.x.full()
    log_ratio = float(X[:n].max() - X[:n].min())
    # the primal-only packing may drop the smallest circles, but never by more
    # than a (2n)^2 factor relative to the full primal-dual packing
    nn = pd.H.n + 1
    consistent = log_ratio <= pd.report.log_ratio + 1e-9 and \
        pd.report.log_ratio - log_ratio <= 2 * math.log(2 * nn)
    rep = PrimalReport(
        n=n,
        tangency_max=float(res.max()) if res.size else 0.0,
        tangency_mean=float(res.mean()) if res.size else 0.0,
        log_ratio=log_ratio,
        pd_log_ratio=pd.report.log_ratio,
        ratio_consistent=consistent,
        added_vertices=len(star.added),
    )
    if check_overlap:
        adj = {(int(a), int(b)) for a, b in edges}
        rep.overlap_pairs, rep.overlap_max = overlap_check(pd.layout, np.arange(n), adj)
    return PackSolution(inst, star, pd, rep)
