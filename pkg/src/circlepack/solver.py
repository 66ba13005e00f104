"""Damped Newton minimisation of the potential inside unit infinity-norm balls."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .objective import LogRadii, Potential, check_sdd
from .planegraph import AngleGraph

log = logging.getLogger(__name__)

MODES = ("plain", "regularized")
LINEAR_SOLVERS = ("pcg", "cholesky")


class LinearSolveError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class SolverError(RuntimeError):
    pass


def default_tolerance(n: int) -> float:
    return min(1e-9 * n, 1e-6)


@dataclass
class SolverConfig:
    mode: str = "plain"
    tol: float | None = None          # max angle residual in radians; None -> default_tolerance(n)
    max_iter: int = 1000
    linsolve: str = "cholesky"
    pcg_rtol: float = 1e-10
    pcg_maxiter: int | None = None
    fallback: bool = True             # switch to the direct solver when PCG stalls
    backtrack: float = 0.5
    armijo: float = 1e-4
    trust: float = 1.0
    r_inf_init: float = 1.0
    max_doublings: int = 30
    debug: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.linsolve not in LINEAR_SOLVERS:
            raise ValueError(f"linsolve must be one of {LINEAR_SOLVERS}")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.pcg_rtol <= 0:
            raise ValueError("pcg_rtol must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if not 0 < self.trust <= 1:
            raise ValueError("trust must lie in (0, 1]")

    def tolerance(self, n: int) -> float:
        return self.tol if self.tol is not None else default_tolerance(n)


@dataclass
class SolveReport:
    converged: bool = False
    mode: str = "plain"
    iterations: int = 0
    cg_iterations: int = 0
    direct_solves: int = 0
    max_angle_residual: float = math.inf
    grad_inf_norm: float = math.inf
    tolerance: float = 0.0
    log_radius_error: float = math.inf
    phi: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    step_sizes: list[float] = field(default_factory=list)
    full_steps: list[bool] = field(default_factory=list)
    r_inf_history: list[float] = field(default_factory=list)
    doubling_gaps: list[float] = field(default_factory=list)
    r_inf_final: float | None = None
    regularization_gap: float | None = None
    wall_time: float = 0.0
    message: str = ""

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("wall_time")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        return cls(**d)


# ----------------------------------------------------------------------
# linear algebra

def pcg(A: sp.csr_matrix, b: np.ndarray, rtol: float, maxiter: int) -> tuple[np.ndarray, int, float]:
    """Jacobi-preconditioned conjugate gradients from a zero start."""
    dinv = 1.0 / A.diagonal()
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, 0, 0.0
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    relres = 1.0
    for k in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        relres = float(np.linalg.norm(r)) / bnorm
        if relres <= rtol:
            return x, k, relres
        z = dinv * r
        rz_new = float(r @ z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise LinearSolveError(f"PCG did not converge in {maxiter} iterations", relres)


def direct_solve(A: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    lu = spla.splu(sp.csc_matrix(A), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    return lu.solve(b)


class _Stats:
    def __init__(self):
        self.cg = 0
        self.direct = 0


def solve_newton_system(A, b, cfg: SolverConfig, stats: _Stats | None = None) -> np.ndarray:
    stats = stats or _Stats()
    if cfg.linsolve == "cholesky":
        stats.direct += 1
        return direct_solve(A, b)
    maxiter = cfg.pcg_maxiter or max(1000, 10 * A.shape[0])
    try:
        x, its, _ = pcg(A, b, cfg.pcg_rtol, maxiter)
        stats.cg += its
        return x
    except LinearSolveError as exc:
        if not cfg.fallback:
            raise
        log.info("PCG stalled (%s); falling back to sparse direct solve", exc)
        stats.cg += maxiter
        stats.direct += 1
        return direct_solve(A, b)


def newton_step(obj, x: np.ndarray, trust: float = 1.0, cfg: SolverConfig | None = None,
                stats: _Stats | None = None) -> tuple[np.ndarray, float]:
    """Newton direction clipped to the infinity-norm ball of radius ``trust``.

    Returns the step and the decrease predicted by the quadratic model.
    """
    cfg = cfg or SolverConfig()
    g = obj.gradient(x)
    if not np.any(g):
        return np.zeros_like(x), 0.0
    A = obj.hessian(x)
    if cfg.debug:
        check_sdd(A)
    d = solve_newton_system(A, -g, cfg, stats)
    big = float(np.max(np.abs(d)))
    if big > trust:
        d *= trust / big
    predicted = -float(g @ d) - 0.5 * float(d @ (A @ d))
    return d, predicted


# ----------------------------------------------------------------------

class Regularized:
    """``Phi(x) + weight * sum cosh((x - centre) / scale)``."""

    def __init__(self, base: Potential, weight: float, centre: np.ndarray, scale: float):
        self.base = base
        self.weight = weight
        self.centre = centre
        self.scale = scale

    def penalty(self, x):
        return self.weight * float(np.sum(np.cosh((x - self.centre) / self.scale)))

    def value(self, x):
        return self.base.value(x) + self.penalty(x)

    def gradient(self, x):
        return self.base.gradient(x) + (self.weight / self.scale) * np.sinh((x - self.centre) / self.scale)

    def hessian(self, x):
        extra = (self.weight / self.scale ** 2) * np.cosh((x - self.centre) / self.scale)
        return self.base.hessian(x) + sp.diags(extra)

    def delta(self, x, y):
        return self.base.delta(x, y) + (self.penalty(y) - self.penalty(x))


def _line_search(obj, x, d, g, cfg: SolverConfig) -> tuple[np.ndarray, float, float]:
    """Armijo backtracking; returns the new point, the step factor and the decrease."""
    slope = float(g @ d)
    if slope >= 0:
        raise SolverError("Newton direction is not a descent direction")
    t = 1.0
    while t >= 1e-14:
        y = x + t * d
        change = obj.delta(x, y)
        if change <= cfg.armijo * t * slope:
            return y, t, change
        t *= cfg.backtrack
    raise SolverError("line search failed to find sufficient decrease")


def _newton_loop(obj, x, tol, cfg: SolverConfig, report: SolveReport, stats: _Stats,
                 residual=None, budget: int | None = None) -> np.ndarray:
    """Newton iterations on ``obj`` until ``residual(x) <= tol``.

    ``report.phi`` follows the minimised objective, advanced by the accurate
    difference of each accepted step so rounding never fakes an increase.
    """
    base = obj.base if isinstance(obj, Regularized) else obj
    residual = residual or (lambda z: 0.5 * float(np.max(np.abs(base.gradient(z)), initial=0.0)))
    budget = budget if budget is not None else cfg.max_iter
    value = obj.value(x)
    for _ in range(budget):
        res = residual(x)
        report.residuals.append(res)
        report.phi.append(value)
        if res <= tol:
            report.converged = True
            return x
        g = obj.gradient(x)
        A = obj.hessian(x)
        if cfg.debug:
            check_sdd(A)
        d = solve_newton_system(A, -g, cfg, stats)
        big = float(np.max(np.abs(d)))
        full = big <= cfg.trust
        if not full:
            d *= cfg.trust / big
        try:
            x, t, change = _line_search(obj, x, d, g, cfg)
        except SolverError as exc:
            report.message = str(exc)
            report.converged = False
            return x
        value += change
        report.iterations += 1
        report.step_sizes.append(t * min(big, cfg.trust))
        report.full_steps.append(full and t == 1.0)
    res = residual(x)
    report.residuals.append(res)
    report.phi.append(value)
    report.converged = res <= tol
    if not report.converged:
        report.message = f"iteration cap {budget} reached"
    return x


def _finish(obj: Potential, x: np.ndarray, cfg: SolverConfig, report: SolveReport,
            stats: _Stats, started: float) -> LogRadii:
    g = obj.gradient(x)
    report.grad_inf_norm = float(np.max(np.abs(g), initial=0.0))
    report.max_angle_residual = 0.5 * report.grad_inf_norm
    if report.grad_inf_norm > 0:
        d = solve_newton_system(obj.hessian(x), -g, cfg, stats)
        report.log_radius_error = float(np.max(np.abs(d)))
    else:
        report.log_radius_error = 0.0
    report.cg_iterations = stats.cg
    report.direct_solves = stats.direct
    report.wall_time = time.perf_counter() - started
    if report.converged and not report.message:
        report.message = "converged"
    return LogRadii(obj.H, x)


def minimize_plain(H: AngleGraph, cfg: SolverConfig | None = None,
                   x0: np.ndarray | None = None) -> tuple[LogRadii, SolveReport]:
    cfg = cfg or SolverConfig()
    started = time.perf_counter()
    obj = Potential(H)
    tol = cfg.tolerance(H.n)
    report = SolveReport(mode="plain", tolerance=tol)
    stats = _Stats()
    x = np.zeros(H.n_free) if x0 is None else np.array(x0, dtype=float)
    x = _newton_loop(obj, x, tol, cfg, report, stats)
    report.r_inf_final = float(np.max(np.abs(x), initial=0.0))
    return _finish(obj, x, cfg, report, stats, started), report


# ----------------------------------------------------------------------
# regularised two-phase mode

def _projected_newton(obj: Regularized, x, lo, hi, target_gap, cfg: SolverConfig,
                      stats: _Stats, budget: int) -> np.ndarray:
    """Minimise ``obj`` over the box [lo, hi] by projected Newton steps.

    Stops once the Newton decrement on the free coordinates certifies a
    gap below ``target_gap`` and the bound-held coordinates are stationary.
    """
    n = x.size
    x = np.clip(x, lo, hi)
    for _ in range(budget):
        g = obj.gradient(x)
        A = sp.csr_matrix(obj.hessian(x))
        pg = x - np.clip(x - g, lo, hi)
        width = min(1e-3, float(np.max(np.abs(pg), initial=0.0)))
        held = ((x <= lo + width) & (g > 0)) | ((x >= hi - width) & (g < 0))
        free = np.flatnonzero(~held)
        d = np.zeros(n)
        decrement = 0.0
        if free.size:
            Aff = A[free][:, free]
            df = solve_newton_system(Aff, -g[free], cfg, stats)
            d[free] = df
            decrement = -float(g[free] @ df)
        hidx = np.flatnonzero(held)
        d[hidx] = -g[hidx] / A.diagonal()[hidx]
        held_moves = np.abs(np.clip(x[hidx] + d[hidx], lo[hidx], hi[hidx]) - x[hidx])
        if 0.5 * decrement <= target_gap and float(np.max(held_moves, initial=0.0)) < 1e-12:
            return x
        big = float(np.max(np.abs(d)))
        if big > cfg.trust:
            d *= cfg.trust / big
        t = 1.0
        while True:
            y = np.clip(x + t * d, lo, hi)
            pred = -t * float(g[free] @ d[free]) + float(g[hidx] @ (x[hidx] - y[hidx]))
            if obj.delta(x, y) <= -cfg.armijo * pred or t < 1e-14:
                break
            t *= cfg.backtrack
        if t < 1e-14:
            return y
        x = y
    return x


def minimize_regularized(H: AngleGraph, cfg: SolverConfig | None = None) -> tuple[LogRadii, SolveReport]:
    """Two-phase minimisation with a cosh regulariser and a doubling estimate of R_inf.

    Phase 1 minimises the regularised potential over infinity-norm boxes of
    radius r = 1, 2, 4, ... around the start and accepts r once doubling it
    no longer lowers the potential by more than ``alpha / 8``, where
    ``alpha = n^-3`` is the strong-convexity bound at the minimiser.
    Phase 2 restarts from the phase-1 point with the reduced radius
    ``1 / log(alpha / eps)`` and runs to the angle tolerance.
    """
    cfg = cfg or SolverConfig(mode="regularized")
    started = time.perf_counter()
    base = Potential(H)
    n = H.n
    tol = cfg.tolerance(n)
    report = SolveReport(mode="regularized", tolerance=tol)
    stats = _Stats()
    alpha = float(n) ** -3
    eps = min(alpha / 2, tol * tol)
    eps1 = max(alpha / math.log(alpha / eps) ** 2, 1e-14)
    threshold = alpha / 8
    x0 = np.zeros(H.n_free)
    budget = cfg.max_iter

    def phase1(r: float, start: np.ndarray) -> np.ndarray:
        obj = Regularized(base, eps1 / (4 * n), x0, r)
        return _projected_newton(obj, start, x0 - r, x0 + r, eps1, cfg, stats, budget)

    r = cfg.r_inf_init
    x_r = phase1(r, x0)
    report.r_inf_history.append(r)
    for _ in range(cfg.max_doublings):
        x_2r = phase1(2 * r, x_r)
        gain = base.delta(x_2r, x_r)
        report.doubling_gaps.append(gain)
        if gain <= threshold:
            break
        r *= 2
        x_r = x_2r
        report.r_inf_history.append(r)
    else:
        report.message = "R_inf doubling did not settle"
    report.r_inf_final = r
    x1 = x_2r

    scale = max(1.0 / math.log(alpha / eps), 1e-3)
    obj2 = Regularized(base, eps / (4 * n), x1.copy(), scale)
    x = _newton_loop(obj2, x1, tol, cfg, report, stats)
    report.regularization_gap = obj2.penalty(x)
    return _finish(base, x, cfg, report, stats, started), report


def minimize(H: AngleGraph, cfg: SolverConfig | None = None) -> tuple[LogRadii, SolveReport]:
    cfg = cfg or SolverConfig()
    if cfg.mode == "regularized":
        return minimize_regularized(H, cfg)
    return minimize_plain(H, cfg)
