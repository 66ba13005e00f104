"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import subprocess
import sys
import textwrap
import time

import numpy as np
import pytest

import circlepack.solver as solver_mod
from circlepack import instances
from circlepack.io import dumps, instance_from_graph, load_instance, parse_instance, serialize_instance
from circlepack.layout import default_eps, place_vertices
from circlepack.objective import LogRadii, Potential, check_sdd
from circlepack.pipeline import run_pack, run_pdpack
from circlepack.planegraph import build_angle_graph
from circlepack.solver import SolverConfig, minimize_plain, minimize_regularized
from circlepack.verify import build_report
from conftest import FIXTURES, record
from oracles import dense_newton, fixed_point_radii

SQ3 = math.sqrt(3)


def _suite():
    """Named triangulations and random stacked ones up to a thousand vertices."""
    out = [(name, instances.NAMED[name]()) for name in ("k3", "k4", "octahedron", "icosahedron")]
    for n, seeds in ((10, 3), (30, 3), (100, 3), (300, 2), (1000, 2)):
        out += [(f"stacked-{n}-{s}", instances.stacked(n, seed=s)) for s in range(seeds)]
    return out


def test_criterion_01_closed_form():
    cfg = SolverConfig(tol=1e-10)
    run_pdpack(instances.k3(), cfg)  # warm caches outside the timed runs
    errs, times = [], []
    t0 = time.perf_counter()
    k3 = run_pdpack(instances.k3(), cfg)
    times.append(time.perf_counter() - t0)
    t0 = time.perf_counter()
    k4 = run_pdpack(instances.k4(), cfg)
    times.append(time.perf_counter() - t0)
    errs.append(abs(k3.radii()[3] - 1.0))
    r = k4.radii()
    expect = [SQ3] * 3 + [2 - SQ3] + [2 * SQ3 - 3] * 3
    errs.extend(np.abs(r - expect) / expect)
    worst, slow = max(errs), max(times)
    ok = worst <= 1e-9 and slow < 0.1 and k3.exit_code == k4.exit_code == 0
    record(1, ok, f"K3/K4 max rel err {worst:.1e} (<=1e-9), slowest run {slow * 1e3:.1f} ms (<100 ms)")
    assert ok


def test_criterion_02_oracles():
    rng = np.random.default_rng(2024)
    graphs = [instances.octahedron(), instances.icosahedron()]
    graphs += [instances.stacked(int(rng.integers(4, 61)), seed=s) for s in range(20)]
    fp_worst = dn_worst = 0.0
    for g in graphs:
        H = build_angle_graph(g)
        x, rep = minimize_plain(H, SolverConfig(tol=1e-12))
        assert rep.converged
        r = x.radii()
        E, free = H.edges.tolist(), H.free.tolist()
        Xf, _ = fixed_point_radii(E, free, H.n, tol=1e-12)
        Xd = dense_newton(E, free, H.n)
        fp_worst = max(fp_worst, float(np.max(np.abs(np.exp(Xf) - r) / r)))
        dn_worst = max(dn_worst, float(np.max(np.abs(np.exp(Xd) - r) / r)))
    ok = fp_worst <= 1e-8 and dn_worst <= 1e-10
    record(2, ok, f"{len(graphs)} instances: fixed-point {fp_worst:.1e} (<=1e-8), "
                  f"dense Newton {dn_worst:.1e} (<=1e-10)")
    assert ok


def test_criterion_03_residual_certificate():
    tol = 1e-10
    worst_angle = worst_geom = 0.0
    failures = []
    for name, g in _suite():
        sol = run_pdpack(g, SolverConfig(tol=tol))
        rep = sol.report
        worst_angle = max(worst_angle, rep.angle_max)
        worst_geom = max(worst_geom, rep.geometric_max)
        if not sol.converged or rep.angle_max > tol or rep.geometric_max > 1e-6:
            failures.append(name)
    ok = not failures
    record(3, ok, f"{len(_suite())} runs, n_V <= 1000: angle {worst_angle:.1e} (<=1e-10), "
                  f"geometric {worst_geom:.1e} (<=1e-6)" + (f", failed {failures}" if failures else ""))
    assert ok


def test_criterion_04_derivatives(monkeypatch):
    H = build_angle_graph(instances.stacked(40, seed=9))
    obj = Potential(H)
    rng = np.random.default_rng(4)
    g_worst = hv_worst = 0.0
    for _ in range(100):
        x = rng.uniform(-6, 1, H.n_free)
        g = obj.gradient(x)
        # fourth-order central differences of the potential value alone
        h = 1e-3
        fd = np.empty_like(g)
        for k in range(H.n_free):
            e = np.zeros(H.n_free)
            e[k] = h
            f = [obj.value(x + j * e) for j in (-2, -1, 1, 2)]
            fd[k] = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        g_worst = max(g_worst, float(np.max(np.abs(fd - g) / np.abs(g))))
        v = rng.standard_normal(H.n_free)
        hv = obj.hessian(x) @ v
        fdv = (obj.gradient(x + 1e-5 * v) - obj.gradient(x - 1e-5 * v)) / 2e-5
        hv_worst = max(hv_worst, float(np.linalg.norm(fdv - hv) / np.linalg.norm(hv)))

    calls = []

    def counting(A):
        calls.append(A.shape)
        check_sdd(A)

    monkeypatch.setattr(solver_mod, "check_sdd", counting)
    H2 = build_angle_graph(instances.stacked(200, seed=3))
    _, rep = minimize_plain(H2, SolverConfig(tol=1e-10, debug=True))
    sdd_ok = rep.converged and len(calls) >= rep.iterations > 0
    ok = g_worst <= 1e-5 and hv_worst <= 1e-5 and sdd_ok
    record(4, ok, f"gradient {g_worst:.1e}, Hessian-vector {hv_worst:.1e} (<=1e-5); "
                  f"SDD asserted {len(calls)} times over {rep.iterations} iterations")
    assert ok


def test_criterion_05_strong_convexity():
    graphs = [instances.NAMED[k]() for k in ("k3", "k4", "octahedron", "icosahedron")]
    graphs += [instances.stacked(n, seed=s) for n in range(4, 19) for s in range(3)]
    worst = math.inf
    count = 0
    for g in graphs:
        H = build_angle_graph(g)
        if H.n > 50:
            continue
        x, _ = minimize_plain(H, SolverConfig(tol=1e-12))
        lam = float(np.linalg.eigvalsh(Potential(H).hessian(x.values).toarray()).min())
        worst = min(worst, lam * H.n ** 3)
        count += 1
    ok = worst >= 1.0
    record(5, ok, f"{count} instances with n <= 50: min lambda_min * n^3 = {worst:.3g} (>=1)")
    assert ok


def test_criterion_06_iteration_growth():
    extra = []
    for name, g in _suite():
        H = build_angle_graph(g)
        _, a = minimize_plain(H, SolverConfig(tol=1e-6))
        _, b = minimize_plain(H, SolverConfig(tol=1e-12))
        assert a.converged and b.converged
        extra.append(b.iterations - a.iterations)
    ok = max(extra) <= 4
    record(6, ok, f"1e-6 -> 1e-12 adds at most {max(extra)} Newton iterations (<=4) over {len(extra)} instances")
    assert ok


SCALE_SCRIPT = textwrap.dedent("""
    import json, resource, sys, time
    from circlepack import instances
    from circlepack.pipeline import run_pdpack
    from circlepack.solver import SolverConfig
    n, linsolve = int(sys.argv[1]), sys.argv[2]
    g = instances.stacked(n, seed=1)
    t0 = time.perf_counter()
    sol = run_pdpack(g, SolverConfig(tol=1e-8, linsolve=linsolve))
    wall = time.perf_counter() - t0
    print(json.dumps({"n": n, "wall": wall, "converged": sol.converged, "exit": sol.exit_code,
                      "angle": sol.solve.max_angle_residual, "iterations": sol.solve.iterations,
                      "cg": sol.solve.cg_iterations, "log10R": sol.report.log_ratio / 2.302585092994046,
                      "peak_mb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024}))
""")


def _scale_run(n, linsolve="cholesky"):
    proc = subprocess.run([sys.executable, "-c", SCALE_SCRIPT, str(n), linsolve],
                          capture_output=True, text=True, timeout=900, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.mark.slow
def test_criterion_07_scale():
    runs = [_scale_run(n) for n in (1000, 10000, 100000)]
    big = runs[-1]
    ns = np.log([r["n"] for r in runs])
    ts = np.log([r["wall"] for r in runs])
    exponent = float(np.polyfit(ns, ts, 1)[0])
    pcg = [_scale_run(n, "pcg") for n in (1000, 10000)]
    ok = (big["converged"] and big["exit"] == 0 and big["wall"] < 300
          and big["peak_mb"] <= 4096 and exponent <= 1.3)
    times = ", ".join(f"{r['wall']:.2f}" for r in runs)
    cg = ", ".join(f"{r['cg']}" for r in pcg)
    record(7, ok, f"n_V=1e5: {big['wall']:.0f} s (<300), peak {big['peak_mb']:.0f} MB (<=4096), "
                  f"angle {big['angle']:.1e}; times 1e3/1e4/1e5 = {times} s, exponent {exponent:.2f} (<=1.3); "
                  f"PCG iterations 1e3/1e4 = {cg}")
    assert ok


def test_criterion_08_reduction():
    graphs = [instances.cube()]
    graphs += [instances.random_two_connected(30 + 3 * s, seed=s) for s in range(10)]
    worst = 0.0
    consistent = True
    for g in graphs:
        sol = run_pack(g, SolverConfig(tol=1e-10))
        assert sol.converged
        worst = max(worst, sol.report.tangency_max)
        consistent &= sol.report.ratio_consistent
    ok = worst <= 1e-6 and consistent
    record(8, ok, f"cube + 10 random 2-connected at angle tol 1e-10: tangency {worst:.1e} (<=1e-6), "
                  f"R within (2n)^2 of PD R: {consistent}")
    assert ok


def test_criterion_09_modes():
    tol = 1e-10
    diff_worst = 0.0
    ratios = []
    for name, g in _suite():
        H = build_angle_graph(g)
        xp, _ = minimize_plain(H, SolverConfig(tol=tol))
        xr, rep = minimize_regularized(H, SolverConfig(mode="regularized", tol=tol))
        assert rep.converged
        diff_worst = max(diff_worst, float(np.max(np.abs(xp.values - xr.values))))
        norm = float(np.max(np.abs(xp.values)))
        # the doubling starts at 1, so the factor-2 bracket only means something past it
        if norm >= 1.0:
            ratios.append(rep.r_inf_final / norm)
    ok = diff_worst <= 10 * tol and all(1.0 <= q <= 2.0 for q in ratios)
    record(9, ok, f"plain vs regularized {diff_worst:.1e} (<={10 * tol:.0e}); final R_inf / ||x*|| in "
                  f"[{min(ratios):.2f}, {max(ratios):.2f}] over {len(ratios)} instances (within [1, 2])")
    assert ok


def test_criterion_10_determinism():
    g = instances.stacked(500, seed=42)
    texts = [dumps(run_pdpack(g, SolverConfig(tol=1e-10)).to_dict()) for _ in range(2)]
    again = instances.stacked(500, seed=42)
    texts.append(dumps(run_pdpack(again, SolverConfig(tol=1e-10)).to_dict()))
    same = len(set(texts)) == 1
    fixtures = sorted(FIXTURES.glob("*.json"))
    roundtrip = True
    for path in fixtures:
        inst = load_instance(path)
        roundtrip &= serialize_instance(inst) == path.read_text()
        roundtrip &= parse_instance(serialize_instance(inst, text=True)) == inst
    ok = same and roundtrip and len(fixtures) >= 7
    record(10, ok, f"3 runs byte-identical: {same}; parse/serialize identity on {len(fixtures)} fixtures: {roundtrip}")
    assert ok
