import copy
import math

import numpy as np
import pytest

from circlepack import instances
from circlepack.layout import default_eps, place_vertices
from circlepack.objective import LogRadii
from circlepack.pipeline import run_pack
from circlepack.planegraph import build_angle_graph
from circlepack.verify import (PackingReport, angle_residuals, build_report, geometric_residuals,
                               overlap_check, primal_tangency, ratio_diagnostics)
from conftest import solved

SQ3 = math.sqrt(3)


def _k3_at(delta):
    H = build_angle_graph(instances.k3())
    return H, LogRadii(H, [delta])


def test_k3_exact_residual_zero():
    H, x = _k3_at(0.0)
    res = angle_residuals(H, x)
    assert res.max <= 1e-15 and res.pinned.max() <= 1e-15


@pytest.mark.parametrize("delta", [1e-3, -1e-4, 1e-6])
def test_k3_residual_first_order(delta):
    # the face angle sum is 3 arctan(sqrt3 e^-x); its slope at 0 is -3 sqrt3 / 4
    H, x = _k3_at(delta)
    assert angle_residuals(H, x).max == pytest.approx(3 * SQ3 / 4 * abs(delta), rel=1e-2)


def test_k4_centre_residual_at_zero():
    # all free log-radii 0: the centre sees three unit faces at pi/4 each
    H = build_angle_graph(instances.k4())
    res = angle_residuals(H, LogRadii(H, np.zeros(H.n_free)))
    centre = list(H.free).index(3)
    assert res.free[centre] == pytest.approx(math.pi / 4, abs=1e-15)


def test_k4_solution_residuals():
    H, x, _ = solved("k4")
    assert angle_residuals(H, x).max <= 1e-14


@pytest.mark.parametrize("name", ["k3", "k4"])
def test_exact_geometry(name):
    H, x, rep = solved(name)
    L = place_vertices(H, x, default_eps(rep.log_radius_error))
    g = geometric_residuals(H, L)
    assert max(g.values()) <= 1e-12


def test_displacement_residual_linear():
    H, x, rep = solved("k4")
    L = place_vertices(H, x, default_eps(rep.log_radius_error))
    s1 = H.pinned[0]
    r = L.radii
    d = L.positions[s1] - L.positions[3]
    delta = 1e-7
    moved = copy.deepcopy(L)
    moved.hi[3] -= delta * d / np.linalg.norm(d)
    res = primal_tangency(moved, np.array([[s1, 3]]))
    assert res[0] == pytest.approx(delta / (r[s1] + r[3]), rel=1e-4)
    assert geometric_residuals(H, moved)["primal_tangency_max"] >= res[0]


def test_k3_ratio():
    H, x, _ = solved("k3")
    log_ratio, ok = ratio_diagnostics(x)
    assert math.exp(log_ratio) == pytest.approx(SQ3, rel=1e-12) and ok


def test_k4_ratio_closed_form():
    # symmetry: faces r_f = sqrt3 tan(pi/12), centre r_f / sqrt3
    H, x, _ = solved("k4")
    log_ratio, ok = ratio_diagnostics(x)
    r = x.radii()
    assert r[3] == pytest.approx(2 - SQ3, rel=1e-12)
    assert r[H.n_primal:] == pytest.approx([2 * SQ3 - 3] * 3, rel=1e-12)
    assert math.exp(log_ratio) == pytest.approx(2 * SQ3 + 3, rel=1e-12)
    assert ok


def test_report_roundtrip():
    H, x, rep = solved("octahedron")
    L = place_vertices(H, x, default_eps(rep.log_radius_error))
    report = build_report(H, x, L, solver=rep.to_dict(), check_overlap=True)
    again = PackingReport.from_dict(report.to_dict())
    assert again == report
    with pytest.raises(ValueError):
        PackingReport.from_dict({**report.to_dict(), "bogus": 1})


@pytest.mark.parametrize("name", ["octahedron", "icosahedron", "stacked-200-4"])
def test_no_overlaps_in_packing(name):
    H, x, rep = solved(name)
    L = place_vertices(H, x, default_eps(rep.log_radius_error))
    report = build_report(H, x, L, check_overlap=True)
    assert report.overlap_pairs == 0
    assert report.overlap_max <= 1e-8


def test_overlap_detected():
    H, x, rep = solved("octahedron")
    L = copy.deepcopy(place_vertices(H, x, default_eps(rep.log_radius_error)))
    pe = {tuple(e) for e in H.graph.edges().tolist()}
    a, b = next((a, b) for a in range(6) for b in range(a + 1, 6) if (a, b) not in pe)
    L.hi[a] = L.hi[b]
    count, depth = overlap_check(L, np.arange(6), pe)
    assert count >= 1 and depth >= 1.0


def test_overlap_check_refuses_large_input():
    H, x, rep = solved("k4")
    L = place_vertices(H, x, default_eps(rep.log_radius_error))
    with pytest.raises(ValueError):
        overlap_check(L, np.arange(H.n), set(), limit=3)


def test_cube_primal_tangency():
    sol = run_pack(instances.cube(), check_overlap=True)
    assert sol.exit_code == 0
    assert sol.report.tangency_max <= 1e-6
    assert sol.report.overlap_pairs == 0
    assert sol.report.ratio_consistent


def test_layout_rejected_if_incomplete():
    H, x, rep = solved("k4")
    L = copy.deepcopy(place_vertices(H, x, default_eps(rep.log_radius_error)))
    L.hi[3] = np.nan
    with pytest.raises(ValueError):
        geometric_residuals(H, L)
