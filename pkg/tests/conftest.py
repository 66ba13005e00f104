import functools
from pathlib import Path

import pytest

from circlepack import instances
from circlepack.planegraph import build_angle_graph
from circlepack.solver import SolverConfig, minimize_plain

FIXTURES = Path(__file__).parent / "fixtures"

# acceptance outcomes, printed once at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@functools.lru_cache(maxsize=None)
def solved(name: str, tol: float = 1e-10):
    """Plain-mode solution of a named graph or ``stacked-<n>-<seed>``, cached per session."""
    if name.startswith("stacked-"):
        _, n, seed = name.split("-")
        g = instances.stacked(int(n), seed=int(seed))
    else:
        g = instances.NAMED[name]()
    H = build_angle_graph(g)
    x, rep = minimize_plain(H, SolverConfig(tol=tol))
    return H, x, rep


@pytest.fixture
def fixtures_dir():
    return FIXTURES
