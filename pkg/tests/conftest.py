import time

import pytest

from glsurf import geometry, gl2d, oned

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def flat15():
    return oned.solve_1d(1.5)


@pytest.fixture(scope="session")
def disc_run(flat15):
    """Fixed-field minimizer on the unit disc at eps = 0.04, b = 1.5 (shared by several tests)."""
    eps, b = 0.04, 1.5
    poly = geometry.disc()
    t0 = time.perf_counter()
    ds = gl2d.solve_domain(poly, eps, b, profile=flat15.profile, alpha=flat15.alpha_opt, h=0.1, starts=("ansatz",))
    return {"poly": poly, "eps": eps, "b": b, "solve": ds, "wall_time": time.perf_counter() - t0}


@pytest.fixture
def small_disc_mesh():
    from glsurf.mesh import layer_mesh

    return layer_mesh(geometry.disc(), 0.2, depth=3.0, h=0.25)

