import math
import time

import pytest

from largesol.geometry import ConvexPolygon, DiskDomain

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}
# fixture name -> wall seconds spent building it
TIMINGS = {}

H = 1.0 / 512
SQUARE_LEVELS = (4.0, 6.0, 10.0)
P_LIST = (1.5, 1.3, 1.2, 1.1, 1.05)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def unit_square():
    return ConvexPolygon.rectangle(0.0, 0.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def unit_disk():
    return DiskDomain((0.0, 0.0), 1.0)


@pytest.fixture(scope="session")
def square_fields(unit_square):
    """Analytic and min-cut fields on the unit square at h = 1/512, lambda_max = 100."""
    from largesol.field import tv_large_solution
    t0 = time.perf_counter()
    fa = tv_large_solution(unit_square, 100.0, H, backend="analytic", extra=SQUARE_LEVELS)
    fm = tv_large_solution(unit_square, 100.0, H, backend="mincut", extra=SQUARE_LEVELS)
    TIMINGS["square_fields"] = time.perf_counter() - t0
    return fa, fm


@pytest.fixture(scope="session")
def disk_fields(unit_disk):
    from largesol.field import tv_large_solution
    t0 = time.perf_counter()
    fa = tv_large_solution(unit_disk, 10.0, H, backend="analytic")
    fm = tv_large_solution(unit_disk, 10.0, H, backend="mincut")
    TIMINGS["disk_fields"] = time.perf_counter() - t0
    return fa, fm


@pytest.fixture(scope="session")
def sq_sweep():
    """Large profiles for f = s^2, R = 1 across the default p-list."""
    from largesol.absorption import Power
    from largesol.radial import RadialProblem, p_sweep
    t0 = time.perf_counter()
    rows = p_sweep(RadialProblem(Power(1.0, 2.0), 1.0, 2), list(P_LIST))
    TIMINGS["sq_sweep"] = time.perf_counter() - t0
    return rows


SQRT2 = math.sqrt(2.0)
