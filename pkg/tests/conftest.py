import numpy as np
import pytest

from epmesh.grid import GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def grid8():
    return GridSpec(2 * np.pi, 2 * np.pi, 8, 8)


@pytest.fixture
def grid16():
    return GridSpec(2 * np.pi, 2 * np.pi, 16, 16)


def cox_de_boor(x, knots, i, p):
    """B-spline ``B_{i,p}`` on ``knots`` by the Cox-de Boor recursion."""
    if p == 0:
        return 1.0 if knots[i] <= x < knots[i + 1] else 0.0
    left = right = 0.0
    if knots[i + p] != knots[i]:
        left = (x - knots[i]) / (knots[i + p] - knots[i]) * cox_de_boor(x, knots, i, p - 1)
    if knots[i + p + 1] != knots[i + 1]:
        right = (knots[i + p + 1] - x) / (knots[i + p + 1] - knots[i + 1]) * cox_de_boor(x, knots, i + 1, p - 1)
    return left + right


def cubic_bspline_oracle(r):
    """Centred cubic B-spline with unit knots, evaluated by recursion."""
    return cox_de_boor(r, [-2.0, -1.0, 0.0, 1.0, 2.0], 0, 3)


def dense_psi(grid, X):
    """Dense ``(n, m)`` matrix of ``psi_k(X_b)`` built node by node from the oracle."""
    nodes = grid.node_coords()
    out = np.zeros((len(X), grid.m))
    for b, (x, y) in enumerate(X):
        for k, (xk, yk) in enumerate(nodes):
            dx = (x - xk + grid.Lx / 2) % grid.Lx - grid.Lx / 2
            dy = (y - yk + grid.Ly / 2) % grid.Ly - grid.Ly / 2
            out[b, k] = cubic_bspline_oracle(dx / grid.dx) * cubic_bspline_oracle(dy / grid.dy)
    return out


# One summary line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance(request):
    def report(number, passed, detail):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES[number] = f"criterion {number}: {status}  {detail}"
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
