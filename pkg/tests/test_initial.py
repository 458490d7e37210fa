import numpy as np
import pytest

from epmesh import initial, models
from epmesh.calculus import ParticleSet
from epmesh.grid import GridSpec
from epmesh.models import ModelSpec, Operators

L = 2 * np.pi
EP = ModelSpec.epdiff(0.3133)


def test_one_particle_per_cell_sits_at_centres(grid8):
    P = initial.init_particles_uniform(grid8, 1)
    assert P.n == 64
    assert np.allclose(np.sort(np.unique(P.X[:, 0])), (np.arange(8) + 0.5) * grid8.dx)
    assert np.all(P.mbar == 0)


@pytest.mark.parametrize("ppc", [1, 4, 9, 16, 25])
def test_particle_count(ppc):
    g = GridSpec(L, L, 8, 9)
    assert initial.init_particles_uniform(g, ppc).n == 8 * 9 * ppc


def test_non_square_count_rejected(grid8):
    with pytest.raises(ValueError):
        initial.init_particles_uniform(grid8, 7)


def test_two_lines_zero_amplitude(grid16):
    ops = Operators(EP, grid16)
    P = initial.init_particles_uniform(grid16, 4)
    Q = initial.init_two_lines(grid16, P, ops, 4, amplitude=0.0)
    assert np.all(Q.mbar == 0)


def test_two_lines_rejects_oversized_strips(grid16):
    with pytest.raises(ValueError, match="wider"):
        initial.two_lines_velocity(grid16, width=4.0)
    with pytest.raises(ValueError, match="wider"):
        initial.two_lines_velocity(grid16, separation=7.0)


def test_two_lines_velocity_shape(grid16):
    u = initial.two_lines_velocity(grid16)
    assert np.all(u[:, 1] == 0)
    assert u[:, 0].max() == pytest.approx(1.0, abs=0.05)
    assert u[:, 0].min() == pytest.approx(-1.0, abs=0.05)
    v = initial.two_lines_velocity(grid16, orientation="y")
    assert np.all(v[:, 0] == 0)


@pytest.fixture(scope="module")
def lines64():
    g = GridSpec(L, L, 64, 64)
    ops = Operators(EP, g, cg_tol=1e-12, cg_max_iter=2000)
    P = initial.init_two_lines(g, initial.init_particles_uniform(g, 16), ops, 16)
    return g, ops, P


def test_two_lines_projection_quality(lines64):
    g, ops, P = lines64
    u = models.velocity_solve(EP, P, ops).u
    target = initial.two_lines_velocity(g)
    assert np.linalg.norm(u - target) / np.linalg.norm(target) < 0.05


@pytest.mark.parametrize("axis", [0, 1])
def test_two_lines_mirror_symmetry(lines64, axis):
    g, ops, P = lines64
    X = P.X.copy()
    X[:, axis] = (L - X[:, axis]) % L
    m = P.mbar.copy()
    m[:, axis] *= -1
    Q = ParticleSet.create(g, X, m, P.Dbar)
    H0 = models.hamiltonian(EP, P, ops)
    assert models.hamiltonian(EP, Q, ops) == pytest.approx(H0, rel=1e-10)


def test_random_particles_scale_with_cell_area(grid8, rng):
    P = initial.init_random(grid8, 500, rng)
    assert np.std(P.mbar / grid8.cell_area) == pytest.approx(1.0, rel=0.1)
    assert np.all((P.X >= 0) & (P.X < L))
