"""Initial particle configurations."""

import math

import numpy as np
import scipy.sparse as sp

from .calculus import ParticleSet, Transfer
from .fem import SparseOperator, cg_solve


def lattice_positions(grid, particles_per_cell):
    p = math.isqrt(particles_per_cell)
    if p * p != particles_per_cell or p < 1:
        raise ValueError(f"particles_per_cell must be a perfect square, got {particles_per_cell}")
    sub = (np.arange(p) + 0.5) / p
    xs = (np.arange(grid.nx)[:, None] + sub[None, :]).ravel() * grid.dx
    ys = (np.arange(grid.ny)[:, None] + sub[None, :]).ravel() * grid.dy
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def init_particles_uniform(grid, particles_per_cell=16, density=1.0):
    """``p x p`` particles per cell at rest.

    The weights ``Dbar = density * dS**2 / p**2`` make the grid average of
    ``Dbar`` equal to ``density``: on this lattice every node collects
    ``sum_b psi_k(X_b) = p**2`` and the mass-matrix rows sum to ``dS``.
    """
    X = lattice_positions(grid, particles_per_cell)
    n = len(X)
    Dbar = np.full(n, density * grid.cell_area ** 2 / particles_per_cell)
    return ParticleSet(X, np.zeros((n, 2)), Dbar)


def two_lines_velocity(grid, amplitude=1.0, width=0.2, separation=math.pi / 2,
                       orientation="x", length=math.pi, offset=0.0):
    """Nodal target velocity of two colliding strips.

    With ``orientation="x"`` the strips are lines of constant ``x`` centred at
    ``Lx/2 -+ separation/2`` carrying x-velocity ``+-amplitude`` towards each
    other, with cross profile ``exp(-(d/width)**2)``.  ``length`` limits the
    extent along the strip with a smooth super-Gaussian taper (``None`` for
    lines spanning the domain); ``offset`` shifts the two strips apart along
    their length.  ``orientation="y"`` is the same with the axes swapped.
    """
    if orientation not in ("x", "y"):
        raise ValueError(f"orientation must be 'x' or 'y', got {orientation!r}")
    xy = grid.node_coords()
    if orientation == "x":
        across, along, L_across, L_along = xy[:, 0], xy[:, 1], grid.Lx, grid.Ly
    else:
        across, along, L_across, L_along = xy[:, 1], xy[:, 0], grid.Ly, grid.Lx
    if 2 * width >= L_across or separation >= L_across:
        raise ValueError("strips wider than the domain")

    def periodic_gap(a, centre, period):
        d = a - centre
        return d - period * np.round(d / period)

    u = np.zeros(grid.m)
    for sign, shift in ((1.0, -0.5), (-1.0, 0.5)):
        centre = 0.5 * L_across + shift * separation
        prof = np.exp(-(periodic_gap(across, centre, L_across) / width) ** 2)
        if length is not None and length < L_along:
            mid = 0.5 * L_along + shift * offset
            prof = prof * np.exp(-(periodic_gap(along, mid, L_along) / (0.5 * length)) ** 8)
        u += sign * amplitude * prof
    out = np.zeros((grid.m, 2))
    out[:, 0 if orientation == "x" else 1] = u
    return out


def momentum_for_velocity(grid, P, target_mu, particles_per_cell, tol=1e-12):
    """Particle momenta whose scatter equals ``target_mu``.

    Momenta are sampled from a nodal field ``c`` as
    ``mbar_b = (dS**2/p**2) [c]_b``, with ``c`` chosen so that
    ``scatter(mbar) = target_mu``; ``c`` then approximates the continuum
    momentum at the nodes.
    """
    tr = Transfer(grid, P.X)
    w = grid.cell_area ** 2 / particles_per_cell
    G = SparseOperator(sp.csr_matrix(tr.psi_t @ tr.psi), name="PsiTPsi")
    rhs = np.atleast_2d(target_mu.T).T * grid.cell_area / w
    c = np.column_stack([cg_solve(G, rhs[:, k], tol, max_iter=5000)[0] for k in range(rhs.shape[1])])
    return w * tr.gather(c)


def init_two_lines(grid, P, ops, particles_per_cell, amplitude=1.0, width=0.2,
                   separation=math.pi / 2, orientation="x", length=math.pi, offset=0.0):
    """Give the uniform set ``P`` the momentum of two colliding strips.

    ``ops`` must carry the Helmholtz matrix ``A`` (EP-Diff); the momenta are
    set so that the velocity solve reproduces the strip velocity field.
    """
    u_star = two_lines_velocity(grid, amplitude, width, separation, orientation, length, offset)
    if amplitude == 0:
        return P.with_momentum(np.zeros_like(P.mbar))
    target = ops.A @ u_star
    return P.with_momentum(momentum_for_velocity(grid, P, target, particles_per_cell))


def init_random(grid, n, rng, momentum_scale=1.0, Dbar=None):
    """``n`` particles at uniformly random positions with Gaussian momenta.

    ``momentum_scale`` is in units of ``dS`` so that the canonical momenta
    ``mbar/dS`` are of order one.
    """
    X = rng.uniform(0.0, 1.0, (n, 2)) * [grid.Lx, grid.Ly]
    mbar = rng.normal(size=(n, 2)) * momentum_scale * grid.cell_area
    D = np.ones(n) if Dbar is None else np.broadcast_to(np.asarray(Dbar, dtype=float), (n,)).copy()
    return ParticleSet.create(grid, X, mbar, D)
