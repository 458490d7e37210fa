"""Periodic grid geometry and the two basis families used on it.

Two bases live on the same uniform periodic grid:

* the particle basis ``psi_k``: tensor product of cubic B-splines with knot
  spacing ``dx`` (``dy``), support 4x4 cells, used for particle/grid transfer;
* the finite-element basis ``N_k``: bilinear hat functions on quadrilaterals,
  support 2x2 cells, used to assemble the mass and Helmholtz matrices.

Node ``k`` sits at ``(i*dx, j*dy)`` with ``k = j*nx + i`` so that a node array
reshaped to ``(ny, nx)`` is laid out row-major like an image.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class BasisKind(Enum):
    PARTICLE = "psi"
    FE = "N"


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic ``nx`` x ``ny`` grid on ``[0, Lx) x [0, Ly)``."""

    Lx: float
    Ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid needs at least 8 nodes per direction, got {self.nx}x{self.ny}")
        if not (np.isfinite(self.Lx) and np.isfinite(self.Ly)) or self.Lx <= 0 or self.Ly <= 0:
            raise ValueError(f"domain lengths must be positive, got {self.Lx}, {self.Ly}")

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def dy(self):
        return self.Ly / self.ny

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def m(self):
        return self.nx * self.ny

    def node_index(self, i, j):
        return (np.asarray(j) % self.ny) * self.nx + (np.asarray(i) % self.nx)

    def node_ij(self, k):
        k = np.asarray(k)
        return k % self.nx, k // self.nx

    def node_coords(self):
        """Return the ``(m, 2)`` array of node positions."""
        i, j = self.node_ij(np.arange(self.m))
        return np.column_stack([i * self.dx, j * self.dy])

    def _check_index(self, k):
        if not 0 <= int(k) < self.m:
            raise IndexError(f"node index {k} out of range for {self.m} nodes")


def wrap(grid, p):
    """Map raw coordinates onto the fundamental domain ``[0,Lx) x [0,Ly)``."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite particle coordinates")
    out = np.empty_like(p)
    out[..., 0] = np.mod(p[..., 0], grid.Lx)
    out[..., 1] = np.mod(p[..., 1], grid.Ly)
    # np.mod can return L itself for tiny negative inputs
    out[..., 0][out[..., 0] >= grid.Lx] = 0.0
    out[..., 1][out[..., 1] >= grid.Ly] = 0.0
    return out


def minimal_image(d, length):
    """Periodic difference folded into ``[-L/2, L/2)``."""
    return d - length * np.floor(d / length + 0.5)


# ---------------------------------------------------------------- 1D kernels

def bspline3(r):
    """Centred cubic B-spline of unit knot spacing, ``B(0) = 2/3``."""
    a = np.abs(r)
    return np.where(
        a < 1.0,
        2.0 / 3.0 - a * a + 0.5 * a ** 3,
        np.where(a < 2.0, (2.0 - a) ** 3 / 6.0, 0.0),
    )


def bspline3_deriv(r):
    a = np.abs(r)
    s = np.sign(r)
    return np.where(
        a < 1.0,
        -2.0 * r + 1.5 * a * r,
        np.where(a < 2.0, -0.5 * s * (2.0 - a) ** 2, 0.0),
    )


def hat(r):
    return np.maximum(0.0, 1.0 - np.abs(r))


def hat_deriv(r):
    a = np.abs(r)
    return np.where(a < 1.0, -np.sign(r), 0.0)


# ------------------------------------------------------- single-node kernels

def psi_eval(grid, k, p):
    """Value of the particle basis function centred at node ``k`` at ``p``."""
    grid._check_index(k)
    xk = grid.node_coords()[k]
    rx = minimal_image(p[0] - xk[0], grid.Lx) / grid.dx
    ry = minimal_image(p[1] - xk[1], grid.Ly) / grid.dy
    return float(bspline3(rx) * bspline3(ry))


def psi_grad(grid, k, p):
    """Gradient of ``psi_k`` with respect to the evaluation point ``p``."""
    grid._check_index(k)
    xk = grid.node_coords()[k]
    rx = minimal_image(p[0] - xk[0], grid.Lx) / grid.dx
    ry = minimal_image(p[1] - xk[1], grid.Ly) / grid.dy
    return np.array([
        bspline3_deriv(rx) * bspline3(ry) / grid.dx,
        bspline3(rx) * bspline3_deriv(ry) / grid.dy,
    ])


def fe_eval(grid, k, p):
    grid._check_index(k)
    xk = grid.node_coords()[k]
    rx = minimal_image(p[0] - xk[0], grid.Lx) / grid.dx
    ry = minimal_image(p[1] - xk[1], grid.Ly) / grid.dy
    return float(hat(rx) * hat(ry))


# ------------------------------------------------------- vectorised stencils

def _stencil_1d(x, h, n, width):
    """Base index and offsets of the ``width`` nodes around each coordinate."""
    s = x / h
    base = np.floor(s).astype(np.int64)
    if width == 4:
        offs = np.arange(-1, 3)
    else:
        offs = np.arange(0, 2)
    idx = base[:, None] + offs[None, :]
    r = s[:, None] - idx
    return np.mod(idx, n), r


def stencil_weights(grid, X, kind=BasisKind.PARTICLE, derivatives=True):
    """Evaluate the basis on the local stencil of every point in ``X``.

    Returns ``(nodes, w, gx, gy)`` with shape ``(n, s)`` each, where ``s`` is
    16 for the particle basis and 4 for the FE basis; the stencil is ordered
    row-major (y slowest).  ``gx``/``gy`` are ``None`` if ``derivatives`` is
    false.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    width = 4 if kind is BasisKind.PARTICLE else 2
    f, df = (bspline3, bspline3_deriv) if width == 4 else (hat, hat_deriv)
    ix, rx = _stencil_1d(X[:, 0], grid.dx, grid.nx, width)
    iy, ry = _stencil_1d(X[:, 1], grid.dy, grid.ny, width)
    wx, wy = f(rx), f(ry)
    n = X.shape[0]
    nodes = (iy[:, :, None] * grid.nx + ix[:, None, :]).reshape(n, -1)
    w = (wy[:, :, None] * wx[:, None, :]).reshape(n, -1)
    if not derivatives:
        return nodes, w, None, None
    dwx, dwy = df(rx) / grid.dx, df(ry) / grid.dy
    gx = (wy[:, :, None] * dwx[:, None, :]).reshape(n, -1)
    gy = (dwy[:, :, None] * wx[:, None, :]).reshape(n, -1)
    return nodes, w, gx, gy


def support_nodes(grid, p, kind=BasisKind.PARTICLE):
    """Node indices of the basis stencil containing ``p``, row-major."""
    nodes, _, _, _ = stencil_weights(grid, np.asarray(p, dtype=float)[None, :], kind, derivatives=False)
    return [int(k) for k in nodes[0]]
