"""Particle/grid transfer maps.

Grid fields are plain arrays of shape ``(m,)`` (scalar) or ``(m, 2)``
(vector), node-ordered as in :class:`~epmesh.grid.GridSpec`.  Particle
densities are arrays of shape ``(n,)`` or ``(n, 2)``.

For a fixed set of positions the particle basis is precomputed into three
sparse ``n x m`` matrices (values and the two gradient components), so every
map below is one sparse product.  Sparse products are evaluated serially in a
fixed order, which makes all scatters bit-reproducible.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .grid import BasisKind, stencil_weights, wrap


@dataclass(frozen=True)
class ParticleSet:
    """Particle positions ``X`` (n, 2), momentum densities ``mbar`` (n, 2)
    and constant mass weights ``Dbar`` (n,)."""

    X: np.ndarray
    mbar: np.ndarray
    Dbar: np.ndarray

    def __post_init__(self):
        n = len(self.X)
        if n < 1:
            raise ValueError("a particle set needs at least one particle")
        if self.X.shape != (n, 2) or self.mbar.shape != (n, 2) or self.Dbar.shape != (n,):
            raise ValueError("inconsistent particle array shapes")
        if np.any(self.Dbar <= 0):
            raise ValueError("mass weights must be positive")

    @property
    def n(self):
        return len(self.X)

    @classmethod
    def create(cls, grid, X, mbar=None, Dbar=None):
        X = wrap(grid, X)
        n = len(X)
        mbar = np.zeros((n, 2)) if mbar is None else np.array(mbar, dtype=float)
        Dbar = np.ones(n) if Dbar is None else np.array(Dbar, dtype=float)
        return cls(X, mbar, Dbar)

    def with_momentum(self, mbar):
        return replace(self, mbar=np.asarray(mbar, dtype=float))

    def with_positions(self, X):
        return replace(self, X=X)


class GridMismatchError(ValueError):
    pass


class Transfer:
    """Particle-basis interpolation matrices for one set of positions."""

    def __init__(self, grid, X):
        self.grid = grid
        self.X = np.asarray(X)
        n = len(self.X)
        nodes, w, gx, gy = stencil_weights(grid, self.X, BasisKind.PARTICLE)
        indptr = np.arange(0, 16 * n + 1, 16)
        shape = (n, grid.m)
        idx = nodes.ravel()
        self.psi = sp.csr_matrix((w.ravel(), idx, indptr), shape=shape)
        self.dpsi = (
            sp.csr_matrix((gx.ravel(), idx, indptr), shape=shape),
            sp.csr_matrix((gy.ravel(), idx, indptr), shape=shape),
        )
        self.psi_t = self.psi.T.tocsr()
        self.dpsi_t = tuple(d.T.tocsr() for d in self.dpsi)

    @property
    def n(self):
        return self.psi.shape[0]

    def _check(self, f):
        if f.shape[0] != self.grid.m:
            raise GridMismatchError(f"field has {f.shape[0]} nodes, grid has {self.grid.m}")

    def gather(self, f):
        """``[f]_b = sum_k f_k psi_k(X_b)``."""
        f = np.asarray(f, dtype=float)
        self._check(f)
        return self.psi @ f

    def gather_grad(self, f):
        """``[grad f]_b``; shape ``(n, 2)`` for scalar ``f`` and ``(n, 2, 2)``
        for vector ``f``, with ``J[b, i, j] = d_i f_j``."""
        f = np.asarray(f, dtype=float)
        self._check(f)
        return np.stack([self.dpsi[0] @ f, self.dpsi[1] @ f], axis=1)

    def scatter(self, fbar):
        """Raw one-form scatter ``mu_k = sum_b (fbar_b / dS) psi_k(X_b)``."""
        fbar = np.asarray(fbar, dtype=float)
        return self.psi_t @ (fbar / self.grid.cell_area)

    def scatter_grad(self, fbar):
        """``-sum_b (fbar_b / dS) . grad psi_k(X_b)`` for vector ``fbar``."""
        fbar = np.asarray(fbar, dtype=float) / self.grid.cell_area
        if fbar.ndim == 2:
            return -(self.dpsi_t[0] @ fbar[:, 0] + self.dpsi_t[1] @ fbar[:, 1])
        # (n, 2, c): divergence taken over the middle axis
        return -(self.dpsi_t[0] @ fbar[:, 0, :] + self.dpsi_t[1] @ fbar[:, 1, :])

    # particle-to-grid maps including the mass-matrix solve

    def scatter_avg(self, fbar, mass_solve):
        return mass_solve(self.scatter(fbar))

    def scatter_product(self, fbar, g, mass_solve):
        fbar = np.asarray(fbar, dtype=float)
        gb = self.gather(g)
        if gb.ndim > fbar.ndim:
            fbar = fbar[:, None]
        return mass_solve(self.scatter(fbar * gb))

    def scatter_div(self, fbar_vec, mass_solve):
        return mass_solve(self.scatter_grad(fbar_vec))


# Functional forms over a ParticleSet; each builds the transfer on the fly.

def gather(grid, f, P):
    return Transfer(grid, P.X).gather(f)


def gather_grad(grid, f, P):
    return Transfer(grid, P.X).gather_grad(f)


def scatter(grid, fbar, P):
    return Transfer(grid, P.X).scatter(fbar)


def scatter_avg(grid, fbar, P, mass_solve):
    return Transfer(grid, P.X).scatter_avg(fbar, mass_solve)


def scatter_product(grid, fbar, g, P, mass_solve):
    return Transfer(grid, P.X).scatter_product(fbar, g, mass_solve)


def scatter_div(grid, fbar_vec, P, mass_solve):
    return Transfer(grid, P.X).scatter_div(fbar_vec, mass_solve)
