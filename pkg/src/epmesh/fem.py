"""Bilinear finite-element matrices on the periodic grid and a PCG solver.

All element integrals use 2x2 Gauss quadrature per cell.  The weighted
Helmholtz integrand is at most cubic per direction, so the rule is exact for
M, A and B alike; in particular ``B(D=1) == A`` to rounding.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


class ConvergenceError(RuntimeError):
    """Raised when an iterative solve hits its iteration cap."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonPositiveWeightError(ValueError):
    def __init__(self, nodes):
        super().__init__(f"{len(nodes)} node(s) with non-positive depth weight, first: {list(nodes[:5])}")
        self.nodes = nodes


@dataclass
class SolveReport:
    iterations: int
    residual: float


@dataclass(frozen=True)
class SparseOperator:
    """Symmetric sparse matrix with the flags the solvers rely on."""

    matrix: sp.csr_matrix
    name: str = ""
    positive_definite: bool = True
    diagonal: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.diagonal is None:
            object.__setattr__(self, "diagonal", self.matrix.diagonal())

    @property
    def m(self):
        return self.matrix.shape[0]

    def __matmul__(self, x):
        return self.matrix @ x

    def symmetry_defect(self):
        d = abs(self.matrix - self.matrix.T)
        return d.max() / abs(self.matrix).max() if d.nnz else 0.0

    def toarray(self):
        return self.matrix.toarray()


class _Element:
    """Reference quantities of the bilinear element at the 4 Gauss points."""

    def __init__(self, dx, dy):
        gx, gy = np.meshgrid(_GAUSS, _GAUSS, indexing="xy")
        qx, qy = gx.ravel(), gy.ravel()
        # local node order (0,0) (1,0) (0,1) (1,1), i.e. row-major in the cell
        ax = np.array([0, 1, 0, 1])
        ay = np.array([0, 0, 1, 1])
        fx = np.where(ax[None, :] == 1, qx[:, None], 1.0 - qx[:, None])
        fy = np.where(ay[None, :] == 1, qy[:, None], 1.0 - qy[:, None])
        dfx = np.where(ax[None, :] == 1, 1.0, -1.0) / dx
        dfy = np.where(ay[None, :] == 1, 1.0, -1.0) / dy
        self.N = fx * fy                        # (q, a)
        self.dNx = dfx * fy
        self.dNy = fx * dfy
        self.weight = 0.25 * dx * dy            # equal Gauss weights
        self.mass = self.weight * np.einsum("qa,qb->ab", self.N, self.N)
        self.stiff = self.weight * (
            np.einsum("qa,qb->ab", self.dNx, self.dNx) + np.einsum("qa,qb->ab", self.dNy, self.dNy)
        )


class Assembler:
    """Caches the periodic element-to-node map and the CSR sparsity pattern."""

    def __init__(self, grid):
        self.grid = grid
        self.element = _Element(grid.dx, grid.dy)
        ci, cj = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="xy")
        ci, cj = ci.ravel(), cj.ravel()
        self.cells = np.column_stack([
            grid.node_index(ci, cj), grid.node_index(ci + 1, cj),
            grid.node_index(ci, cj + 1), grid.node_index(ci + 1, cj + 1),
        ])
        rows = np.repeat(self.cells, 4, axis=1).ravel()
        cols = np.tile(self.cells, (1, 4)).ravel()
        m = grid.m
        keys, self._slot = np.unique(rows * m + cols, return_inverse=True)
        self._indices = (keys % m).astype(np.int32)
        self._indptr = np.searchsorted(keys // m, np.arange(m + 1)).astype(np.int32)

    def _build(self, local):
        """Sum per-cell 4x4 blocks ``local`` (ncell, 4, 4) into a CSR matrix."""
        data = np.bincount(self._slot, weights=local.reshape(-1), minlength=len(self._indices))
        m = self.grid.m
        return sp.csr_matrix((data, self._indices.copy(), self._indptr.copy()), shape=(m, m))

    def mass(self):
        ncell = self.cells.shape[0]
        return self._build(np.broadcast_to(self.element.mass, (ncell, 4, 4)))

    def stiffness(self):
        ncell = self.cells.shape[0]
        return self._build(np.broadcast_to(self.element.stiff, (ncell, 4, 4)))

    def weighted_helmholtz(self, alpha, weight):
        e = self.element
        wq = weight[self.cells] @ e.N.T          # (cell, q)
        blocks = e.weight * (
            np.einsum("cq,qa,qb->cab", wq, e.N, e.N)
            + alpha ** 2 * (
                np.einsum("cq,qa,qb->cab", wq, e.dNx, e.dNx)
                + np.einsum("cq,qa,qb->cab", wq, e.dNy, e.dNy)
            )
        )
        return self._build(blocks)

    def energy_density_load(self, alpha, u):
        """Return ``v_k = 1/2 u . (dB/dD_k) u`` for a vector nodal field ``u``.

        Equivalently ``1/2 * integral N_k (|u_h|^2 + alpha^2 |grad u_h|^2)``,
        where ``u_h`` is the bilinear interpolant of ``u`` (shape ``(m, 2)``).
        """
        e = self.element
        uc = u[self.cells]                       # (cell, node, comp)
        uq = np.einsum("qa,eac->eqc", e.N, uc)
        uxq = np.einsum("qa,eac->eqc", e.dNx, uc)
        uyq = np.einsum("qa,eac->eqc", e.dNy, uc)
        dens = (uq ** 2).sum(-1) + alpha ** 2 * ((uxq ** 2).sum(-1) + (uyq ** 2).sum(-1))
        local = 0.5 * e.weight * dens @ e.N      # (cell, a)
        return np.bincount(self.cells.ravel(), weights=local.ravel(), minlength=self.grid.m)


def assemble_mass(grid, assembler=None):
    asm = assembler or Assembler(grid)
    return SparseOperator(asm.mass(), name="M")


def assemble_stiffness(grid, assembler=None):
    asm = assembler or Assembler(grid)
    return SparseOperator(asm.stiffness(), name="K")


def assemble_helmholtz(grid, alpha, assembler=None):
    """``A = M + alpha^2 K``, the discrete modified Helmholtz operator."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    asm = assembler or Assembler(grid)
    return SparseOperator(asm.mass() + alpha ** 2 * asm.stiffness(), name="A")


def assemble_weighted_helmholtz(grid, alpha, depth, assembler=None, check=True):
    """Density-weighted Helmholtz matrix ``B(D)``.

    ``depth`` holds nodal depths; the weight inside each cell is their
    bilinear interpolant.  With ``check`` set, non-positive nodes raise
    :class:`NonPositiveWeightError` since positive-definiteness is then lost.
    """
    depth = np.asarray(depth, dtype=float)
    if check:
        bad = np.flatnonzero(depth <= 0.0)
        if bad.size:
            raise NonPositiveWeightError(bad)
    asm = assembler or Assembler(grid)
    return SparseOperator(asm.weighted_helmholtz(alpha, depth), name="B")


# --------------------------------------------------------------------- PCG

def incomplete_cholesky(S):
    """Zero-fill incomplete Cholesky factor ``L`` (lower, CSR) of ``S``."""
    A = sp.tril(S.matrix, format="csr")
    A.sort_indices()
    m = A.shape[0]
    rows = []
    for i in range(m):
        cols = A.indices[A.indptr[i]:A.indptr[i + 1]]
        vals = A.data[A.indptr[i]:A.indptr[i + 1]]
        row = {}
        for k, a in zip(cols, vals):
            if k == i:
                d = a - sum(v * v for v in row.values())
                if d <= 0.0:
                    raise ValueError(f"incomplete Cholesky breakdown at row {i}")
                row[i] = np.sqrt(d)
            else:
                rk = rows[k]
                s = sum(v * rk[j] for j, v in row.items() if j in rk)
                row[k] = (a - s) / rk[k]
        rows.append(row)
    indptr = np.cumsum([0] + [len(r) for r in rows])
    indices = np.fromiter((j for r in rows for j in r), dtype=np.int64, count=indptr[-1])
    data = np.fromiter((v for r in rows for v in r.values()), dtype=float, count=indptr[-1])
    return sp.csr_matrix((data, indices, indptr), shape=(m, m))


def _preconditioner(S, kind):
    if isinstance(kind, _CachedPreconditioner):
        return kind.apply
    if kind == "jacobi":
        inv = 1.0 / S.diagonal
        return lambda r: inv * r
    if kind == "ic":
        L = incomplete_cholesky(S)
        Lt = L.T.tocsr()
        return lambda r: spla.spsolve_triangular(Lt, spla.spsolve_triangular(L, r, lower=True), lower=False)
    if kind is None or kind == "none":
        return lambda r: r
    raise ValueError(f"unknown preconditioner {kind!r}")


def cg_solve(S, b, tol=1e-9, max_iter=500, x0=None, preconditioner="jacobi"):
    """Preconditioned conjugate gradients for symmetric positive-definite ``S``.

    Stops once ``||S x - b|| <= tol * ||b||`` (checked on the true residual).
    Returns ``(x, SolveReport)``; raises :class:`ConvergenceError` carrying the
    report when ``max_iter`` is exceeded.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0)
    apply_p = _preconditioner(S, preconditioner)
    A = S.matrix
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    target = tol * bnorm
    z = apply_p(r)
    p = z.copy()
    rz = r @ z
    it = 0
    while np.linalg.norm(r) > target:
        if it >= max_iter:
            rep = SolveReport(it, np.linalg.norm(b - A @ x) / bnorm)
            raise ConvergenceError(f"CG did not reach tol={tol:g} in {max_iter} iterations "
                                   f"(residual {rep.residual:.3e})", rep)
        Ap = A @ p
        a = rz / (p @ Ap)
        x += a * p
        r -= a * Ap
        z = apply_p(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    return x, SolveReport(it, np.linalg.norm(b - A @ x) / bnorm)


class Solver:
    """CG solve bound to one operator, applied column-wise to vector fields.

    Keeps the reports of every solve since the last :meth:`reset_reports`
    so callers can surface iteration counts.
    """

    def __init__(self, S, tol=1e-9, max_iter=500, preconditioner="jacobi"):
        self.S = S
        self.tol = tol
        self.max_iter = max_iter
        self.preconditioner = preconditioner
        self._pc = _preconditioner(S, preconditioner) if preconditioner == "ic" else None
        self.reports = []

    def reset_reports(self):
        reports, self.reports = self.reports, []
        return reports

    def _solve1(self, b, x0):
        pc = self.preconditioner
        if self._pc is not None:
            pc = _CachedPreconditioner(self._pc)
        x, rep = cg_solve(self.S, b, self.tol, self.max_iter, x0=x0, preconditioner=pc)
        self.reports.append(rep)
        return x

    def __call__(self, b, x0=None):
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            return self._solve1(b, x0)
        out = np.empty_like(b)
        for c in range(b.shape[1]):
            out[:, c] = self._solve1(b[:, c], None if x0 is None else x0[:, c])
        return out


class _CachedPreconditioner:
    def __init__(self, apply):
        self.apply = apply
