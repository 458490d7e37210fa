"""Conservation monitors and numerical oracles for the particle system."""

from dataclasses import dataclass, replace

import numpy as np

from . import models
from .calculus import ParticleSet
from .integrator import StepConfig, symplectic_euler_step


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    hamiltonian: float
    total_momentum: tuple
    total_mass: float
    grid_mass: float
    fp_iterations: int = 0
    cg_iterations: int = 0


def record(model, P, ops, state, t, report=None):
    """Snapshot of the conserved quantities for one state."""
    H = models.hamiltonian(model, P, ops, state)
    px, py = np.sum(P.mbar, axis=0)
    grid_mass = float(np.sum(state.transfer.scatter(P.Dbar)))
    return DiagnosticsRecord(
        time=float(t),
        hamiltonian=H,
        total_momentum=(float(px), float(py)),
        total_mass=float(np.sum(P.Dbar)),
        grid_mass=grid_mass,
        fp_iterations=report.fp_iterations if report is not None else 0,
        cg_iterations=report.cg_iterations if report is not None else 0,
    )


@dataclass
class GridResidualReport:
    momentum: float
    continuity: float
    tol: float = 1e-9

    @property
    def passed(self):
        return self.momentum < self.tol and self.continuity < self.tol


def check_grid_residuals(model, P, ops, tol=1e-9):
    """Max-norm residuals of the grid-form EP equations for state ``P``."""
    state = models.velocity_solve(model, P, ops)
    res = models.grid_ep_rhs(model, P, ops, state)
    return GridResidualReport(res.max_momentum, res.max_continuity, tol)


def _rel_error(approx, exact):
    scale = np.max(np.abs(exact))
    err = np.max(np.abs(approx - exact))
    if scale == 0.0:
        return float(err)
    return float(err / scale)


def check_gradients(model, P, ops, h=1e-6):
    """Compare the particle equations with central differences of ``H``.

    Works in the canonical variables ``(X, mbar/dS)``.  Returns the larger of
    the two relative errors ``|dX/dt - dH/dp|`` and ``|dp/dt + dH/dX|``,
    each normalised by the max-norm of its analytic side.
    """
    dS = ops.grid.cell_area
    state = models.velocity_solve(model, P, ops)
    xdot, mdot = models.particle_rhs(model, P, state)

    def H(X, mbar):
        return models.hamiltonian(model, ParticleSet(X, mbar, P.Dbar), ops)

    dHdX = np.zeros_like(P.X)
    dHdp = np.zeros_like(P.X)
    for b in range(P.n):
        for i in range(2):
            e = np.zeros_like(P.X)
            e[b, i] = h
            dHdX[b, i] = (H(P.X + e, P.mbar) - H(P.X - e, P.mbar)) / (2 * h)
            dHdp[b, i] = (H(P.X, P.mbar + dS * e) - H(P.X, P.mbar - dS * e)) / (2 * h)
    return max(_rel_error(dHdp, xdot), _rel_error(-dHdX, mdot / dS))


def _phase_vector(P, dS):
    return np.concatenate([P.X.ravel(), P.mbar.ravel() / dS])


def _displacement(grid, a, b):
    d = b - a
    d[..., 0] -= grid.Lx * np.round(d[..., 0] / grid.Lx)
    d[..., 1] -= grid.Ly * np.round(d[..., 1] / grid.Ly)
    return d


def step_jacobian(model, P, ops, cfg, h=1e-5, step=symplectic_euler_step):
    """Central-difference Jacobian of one step in ``(X, mbar/dS)``."""
    dS = ops.grid.cell_area
    n = P.n
    z0 = _phase_vector(P, dS)
    S = np.zeros((4 * n, 4 * n))

    def advance(z):
        X = z[: 2 * n].reshape(n, 2)
        mbar = z[2 * n:].reshape(n, 2) * dS
        Q = ParticleSet.create(ops.grid, X, mbar, P.Dbar)
        Q1, _ = step(model, Q, ops, cfg)
        # positions are compared through periodic displacement from X^n
        dX = _displacement(ops.grid, P.X, Q1.X)
        return np.concatenate([(P.X + dX).ravel(), Q1.mbar.ravel() / dS])

    for c in range(4 * n):
        e = np.zeros(4 * n)
        e[c] = h
        S[:, c] = (advance(z0 + e) - advance(z0 - e)) / (2 * h)
    return S


def symplectic_defect(S):
    d = S.shape[0] // 2
    Omega = np.block([[np.zeros((d, d)), np.eye(d)], [-np.eye(d), np.zeros((d, d))]])
    return float(np.max(np.abs(S.T @ Omega @ S - Omega)))


def check_symplectic(model, P, ops, cfg, h=1e-5, step=symplectic_euler_step):
    """``max|S^T Omega S - Omega|`` for the one-step map ``S``.

    The step is run with tight inner tolerances so that fixed-point and CG
    errors stay well below the finite-difference noise.
    """
    tight = replace(cfg, fp_tol=min(cfg.fp_tol, 1e-15), fp_max_iter=max(cfg.fp_max_iter, 200))
    return symplectic_defect(step_jacobian(model, P, ops, tight, h, step))


def energy_drift(records):
    H = np.array([r.hamiltonian for r in records])
    return float(np.max(np.abs(H - H[0])))


def momentum_drift_per_step(records, momentum_scales):
    """Largest per-step change of total momentum relative to ``sum|mbar|``."""
    p = np.array([r.total_momentum for r in records])
    d = np.max(np.abs(np.diff(p, axis=0)), axis=1)
    return float(np.max(d / np.asarray(momentum_scales)[1:])) if len(d) else 0.0


__all__ = [
    "DiagnosticsRecord",
    "StepConfig",
    "GridResidualReport",
    "check_gradients",
    "check_symplectic",
    "check_grid_residuals",
    "energy_drift",
    "momentum_drift_per_step",
    "record",
    "step_jacobian",
    "symplectic_defect",
]
