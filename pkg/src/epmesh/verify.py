"""The oracle suite behind ``epmesh verify``."""

from dataclasses import dataclass

import numpy as np

from . import diagnostics, initial, models
from .calculus import ParticleSet, Transfer
from .grid import GridSpec
from .integrator import StepConfig, run, symplectic_euler_step

SIZES = {
    # grid nodes per side, random particles for FD checks, particles for the symplectic check
    "tiny": (8, 10, 4),
    "small": (16, 20, 6),
}


@dataclass
class Check:
    name: str
    observed: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.observed) and self.observed < self.tol)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<40s} observed={self.observed:.3e}  tol={self.tol:.0e}"


def _swalpha_state(grid, n_random, rng):
    """Random particles on top of a dense background so the depth stays positive."""
    dS = grid.cell_area
    bg = initial.init_particles_uniform(grid, 4, density=1.0)
    Xr = rng.uniform(0, 1, (n_random, 2)) * [grid.Lx, grid.Ly]
    X = np.vstack([Xr, bg.X])
    mbar = np.vstack([rng.normal(size=(n_random, 2)) * dS, 0.1 * rng.normal(size=bg.mbar.shape) * dS])
    Dbar = np.concatenate([np.full(n_random, 0.2 * dS ** 2), bg.Dbar])
    return ParticleSet.create(grid, X, mbar, Dbar)


def calculus_identities(grid, rng, trials):
    """Partition of unity, zero gradient sum and divergence/gradient adjointness."""
    X = rng.uniform(0, 1, (trials, 2)) * [grid.Lx, grid.Ly]
    tr = Transfer(grid, X)
    pou = np.max(np.abs(np.asarray(tr.psi.sum(axis=1)).ravel() - 1.0))
    gsum = max(np.max(np.abs(np.asarray(d.sum(axis=1)).ravel())) for d in tr.dpsi)
    g = rng.normal(size=grid.m)
    f = rng.normal(size=(trials, 2))
    lhs = tr.scatter_grad(f) @ g
    rhs = -np.sum(f / grid.cell_area * tr.gather_grad(g))
    adj = abs(lhs - rhs) / max(1.0, abs(rhs))
    return pou, gsum, adj


def run_checks(size="tiny", seed=0):
    n_grid, n_fd, n_sym = SIZES[size]
    rng = np.random.default_rng(seed)
    grid = GridSpec(2 * np.pi, 2 * np.pi, n_grid, n_grid)
    checks = []

    pou, gsum, adj = calculus_identities(grid, rng, 1000)
    checks += [
        Check("partition of unity", pou, 1e-12),
        Check("gradient sum", gsum, 1e-12),
        Check("gradient/divergence adjointness", adj, 1e-12),
    ]

    ep = models.ModelSpec.epdiff(0.3133)
    sw = models.ModelSpec.swalpha(0.3133, 1.0)
    ep_ops = models.Operators(ep, grid, cg_tol=1e-13, cg_max_iter=5000)
    sw_ops = models.Operators(sw, grid, cg_tol=1e-13, cg_max_iter=5000)
    P_ep = initial.init_random(grid, n_fd, rng)
    P_sw = _swalpha_state(grid, n_fd, rng)

    checks.append(Check("FD gradient EP-Diff", diagnostics.check_gradients(ep, P_ep, ep_ops), 1e-6))
    checks.append(Check("FD gradient SW-alpha", diagnostics.check_gradients(sw, P_sw, sw_ops), 1e-5))

    for name, model, ops, P in (("EP-Diff", ep, ep_ops, P_ep), ("SW-alpha", sw, sw_ops, P_sw)):
        rep = diagnostics.check_grid_residuals(model, P, ops)
        checks.append(Check(f"grid EP residual {name}", max(rep.momentum, rep.continuity), 1e-9))

    P_sym = initial.init_random(grid, n_sym, rng)
    defect = diagnostics.check_symplectic(ep, P_sym, ep_ops, StepConfig(dt=0.02))
    checks.append(Check("symplecticity defect (dt=0.02)", defect, 1e-5))

    # uniform momentum on the uniform lattice translates rigidly
    P = initial.init_particles_uniform(grid, 16)
    P = P.with_momentum(np.tile([0.7, -0.4], (P.n, 1)) * grid.cell_area ** 2 / 16)
    lat_ops = models.Operators(ep, grid)
    X0 = P.X.copy()
    P20 = run(ep, P, lat_ops, StepConfig(), 20, step=symplectic_euler_step)
    d = P20.X - X0
    d -= np.array([grid.Lx, grid.Ly]) * np.round(d / [grid.Lx, grid.Ly])
    checks.append(Check("lattice rigid translation spread", float(np.max(np.ptp(d, axis=0))), 1e-10))
    return checks
