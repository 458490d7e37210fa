"""Run orchestration: build the state from a :class:`SimConfig`, step it and
write energy series, snapshots and figures."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import diagnostics, initial, output
from .grid import GridSpec, wrap
from .integrator import StepConfig, run
from .models import Operators

log = logging.getLogger(__name__)

# Default figure steps at dt = 0.0204 (t = 0, 0.2445, 0.4074, 0.9167).
FIGURE_STEPS = (0, 12, 20, 45)


@dataclass
class SimResult:
    records: list
    momentum_scales: list
    final: object
    snapshots: list = field(default_factory=list)
    max_fp_iterations: int = 0
    max_cg_iterations: int = 0

    @property
    def energy_drift(self):
        return diagnostics.energy_drift(self.records)

    @property
    def relative_energy_drift(self):
        H0 = self.records[0].hamiltonian
        return self.energy_drift / abs(H0) if H0 else self.energy_drift

    @property
    def momentum_drift(self):
        return diagnostics.momentum_drift_per_step(self.records, self.momentum_scales)


def build_initial_state(cfg, grid, ops):
    P = initial.init_particles_uniform(grid, cfg.particles_per_cell, cfg.density)
    if cfg.jitter > 0:
        rng = np.random.default_rng(cfg.seed)
        shift = rng.uniform(-cfg.jitter, cfg.jitter, P.X.shape) * [grid.dx, grid.dy]
        P = P.with_positions(wrap(grid, P.X + shift))
    if cfg.ic == "two_lines":
        P = initial.init_two_lines(grid, P, ops, cfg.particles_per_cell, cfg.amplitude, cfg.width,
                                   cfg.separation, cfg.orientation, cfg.length, cfg.offset)
    return P


def demo_config(scale=1, **overrides):
    """The two-line EP-Diff collision at ``128/scale`` resolution."""
    if scale < 1 or 128 % scale:
        raise ValueError("scale must divide 128")
    n = 128 // scale
    base = dict(model="epdiff", alpha=0.3133, nx=n, ny=n, particles_per_cell=16, dt=0.0204,
                t_end=1.0, ic="two_lines", snapshot_stride=1, output_dir=f"demo_{n}")
    base.update(overrides)
    from .config import SimConfig, validate

    cfg = SimConfig(**base)
    validate(cfg)
    return cfg


def run_simulation(cfg, out_dir=None, figure_steps=FIGURE_STEPS, dump_particles=None,
                   dump_components=None, figures=None):
    """Run ``cfg``; if ``out_dir`` is given write all outputs there."""
    grid = GridSpec(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny)
    model = cfg.model_spec()
    ops = Operators(model, grid, cfg.cg_tol, cfg.cg_max_iter, cfg.preconditioner)
    step_cfg = StepConfig(cfg.dt, cfg.fp_tol, cfg.fp_max_iter, cfg.cg_tol)
    P0 = build_initial_state(cfg, grid, ops)

    dump_particles = cfg.dump_particles if dump_particles is None else dump_particles
    dump_components = cfg.dump_components if dump_components is None else dump_components
    figures = cfg.figures if figures is None else figures
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    result = SimResult([], [], None)

    def observe(k, t, P, state, report):
        rec = diagnostics.record(model, P, ops, state, t, report)
        result.records.append(rec)
        result.momentum_scales.append(float(np.sum(np.abs(P.mbar))))
        if report is not None:
            result.max_fp_iterations = max(result.max_fp_iterations, report.fp_iterations)
            result.max_cg_iterations = max(result.max_cg_iterations, report.max_cg_iterations)
        if out is not None and k % cfg.snapshot_stride == 0:
            speed = np.linalg.norm(state.u, axis=1)
            output.write_snapshot_text(speed, grid, t, out / f"snap_{k:06d}.txt")
            output.write_snapshot_pgm(speed, grid, out / f"snap_{k:06d}.pgm")
            if dump_components:
                output.write_snapshot_text(state.u[:, 0], grid, t, out / f"snapx_{k:06d}.txt", "ux")
                output.write_snapshot_text(state.u[:, 1], grid, t, out / f"snapy_{k:06d}.txt", "uy")
            if dump_particles:
                output.write_particles_csv(P, out / f"particles_{k:06d}.csv")
            result.snapshots.append(k)
        if out is not None and figures and k in figure_steps:
            from .plotting import plot_speed

            plot_speed(np.linalg.norm(state.u, axis=1), grid, t, out / f"speed_{k:06d}.png")
        log.debug("step %d t=%.4f H=%.12g", k, t, rec.hamiltonian)

    result.final = run(model, P0, ops, step_cfg, cfg.n_steps, [observe])

    if out is not None:
        output.write_energy_csv(result.records, out / "energy.csv")
        if figures:
            from .plotting import plot_energy

            plot_energy([r.time for r in result.records], [r.hamiltonian for r in result.records],
                        out / "energy.png")
    return result


def with_dt(cfg, dt):
    return replace(cfg, dt=dt)
