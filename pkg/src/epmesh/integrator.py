"""First-order symplectic Euler for the particle system.

One step, with every grid quantity built at the old positions ``X^n``::

    mbar^{n+1} = mbar^n + dt * F(X^n, mbar^{n+1})        (implicit)
    X^{n+1}    = X^n + dt * [u(X^n, mbar^{n+1})]          (explicit)

The momentum equation is solved by fixed-point sweeps that freeze the
velocity gradient at the previous iterate and then invert one 2x2 matrix
per particle.
"""

from dataclasses import dataclass, field

import numpy as np

from .fem import ConvergenceError
from .grid import wrap
from .models import build_geometry, velocity_solve


class FixedPointDiverged(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class DegenerateStep(RuntimeError):
    pass


class StepFailed(RuntimeError):
    """A step inside :func:`run` failed; ``step`` is the failing index."""

    def __init__(self, step, cause):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class StepConfig:
    dt: float = 0.0204
    fp_tol: float = 1e-9
    fp_max_iter: int = 50
    cg_tol: float = 1e-9

    def __post_init__(self):
        if not self.dt >= 0:
            raise ValueError("dt must be non-negative")
        if not self.fp_tol > 0 or not self.cg_tol > 0:
            raise ValueError("tolerances must be positive")


@dataclass
class StepReport:
    fp_iterations: int = 0
    increments: list = field(default_factory=list)
    cg_reports: list = field(default_factory=list)

    @property
    def cg_iterations(self):
        return sum(r.iterations for r in self.cg_reports)

    @property
    def max_cg_iterations(self):
        return max((r.iterations for r in self.cg_reports), default=0)


def _solve_2x2(Gm, rhs):
    """Solve the batch ``Gm[b] x[b] = rhs[b]`` of 2x2 systems."""
    a, b = Gm[:, 0, 0], Gm[:, 0, 1]
    c, d = Gm[:, 1, 0], Gm[:, 1, 1]
    det = a * d - b * c
    bad = np.abs(det) < 1e-14
    if np.any(bad):
        raise DegenerateStep(f"singular momentum update matrix at particle {int(np.flatnonzero(bad)[0])}")
    return np.column_stack([
        (d * rhs[:, 0] - b * rhs[:, 1]) / det,
        (a * rhs[:, 1] - c * rhs[:, 0]) / det,
    ])


def fixed_point_momentum(model, P, ops, cfg, state=None, geometry=None):
    """Solve the implicit momentum update at frozen positions ``P.X``.

    ``state`` (if given) must be the Eulerian state of ``P`` itself; it is
    the first sweep's field, since the iteration is warm-started from
    ``P.mbar``.  Returns ``(mbar_new, state_new, report)`` where
    ``state_new`` is built from ``mbar_new`` at the old positions.
    """
    geo = geometry if geometry is not None else (state.geometry if state is not None else build_geometry(model, P, ops))
    report = StepReport()
    m_old = P.mbar
    m_j = m_old
    st = state if state is not None else velocity_solve(model, P, ops, geo)
    report.cg_reports += st.reports
    eye = np.eye(2)
    while True:
        tr = st.transfer
        # J[b, i, j] = d_i u_j, so J @ mbar is the [(grad u)^T] . mbar term
        G = tr.gather_grad(st.u)
        rhs = m_old.copy()
        if st.phi is not None:
            rhs += cfg.dt * P.Dbar[:, None] * tr.gather_grad(st.phi)
        m_next = _solve_2x2(eye + cfg.dt * G, rhs)
        inc = float(np.max(np.abs(m_next - m_j)))
        report.increments.append(inc)
        report.fp_iterations += 1
        st = velocity_solve(model, P.with_momentum(m_next), ops, geo, guess=st.u)
        report.cg_reports += st.reports
        if inc <= cfg.fp_tol:
            return m_next, st, report
        if report.fp_iterations >= cfg.fp_max_iter or not np.isfinite(inc):
            raise FixedPointDiverged(
                f"fixed point not converged after {report.fp_iterations} sweeps (last increment {inc:.3e})",
                report,
            )
        m_j = m_next


def symplectic_euler_step(model, P, ops, cfg, state=None):
    """Advance ``P`` by one step; returns ``(P_new, report)``."""
    mbar, st, report = fixed_point_momentum(model, P, ops, cfg, state)
    X = wrap(ops.grid, P.X + cfg.dt * st.transfer.gather(st.u))
    return P.with_momentum(mbar).with_positions(X), report


def explicit_euler_step(model, P, ops, cfg, state=None):
    """Forward Euler on the same equations; non-symplectic reference."""
    from .models import momentum_tendency

    st = state if state is not None else velocity_solve(model, P, ops)
    mdot = momentum_tendency(model, P, st)
    X = wrap(ops.grid, P.X + cfg.dt * st.transfer.gather(st.u))
    return P.with_momentum(P.mbar + cfg.dt * mdot).with_positions(X), StepReport(0, [], list(st.reports))


def run(model, P0, ops, cfg, n_steps, observers=(), step=symplectic_euler_step):
    """Take ``n_steps`` steps from ``P0``.

    Each observer is called as ``obs(step_index, t, P, state, report)`` once
    for the initial state (index 0, ``report=None``) and after every step.
    The Eulerian state handed to observers is reused by the next step.
    """
    P = P0
    state = velocity_solve(model, P, ops)
    for obs in observers:
        obs(0, 0.0, P, state, None)
    for k in range(1, n_steps + 1):
        try:
            P, report = step(model, P, ops, cfg, state)
            state = velocity_solve(model, P, ops, guess=state.u)
        except (ConvergenceError, FixedPointDiverged, DegenerateStep, ValueError) as exc:
            raise StepFailed(k, exc) from exc
        report.cg_reports += state.reports
        for obs in observers:
            obs(k, k * cfg.dt, P, state, report)
    return P
