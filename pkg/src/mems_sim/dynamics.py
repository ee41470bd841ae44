"""Time stepping of the plate deflection and touchdown detection.

First-order IMEX: diffusion implicit, electrostatic force explicit,

    (I - dt D2) u_new = u - dt * lam * g(u),   u_new(+-1) = 0,

with D2 the three-point Laplacian. The step size follows the relative
change of the gap min(1 + u) so the quenching timescale is resolved.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .elliptic import PotentialSolver, solve_potential
from .grid import DeflectionState, MappedGrid, MemsSimError, ModelParams
from .theory import choose_parameters, lemma2_envelope, make_record

SOBOLEV_BLOWUP = 1e6


class OutcomeKind(str, enum.Enum):
    TOUCHDOWN = "Touchdown"
    SURVIVED = "Survived"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class Outcome:
    kind: OutcomeKind
    T: float
    detail: str = ""


@dataclass
class StepControls:
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    touch_eps: float = 5e-3
    cfl_source: float = 0.1
    T_max: float = 10.0

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("step controls need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.touch_eps < 0.1:
            raise ValueError("touch_eps must lie in (0, 0.1)")
        if not self.cfl_source > 0:
            raise ValueError("cfl_source must be positive")
        if not self.T_max > 0:
            raise ValueError("T_max must be positive")


@dataclass
class Trajectory:
    params: ModelParams
    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    steps: list = field(default_factory=list)  # accepted-step index of each stored state
    proof: object = None
    C0: float = 0.0
    u0: np.ndarray = None

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    @property
    def dts(self):
        return np.array([r.dt for r in self.records[1:]])


def laplacian(u, h):
    """Three-point Laplacian on interior nodes; zero at the ends."""
    out = np.zeros_like(u)
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    return out


def implicit_diffusion_solve(rhs, dt, h):
    """Solve (I - dt D2) y = rhs on the interior with y(+-1) = 0."""
    n = rhs.size - 2
    r = dt / h**2
    diag = np.full(n, 1.0 + 2.0 * r)
    off = np.full(n, -r)
    y = np.zeros_like(rhs)
    y[1:-1] = kernels.tridiagonal_solve(off, diag, off, rhs[1:-1])
    return y


def vanishing_aspect_rhs(u, lam):
    """Force magnitude lam / (1 + u)^2 of the reduced model."""
    u = u.u if isinstance(u, DeflectionState) else np.asarray(u, dtype=float)
    return lam / (1.0 + u) ** 2


def force_magnitude(u, params: ModelParams, grid: MappedGrid, solver=None):
    """lam * g(u); the reduced model uses the closed form."""
    if params.reduced:
        return vanishing_aspect_rhs(u, params.lam)
    return params.lam * solve_potential(u, params, grid, solver=solver).g


def imex_step(state: DeflectionState, dt, params: ModelParams, grid: MappedGrid, force=None):
    """One IMEX step. ``force`` (lam * g at ``state``) is recomputed when omitted."""
    if force is None:
        force = force_magnitude(state.u, params, grid)
    rhs = state.u - dt * force
    rhs[0] = rhs[-1] = 0.0
    u_new = implicit_diffusion_solve(rhs, dt, grid.base.h)
    return DeflectionState(state.t + dt, u_new)


def heat_evolve(v0, h, t=None, dt=None, dts=None):
    """Homogeneous heat equation with the same implicit scheme.

    Either pass the step sequence ``dts`` (to shadow a trajectory) or a
    final time ``t`` with a uniform step ``dt``. Returns the final profile.
    """
    v = np.array(v0, dtype=float)
    if dts is None:
        if t is None or dt is None:
            raise ValueError("give either dts or both t and dt")
        nsteps = max(1, int(math.ceil(t / dt - 1e-12)))
        dts = np.full(nsteps, t / nsteps)
    for step in dts:
        v = implicit_diffusion_solve(v, step, h)
    return v


def heat_history(v0, h, dts):
    """Profiles of the heat solution after each step in ``dts`` (first row is ``v0``)."""
    out = np.empty((len(dts) + 1, len(v0)))
    out[0] = v0
    for k, step in enumerate(dts):
        out[k + 1] = implicit_diffusion_solve(out[k], step, h)
    return out


def check_comparison_principle(u0, dts, snapshots, h, tol=1e-6):
    """Upper barrier and heat-splitting signs at stored states.

    ``dts`` are the accepted steps of the trajectory; ``snapshots`` is a
    sequence of ``(step, u)``. The positive part of ``u0`` is carried by the
    heat flow on the same steps (v) and the remainder w = u - v must stay
    non-positive. Returns a list of violation dicts.
    """
    u0 = np.asarray(u0, dtype=float)
    top = max(float(u0.max()), 0.0)
    v_hist = heat_history(np.maximum(u0, 0.0), h, dts)
    out = []
    for step, u in snapshots:
        v = v_hist[step]
        w = u - v
        checks = {
            "upper_barrier": float(u.max()) - (top + tol),
            "w_nonpositive": float(w.max()) - tol,
            "v_nonnegative": -tol - float(v.min()),
            "v_bounded": float(v.max()) - (top + tol),
        }
        for name, excess in checks.items():
            if excess > 0:
                out.append({"step": int(step), "check": name, "excess": excess})
    return out


def sobolev_proxy(u, q, h):
    """(h sum |D2 u|^q)^(1/q) + max |u|, a discrete stand-in for the W^{2,q} norm."""
    u = u.u if isinstance(u, DeflectionState) else np.asarray(u, dtype=float)
    lap = laplacian(u, h)[1:-1]
    return float((h * np.sum(np.abs(lap) ** q)) ** (1.0 / q) + np.max(np.abs(u)))


def run_simulation(params: ModelParams, u0, controls: StepControls, grid: MappedGrid,
                   snapshot_stride=0):
    """Integrate until touchdown, the horizon, or a numerical failure.

    ``snapshot_stride`` > 0 stores every n-th accepted state; the initial
    and final states are always stored.
    """
    u0 = np.array(u0, dtype=float)
    state = DeflectionState(0.0, u0).validate()
    h = grid.base.h
    top = max(float(u0.max()), 0.0)
    _, C0 = lemma2_envelope(top)
    proof = choose_parameters(top, params.epsilon, params.lam)

    traj = Trajectory(params=params, proof=proof, C0=C0, u0=u0.copy())
    traj.records.append(make_record(state, None, 0.0, proof, C0, h, sobolev_proxy(u0, params.q, h)))
    traj.states.append(state)
    traj.steps.append(0)

    def finish(kind, detail=""):
        if traj.states[-1] is not state:
            traj.states.append(state)
            traj.steps.append(nstep)
        return traj, Outcome(kind, state.t, detail)

    solver = PotentialSolver()
    dt = controls.dt_init
    nstep = 0
    while True:
        gap_old = state.clearance
        try:
            force = force_magnitude(state.u, params, grid, solver)
        except MemsSimError as exc:
            return finish(OutcomeKind.NUMERICAL_FAILURE, f"force evaluation failed: {exc}")
        if not np.all(np.isfinite(force)):
            return finish(OutcomeKind.NUMERICAL_FAILURE, "non-finite force")

        while True:
            dt_try = min(dt, controls.T_max - state.t)
            trial = imex_step(state, dt_try, params, grid, force=force)
            if not np.all(np.isfinite(trial.u)):
                return finish(OutcomeKind.NUMERICAL_FAILURE, "non-finite deflection")
            gap_new = trial.clearance
            change = abs(gap_new - gap_old) / gap_old
            if change <= controls.cfl_source or dt_try <= controls.dt_min:
                break
            dt = dt_try * min(1.0, max(0.5, controls.cfl_source / change))
            if dt < controls.dt_min:
                if gap_new < gap_old:
                    return finish(OutcomeKind.TOUCHDOWN, "time step underflow while the gap closes")
                dt = controls.dt_min

        nstep += 1
        state = trial
        rec = make_record(state, traj.records[-1], dt_try, proof, C0, h,
                          sobolev_proxy(state.u, params.q, h))
        traj.records.append(rec)
        if snapshot_stride and nstep % snapshot_stride == 0:
            traj.states.append(state)
            traj.steps.append(nstep)

        if state.clearance <= controls.touch_eps:
            return finish(OutcomeKind.TOUCHDOWN, f"min(1+u) = {state.clearance:.3e}")
        if rec.sobolev_proxy > SOBOLEV_BLOWUP:
            return finish(OutcomeKind.NUMERICAL_FAILURE, "sobolev-norm proxy exceeded 1e6")
        if state.t >= controls.T_max * (1.0 - 1e-14):
            state.t = controls.T_max
            rec.t = controls.T_max
            return finish(OutcomeKind.SURVIVED, "reached T_max")

        factor = controls.cfl_source / change if change > 0 else 1.5
        dt = min(max(dt_try * min(1.5, max(0.5, factor)), controls.dt_min), controls.dt_max)

