import math

import numpy as np
import pytest

from conftest import benchmark_controls
from mems_sim import (
    DeflectionState,
    MappedGrid,
    ModelParams,
    OutcomeKind,
    heat_evolve,
    imex_step,
    run_simulation,
    sobolev_proxy,
    vanishing_aspect_rhs,
)
from mems_sim.dynamics import check_comparison_principle, heat_history, laplacian
from mems_sim.theory import MU1, zeta1


def test_heat_eigenfunction_decay():
    errs = []
    for n, dt in ((101, 2e-4), (201, 1e-4)):
        x = np.linspace(-1, 1, n)
        v = heat_evolve(zeta1(x), 2.0 / (n - 1), t=0.2, dt=dt)
        errs.append(np.abs(v - math.exp(-MU1 * 0.2) * zeta1(x)).max())
    # backward Euler leading term t mu1^2 dt / 2 times the amplitude, h^2 part is smaller
    bound = 0.2 * MU1**2 * 2e-4 / 2 * math.pi / 4
    assert errs[0] < 1.5 * bound
    assert errs[0] / errs[1] == pytest.approx(2.0, abs=0.3)  # first order in time dominates


def test_heat_imex_step_with_zero_force(coarse_grid):
    x = coarse_grid.base.x
    s = imex_step(DeflectionState(0.0, zeta1(x)), 1e-3, ModelParams(1.0, 0.1), coarse_grid, force=np.zeros_like(x))
    assert s.t == 1e-3
    assert np.abs(s.u - math.exp(-MU1 * 1e-3) * zeta1(x)).max() < 1e-5


def test_single_frozen_step_from_rest(coarse_grid):
    lam, dt = 3.0, 1e-4
    s = imex_step(DeflectionState(0.0, np.zeros(coarse_grid.base.n_x)), dt, ModelParams(lam, 0.1), coarse_grid)
    mid = coarse_grid.base.n_x // 2
    assert s.u[mid] == pytest.approx(-lam * dt, rel=1e-6)
    assert s.u[0] == 0.0 and s.u[-1] == 0.0


def test_strong_voltage_monotone_min(coarse_grid):
    traj, outcome = run_simulation(ModelParams(20.0, 0.1), np.zeros(65), benchmark_controls(), coarse_grid)
    mins = np.array([r.min_u for r in traj.records])
    assert outcome.kind is OutcomeKind.TOUCHDOWN
    assert np.all(np.diff(mins) < 0)


def test_heat_bounds_for_arch():
    x = np.linspace(-1, 1, 201)
    v0 = np.maximum(0.2 * (1 + np.cos(np.pi * x)), 0.0)
    hist = heat_history(v0, x[1] - x[0], np.full(400, 5e-3))
    assert hist.min() >= 0.0
    assert hist.max() <= 0.4 + 1e-12


def test_heat_of_zero_is_zero():
    assert not np.any(heat_evolve(np.zeros(65), 1 / 32, t=1.0, dt=1e-2))


def test_heat_evolve_argument_check():
    with pytest.raises(ValueError):
        heat_evolve(np.zeros(65), 1 / 32, t=1.0)


def test_vanishing_aspect_rhs():
    np.testing.assert_array_equal(vanishing_aspect_rhs(np.zeros(5), 1.0), 1.0)
    assert vanishing_aspect_rhs(np.array([-0.5]), 2.0)[0] == pytest.approx(8.0)


def test_sobolev_proxy():
    x = np.linspace(-1, 1, 2001)
    h = x[1] - x[0]
    assert sobolev_proxy(np.zeros(11), 4.0, 0.2) == 0.0
    expected = MU1 * math.pi / 4 + math.pi / 4
    assert sobolev_proxy(zeta1(x), 2.0, h) == pytest.approx(expected, rel=1e-4)
    assert expected == pytest.approx(2.723, abs=1e-3)
    u = -0.3 * np.cos(0.5 * np.pi * x)
    assert sobolev_proxy(2 * u, 4.0, h) == pytest.approx(2 * sobolev_proxy(u, 4.0, h), rel=1e-12)


def test_laplacian_of_eigenfunction():
    x = np.linspace(-1, 1, 401)
    lap = laplacian(zeta1(x), x[1] - x[0])
    np.testing.assert_allclose(lap[1:-1], -MU1 * zeta1(x)[1:-1], atol=1e-4)


def test_benchmark_outcome_and_boundary(benchmark_run):
    traj, outcome = benchmark_run
    assert outcome.kind is OutcomeKind.TOUCHDOWN
    assert 0 < outcome.T < 1
    for s in traj.states:
        assert s.u[0] == 0.0 and s.u[-1] == 0.0
    assert traj.records[-1].min_u <= -1 + 5e-3
    assert traj.steps[0] == 0 and traj.steps[-1] == len(traj.records) - 1


def test_time_step_refinement_changes_touchdown_by_under_two_percent(grid, benchmark_run):
    T1 = benchmark_run[1].T
    _, out = run_simulation(ModelParams(14.0, 0.1), np.zeros(201), benchmark_controls(dt=5e-4, cfl=0.05), grid)
    assert out.kind is OutcomeKind.TOUCHDOWN
    assert abs(out.T - T1) / T1 < 0.02


def test_small_aspect_ratio_matches_reduced_model():
    grid = MappedGrid.create(101, 51)
    ts = []
    for eps in (0.0, 0.02):
        _, out = run_simulation(ModelParams(14.0, eps), np.zeros(101), benchmark_controls(), grid)
        assert out.kind is OutcomeKind.TOUCHDOWN
        ts.append(out.T)
    assert abs(ts[0] - ts[1]) / ts[0] < 0.05


def test_snapshot_stride(coarse_grid):
    traj, _ = run_simulation(ModelParams(14.0, 0.1), np.zeros(65), benchmark_controls(), coarse_grid, snapshot_stride=5)
    n = len(traj.records) - 1
    assert traj.steps[:3] == [0, 5, 10]
    assert traj.steps[-1] == n
    for step, s in zip(traj.steps, traj.states):
        assert s.t == pytest.approx(traj.records[step].t)


def test_survival_with_small_voltage(coarse_grid):
    traj, out = run_simulation(ModelParams(0.2, 0.1), np.zeros(65), benchmark_controls(dt=0.05, T_max=5.0), coarse_grid)
    assert out.kind is OutcomeKind.SURVIVED
    assert out.T == 5.0
    assert traj.records[-1].min_u > -0.5


def test_comparison_principle_flags_an_upward_excursion():
    x = np.linspace(-1, 1, 65)
    u0 = np.zeros(65)
    bumped = 1e-3 * np.cos(0.5 * np.pi * x)
    bad = check_comparison_principle(u0, [1e-3], [(1, bumped)], x[1] - x[0])
    assert {v["check"] for v in bad} == {"upper_barrier", "w_nonpositive"}
