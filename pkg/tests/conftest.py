import time

import numpy as np
import pytest

from mems_sim import MappedGrid, ModelParams, StepControls, run_simulation

ACCEPTANCE_LINES = []
RUN_SECONDS = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid():
    return MappedGrid.create(201, 101)


@pytest.fixture(scope="session")
def coarse_grid():
    return MappedGrid.create(65, 33)


def benchmark_controls(dt=1e-3, cfl=0.1, T_max=10.0):
    return StepControls(dt_init=dt, dt_max=dt, cfl_source=cfl, T_max=T_max)


@pytest.fixture(scope="session")
def benchmark_run(grid):
    """lambda = 14, eps = 0.1, u0 = 0 at (201, 101), dt = 1e-3; every state kept."""
    u0 = np.zeros(grid.base.n_x)
    t0 = time.perf_counter()
    out = run_simulation(ModelParams(14.0, 0.1), u0, benchmark_controls(), grid, snapshot_stride=1)
    RUN_SECONDS["benchmark"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def arch_run(grid):
    """Snap-through arch u0 = 0.1 (1 + cos pi x), lambda = 14, eps = 0.1."""
    u0 = 0.1 * (1.0 + np.cos(np.pi * grid.base.x))
    u0[[0, -1]] = 0.0
    t0 = time.perf_counter()
    out = run_simulation(ModelParams(14.0, 0.1), u0, benchmark_controls(), grid, snapshot_stride=1)
    RUN_SECONDS["arch"] = time.perf_counter() - t0
    return out
