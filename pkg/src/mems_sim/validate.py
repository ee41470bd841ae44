"""Built-in validation battery behind ``mems-sim validate``."""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import elliptic
from .dynamics import heat_evolve
from .grid import MappedGrid, ModelParams
from .theory import MU1, check_identity_p9, lambda_star, trapezoid, zeta1


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def flat_plate_exactness(n_x=201, n_eta=101):
    grid = MappedGrid.create(n_x, n_eta)
    u = np.zeros(n_x)
    worst = [0.0, 0.0, 0.0]
    for eps in (0.01, 0.1, 1.0):
        pf = elliptic.solve_potential(u, ModelParams(1.0, eps), grid)
        worst[0] = max(worst[0], np.abs(pf.phi - grid.eta[None, :]).max())
        worst[1] = max(worst[1], np.abs(pf.gamma_m - 1.0).max())
        worst[2] = max(worst[2], np.abs(pf.g - 1.0).max())
    ok = worst[0] <= 1e-9 and worst[1] <= 1e-8 and worst[2] <= 1e-8
    return ok, "max|phi-eta|={:.1e} max|gamma-1|={:.1e} max|g-1|={:.1e}".format(*worst)


def manufactured_errors(eps=0.1, sizes=((33, 17), (65, 33), (129, 65))):
    errs = []
    for n_x, n_eta in sizes:
        grid = MappedGrid.create(n_x, n_eta)
        u = -0.3 * np.cos(0.5 * np.pi * grid.base.x)
        exact, forcing = elliptic.manufactured_problem(u, grid, eps)
        pf = elliptic.solve_potential(u, ModelParams(1.0, eps), grid, forcing=forcing)
        errs.append(float(np.abs(pf.phi - exact).max()))
    return errs


def manufactured_order():
    errs = manufactured_errors()
    ratios = [a / b for a, b in zip(errs[:-1], errs[1:])]
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    return ok, "errors " + ", ".join(f"{e:.2e}" for e in errs) + "; ratios " + ", ".join(
        f"{r:.3f}" for r in ratios
    )


def force_deviation(eps, n_x=201, n_eta=101):
    """max |g(u) - (1 + u)^-2| for u = -0.3 cos(pi x / 2)."""
    grid = MappedGrid.create(n_x, n_eta)
    u = -0.3 * np.cos(0.5 * np.pi * grid.base.x)
    g = elliptic.solve_potential(u, ModelParams(1.0, eps), grid).g
    return float(np.abs(g - (1.0 + u) ** -2).max())


def epsilon_consistency():
    d1, d2 = force_deviation(0.1), force_deviation(0.05)
    ratio = d1 / d2
    return 3.0 <= ratio <= 5.0, f"dev(0.1)={d1:.3e} dev(0.05)={d2:.3e} ratio={ratio:.3f}"


def heat_decay(n_x=201, t=0.5, dt=1e-4):
    x = np.linspace(-1.0, 1.0, n_x)
    z = zeta1(x)
    v = heat_evolve(z, 2.0 / (n_x - 1), t=t, dt=dt)
    err = float(np.abs(v - math.exp(-MU1 * t) * z).max())
    return err <= 1e-4, f"max deviation from exp(-mu1 t) zeta1 = {err:.2e}"


def quadrature_sanity(n_x=201):
    x = np.linspace(-1.0, 1.0, n_x)
    h = x[1] - x[0]
    z = zeta1(x)
    e1 = abs(trapezoid(z, h) - 1.0)
    e2 = abs(trapezoid(z * z, h) - math.pi**2 / 16)
    return max(e1, e2) <= 1e-4, f"|int zeta1 - 1|={e1:.1e} |int zeta1^2 - pi^2/16|={e2:.1e}"


def identity_flat():
    grid = MappedGrid.create(201, 101)
    u = np.zeros(201)
    worst = 0.0
    for eps in (0.01, 0.1, 1.0):
        pf = elliptic.solve_potential(u, ModelParams(1.0, eps), grid)
        for p in (1.0, 1.0 + 2 * MU1 * eps**2, 2.0):
            worst = max(worst, check_identity_p9(u, pf, grid, p, eps).value)
    return worst <= 1e-8, f"max residual {worst:.1e}"


def threshold_formula():
    val = lambda_star(0.0, 0.1)
    return abs(val - 13.428) <= 1e-3, f"lambda_star(0, 0.1) = {val:.6f}"


BATTERY = (
    ("flat-plate exactness", flat_plate_exactness),
    ("manufactured-solution order", manufactured_order),
    ("epsilon consistency", epsilon_consistency),
    ("eigenfunction heat decay", heat_decay),
    ("quadrature sanity", quadrature_sanity),
    ("flat-plate identity", identity_flat),
    ("threshold formula", threshold_formula),
)


def run_battery():
    results = []
    for name, fn in BATTERY:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not an aborted battery
            ok, detail = False, f"error: {exc!r}"
        results.append(Check(name, bool(ok), detail, time.perf_counter() - t0))
    return results
