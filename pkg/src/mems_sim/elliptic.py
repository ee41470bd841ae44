"""Electrostatic potential on the moving gap, solved on a fixed rectangle.

The gap {-1 < z < u(x)} is pulled back to [-1, 1] x [0, 1] through
eta = (1 + z) / (1 + u(x)). In these coordinates the anisotropic Laplace
equation ``eps^2 psi_xx + psi_zz = 0`` becomes

    eps^2 phi_xx + A phi_x_eta + B phi_eta_eta + C phi_eta = 0,

with Dirichlet data phi = eta on all four sides. It is discretised with
second-order central differences (four-point cross stencil for the mixed
term) and solved by sparse LU.
"""

import csv

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .grid import (
    DegenerateGeometryError,
    DeflectionState,
    MappedGrid,
    ModelParams,
    PotentialField,
    SolverFailure,
)

FLOOR_CLEARANCE = 1e-4
RESIDUAL_TOL = 1e-10
_MAX_REFINEMENTS = 3


def _as_array(u):
    if isinstance(u, DeflectionState):
        return u.u
    return np.asarray(u, dtype=float)


def first_derivative(u, h):
    """Central differences inside, second-order one-sided at the ends."""
    return np.gradient(u, h, edge_order=2)


def second_derivative(u, h):
    uxx = np.empty_like(u)
    uxx[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    uxx[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h**2
    uxx[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h**2
    return uxx


def map_coefficients(u, grid: MappedGrid, epsilon, floor_clearance=FLOOR_CLEARANCE):
    """Coefficient fields ``(A, B, C)`` of the pulled-back operator, shape (n_x, n_eta)."""
    u = _as_array(u)
    if u.shape != (grid.base.n_x,):
        raise ValueError(f"deflection has shape {u.shape}, grid expects ({grid.base.n_x},)")
    gap = 1.0 + u
    if gap.min() <= floor_clearance:
        raise DegenerateGeometryError(
            f"min(1 + u) = {gap.min():.3e} is below the floor clearance {floor_clearance:.1e}"
        )
    h = grid.base.h
    ux = first_derivative(u, h)[:, None]
    uxx = second_derivative(u, h)[:, None]
    gap = gap[:, None]
    eta = grid.eta[None, :]
    e2 = epsilon**2
    A = -2.0 * e2 * eta * ux / gap
    B = e2 * eta**2 * ux**2 / gap**2 + 1.0 / gap**2
    C = e2 * (-eta * uxx / gap + 2.0 * eta * ux**2 / gap**2)
    A, B, C = np.broadcast_arrays(A, B, C)
    return np.ascontiguousarray(A), np.ascontiguousarray(B), np.ascontiguousarray(C)


def assemble(u, grid: MappedGrid, epsilon, forcing=None):
    """Row-scaled sparse system ``M y = b`` for the interior unknowns.

    Each row is divided by minus its diagonal entry, so ``M`` has a unit
    diagonal and residuals are measured against unit boundary data.
    """
    A, B, C = map_coefficients(u, grid, epsilon)
    if forcing is None:
        forcing = np.zeros(grid.shape)
    forcing = np.ascontiguousarray(forcing, dtype=float)
    rows, cols, vals, rhs, _ = kernels.assemble_potential_system(
        A, B, C, epsilon**2, grid.base.h, grid.deta, forcing, grid.eta
    )
    n = (grid.base.n_x - 2) * (grid.n_eta - 2)
    M = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    return M, rhs


def _boundary_filled(grid, interior):
    phi = np.empty(grid.shape)
    phi[:, :] = grid.eta[None, :]
    phi[1:-1, 1:-1] = interior.reshape(grid.base.n_x - 2, grid.n_eta - 2)
    return phi


def _closed_form(u, grid):
    phi = np.broadcast_to(grid.eta[None, :], grid.shape).copy()
    gamma = 1.0 / (1.0 + u)
    return PotentialField(phi=phi, gamma_m=gamma, g=gamma**2, info={"method": "closed-form"})


def _direct_solve(M, rhs):
    try:
        lu = spla.splu(M, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SolverFailure(f"sparse LU failed: {exc}") from exc
    y = lu.solve(rhs)
    res = np.max(np.abs(M @ y - rhs))
    iterations = 1
    # iterative refinement if the direct solve was sloppy
    while res > RESIDUAL_TOL and iterations <= _MAX_REFINEMENTS:
        y += lu.solve(rhs - M @ y)
        res = np.max(np.abs(M @ y - rhs))
        iterations += 1
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverFailure("potential solve did not reach the residual target", iterations, res)
    return lu, y, iterations, float(res)


class PotentialSolver:
    """Sparse solver that recycles an LU factorisation across nearby systems.

    The last factorisation preconditions BiCGSTAB for the next matrix; a
    fresh factorisation is made when that fails to reach the residual
    target within ``max_iterations``. One instance belongs to one
    simulation: it is stateful and not meant to be shared.
    """

    def __init__(self, max_iterations=30):
        self.max_iterations = max_iterations
        self._lu = None
        self._y = None
        self.factorizations = 0
        self.solves = 0

    def solve(self, M, rhs):
        self.solves += 1
        if self._lu is not None and self._y is not None and self._y.shape == rhs.shape:
            P = spla.LinearOperator(M.shape, self._lu.solve)
            # 2-norm target below the max-norm contract
            y, info = spla.bicgstab(
                M, rhs, x0=self._y, M=P, rtol=0.0, atol=0.1 * RESIDUAL_TOL,
                maxiter=self.max_iterations,
            )
            res = np.max(np.abs(M @ y - rhs))
            if info >= 0 and np.isfinite(res) and res <= RESIDUAL_TOL:
                self._y = y
                return y, 1, float(res)
        lu, y, iterations, res = _direct_solve(M, rhs)
        self.factorizations += 1
        self._lu, self._y = lu, y
        return y, iterations, res


def solve_potential(u, params: ModelParams, grid: MappedGrid, forcing=None, solver=None):
    """Solve for the mapped potential and its trace quantities.

    With ``epsilon == 0`` and no forcing the solve is bypassed: phi = eta
    and gamma_m = 1 / (1 + u) exactly. ``solver`` is an optional
    :class:`PotentialSolver` reused across calls; without it every call
    factorises from scratch.
    """
    u = _as_array(u)
    if params.epsilon == 0.0 and forcing is None:
        map_coefficients(u, grid, 0.0)  # geometry check only
        return _closed_form(u, grid)

    M, rhs = assemble(u, grid, params.epsilon, forcing)
    if solver is None:
        _, y, iterations, res = _direct_solve(M, rhs)
    else:
        y, iterations, res = solver.solve(M, rhs)

    phi = _boundary_filled(grid, y)
    gamma = trace_gradient(phi, u, grid)
    g = electrostatic_force(u, gamma, params, grid)
    return PotentialField(
        phi=phi, gamma_m=gamma, g=g, residual=res, iterations=iterations,
        info={"method": "splu" if solver is None else "recycled-lu"},
    )


def trace_gradient(phi, u, grid: MappedGrid):
    """gamma_m = d psi / dz on the top plate, via a one-sided eta stencil."""
    if isinstance(phi, PotentialField):
        phi = phi.phi
    u = _as_array(u)
    dphi = (3.0 * phi[:, -1] - 4.0 * phi[:, -2] + phi[:, -3]) / (2.0 * grid.deta)
    return dphi / (1.0 + u)


def electrostatic_force(u, gamma_m, params: ModelParams, grid: MappedGrid):
    """g = (1 + eps^2 u_x^2) gamma_m^2."""
    u = _as_array(u)
    ux = first_derivative(u, grid.base.h)
    return (1.0 + params.epsilon**2 * ux**2) * gamma_m**2


def force(u, params: ModelParams, grid: MappedGrid):
    """Nodewise force magnitude g(u); the dynamics multiplies by -lambda."""
    return solve_potential(u, params, grid).g


def manufactured_problem(u, grid: MappedGrid, epsilon, amplitude=0.1):
    """Exact field ``eta + a sin(pi x) sin(pi eta)`` and the forcing it induces.

    The forcing applies the pulled-back operator, with the same discrete
    coefficient fields the solver uses, to exact derivatives of the field.
    """
    A, B, C = map_coefficients(u, grid, epsilon)
    x = grid.base.x[:, None]
    eta = grid.eta[None, :]
    pi = np.pi
    sx, cx = np.sin(pi * x), np.cos(pi * x)
    se, ce = np.sin(pi * eta), np.cos(pi * eta)
    exact = eta + amplitude * sx * se
    phi_xx = -amplitude * pi**2 * sx * se
    phi_xe = amplitude * pi**2 * cx * ce
    phi_ee = -amplitude * pi**2 * sx * se
    phi_e = 1.0 + amplitude * pi * sx * ce
    forcing = epsilon**2 * phi_xx + A * phi_xe + B * phi_ee + C * phi_e
    return exact, forcing


def write_potential_csv(path, phi, grid: MappedGrid):
    if isinstance(phi, PotentialField):
        phi = phi.phi
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "eta", "phi"])
        for i, xi in enumerate(grid.base.x):
            for j, ej in enumerate(grid.eta):
                w.writerow([f"{xi:.17g}", f"{ej:.17g}", f"{phi[i, j]:.17g}"])
