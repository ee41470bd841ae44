"""Hot inner loops, each in a numba flavour and a pure-numpy flavour.

The public names (``assemble_potential_system``, ``tridiagonal_solve``) are
bound at import time according to :mod:`mems_sim._backend`. Both flavours
stay importable under their explicit names so tests and the benchmark can
compare them.
"""

import numpy as np
from scipy.linalg import solve_banded

from ._backend import USE_NUMBA, njit

# (di, dj) offsets of the nine-point stencil; order is fixed so both
# flavours emit identical triplet streams.
_OFFSETS = np.array(
    [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (1, -1), (-1, 1)],
    dtype=np.int64,
)


@njit(cache=True)
def _assemble_numba(A, B, C, eps2, hx, deta, forcing, eta):
    nx, ne = B.shape
    mi = nx - 2
    mj = ne - 2
    n = mi * mj
    rows = np.empty(9 * n, dtype=np.int64)
    cols = np.empty(9 * n, dtype=np.int64)
    vals = np.empty(9 * n, dtype=np.float64)
    rhs = np.empty(n, dtype=np.float64)
    scale = np.empty(n, dtype=np.float64)
    cx = eps2 / (hx * hx)
    inv_e2 = 1.0 / (deta * deta)
    inv_2e = 0.5 / deta
    inv_xe = 0.25 / (hx * deta)
    coef = np.empty(9, dtype=np.float64)
    nnz = 0
    for i in range(1, nx - 1):
        for j in range(1, ne - 1):
            k = (i - 1) * mj + (j - 1)
            b = B[i, j] * inv_e2
            c = C[i, j] * inv_2e
            a = A[i, j] * inv_xe
            coef[0] = -2.0 * cx - 2.0 * b
            coef[1] = cx
            coef[2] = cx
            coef[3] = b - c
            coef[4] = b + c
            coef[5] = a
            coef[6] = a
            coef[7] = -a
            coef[8] = -a
            s = -1.0 / coef[0]
            scale[k] = s
            r = forcing[i, j]
            for m in range(9):
                ii = i + _OFFSETS[m, 0]
                jj = j + _OFFSETS[m, 1]
                if ii == 0 or ii == nx - 1 or jj == 0 or jj == ne - 1:
                    r -= coef[m] * eta[jj]
                else:
                    rows[nnz] = k
                    cols[nnz] = (ii - 1) * mj + (jj - 1)
                    vals[nnz] = s * coef[m]
                    nnz += 1
            rhs[k] = s * r
    return rows[:nnz], cols[:nnz], vals[:nnz], rhs, scale


def _assemble_numpy(A, B, C, eps2, hx, deta, forcing, eta):
    nx, ne = B.shape
    mi, mj = nx - 2, ne - 2
    Ai = A[1:-1, 1:-1] * (0.25 / (hx * deta))
    Bi = B[1:-1, 1:-1] / deta**2
    Ci = C[1:-1, 1:-1] * (0.5 / deta)
    cx = np.full_like(Bi, eps2 / hx**2)
    coefs = [
        -2.0 * cx - 2.0 * Bi,
        cx,
        cx,
        Bi - Ci,
        Bi + Ci,
        Ai,
        Ai,
        -Ai,
        -Ai,
    ]
    scale = -1.0 / coefs[0]
    I, J = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ne - 1), indexing="ij")
    k = (I - 1) * mj + (J - 1)
    rhs = forcing[1:-1, 1:-1].copy()
    # per-node blocks of up to nine entries, flattened in stencil order
    row_blocks, col_blocks, val_blocks, keep_blocks = [], [], [], []
    for (di, dj), coef in zip(_OFFSETS, coefs):
        ii, jj = I + di, J + dj
        boundary = (ii == 0) | (ii == nx - 1) | (jj == 0) | (jj == ne - 1)
        rhs -= np.where(boundary, coef * eta[jj], 0.0)
        row_blocks.append(k)
        col_blocks.append((ii - 1) * mj + (jj - 1))
        val_blocks.append(scale * coef)
        keep_blocks.append(~boundary)
    rows = np.stack(row_blocks, axis=-1).ravel()
    cols = np.stack(col_blocks, axis=-1).ravel()
    vals = np.stack(val_blocks, axis=-1).ravel()
    keep = np.stack(keep_blocks, axis=-1).ravel()
    return (
        rows[keep].astype(np.int64),
        cols[keep].astype(np.int64),
        vals[keep],
        (scale * rhs).ravel(),
        scale.ravel(),
    )


@njit(cache=True)
def _tridiagonal_numba(lower, diag, upper, rhs):
    n = diag.shape[0]
    c = np.empty(n, dtype=np.float64)
    d = np.empty(n, dtype=np.float64)
    x = np.empty(n, dtype=np.float64)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * c[i - 1]
        c[i] = upper[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _tridiagonal_numpy(lower, diag, upper, rhs):
    """``lower[i]`` multiplies ``x[i-1]``, ``upper[i]`` multiplies ``x[i+1]``."""
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def assemble_potential_numba(A, B, C, eps2, hx, deta, forcing, eta):
    return _assemble_numba(A, B, C, float(eps2), float(hx), float(deta), forcing, eta)


def assemble_potential_numpy(A, B, C, eps2, hx, deta, forcing, eta):
    return _assemble_numpy(A, B, C, float(eps2), float(hx), float(deta), forcing, eta)


def tridiagonal_numba(lower, diag, upper, rhs):
    return _tridiagonal_numba(
        np.ascontiguousarray(lower, dtype=np.float64),
        np.ascontiguousarray(diag, dtype=np.float64),
        np.ascontiguousarray(upper, dtype=np.float64),
        np.ascontiguousarray(rhs, dtype=np.float64),
    )


tridiagonal_numpy = _tridiagonal_numpy

if USE_NUMBA:
    assemble_potential_system = assemble_potential_numba
    tridiagonal_solve = tridiagonal_numba
else:
    assemble_potential_system = assemble_potential_numpy
    tridiagonal_solve = tridiagonal_numpy
