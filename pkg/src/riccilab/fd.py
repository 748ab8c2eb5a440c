"""Finite-difference primitives shared by the radial and line-grid solvers.

Derivative operators on uniform grids are built from Fornberg weights, so
interior stencils can be of arbitrary even order while the boundary rows fall
back to one-sided stencils of the same order.  Diagnostic differentiation
(curvature, identity checks) uses order 8; the implicit time steppers keep
3-point stencils so each step is a banded solve.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

__all__ = [
    "fornberg_weights",
    "derivative_matrix",
    "apply_derivative",
    "tridiag_theta_step",
]


def fornberg_weights(x0: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights of the finite-difference approximation of d^m/dx^m at x0.

    Classic Fornberg recursion; returns weights w such that
    f^(m)(x0) ~ sum_j w[j] * f(x[j]).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if m >= n:
        raise ValueError("need at least m+1 nodes for the m-th derivative")
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def derivative_matrix(n: int, h: float, deriv: int, order: int = 8) -> sp.csr_matrix:
    """Sparse n x n differentiation matrix on a uniform grid of spacing h.

    Interior rows use centered stencils of the requested order of accuracy;
    rows near the ends use one-sided stencils on the same number of nodes.
    """
    if deriv not in (1, 2):
        raise ValueError("only first and second derivatives supported")
    npts = order + deriv  # nodes per stencil
    if npts % 2 == 0:
        npts += 1
    if n < npts:
        raise ValueError(f"grid too coarse: need at least {npts} points")
    half = npts // 2
    rows, cols, vals = [], [], []
    for i in range(n):
        if i < half:
            js = np.arange(npts)
        elif i >= n - half:
            js = np.arange(n - npts, n)
        else:
            js = np.arange(i - half, i + half + 1)
        w = fornberg_weights(i * h, js * h, deriv)
        # re-center so each row annihilates constants exactly
        w[np.argmax(js == i)] -= w.sum()
        rows.extend([i] * npts)
        cols.extend(js)
        vals.extend(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def apply_derivative(values: np.ndarray, h: float, deriv: int, order: int = 8) -> np.ndarray:
    """Differentiate sampled values on a uniform grid (convenience wrapper)."""
    mat = derivative_matrix(len(values), h, deriv, order)
    return mat @ values


def tridiag_theta_step(
    lower: np.ndarray,
    diag: np.ndarray,
    upper: np.ndarray,
    u: np.ndarray,
    dt: float,
    theta: float,
    forcing: np.ndarray | None = None,
    dirichlet_rows: dict[int, float] | None = None,
) -> np.ndarray:
    """One theta-scheme step of u_t = A u + forcing with tridiagonal A.

    A is given by its three diagonals (lower[i] multiplies u[i-1] in row i).
    Rows listed in ``dirichlet_rows`` are pinned to the given values at the
    new time level; their A-rows are ignored.
    """
    n = len(u)
    rhs = u + (1.0 - theta) * dt * _tridiag_apply(lower, diag, upper, u)
    if forcing is not None:
        rhs = rhs + dt * forcing
    # banded matrix for I - theta*dt*A
    ab = np.zeros((3, n))
    ab[0, 1:] = -theta * dt * upper[:-1]
    ab[1, :] = 1.0 - theta * dt * diag
    ab[2, :-1] = -theta * dt * lower[1:]
    if dirichlet_rows:
        for i, val in dirichlet_rows.items():
            ab[1, i] = 1.0
            if i + 1 < n:
                ab[0, i + 1] = 0.0
            if i - 1 >= 0:
                ab[2, i - 1] = 0.0
            rhs[i] = val
    return solve_banded((1, 1), ab, rhs)


def _tridiag_apply(lower, diag, upper, u):
    out = diag * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out
