"""Pointwise complex/real linear algebra shared by every other module.

Real Hessians of functions on C^m are stored as 2m x 2m symmetric matrices
in interleaved coordinates (x_1, y_1, ..., x_m, y_m), so the (i, j) block of
the m x m block partition is the 2 x 2 mixed Hessian in (x_i, y_i; x_j, y_j).
The complex Hessian convention is fixed by

    H[a, b] = ((f_xa_xb + f_ya_yb) + i (f_xa_yb - f_ya_xb)) / 4,

which makes the complex Hessian of |z|^2 the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HermitianMatrix",
    "BlockSymmetricMatrix",
    "SpectrumBounds",
    "PSD_RTOL",
    "is_psd",
    "block_det_inequality_check",
    "hessian_det_bound_check",
    "complex_hessian_from_real",
    "min_eigenvalue",
]

# A matrix counts as PSD when min eig >= -PSD_RTOL * (1 + spectral norm);
# quadrature and finite differences upstream introduce O(1e-12) asymmetry.
PSD_RTOL = 1e-10


@dataclass(frozen=True)
class HermitianMatrix:
    """An m x m conjugate-symmetric matrix of pointwise tensor values."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("entries must be a square matrix")
        if not np.all(np.isfinite(a.view(float))):
            raise ValueError("entries must be finite")
        if not np.allclose(a, a.conj().T, rtol=0.0, atol=1e-10 * (1.0 + _specnorm(a))):
            raise ValueError("matrix is not conjugate-symmetric")
        object.__setattr__(self, "entries", 0.5 * (a + a.conj().T))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class BlockSymmetricMatrix:
    """A 2m x 2m real symmetric matrix viewed as an m x m grid of 2x2 blocks."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("entries must be a square matrix")
        if a.shape[0] % 2 != 0:
            raise ValueError("dimension must be even (m x m grid of 2x2 blocks)")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must be finite")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * (1.0 + _specnorm(a))):
            raise ValueError("matrix is not symmetric")
        object.__setattr__(self, "entries", 0.5 * (a + a.T))

    @property
    def m(self) -> int:
        return self.entries.shape[0] // 2

    def block(self, i: int, j: int) -> np.ndarray:
        return self.entries[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]


@dataclass(frozen=True)
class SpectrumBounds:
    """Two-sided ellipticity bounds 0 < lam <= Lam for a coefficient field."""

    lam: float
    Lam: float

    def __post_init__(self):
        if not (0.0 < self.lam <= self.Lam):
            raise ValueError("need 0 < lam <= Lam")


def _specnorm(a) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def is_psd(a: np.ndarray, rtol: float = PSD_RTOL) -> bool:
    """PSD check with the relative tolerance used across the package."""
    a = np.asarray(a)
    w = np.linalg.eigvalsh(a)
    return bool(w.min() >= -rtol * (1.0 + abs(w).max(initial=0.0)))


def block_det_inequality_check(A: BlockSymmetricMatrix, tol: float = 1e-9):
    """Check det(A) <= prod(det of diagonal 2x2 blocks) for PSD block matrices.

    Returns a dict with lhs, rhs and the boolean verdict
    ``lhs <= rhs + tol * max(1, |rhs|)``.  Indefinite input (beyond the PSD
    tolerance) is rejected.
    """
    a = A.entries
    if not is_psd(a, max(PSD_RTOL, tol)):
        raise ValueError("matrix is not positive semi-definite within tolerance")
    lhs = float(np.linalg.det(a))
    rhs = 1.0
    for i in range(A.m):
        rhs *= float(np.linalg.det(A.block(i, i)))
    holds = lhs <= rhs + tol * max(1.0, abs(rhs))
    return {"lhs": lhs, "rhs": rhs, "holds": bool(holds)}


def complex_hessian_from_real(realHess: BlockSymmetricMatrix) -> HermitianMatrix:
    """Complex Hessian f_{a b-bar} from the real Hessian D^2 f.

    Uses the quarter identity stated in the module docstring; the output trace
    is one quarter of the real trace.
    """
    d2 = realHess.entries
    m = realHess.m
    xx = d2[0::2, 0::2]
    yy = d2[1::2, 1::2]
    xy = d2[0::2, 1::2]
    yx = d2[1::2, 0::2]
    h = 0.25 * ((xx + yy) + 1j * (xy - yx))
    _ = m
    return HermitianMatrix(h)


def hessian_det_bound_check(
    realHess: BlockSymmetricMatrix,
    complexHess: HermitianMatrix,
    tol: float = 1e-9,
):
    """Check det(D^2 f) <= 8^m |det f_{a b-bar}|^2 at a local-minimum point.

    The real Hessian must be PSD up to tolerance and consistent with the
    complex Hessian under :func:`complex_hessian_from_real`.
    """
    m = realHess.m
    if complexHess.dim != m:
        raise ValueError("dimension mismatch between real and complex Hessians")
    derived = complex_hessian_from_real(realHess).entries
    scale = 1.0 + _specnorm(derived)
    if not np.allclose(derived, complexHess.entries, rtol=0.0, atol=max(tol, 1e-9) * scale):
        raise ValueError("real and complex Hessians are inconsistent")
    if not is_psd(realHess.entries, max(PSD_RTOL, tol)):
        raise ValueError("real Hessian is not PSD within tolerance")
    lhs = float(np.linalg.det(realHess.entries))
    rhs = float(8.0**m * abs(np.linalg.det(complexHess.entries)) ** 2)
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs + tol)}


def min_eigenvalue(A: HermitianMatrix | np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix (1e-12 relative for m <= 8)."""
    a = A.entries if isinstance(A, HermitianMatrix) else np.asarray(A)
    if not np.allclose(a, np.asarray(a).conj().T, rtol=0.0, atol=1e-10 * (1.0 + _specnorm(a))):
        raise ValueError("input is not Hermitian")
    return float(np.linalg.eigvalsh(a)[0])
