"""Dense small-matrix special functions backing the fitting and simulation code.

All routines operate on small (n <= ~20) square float matrices, validate
finiteness on entry, and never return silent NaN/Inf.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import BranchCutError, SingularSolveError

__all__ = [
    "as_square",
    "expm",
    "logm_principal",
    "solve_two_sided",
    "spectral_abscissa",
    "is_spd",
    "symmetric_sqrt",
]


def as_square(M) -> np.ndarray:
    """Validate and return M as a finite square float array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError("matrix contains NaN or Inf entries")
    return M


def expm(M, s: float = 1.0) -> np.ndarray:
    """e^{s M} via scaling-and-squaring; returns the identity exactly at s = 0."""
    M = as_square(M)
    if not np.isfinite(s) or s < 0:
        raise ValueError(f"time argument must be finite and nonnegative, got {s}")
    if s == 0:
        return np.eye(M.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(s * M)
    if not np.isfinite(E).all():
        raise OverflowError(f"matrix exponential overflowed at s*||M|| = {s * np.linalg.norm(M):.3g}")
    return E


def logm_principal(M, axis_tol: float = 1e-12) -> np.ndarray:
    """Principal matrix logarithm of M.

    Raises BranchCutError when any eigenvalue lies on the closed negative
    real axis (including zero), where the principal branch is undefined.
    """
    M = as_square(M)
    w = np.linalg.eigvals(M)
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    on_axis = (np.abs(w.imag) <= axis_tol * scale) & (w.real <= axis_tol * scale)
    if on_axis.any():
        raise BranchCutError(
            f"eigenvalue on the closed negative real axis: {w[on_axis]}"
        )
    L, _errest = scipy.linalg.logm(M, disp=False)
    if np.iscomplexobj(L):
        # real input off the branch cut has a real principal log
        if np.max(np.abs(L.imag)) > 1e-8 * max(1.0, float(np.max(np.abs(L.real)))):
            raise BranchCutError("matrix logarithm did not come out real")
        L = L.real.copy()
    if not np.isfinite(L).all():
        raise BranchCutError("matrix logarithm produced non-finite entries")
    return L


def spectral_abscissa(M) -> float:
    """Largest real part over the eigenvalues of M."""
    M = as_square(M)
    return float(np.max(np.linalg.eigvals(M).real))


def solve_two_sided(F, S, rtol: float = 1e-10) -> np.ndarray:
    """Solve F X + X F^T = S for symmetric S.

    Unique solvability requires that no two eigenvalues of F sum to zero,
    which holds whenever the spectrum lies strictly in one half-plane.
    The result is symmetrized and its residual checked against rtol*||S||_F.
    """
    F = as_square(F)
    S = as_square(S)
    if F.shape != S.shape:
        raise ValueError(f"shape mismatch: F {F.shape} vs S {S.shape}")
    s_scale = float(np.linalg.norm(S, "fro"))
    if np.max(np.abs(S - S.T)) > 1e-8 * max(s_scale, 1.0):
        raise ValueError("S must be symmetric")
    S = 0.5 * (S + S.T)
    w = np.linalg.eigvals(F)
    pair_gap = float(np.min(np.abs(w[:, None] + w[None, :])))
    if pair_gap <= 1e-12 * max(1.0, float(np.max(np.abs(w)))):
        raise SingularSolveError(
            f"F and -F^T share an eigenvalue (min |l_i + l_j| = {pair_gap:.3e})"
        )
    X = scipy.linalg.solve_continuous_lyapunov(F, S)
    X = 0.5 * (X + X.T)
    resid = float(np.linalg.norm(F @ X + X @ F.T - S, "fro"))
    if not np.isfinite(X).all() or resid > rtol * max(s_scale, np.finfo(float).tiny):
        raise SingularSolveError(
            f"two-sided solve residual {resid:.3e} exceeds {rtol:.1e} * ||S||"
        )
    return X


def is_spd(M, tol: float = 1e-12) -> bool:
    """True iff M (symmetric up to tol) has all eigenvalues strictly above tol."""
    M = as_square(M)
    scale = max(float(np.max(np.abs(M))), 1.0)
    if np.max(np.abs(M - M.T)) > tol * scale + tol:
        raise ValueError("matrix is not symmetric within tolerance")
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    return bool(np.all(w > tol))


def symmetric_sqrt(M, rtol: float = 1e-8) -> np.ndarray:
    """Symmetric PSD square root of a symmetric PSD matrix.

    Eigenvalues in [-rtol*max_eig, 0) are treated as rounding noise and
    clipped to zero; anything more negative raises.
    """
    M = as_square(M)
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    floor = -rtol * max(float(w[-1]), np.finfo(float).tiny)
    if w[0] < floor:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
