"""Liang-Kleeman information flows from fitted dynamics or directly from data.

Entry [i, j] of a flow matrix is the rate T_{j->i} at which variable j
transfers Shannon entropy to variable i, in nats per time unit.  Positive
flow means j excites i, negative means j stabilizes i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVarianceError, SingularMatrixError
from .linalg import as_square
from .timeseries import TimeSeriesMatrix, forward_diff_covariances

__all__ = [
    "InfoFlowMatrix",
    "info_flow_from_model",
    "info_flow_liang",
    "liang_dynamics",
    "cofactor_matrix",
    "classify_flows",
]

LABEL_EXCITES = "excites"
LABEL_STABILIZES = "stabilizes"
LABEL_NONE = "none"


@dataclass
class InfoFlowMatrix:
    """Directed information-flow rates; T[i, j] is the flow j -> i."""

    T: np.ndarray
    method: str
    mask_threshold: float | None = None

    def flow(self, source: int, target: int) -> float:
        return float(self.T[target, source])


def info_flow_from_model(A, C) -> InfoFlowMatrix:
    """Flow from fitted linear dynamics: T_{j->i} = A_ij C_ij / C_ii.

    The self-flow T_{i->i} is A_ii exactly; A_ij = 0 forces a zero flow
    regardless of correlation.  Valid for both the white and the colored
    model since the noise does not enter the state-to-state dynamics.
    """
    A = as_square(A)
    C = as_square(C)
    if A.shape != C.shape:
        raise ValueError(f"shape mismatch: A {A.shape} vs C {C.shape}")
    d = np.diag(C)
    if np.any(d <= 0):
        raise DegenerateVarianceError("C has a nonpositive diagonal variance")
    T = A * C / d[:, None]
    np.fill_diagonal(T, np.diag(A))
    return InfoFlowMatrix(T=T, method="model-based")


def cofactor_matrix(C) -> np.ndarray:
    """Matrix of cofactors: Delta[j, k] = (-1)^{j+k} det(C with row j, col k removed)."""
    C = as_square(C)
    n = C.shape[0]
    if n == 1:
        return np.ones((1, 1))
    Delta = np.empty_like(C)
    rows = np.arange(n)
    for j in range(n):
        for k in range(n):
            minor = C[np.ix_(rows != j, rows != k)]
            Delta[j, k] = (-1) ** (j + k) * np.linalg.det(minor)
    return Delta


def liang_dynamics(x: TimeSeriesMatrix) -> np.ndarray:
    """Forward-difference dynamics estimate <xdot x^T> C^{-1} implied by the
    covariance-only flow estimator."""
    C, Cd = forward_diff_covariances(x)
    if np.linalg.cond(C) > 1e12:
        raise SingularMatrixError("covariance is singular or near-singular")
    return np.linalg.solve(C.T, Cd).T


def info_flow_liang(x: TimeSeriesMatrix) -> InfoFlowMatrix:
    """Covariance-only flow estimate from the data itself.

    T_{j->i} = (1/det C) sum_k Delta_jk Cd[k, i] * C_ij / C_ii, with Delta
    the cofactors of C and Cd the covariance of the state with its
    forward-difference derivative.
    """
    C, Cd = forward_diff_covariances(x)
    if np.linalg.cond(C) > 1e12:
        raise SingularMatrixError("covariance is singular or near-singular")
    d = np.diag(C)
    if np.any(d <= 0):
        raise DegenerateVarianceError("a variable has zero variance")
    det = float(np.linalg.det(C))
    S = cofactor_matrix(C) @ Cd  # S[j, i] = sum_k Delta_jk Cd[k, i]
    T = (S.T / det) * C / d[:, None]
    return InfoFlowMatrix(T=T, method="liang-direct")


def classify_flows(T: InfoFlowMatrix, eps: float = 0.0) -> np.ndarray:
    """Label each flow as excites (> eps), stabilizes (< -eps), or none."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    vals = T.T
    labels = np.full(vals.shape, LABEL_NONE, dtype="<U10")
    labels[vals > eps] = LABEL_EXCITES
    labels[vals < -eps] = LABEL_STABILIZES
    return labels
