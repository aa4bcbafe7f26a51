"""Exact generators for white- and colored-noise-driven linear systems.

These are the ground-truth oracles for the fitting and flow estimators.
Sampling uses the exact discrete transition of the (possibly augmented) OU
process, so oracle data carries no step-size bias; an Euler-Maruyama mode is
kept behind a flag for robustness experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colored import memory_factor
from .linalg import expm, is_spd, solve_two_sided, spectral_abscissa, symmetric_sqrt
from .timeseries import TimeSeriesMatrix

__all__ = ["SimSpec", "stationary_covariance", "simulate"]


@dataclass
class SimSpec:
    """Parameters of a synthetic linear SDE run.

    Q is the white diffusion when tau == 0 and the colored diffusion when
    tau > 0.  burn_in samples are discarded from the front of the run.
    """

    A: np.ndarray
    Q: np.ndarray
    tau: float = 0.0
    dt: float = 0.1
    steps: int = 1000
    seed: int = 0
    burn_in: int = 0

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.Q = np.asarray(self.Q, dtype=float)
        if spectral_abscissa(self.A) >= 0:
            raise ValueError("dynamics matrix must be stable")
        if not is_spd(self.Q, 0.0):
            raise ValueError("diffusion matrix must be symmetric positive definite")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.tau < 0 or not np.isfinite(self.tau):
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")

    @property
    def n_vars(self) -> int:
        return self.A.shape[0]


def stationary_covariance(spec: SimSpec) -> np.ndarray:
    """Stationary state covariance implied by the spec.

    White: A C + C A^T = -2Q.  Colored: A C + C A^T = -(Q B^T + B Q) with
    B the noise-memory factor.
    """
    if spec.tau == 0:
        return solve_two_sided(spec.A, -2.0 * spec.Q)
    B = memory_factor(spec.A, spec.tau)
    S = spec.Q @ B.T + B @ spec.Q
    return solve_two_sided(spec.A, -0.5 * (S + S.T))


def _augmented_system(spec: SimSpec) -> tuple[np.ndarray, np.ndarray]:
    """Block dynamics of the white-noise-driven (x, eta) system and its
    forcing covariance intensity (the constant in M S + S M^T = -W)."""
    n = spec.n_vars
    if spec.tau == 0:
        return spec.A.copy(), 2.0 * spec.Q
    root = symmetric_sqrt(2.0 * spec.Q)
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = spec.A
    M[:n, n:] = root
    M[n:, n:] = -np.eye(n) / spec.tau
    W = np.zeros((2 * n, 2 * n))
    W[n:, n:] = np.eye(n) / spec.tau**2  # OU forcing xi/tau
    return M, W


def _sampling_root(S: np.ndarray) -> np.ndarray:
    """Factor R with R R^T = S for a (numerically) PSD covariance."""
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return V * np.sqrt(np.clip(w, 0.0, None))


def _simulate_full(spec: SimSpec, method: str = "exact") -> np.ndarray:
    """Full (augmented, when tau > 0) trajectory of shape (m, steps)."""
    M, W = _augmented_system(spec)
    m = M.shape[0]
    # stationary covariance of the augmented white-noise-driven system; for
    # tau > 0 this is an independent route to the colored statistics, so the
    # simulator does not presuppose the colored stationarity relation
    Sigma = solve_two_sided(M, -W)
    rng = np.random.default_rng(spec.seed)
    total = spec.steps + spec.burn_in
    z = _sampling_root(Sigma) @ rng.standard_normal(m)
    out = np.empty((spec.steps, m))
    if method == "exact":
        Phi = expm(M, spec.dt)
        noise = rng.standard_normal((total, m)) @ _sampling_root(
            Sigma - Phi @ Sigma @ Phi.T
        ).T
        for k in range(total):
            z = Phi @ z + noise[k]
            if k >= spec.burn_in:
                out[k - spec.burn_in] = z
    elif method == "euler":
        step = np.eye(m) + spec.dt * M
        noise = rng.standard_normal((total, m)) @ (
            np.sqrt(spec.dt) * _sampling_root(W)
        ).T
        for k in range(total):
            z = step @ z + noise[k]
            if k >= spec.burn_in:
                out[k - spec.burn_in] = z
    else:
        raise ValueError(f"unknown method {method!r}; use 'exact' or 'euler'")
    return out.T


def simulate(spec: SimSpec, method: str = "exact") -> TimeSeriesMatrix:
    """Sample a trajectory of the state variables; deterministic given seed."""
    full = _simulate_full(spec, method=method)
    return TimeSeriesMatrix(data=full[: spec.n_vars], dt=spec.dt, t0_phase=0)
