"""Ornstein-Uhlenbeck colored-noise linear inverse model.

The model is dx/dt = A x + sqrt(2 Qc) eta with eta a stationary OU noise of
correlation time tau.  Its lagged correlation is

    K(s) = e^{sA} C + e^{sA} int_0^s e^{-u (A + I/tau)} du  Qc B^T,

with memory factor B = (I - tau A)^{-1}.  Stationarity ties the diffusion to
the covariance through B Qc + Qc B^T = -(A C + C A^T), which reduces to the
white relation at tau = 0.  The fit searches (A, log tau) jointly, recomputing
Qc from the stationarity relation at every candidate so K(0) = C_obs holds
identically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FitFailureError, SingularSolveError
from .linalg import as_square, expm, is_spd, solve_two_sided, spectral_abscissa
from .timeseries import LaggedCorrelation
from .white import (
    FitConfig,
    WhiteModel,
    _collect_starts,
    _lag_grid,
    _lag_weights,
    _run_simplex,
    _stability_penalty,
    fit_white,
    white_diffusion,
)

__all__ = [
    "ColoredModel",
    "memory_factor",
    "colored_diffusion",
    "colored_correlation",
    "colored_objective",
    "tau_bounds",
    "fit_colored",
]


@dataclass
class ColoredModel:
    """Fitted colored-noise model (A, tau, Qc, C); B is recomputed from A and tau."""

    A: np.ndarray
    tau: float
    Qc: np.ndarray
    C: np.ndarray
    fit_residual: float
    white_limit: bool = False
    lag_residuals: np.ndarray | None = None

    @property
    def B(self) -> np.ndarray:
        return memory_factor(self.A, self.tau)


def memory_factor(A, tau: float) -> np.ndarray:
    """Noise-memory factor B = (I - tau A)^{-1}; exactly the identity at tau = 0."""
    A = as_square(A)
    if tau < 0 or not np.isfinite(tau):
        raise ValueError(f"tau must be finite and nonnegative, got {tau}")
    if tau == 0:
        return np.eye(A.shape[0])
    M = np.eye(A.shape[0]) - tau * A
    if np.linalg.cond(M) > 1e14:
        raise SingularSolveError("I - tau*A is singular")
    return np.linalg.inv(M)


def colored_diffusion(A, tau: float, C) -> np.ndarray:
    """Diffusion Qc from the colored stationarity relation B Qc + Qc B^T = -(AC + CA^T).

    Reduces to the white fluctuation-dissipation diffusion exactly at tau = 0.
    """
    A = as_square(A)
    C = as_square(C)
    if tau == 0:
        return white_diffusion(A, C)
    B = memory_factor(A, tau)
    S = A @ C + C @ A.T
    return solve_two_sided(B, -0.5 * (S + S.T))


def _exp_integral(G: np.ndarray, s: float) -> np.ndarray:
    """int_0^s e^{-u G} du.

    Closed form G^{-1}(I - e^{-sG}) when G is safely invertible; otherwise a
    scaled Taylor series with doubling, valid for singular or near-singular G.
    """
    n = G.shape[0]
    eye = np.eye(n)
    if s == 0:
        return np.zeros_like(G)
    norm = float(np.linalg.norm(G, "fro"))
    if s * norm >= 0.25 and 1.0 / np.linalg.cond(G) > 1e-8:
        return np.linalg.solve(G, eye - expm(-G, s))
    # series sum_{k>=0} (-1)^k t^{k+1} G^k / (k+1)! on a halved interval,
    # doubled back with I(2t) = I(t) + e^{-tG} I(t)
    halvings = 0
    t = s
    while t * norm > 0.25:
        t *= 0.5
        halvings += 1
    term = t * eye
    acc = term.copy()
    for k in range(1, 16):
        term = term @ G * (-t / (k + 1))
        acc += term
    Et = expm(-G, t)
    for _ in range(halvings):
        acc = acc + Et @ acc
        Et = Et @ Et
    return acc


def colored_correlation(A, tau: float, Qc, C, lags) -> LaggedCorrelation:
    """Model correlation function of the colored system on the given lags.

    Qc must come from colored_diffusion(A, tau, C) for K(0) = C to be the
    stationary covariance; the zero-lag value is C exactly by construction.
    """
    A = as_square(A)
    Qc = as_square(Qc)
    C = as_square(C)
    if not (tau > 0 and np.isfinite(tau)):
        raise ValueError(f"tau must be positive, got {tau}")
    G = A + np.eye(A.shape[0]) / tau
    QB = Qc @ memory_factor(A, tau).T
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    mats = np.empty((len(lags), *A.shape))
    for i, s in enumerate(lags):
        if s == 0:
            mats[i] = C.copy()
        else:
            mats[i] = expm(A, s) @ (C + _exp_integral(G, s) @ QB)
    if not np.isfinite(mats).all():
        raise OverflowError("colored correlation evaluation produced non-finite values")
    return LaggedCorrelation(lags=lags, mats=mats, cov=C.copy())


def _colored_per_lag(A, tau, C, K_target, dt, weights) -> tuple[np.ndarray, np.ndarray]:
    """Per-lag weighted misfit on the uniform grid dt..kmax*dt, plus the Qc used.

    Uses step-matrix powers and the doubling identity for the noise-memory
    integral, so each extra lag costs a few small matmuls.
    """
    n = A.shape[0]
    eye = np.eye(n)
    Qc = colored_diffusion(A, tau, C)
    G = A + eye / tau
    QB = Qc @ memory_factor(A, tau).T
    P = expm(A, dt)
    E = expm(-G, dt)
    I1 = _exp_integral(G, dt)
    out = np.empty(len(K_target))
    M = eye
    F = eye
    Ik = np.zeros_like(A)
    for k in range(len(K_target)):
        Ik = Ik + F @ I1
        F = F @ E
        M = P @ M
        r = M @ (C + Ik @ QB) - K_target[k]
        out[k] = weights[k] * float(np.sum(r * r))
    return out, Qc


def tau_bounds(dt: float, window_l: float) -> tuple[float, float]:
    """Search bounds for the noise correlation time: below is numerically
    white, above is unidentifiable within the window."""
    return 1e-3 * dt, 10.0 * window_l


def colored_objective(A, tau: float, K: LaggedCorrelation, cfg: FitConfig | None = None) -> float:
    """The minimized quantity at (A, tau): window misfit plus stability and
    non-PD-diffusion penalties."""
    cfg = cfg if cfg is not None else FitConfig()
    kmax = _lag_grid(K, cfg.window_l)
    weights = _lag_weights(cfg, kmax)
    A = as_square(A)
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            per_lag, Qc = _colored_per_lag(A, tau, K.cov, K.mats[1 : kmax + 1], K.dt, weights)
        except (OverflowError, SingularSolveError, np.linalg.LinAlgError, ValueError):
            return float("inf")
    misfit = float(np.sum(per_lag))
    if not np.isfinite(misfit):
        return float("inf")
    pen = _stability_penalty(A, cfg.stability_penalty)
    qmin = float(np.linalg.eigvalsh(0.5 * (Qc + Qc.T))[0])
    if qmin < 0:
        pen += cfg.stability_penalty * abs(qmin)
    return misfit + pen


def _tau_scan_grid(dt: float, window_l: float, count: int = 13) -> np.ndarray:
    lo, hi = tau_bounds(dt, window_l)
    return np.geomspace(max(lo, 0.1 * dt), hi, count)


def fit_colored(
    K: LaggedCorrelation,
    cfg: FitConfig | None = None,
    white_model: WhiteModel | None = None,
) -> ColoredModel:
    """Jointly fit (A, tau) to the observed correlation window.

    tau is searched as log(tau) to stay positive; Qc is recomputed from the
    stationarity relation at every candidate so K(0) = C_obs holds
    identically.  Starts combine the white fit's dynamics (with a small tau
    and with the best value of a coarse tau scan) and the single-lag
    extractions.  A tau that collapses to the lower bound is returned with
    the white-limit flag rather than as an error.
    """
    cfg = cfg if cfg is not None else FitConfig()
    kmax = _lag_grid(K, cfg.window_l)
    weights = _lag_weights(cfg, kmax)
    C = K.cov
    target = K.mats[1 : kmax + 1]
    n = K.n_vars
    dt = K.dt
    lo, hi = tau_bounds(dt, cfg.window_l)
    log_lo, log_hi = np.log(lo), np.log(hi)

    def objective(theta):
        A = theta[:-1].reshape(n, n)
        z = theta[-1]
        z_clipped = min(max(z, log_lo), log_hi)
        pen = _stability_penalty(A, cfg.stability_penalty)
        pen += cfg.stability_penalty * (z - z_clipped) ** 2
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                per_lag, Qc = _colored_per_lag(
                    A, float(np.exp(z_clipped)), C, target, dt, weights
                )
            except (OverflowError, SingularSolveError, np.linalg.LinAlgError, ValueError):
                return float("inf")
        misfit = float(np.sum(per_lag))
        if not np.isfinite(misfit):
            return float("inf")
        qmin = float(np.linalg.eigvalsh(0.5 * (Qc + Qc.T))[0])
        if qmin < 0:
            pen += cfg.stability_penalty * abs(qmin)
        return misfit + pen

    diagnostics: list = []
    tau_small = min(max(2.0 * dt, lo), hi)  # start small and let the search adjust
    starts: list[tuple[str, np.ndarray]] = []
    if white_model is None:
        try:
            white_model = fit_white(K, cfg)
        except FitFailureError as exc:
            diagnostics.append({"start": "white fit", "error": str(exc)})
    if white_model is not None:
        aw = white_model.A.ravel()
        scan = _tau_scan_grid(dt, cfg.window_l)
        scan_obj = [objective(np.concatenate([aw, [np.log(t)]])) for t in scan]
        tau_scan = float(scan[int(np.argmin(scan_obj))])
        starts.append(("white-A tau-scan", np.concatenate([aw, [np.log(tau_scan)]])))
        if not np.isclose(tau_scan, tau_small):
            starts.append(("white-A small-tau", np.concatenate([aw, [np.log(tau_small)]])))
    for name, A0 in _collect_starts(K, cfg, diagnostics):
        starts.append((name, np.concatenate([A0.ravel(), [np.log(tau_small)]])))
    if not starts:
        starts = [
            (
                "fallback -I/l",
                np.concatenate([(-np.eye(n) / cfg.window_l).ravel(), [np.log(tau_small)]]),
            )
        ]

    rng = np.random.default_rng(cfg.seed)
    best = None
    for name, x0 in starts:
        for attempt in range(cfg.optimizer.restarts + 1):
            xs = x0 if attempt == 0 else x0 + cfg.optimizer.simplex_scale * np.maximum(
                np.abs(x0), 0.1
            ) * rng.standard_normal(x0.shape)
            res = _run_simplex(objective, xs, cfg.optimizer)
            diagnostics.append(
                {"start": name, "attempt": attempt, "objective": float(res.fun)}
            )
            if np.isfinite(res.fun) and (best is None or res.fun < best[0]):
                best = (float(res.fun), res.x.copy())

    if best is None:
        raise FitFailureError("all optimization starts diverged", diagnostics)
    A = best[1][:-1].reshape(n, n)
    tau = float(np.clip(np.exp(best[1][-1]), lo, hi))
    if spectral_abscissa(A) >= 0:
        raise FitFailureError(
            "optimizer returned an unstable dynamics matrix", diagnostics
        )
    per_lag, Qc = _colored_per_lag(A, tau, C, target, dt, weights)
    try:
        if not is_spd(Qc, 0.0):
            warnings.warn(
                "estimated colored diffusion is not positive definite (sampling error?)",
                RuntimeWarning,
                stacklevel=2,
            )
    except ValueError:
        pass
    return ColoredModel(
        A=A,
        tau=tau,
        Qc=Qc,
        C=C.copy(),
        fit_residual=float(np.sum(per_lag)),
        white_limit=bool(tau <= dt),
        lag_residuals=per_lag,
    )
