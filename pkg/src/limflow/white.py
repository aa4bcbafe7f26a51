"""White-noise linear inverse model: matrix-log extraction and windowed fitting.

The model is dx/dt = A x + sqrt(2Q) xi with stable A, for which the lagged
correlation is K(s) = e^{sA} C.  The fit searches the n^2 entries of A with
multi-start Nelder-Mead against the observed correlation function over a
window (0, l], holding K(0) = C_obs as an identity of the model family.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import BranchCutError, FitFailureError, SingularMatrixError
from .linalg import as_square, expm, is_spd, logm_principal, spectral_abscissa
from .timeseries import LaggedCorrelation

__all__ = [
    "OptimizerOptions",
    "FitConfig",
    "WhiteModel",
    "single_lag_dynamics",
    "white_correlation",
    "white_diffusion",
    "white_objective",
    "fit_white",
]


@dataclass(frozen=True)
class OptimizerOptions:
    """Nelder-Mead controls: iteration cap, initial simplex scale,
    random restarts per initial guess, and convergence tolerance."""

    max_iters: int = 4000
    simplex_scale: float = 0.1
    restarts: int = 2
    tol: float = 1e-9


@dataclass
class FitConfig:
    """Controls for the windowed correlation-function fits.

    window_l is the lag window length (default 4 months); weights are
    per-lag nonnegative factors over the grid dt..window_l (uniform when
    None); init_lags are the single-lag extraction times used as starting
    guesses (auto-chosen when None).
    """

    window_l: float = 4.0
    weights: np.ndarray | None = None
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    init_lags: tuple[float, ...] | None = None
    stability_penalty: float = 1e6
    seed: int = 0


@dataclass
class WhiteModel:
    """Fitted white-noise model (A, Q, C) with the objective value at the optimum."""

    A: np.ndarray
    Q: np.ndarray
    C: np.ndarray
    fit_residual: float
    lag_residuals: np.ndarray | None = None


def single_lag_dynamics(K: LaggedCorrelation, rho: float) -> np.ndarray:
    """Extract A from a single lag: log(K(rho) C^{-1}) / rho.

    Branch failures of the matrix logarithm propagate as BranchCutError;
    the caller treats that rho as unusable.
    """
    k = K.lag_index(rho)
    if k == 0:
        raise ValueError("rho must be a positive lag")
    C = K.cov
    if np.linalg.cond(C) > 1e12:
        raise SingularMatrixError("zero-lag covariance is singular or near-singular")
    M = np.linalg.solve(C.T, K.mats[k].T).T  # K(rho) C^{-1}
    return logm_principal(M) / rho


def white_correlation(A, C, lags) -> LaggedCorrelation:
    """Model correlation K(s) = e^{sA} C on the given lags; K(0) = C exactly."""
    A = as_square(A)
    C = as_square(C)
    if spectral_abscissa(A) >= 0:
        raise ValueError("dynamics matrix must be stable (spectral abscissa < 0)")
    if not is_spd(C, 0.0):
        raise ValueError("C must be symmetric positive definite")
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    mats = np.empty((len(lags), *A.shape))
    for i, s in enumerate(lags):
        mats[i] = C.copy() if s == 0 else expm(A, s) @ C
    return LaggedCorrelation(lags=lags, mats=mats, cov=C.copy())


def white_diffusion(A, C) -> np.ndarray:
    """Diffusion from the white fluctuation-dissipation relation: Q = -(AC + CA^T)/2."""
    A = as_square(A)
    C = as_square(C)
    S = A @ C + C @ A.T
    Q = -0.25 * (S + S.T)
    try:
        if not is_spd(Q, 0.0):
            warnings.warn(
                "estimated diffusion is not positive definite (sampling error?)",
                RuntimeWarning,
                stacklevel=2,
            )
    except ValueError:
        pass
    return Q


# ---------------------------------------------------------------------------
# fit machinery shared with the colored fit


def _lag_grid(K: LaggedCorrelation, window_l: float) -> int:
    """Number of grid lags inside (0, window_l]; validates grid coverage."""
    if K.dt is None or K.lags[0] != 0.0:
        raise ValueError("fitting requires a uniform lag grid starting at 0")
    kmax = int(np.floor(window_l / K.dt + 1e-9))
    if kmax < 1:
        raise ValueError(f"window {window_l} is shorter than one lag step {K.dt}")
    if kmax > len(K.lags) - 1:
        raise ValueError(
            f"window {window_l} needs {kmax} lags, correlation has {len(K.lags) - 1}"
        )
    return kmax


def _lag_weights(cfg: FitConfig, kmax: int) -> np.ndarray:
    if cfg.weights is None:
        return np.ones(kmax)
    w = np.asarray(cfg.weights, dtype=float)
    if w.shape != (kmax,):
        raise ValueError(f"weights must have shape ({kmax},), got {w.shape}")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be nonnegative and not all zero")
    return w


def _default_init_lags(dt: float, window_l: float, max_lag: float) -> tuple[float, ...]:
    top = min(window_l, max_lag)
    cand = []
    for t in (dt, window_l / 4, window_l / 2, window_l):
        k = int(round(t / dt))
        k = max(1, min(k, int(np.floor(top / dt + 1e-9))))
        cand.append(k * dt)
    return tuple(sorted(set(cand)))


def _white_per_lag(A, C, K_target, dt, weights) -> np.ndarray:
    """Weighted squared Frobenius misfit per lag, via powers of the step matrix."""
    P = expm(A, dt)
    M = np.eye(A.shape[0])
    out = np.empty(len(K_target))
    for k in range(len(K_target)):
        M = P @ M
        r = M @ C - K_target[k]
        out[k] = weights[k] * float(np.sum(r * r))
    return out


def _stability_penalty(A, weight: float) -> float:
    return weight * max(0.0, spectral_abscissa(A)) ** 2


def _initial_simplex(x0: np.ndarray, scale: float) -> np.ndarray:
    verts = np.tile(x0, (len(x0) + 1, 1))
    for i in range(len(x0)):
        verts[i + 1, i] += scale * max(abs(x0[i]), 0.1)
    return verts


def _run_simplex(objective, x0: np.ndarray, opts: OptimizerOptions):
    return scipy.optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options=dict(
            maxiter=opts.max_iters,
            maxfev=2 * opts.max_iters,
            xatol=opts.tol,
            fatol=opts.tol,
            initial_simplex=_initial_simplex(x0, opts.simplex_scale),
        ),
    )


def _collect_starts(K: LaggedCorrelation, cfg: FitConfig, diagnostics: list) -> list:
    """Single-lag extractions A0(rho) as educated initial guesses."""
    init_lags = cfg.init_lags
    if init_lags is None:
        init_lags = _default_init_lags(K.dt, cfg.window_l, K.max_lag)
    starts = []
    for rho in init_lags:
        try:
            starts.append((f"single-lag rho={rho:g}", single_lag_dynamics(K, rho)))
        except (BranchCutError, ValueError, SingularMatrixError) as exc:
            diagnostics.append({"start": f"single-lag rho={rho:g}", "error": str(exc)})
    return starts


def white_objective(A, K: LaggedCorrelation, cfg: FitConfig | None = None) -> float:
    """The minimized quantity: weighted window misfit plus the stability penalty."""
    cfg = cfg if cfg is not None else FitConfig()
    kmax = _lag_grid(K, cfg.window_l)
    weights = _lag_weights(cfg, kmax)
    A = as_square(A)
    try:
        misfit = float(np.sum(_white_per_lag(A, K.cov, K.mats[1 : kmax + 1], K.dt, weights)))
    except (OverflowError, np.linalg.LinAlgError):
        return float("inf")
    return misfit + _stability_penalty(A, cfg.stability_penalty)


def fit_white(K: LaggedCorrelation, cfg: FitConfig | None = None) -> WhiteModel:
    """Fit stable dynamics A to the observed correlation window under Eq. K(s) = e^{sA} C.

    Multi-starts from the single-lag extractions (plus random restarts);
    the best objective wins.  C is the observed zero-lag covariance by
    construction, and Q follows from the fluctuation-dissipation relation.
    """
    cfg = cfg if cfg is not None else FitConfig()
    kmax = _lag_grid(K, cfg.window_l)
    weights = _lag_weights(cfg, kmax)
    C = K.cov
    target = K.mats[1 : kmax + 1]
    n = K.n_vars

    def objective(theta):
        A = theta.reshape(n, n)
        pen = _stability_penalty(A, cfg.stability_penalty)
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                misfit = float(np.sum(_white_per_lag(A, C, target, K.dt, weights)))
            except (OverflowError, np.linalg.LinAlgError):
                return float("inf")
        if not np.isfinite(misfit):
            return float("inf")
        return misfit + pen

    diagnostics: list = []
    starts = _collect_starts(K, cfg, diagnostics)
    if not starts:
        starts = [("fallback -I/l", -np.eye(n) / cfg.window_l)]

    rng = np.random.default_rng(cfg.seed)
    best = None
    for name, A0 in starts:
        x0 = A0.ravel()
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
    A = best[1].reshape(n, n)
    if spectral_abscissa(A) >= 0:
        raise FitFailureError(
            "optimizer returned an unstable dynamics matrix", diagnostics
        )
    per_lag = _white_per_lag(A, C, target, K.dt, weights)
    return WhiteModel(
        A=A,
        Q=white_diffusion(A, C),
        C=C.copy(),
        fit_residual=float(np.sum(per_lag)),
        lag_residuals=per_lag,
    )
