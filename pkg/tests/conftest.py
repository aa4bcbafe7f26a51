"""Shared synthetic systems: one long white run and one long colored run,
fitted once per session, reused by the module tests and the acceptance gates."""

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import settings

from limflow import (
    FitConfig,
    SimSpec,
    colored_diffusion,
    fit_colored,
    fit_white,
    lagged_correlation,
    simulate,
    solve_two_sided,
)

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

# reference 2x2 stable dynamics used throughout the suite
A_TRUE = np.array([[-1.0, 0.5], [-0.2, -0.8]])
TAU_TRUE = 2.0
DT = 0.1
STEPS = 200_000
N_LAGS = 60  # covers lags up to 6 time units at dt = 0.1


@pytest.fixture(scope="session")
def white_system():
    Q = np.eye(2)
    C = solve_two_sided(A_TRUE, -2.0 * Q)
    spec = SimSpec(A=A_TRUE, Q=Q, tau=0.0, dt=DT, steps=STEPS, seed=101, burn_in=2000)
    ts = simulate(spec)
    K = lagged_correlation(ts, N_LAGS)
    return SimpleNamespace(A=A_TRUE, Q=Q, C=C, tau=0.0, spec=spec, ts=ts, K=K)


@pytest.fixture(scope="session")
def colored_system():
    C = np.eye(2)
    Qc = colored_diffusion(A_TRUE, TAU_TRUE, C)
    spec = SimSpec(A=A_TRUE, Q=Qc, tau=TAU_TRUE, dt=DT, steps=STEPS, seed=202, burn_in=2000)
    ts = simulate(spec)
    K = lagged_correlation(ts, N_LAGS)
    return SimpleNamespace(A=A_TRUE, Qc=Qc, C=C, tau=TAU_TRUE, spec=spec, ts=ts, K=K)


@pytest.fixture(scope="session")
def fit_cfg():
    return FitConfig(window_l=2.0, seed=0)


@pytest.fixture(scope="session")
def white_fit_model(white_system, fit_cfg):
    return fit_white(white_system.K, fit_cfg)


@pytest.fixture(scope="session")
def colored_fit_model(colored_system, fit_cfg):
    return fit_colored(colored_system.K, fit_cfg)
