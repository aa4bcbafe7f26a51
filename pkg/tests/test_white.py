import numpy as np
import pytest
from scipy.integrate import solve_ivp

from limflow import (
    BranchCutError,
    FitConfig,
    LaggedCorrelation,
    expm,
    fit_white,
    single_lag_dynamics,
    solve_two_sided,
    spectral_abscissa,
    white_correlation,
    white_diffusion,
    white_objective,
)

A_DAGGER = np.array([[-1.0, 0.5], [-0.2, -0.8]])


def exact_white_K(A, C, dt, kmax):
    """Noise-free correlation function on a uniform grid, straight from the model."""
    lags = np.arange(kmax + 1) * dt
    mats = np.array([C if s == 0 else expm(A, s) @ C for s in lags])
    return LaggedCorrelation(lags=lags, mats=mats, cov=C.copy(), dt=dt)


@pytest.fixture(scope="module")
def exact_K_dagger():
    C = solve_two_sided(A_DAGGER, -2.0 * np.eye(2))
    return exact_white_K(A_DAGGER, C, 0.25, 12), C


class TestSingleLagDynamics:
    def test_diagonal_exact(self):
        A = np.diag([-1.0, -0.5])
        K = exact_white_K(A, np.eye(2), 1.0, 2)
        assert np.allclose(single_lag_dynamics(K, 1.0), A, atol=1e-12)

    def test_general_exact_any_lag(self, exact_K_dagger):
        K, _C = exact_K_dagger
        for rho in (0.5, 1.0):
            assert np.allclose(single_lag_dynamics(K, rho), A_DAGGER, atol=1e-8)

    def test_branch_failure_propagates(self):
        mats = np.array([np.eye(2), np.diag([-0.5, 0.3])])
        K = LaggedCorrelation(lags=np.array([0.0, 1.0]), mats=mats, cov=np.eye(2))
        with pytest.raises(BranchCutError):
            single_lag_dynamics(K, 1.0)

    def test_zero_lag_rejected(self, exact_K_dagger):
        with pytest.raises(ValueError):
            single_lag_dynamics(exact_K_dagger[0], 0.0)


class TestWhiteCorrelation:
    def test_diagonal(self):
        K = white_correlation(np.diag([-1.0, -0.5]), np.eye(2), [1.0])
        assert np.allclose(K.mats[0], np.diag([np.exp(-1.0), np.exp(-0.5)]), atol=1e-14)

    def test_zero_lag_is_covariance_exactly(self):
        C = np.array([[1.3, 0.2], [0.2, 0.9]])
        K = white_correlation(A_DAGGER, C, [0.0, 1.0])
        assert np.array_equal(K.mats[0], C)

    def test_against_moment_ode(self):
        # oracle: integrate K' = A K from K(0) = C to s = 2
        C = np.eye(2)
        sol = solve_ivp(
            lambda t, y: (A_DAGGER @ y.reshape(2, 2)).ravel(),
            (0.0, 2.0),
            C.ravel(),
            rtol=1e-11,
            atol=1e-13,
        )
        want = sol.y[:, -1].reshape(2, 2)
        got = white_correlation(A_DAGGER, C, [2.0]).mats[0]
        assert np.allclose(got, want, atol=1e-8)

    def test_unstable_dynamics_rejected(self):
        with pytest.raises(ValueError):
            white_correlation(np.diag([0.1, -1.0]), np.eye(2), [1.0])


class TestWhiteDiffusion:
    def test_diagonal(self):
        Q = white_diffusion(np.diag([-1.0, -0.5]), np.eye(2))
        assert np.allclose(Q, np.diag([1.0, 0.5]), atol=1e-14)

    def test_minus_identity_dynamics(self):
        C = np.array([[2.0, 0.3], [0.3, 1.5]])
        assert np.allclose(white_diffusion(-np.eye(2), C), C, atol=1e-14)

    def test_direct_arithmetic(self):
        Q = white_diffusion(A_DAGGER, np.eye(2))
        assert np.allclose(Q, [[1.0, -0.15], [-0.15, 0.8]], atol=1e-14)

    def test_fluctuation_dissipation_residual(self):
        C = solve_two_sided(A_DAGGER, -2.0 * np.eye(2))
        Q = white_diffusion(A_DAGGER, C)
        resid = np.linalg.norm(A_DAGGER @ C + C @ A_DAGGER.T + 2 * Q, "fro")
        assert resid <= 1e-10 * np.linalg.norm(Q, "fro")


class TestFitWhite:
    def test_noise_free_recovery(self, exact_K_dagger):
        K, C = exact_K_dagger
        model = fit_white(K, FitConfig(window_l=2.0))
        assert np.linalg.norm(model.A - A_DAGGER, "fro") <= 1e-6
        assert np.array_equal(model.C, C)
        assert model.fit_residual <= 1e-10

    def test_simulated_recovery(self, white_fit_model, white_system):
        tol = 0.1 * np.linalg.norm(white_system.A, "fro")
        assert np.max(np.abs(white_fit_model.A - white_system.A)) <= tol

    def test_decoupled_data_stays_decoupled(self):
        A = np.diag([-1.0, -0.5])
        C = np.diag([1.5, 0.7])
        model = fit_white(exact_white_K(A, C, 0.25, 10), FitConfig(window_l=2.0))
        assert abs(model.A[0, 1]) <= 1e-6
        assert abs(model.A[1, 0]) <= 1e-6
        assert np.allclose(np.diag(model.A), np.diag(A), atol=1e-6)

    def test_returned_dynamics_always_stable(self, white_fit_model, colored_system):
        assert spectral_abscissa(white_fit_model.A) < 0
        # also on data the white model cannot represent
        model = fit_white(colored_system.K, FitConfig(window_l=2.0))
        assert spectral_abscissa(model.A) < 0

    def test_objective_not_worse_than_any_initial_guess(self, white_system, fit_cfg):
        K = white_system.K
        model = fit_white(K, fit_cfg)
        best = white_objective(model.A, K, fit_cfg)
        for rho in (0.1, 0.5, 1.0, 2.0):
            a0 = single_lag_dynamics(K, rho)
            assert best <= white_objective(a0, K, fit_cfg) + 1e-12

    def test_agrees_with_single_lag_on_exact_input(self, exact_K_dagger):
        K, _ = exact_K_dagger
        model = fit_white(K, FitConfig(window_l=2.0))
        for rho in (0.25, 0.5, 1.0, 2.0):
            a0 = single_lag_dynamics(K, rho)
            assert np.linalg.norm(model.A - a0, "fro") <= 1e-6

    def test_diagonal_scaling_equivariance(self, exact_K_dagger):
        K, C = exact_K_dagger
        D = np.diag([3.0, 0.4])
        K_scaled = LaggedCorrelation(
            lags=K.lags,
            mats=np.array([D @ m @ D for m in K.mats]),
            cov=D @ C @ D,
            dt=K.dt,
        )
        cfg = FitConfig(window_l=2.0)
        A_plain = fit_white(K, cfg).A
        A_scaled = fit_white(K_scaled, cfg).A
        Dm = np.diag(D)
        assert np.allclose(A_scaled, A_plain * Dm[:, None] / Dm[None, :], atol=1e-6)

    def test_fluctuation_dissipation_by_construction(self, white_fit_model):
        m = white_fit_model
        resid = np.linalg.norm(m.A @ m.C + m.C @ m.A.T + 2 * m.Q, "fro")
        assert resid <= 1e-10 * np.linalg.norm(m.Q, "fro")

    def test_window_must_fit_available_lags(self, exact_K_dagger):
        K, _ = exact_K_dagger
        with pytest.raises(ValueError):
            fit_white(K, FitConfig(window_l=100.0))

    def test_weights_validated(self, exact_K_dagger):
        K, _ = exact_K_dagger
        with pytest.raises(ValueError):
            fit_white(K, FitConfig(window_l=2.0, weights=np.zeros(8)))
