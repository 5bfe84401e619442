import numpy as np
import pytest

from minimax_dr.dgp import (
    PRINTED_SCENARIO1_OVERRIDES,
    ScenarioConfig,
    default_parameters,
    generate,
    oracle_h_bridge,
    scenario2_t_a,
    scenario_name,
    true_ace,
)
from minimax_dr.errors import InputError


def test_scenario_names():
    assert scenario_name(1) == "linear_gaussian_1"
    assert scenario_name("2") == "multidim_2"
    assert scenario_name("nonlinear_3") == "nonlinear_3"
    with pytest.raises(InputError):
        scenario_name(4)


def test_sample_size_boundary():
    with pytest.raises(InputError):
        ScenarioConfig(1, 0)
    for scenario in (1, 2, 3):
        data = generate(ScenarioConfig(scenario, 1, seed=0))
        assert data.n == 1


@pytest.mark.parametrize("scenario", [1, 2, 3])
def test_determinism_and_independence(scenario):
    a = generate(ScenarioConfig(scenario, 200, seed=11))
    b = generate(ScenarioConfig(scenario, 200, seed=11))
    c = generate(ScenarioConfig(scenario, 200, seed=12))
    for name in ("X", "Z", "W", "A", "Y"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.Y, c.Y)
    assert set(np.unique(a.A)) <= {0.0, 1.0}
    for name in ("X", "Z", "W", "A", "Y"):
        assert np.all(np.isfinite(getattr(a, name)))


def test_scenario1_moments():
    data, U = generate(ScenarioConfig(1, 100_000, seed=1), return_latent=True)
    assert np.cov(data.Z[:, 0], data.W[:, 0])[0, 1] == pytest.approx(0.25, abs=0.02)

    p = default_parameters(1)
    A, X = data.A, data.X
    resid = np.column_stack([
        data.Z[:, 0] - (p["alpha_0"] + p["alpha_a"] * A + X @ p["alpha_x"]),
        data.W[:, 0] - (p["mu_0"] + p["mu_a"] * A + X @ p["mu_x"]),
        U - (p["kappa_0"] + p["kappa_a"] * A + X @ p["kappa_x"]),
    ])
    assert np.max(np.abs(np.cov(resid.T) - p["Sigma"])) <= 0.02
    assert np.max(np.abs(resid.mean(axis=0))) <= 0.02
    np.testing.assert_allclose(X.mean(axis=0), p["gamma_x"], atol=0.01)


def test_scenario1_printed_parameters_available():
    data = generate(ScenarioConfig(1, 50, seed=0, overrides=PRINTED_SCENARIO1_OVERRIDES))
    assert data.n == 50
    params = ScenarioConfig(1, 50, overrides=PRINTED_SCENARIO1_OVERRIDES).parameters()
    assert params["alpha_a"] == 0.125 and params["mu_a"] == 0.25


def test_scenario2_treatment_model():
    assert scenario2_t_a(default_parameters(2)) == pytest.approx(-0.981, abs=1e-6)
    data = generate(ScenarioConfig(2, 100_000, seed=2))
    assert 0.2 < data.A.mean() < 0.8
    assert data.X.shape[1] == 5 and data.Z.shape[1] == 2 and data.W.shape[1] == 2


def test_override_validation():
    with pytest.raises(InputError):
        ScenarioConfig(1, 10, overrides={"Sigma": [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]}).parameters()
    with pytest.raises(InputError):
        ScenarioConfig(1, 10, overrides={"no_such_symbol": 1.0}).parameters()


def test_true_ace_values():
    assert true_ace(1) == 2.0
    assert true_ace(2) == 2.0
    assert true_ace(3) == 1.0


def test_scenario3_ace_by_arm_forced_monte_carlo():
    # difference of the outcome mean at A=1 and A=0 for the same units
    _, U = generate(ScenarioConfig(3, 1_000_000, seed=3), return_latent=True)
    data = generate(ScenarioConfig(3, 1_000_000, seed=3))
    p = default_parameters(3)
    x1, x2 = data.X[:, 0], data.X[:, 1]
    effect = p["y_a"] + p["y_ax1"] * x1 + p["y_ax2"] * x2 + p["y_au"] * U
    assert np.mean(effect) == pytest.approx(true_ace(3), abs=0.01)


def test_scenario3_bare_x_override_keeps_ace():
    base, U = generate(ScenarioConfig(3, 1000, seed=4), return_latent=True)
    alt = generate(ScenarioConfig(3, 1000, seed=4, overrides={"include_bare_x": True}))
    np.testing.assert_allclose(base.Y - alt.Y, base.X.sum(axis=1), atol=1e-12)


@pytest.fixture(scope="module")
def oracle():
    return oracle_h_bridge(n_oracle=200_000, seed=0)


def test_oracle_residual_moment(oracle):
    data = generate(ScenarioConfig(1, 200_000, seed=0))
    resid = data.Y - oracle(data.W, data.A, data.X)
    instruments = np.column_stack([np.ones(data.n), data.Z, data.A, data.X])
    assert np.max(np.abs(instruments.T @ resid / data.n)) < 0.01


def test_oracle_stable_across_seeds(oracle):
    other = oracle_h_bridge(n_oracle=200_000, seed=1)
    assert np.max(np.abs(other.coefficients - oracle.coefficients)) <= 0.05


def test_oracle_reproduces_true_ace(oracle):
    data = generate(ScenarioConfig(1, 200_000, seed=5))
    diff = np.mean(oracle.for_arm(1)(data.wx)) - np.mean(oracle.for_arm(0)(data.wx))
    assert diff == pytest.approx(true_ace(1), abs=0.05)


def test_oracle_scenario_restriction():
    with pytest.raises(InputError):
        oracle_h_bridge("multidim_2")
    with pytest.raises(InputError):
        oracle_h_bridge(n_oracle=1000)
