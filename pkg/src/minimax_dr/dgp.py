"""
Synthetic proximal datasets with known average causal effect.

Three scenarios:

``linear_gaussian_1``
    Two-dimensional X, scalar Z and W, jointly Gaussian (Z, W, U) given (A, X).
``multidim_2``
    Five-dimensional X, two-dimensional Z and W driven by a scalar U.
``nonlinear_3``
    Cubic terms in the treatment model and interactions in the outcome model,
    so that both bridge functions are nonlinear.

Random streams come from numpy's Philox4x64 counter-based generator keyed by
the seed, so a dataset is a pure function of ``(scenario, n, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericError
from .kernels import as_points
from .proximal import ProximalDataset

SCENARIOS = ("linear_gaussian_1", "multidim_2", "nonlinear_3")

_ALIASES = {
    1: "linear_gaussian_1",
    2: "multidim_2",
    3: "nonlinear_3",
    "1": "linear_gaussian_1",
    "2": "multidim_2",
    "3": "nonlinear_3",
}


def scenario_name(scenario) -> str:
    name = _ALIASES.get(scenario, scenario)
    if name not in SCENARIOS:
        raise InputError(f"unknown scenario {scenario!r}")
    return name


def _scenario1_defaults() -> dict:
    return {
        "gamma_x": np.array([0.25, 0.25]),
        "sigma_x": 0.25,
        # Pr(A=1 | X) = 1 / (1 + exp(t_x' X))
        "t_x": np.array([0.125, 0.125]),
        "alpha_0": 0.25,
        # alpha_a and mu_a are set so that mu_a = (sigma_wu / sigma_u^2) kappa_a,
        # i.e. W is independent of A given (U, X); see PRINTED_SCENARIO1_OVERRIDES
        "alpha_a": 0.25,
        "alpha_x": np.array([0.25, 0.25]),
        "mu_0": 0.25,
        "mu_a": 0.125,
        "mu_x": np.array([0.25, 0.25]),
        "kappa_0": 0.25,
        "kappa_a": 0.25,
        "kappa_x": np.array([0.25, 0.25]),
        # covariance of (Z, W, U) given (A, X)
        "Sigma": np.array([
            [1.0, 0.25, 0.5],
            [0.25, 1.0, 0.5],
            [0.5, 0.5, 1.0],
        ]),
        "b_0": 2.0,
        "b_a": 2.0,
        "b_x": np.array([0.25, 0.25]),
        "b_w": 4.0,
        "omega": 2.0,
        "sigma_y": 1.0,
    }


def _scenario2_defaults() -> dict:
    return {
        "sigma_u": 0.3,
        "mu_ux": np.array([0.4, 0.525, 0.65, 0.775, 0.9]),
        "sigma_x2": 0.3 * np.eye(5),
        "t_z": np.array([0.9, 0.4]),
        "t_x": np.array([0.9, 0.775, 0.65, 0.525, 0.4]),
        "mu_az": np.array([0.5, 0.6]),
        "mu_xz": np.array([
            [0.4, 0.511, 0.622, 0.733, 0.844],
            [0.456, 0.567, 0.678, 0.789, 0.9],
        ]),
        "mu_uz": np.array([0.8, 0.9]),
        "sigma_z2": 0.3 * np.eye(2),
        "mu_xw": np.array([
            [0.9, 0.789, 0.678, 0.567, 0.455],
            [0.844, 0.733, 0.622, 0.511, 0.4],
        ]),
        "mu_uw": np.array([0.8, 0.9]),
        "sigma_w2": 0.3 * np.eye(2),
        "mu_ay": 2.0,
        "mu_wy": np.array([0.4, 0.9]),
        "mu_xy": np.array([0.4, 0.525, 0.65, 0.775, 0.9]),
        # printed as a 2-vector although U is scalar; applied as mu_uy . (U, U)
        "mu_uy": np.array([0.4, 0.9]),
        "sigma_y2": 0.3,
    }


def _scenario3_defaults() -> dict:
    return {
        # linear predictor of the Bernoulli model: Pr(A=1) = 1 / (1 + exp(eta))
        "a_intercept": -0.25,
        "a_x1": -0.2,
        "a_x2": -0.3,
        "a_x1_cubed": -0.1,
        "a_x2_cubed": -0.05,
        "a_u": -0.25,
        "a_u_cubed": 0.1,
        "z_coef": np.array([0.5, 0.5, 0.2, -0.2, 0.75]),  # 1, A, X1, X2, U
        "w_coef": np.array([0.3, 0.35, 0.25, -0.75]),  # 1, X1, X2, U
        "y_intercept": -0.5,
        "y_a": 1.0,
        "y_x1": 0.25,
        "y_x2": -0.2,
        "y_ax1": -0.5,
        "y_ax2": 0.3,
        "y_x1_cubed": -0.025,
        "y_x2_cubed": 0.03,
        "y_u": -0.3,
        "y_au": 0.25,
        "y_u_cubed": 0.025,
        # the outcome mean also prints a bare "- X"; off by default
        "include_bare_x": False,
    }


# The alternative table in which alpha_a and mu_a are exchanged. Under it W
# depends on A given (U, X) and the identified effect is 1.75 rather than 2.
PRINTED_SCENARIO1_OVERRIDES = {"alpha_a": 0.125, "mu_a": 0.25}

_DEFAULTS = {
    "linear_gaussian_1": _scenario1_defaults,
    "multidim_2": _scenario2_defaults,
    "nonlinear_3": _scenario3_defaults,
}

_COVARIANCE_KEYS = {
    "linear_gaussian_1": ("Sigma",),
    "multidim_2": ("sigma_x2", "sigma_z2", "sigma_w2"),
    "nonlinear_3": (),
}


def default_parameters(scenario) -> dict:
    return _DEFAULTS[scenario_name(scenario)]()


def scenario2_t_a(params: dict) -> float:
    """Intercept ``t_A = -t_Z mu_AZ - t_Z Sigma_Z t_Z'`` of the scenario-2 treatment model."""
    t_z = np.asarray(params["t_z"])
    return float(-t_z @ params["mu_az"] - t_z @ params["sigma_z2"] @ t_z)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    n: int
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scenario", scenario_name(self.scenario))
        if int(self.n) < 1:
            raise InputError(f"n must be at least 1, got {self.n}")

    def parameters(self) -> dict:
        params = default_parameters(self.scenario)
        unknown = set(self.overrides) - set(params) - {"t_a"}
        if unknown:
            raise InputError(f"unknown parameters for {self.scenario}: {sorted(unknown)}")
        for key, value in self.overrides.items():
            params[key] = np.asarray(value, dtype=float) if not isinstance(value, bool) else value
        for key in _COVARIANCE_KEYS[self.scenario]:
            _check_covariance(params[key], key)
        if self.scenario == "multidim_2" and "t_a" not in params:
            params["t_a"] = scenario2_t_a(params)
        return params


def _check_covariance(cov, name):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InputError(f"{name} must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-12):
        raise InputError(f"{name} is not symmetric")
    if np.min(np.linalg.eigvalsh(cov)) < -1e-10:
        raise InputError(f"{name} is not positive semidefinite")


def _mvn_factor(cov) -> np.ndarray:
    """Lower factor ``L`` with ``L L' = cov``; Cholesky, eigen-fallback when singular."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(cov)
        if np.min(evals) < -1e-10:
            raise NumericError("covariance is not positive semidefinite")
        return evecs * np.sqrt(np.clip(evals, 0.0, None))


def rng_for(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _bernoulli(rng, p):
    return (rng.random(p.shape[0]) < p).astype(float)


def _generate_1(p, n, rng):
    X = p["gamma_x"] + p["sigma_x"] * rng.standard_normal((n, 2))
    A = _bernoulli(rng, 1.0 / (1.0 + np.exp(X @ p["t_x"])))
    means = np.column_stack([
        p["alpha_0"] + p["alpha_a"] * A + X @ p["alpha_x"],
        p["mu_0"] + p["mu_a"] * A + X @ p["mu_x"],
        p["kappa_0"] + p["kappa_a"] * A + X @ p["kappa_x"],
    ])
    Sigma = np.asarray(p["Sigma"])
    zwu = means + rng.standard_normal((n, 3)) @ _mvn_factor(Sigma).T
    Z, W, U = zwu[:, 0], zwu[:, 1], zwu[:, 2]
    sigma_wu, sigma_u2 = Sigma[1, 2], Sigma[2, 2]
    e_w = p["mu_0"] + X @ p["mu_x"] + (sigma_wu / sigma_u2) * (U - p["kappa_0"] - X @ p["kappa_x"])
    Y = (p["b_0"] + p["b_a"] * A + X @ p["b_x"] + (p["b_w"] - p["omega"]) * e_w + p["omega"] * W
         + p["sigma_y"] * rng.standard_normal(n))
    return X, Z, W, A, Y, U


def _generate_2(p, n, rng):
    U = p["sigma_u"] * rng.standard_normal(n)
    X = np.outer(U, p["mu_ux"]) + rng.standard_normal((n, 5)) @ _mvn_factor(p["sigma_x2"]).T
    t_z = p["t_z"]
    eta = (p["t_a"] + X @ p["t_x"] + (p["mu_az"] + X @ p["mu_xz"].T + np.outer(U, p["mu_uz"])) @ t_z
           + 0.5 * t_z @ p["sigma_z2"] @ t_z)
    A = _bernoulli(rng, 1.0 / (1.0 + np.exp(eta)))
    Z = (np.outer(A, p["mu_az"]) + X @ p["mu_xz"].T + np.outer(U, p["mu_uz"])
         + rng.standard_normal((n, 2)) @ _mvn_factor(p["sigma_z2"]).T)
    W = X @ p["mu_xw"].T + np.outer(U, p["mu_uw"]) + rng.standard_normal((n, 2)) @ _mvn_factor(p["sigma_w2"]).T
    Y = (p["mu_ay"] * A + W @ p["mu_wy"] + X @ p["mu_xy"] + U * np.sum(p["mu_uy"])
         + np.sqrt(p["sigma_y2"]) * rng.standard_normal(n))
    return X, Z, W, A, Y, U


def _generate_3(p, n, rng):
    U = rng.standard_normal(n)
    X = rng.standard_normal((n, 2))
    x1, x2 = X[:, 0], X[:, 1]
    eta = (p["a_intercept"] + p["a_x1"] * x1 + p["a_x2"] * x2 + p["a_x1_cubed"] * x1**3
           + p["a_x2_cubed"] * x2**3 + p["a_u"] * U + p["a_u_cubed"] * U**3)
    A = _bernoulli(rng, 1.0 / (1.0 + np.exp(eta)))
    zc = p["z_coef"]
    Z = zc[0] + zc[1] * A + zc[2] * x1 + zc[3] * x2 + zc[4] * U + rng.standard_normal(n)
    wc = p["w_coef"]
    W = wc[0] + wc[1] * x1 + wc[2] * x2 + wc[3] * U + rng.standard_normal(n)
    mean_y = (p["y_intercept"] + p["y_a"] * A + p["y_x1"] * x1 + p["y_x2"] * x2
              + p["y_ax1"] * A * x1 + p["y_ax2"] * A * x2
              + p["y_x1_cubed"] * x1**3 + p["y_x2_cubed"] * x2**3
              + p["y_u"] * U + p["y_au"] * A * U + p["y_u_cubed"] * U**3)
    if p["include_bare_x"]:
        mean_y = mean_y - (x1 + x2)
    Y = mean_y + rng.standard_normal(n)
    return X, Z, W, A, Y, U


_GENERATORS = {
    "linear_gaussian_1": _generate_1,
    "multidim_2": _generate_2,
    "nonlinear_3": _generate_3,
}


def generate(cfg: ScenarioConfig, return_latent=False):
    """Draw a :class:`ProximalDataset` for ``cfg``.

    The latent confounder U is discarded unless ``return_latent`` is set, in
    which case ``(dataset, U)`` is returned.
    """
    params = cfg.parameters()
    rng = rng_for(cfg.seed)
    X, Z, W, A, Y, U = _GENERATORS[cfg.scenario](params, int(cfg.n), rng)
    data = ProximalDataset(X=X, Z=Z, W=W, A=A, Y=Y)
    return (data, U) if return_latent else data


def true_ace(scenario) -> float:
    """Population average causal effect of a scenario.

    Scenarios 1 and 2 are linear in A with no interactions (coefficients 2 and
    2). In scenario 3 the A-interactions involve X1, X2 and U, all mean zero,
    leaving the main effect 1.
    """
    return {"linear_gaussian_1": 2.0, "multidim_2": 2.0, "nonlinear_3": 1.0}[scenario_name(scenario)]


@dataclass(frozen=True)
class LinearOutcomeBridge:
    """``h(W, a, X) = c0 + c_a a + c_w' W + c_x' X`` fit by two-stage least squares."""

    intercept: float
    coef_a: float
    coef_w: np.ndarray
    coef_x: np.ndarray

    def __call__(self, w, a, x) -> np.ndarray:
        w = as_points(w, "W")
        x = as_points(x, "X")
        return self.intercept + self.coef_a * np.asarray(a, dtype=float) + w @ self.coef_w + x @ self.coef_x

    def for_arm(self, arm):
        """Callable on stacked ``(W, X)`` rows with treatment fixed at ``arm``."""
        dw = self.coef_w.shape[0]

        def h(wx):
            wx = np.asarray(wx, dtype=float)
            return self(wx[:, :dw], arm, wx[:, dw:])

        return h

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([[self.intercept, self.coef_a], self.coef_w, self.coef_x])


def oracle_h_bridge(scenario="linear_gaussian_1", n_oracle=200_000, seed=0) -> LinearOutcomeBridge:
    """Linear outcome bridge for scenario 1 by two-stage least squares.

    Regressors ``(1, A, W, X)`` are instrumented by ``(1, A, Z, X)``; the
    system is just identified, so the empirical moment
    ``E_n[(Y - h(W, A, X)) (1, A, Z, X)]`` is solved exactly.
    """
    if scenario_name(scenario) != "linear_gaussian_1":
        raise InputError("the linear oracle bridge exists for scenario 1 only")
    if n_oracle < 100_000:
        raise InputError("n_oracle should be at least 1e5")
    data = generate(ScenarioConfig("linear_gaussian_1", n_oracle, seed))
    ones = np.ones((data.n, 1))
    design = np.hstack([ones, data.A[:, None], data.W, data.X])
    instruments = np.hstack([ones, data.A[:, None], data.Z, data.X])
    cross = instruments.T @ design
    if np.linalg.cond(cross) > 1e12:
        raise NumericError("oracle two-stage least squares design is singular")
    beta = np.linalg.solve(cross, instruments.T @ data.Y)
    dw = data.W.shape[1]
    return LinearOutcomeBridge(
        intercept=float(beta[0]),
        coef_a=float(beta[1]),
        coef_w=beta[2:2 + dw],
        coef_x=beta[2 + dw:],
    )
