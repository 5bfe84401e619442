import numpy as np
import pytest

from minimax_dr.dgp import ScenarioConfig, generate
from minimax_dr.errors import InputError
from minimax_dr.functional import CrossFitError, make_folds
from minimax_dr.minimax import MinimaxProblem, fit_nuisance, moment_residual_diagnostic
from minimax_dr.proximal import (
    BridgeHypers,
    ProximalConfig,
    ProximalDataset,
    bridge_problem,
    estimate_ace,
    fit_h_bridge,
    fit_q_bridge,
    supplement_config,
)


def zero_fn(v):
    return np.zeros(len(v))


@pytest.fixture(scope="module")
def data400():
    return generate(ScenarioConfig(1, 400, seed=8))


def test_dataset_validation():
    with pytest.raises(InputError):
        ProximalDataset(X=np.zeros((3, 1)), Z=np.zeros(3), W=np.zeros(3), A=[0, 1, 2], Y=np.zeros(3))
    with pytest.raises(InputError):
        ProximalDataset(X=np.zeros((3, 1)), Z=np.zeros(3), W=np.zeros(2), A=[0, 1, 1], Y=np.zeros(3))
    with pytest.raises(InputError):
        ProximalDataset(X=np.zeros((3, 1)), Z=np.zeros(3), W=np.zeros(3), A=[0, 1, 1], Y=[0.0, np.nan, 1.0])
    single_arm = ProximalDataset(X=np.zeros((3, 1)), Z=np.zeros(3), W=np.zeros(3), A=[1, 1, 1], Y=np.zeros(3))
    with pytest.raises(InputError):
        single_arm.check_both_arms()


def test_zero_outcome_gives_zero_h(data400):
    zero = ProximalDataset(data400.X, data400.Z, data400.W, data400.A, np.zeros(data400.n))
    h = fit_h_bridge(zero, 1, BridgeHypers())
    assert np.all(h.coefficients == 0.0)


def test_q_fit_with_one_control():
    data = generate(ScenarioConfig(1, 50, seed=1))
    A = np.ones(50)
    A[0] = 0.0
    skewed = ProximalDataset(data.X, data.Z, data.W, A, data.Y)
    q = fit_q_bridge(skewed, 1, BridgeHypers())
    assert np.all(np.isfinite(q.coefficients))


def test_q_homogeneity(data400):
    # (weights, offsets, lambda_target) -> (c w, c o, c^2 lambda_target) leaves q unchanged
    problem = bridge_problem(data400, "q", 0, BridgeHypers(1e-3, 1e-2, 1.5, 2.0))
    c = 4.0
    scaled = MinimaxProblem(problem.target_points, problem.adversary_points, c * problem.weights,
                            c * problem.offsets, problem.target_kernel, problem.adversary_kernel,
                            c**2 * problem.lambda_target, problem.lambda_adversary)
    np.testing.assert_allclose(fit_nuisance(scaled).coefficients, fit_nuisance(problem).coefficients,
                               rtol=1e-7, atol=1e-9)


def test_supplement_config_values():
    cfg = supplement_config()
    h, q = cfg.hypers_for("h", 1), cfg.hypers_for("q", 0)
    assert (h.lambda_target, h.lambda_adversary) == (0.001, 0.01)
    assert (q.lambda_target, q.lambda_adversary) == (0.001, 0.01)
    assert (h.bandwidth_target, h.bandwidth_adversary) == (35.0, 20.0)
    assert (q.bandwidth_target, q.bandwidth_adversary) == (20.0, 35.0)


def test_dr_identities(data400):
    cfg = ProximalConfig(seed=3)
    base = estimate_ace(data400, cfg)

    def no_q(train, arm):
        return zero_fn, fit_h_bridge(train, arm)

    def no_h(train, arm):
        return fit_q_bridge(train, arm), zero_fn

    r = estimate_ace(data400, cfg, fitter=no_q)
    assert r.pdr.ace == r.por.ace and r.pdr.psi1 == r.por.psi1
    assert r.por.ace == base.por.ace
    r = estimate_ace(data400, cfg, fitter=no_h)
    assert r.pdr.ace == pytest.approx(r.pipw.ace, rel=1e-12, abs=1e-15)
    assert r.pipw.ace == base.pipw.ace


def test_result_invariants(data400):
    r = estimate_ace(data400, ProximalConfig(seed=1))
    for m in (r.por, r.pipw, r.pdr):
        assert m.ace == m.psi1 - m.psi0
    assert r.pdr_se >= 0
    assert r.pdr_ci == (r.pdr.ace - 1.959964 * r.pdr_se, r.pdr.ace + 1.959964 * r.pdr_se)
    assert r.metadata["partition"] == "shared"
    assert len(r.fold_detail) == 5
    assert np.array_equal(r.arms[0].fold_ids, r.arms[1].fold_ids)
    d = r.to_dict()
    assert set(d) >= {"por", "pipw", "pdr", "pdr_se", "ci", "metadata"}


def test_record_order_invariance(data400):
    cfg = ProximalConfig(seed=2, h=BridgeHypers(1e-3, 1e-2, 1.0, 1.0), q=BridgeHypers(1e-3, 1e-2, 1.0, 1.0))
    ids = make_folds(data400.n, 5, 2)
    base = estimate_ace(data400, cfg)
    perm = np.random.default_rng(0).permutation(data400.n)
    shuffled = data400.subset(perm)
    r = estimate_ace(shuffled, cfg, fold_ids=ids[perm])
    for name in ("por", "pipw", "pdr"):
        assert getattr(r, name).ace == pytest.approx(getattr(base, name).ace, abs=1e-9)


def test_outcome_shift_with_fixed_nuisances(data400):
    q_fixed = lambda zx: 1.0 + 0.1 * zx[:, 0]
    h_fixed = lambda wx: 0.5 * wx[:, 0]
    fitter = lambda train, arm: (q_fixed, h_fixed)
    cfg = ProximalConfig(seed=4)
    base = estimate_ace(data400, cfg, fitter=fitter)
    c = 3.0
    shifted = ProximalDataset(data400.X, data400.Z, data400.W, data400.A, data400.Y + c)
    r = estimate_ace(shifted, cfg, fitter=fitter)
    ids = make_folds(data400.n, 5, 4)
    for ell, (b, s) in enumerate(zip(base.fold_detail, r.fold_detail)):
        fold = data400.subset(np.flatnonzero(ids == ell))
        for arm in (0, 1):
            weight = np.mean((fold.A == arm) * q_fixed(fold.zx))
            assert s[f"pipw_psi{arm}"] - b[f"pipw_psi{arm}"] == pytest.approx(c * weight, abs=1e-12)
            assert s[f"por_psi{arm}"] == b[f"por_psi{arm}"]


def test_single_arm_training_split_names_fold():
    data = generate(ScenarioConfig(1, 40, seed=5))
    A = np.zeros(40)
    ids = make_folds(40, 5, 0)
    A[ids == 2] = 1.0  # all treated records in fold 2
    skewed = ProximalDataset(data.X, data.Z, data.W, A, data.Y)
    with pytest.raises(CrossFitError) as info:
        estimate_ace(skewed, ProximalConfig(seed=0))
    assert info.value.fold == 2


@pytest.fixture(scope="module")
def scenario1_1600():
    return generate(ScenarioConfig(1, 1600, seed=17))


@pytest.mark.slow
def test_h_moment_diagnostic_beats_zero(scenario1_1600):
    data = scenario1_1600
    ids = make_folds(data.n, 5, 0)
    train, held = data.subset(ids != 0), data.subset(ids == 0)
    hypers = BridgeHypers(1e-5, 1e-2)
    h = fit_h_bridge(train, 1, hypers)
    val = bridge_problem(held, "h", 1, hypers)
    zero = type(h)(h.anchors, np.zeros_like(h.coefficients), h.kernel)
    assert moment_residual_diagnostic(h, val, 100, seed=0) < moment_residual_diagnostic(zero, val, 100, seed=0)


@pytest.mark.slow
def test_q_fold_mean_near_one(scenario1_1600):
    data = scenario1_1600
    ids = make_folds(data.n, 5, 0)
    train, held = data.subset(ids != 0), data.subset(ids == 0)
    for arm in (0, 1):
        q = fit_q_bridge(train, arm, BridgeHypers(1e-4, 1e-2))
        assert np.mean((held.A == arm) * q(held.zx)) == pytest.approx(1.0, abs=0.15)
