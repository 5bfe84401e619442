import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from minimax_dr.dgp import ScenarioConfig, generate
from minimax_dr.errors import DegenerateInputError, InputError, NumericError
from minimax_dr.kernels import (
    KernelConfig,
    gram_matrix,
    kernel_eval,
    median_heuristic,
    pseudo_inverse,
    solve_spd,
    standardize,
)


def test_kernel_config_rejects_bad_values():
    with pytest.raises(InputError):
        KernelConfig(0.0)
    with pytest.raises(InputError):
        KernelConfig(-1.0)
    with pytest.raises(InputError):
        KernelConfig(1.0, family="matern")


@pytest.mark.parametrize(
    "x, y, bw, expected",
    [
        ([0.0], [0.0], 1.0, 1.0),
        ([0.0], [1.0], 1.0, np.exp(-0.5)),
        ([1.0, 2.0], [1.0, 2.0], 35.0, 1.0),
    ],
)
def test_kernel_eval_examples(x, y, bw, expected):
    assert kernel_eval(x, y, KernelConfig(bw)) == pytest.approx(expected, abs=1e-15)


def test_kernel_eval_dimension_mismatch():
    with pytest.raises(InputError):
        kernel_eval([0.0, 1.0], [0.0], KernelConfig(1.0))


finite = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(
    arrays(float, 3, elements=finite),
    arrays(float, 3, elements=finite),
    arrays(float, 3, elements=finite),
    st.floats(0.1, 20),
)
def test_kernel_shift_invariant_and_symmetric(x, y, c, bw):
    cfg = KernelConfig(bw)
    k = kernel_eval(x, y, cfg)
    assert 0.0 <= k <= 1.0
    assert kernel_eval(y, x, cfg) == k
    assert abs(kernel_eval(x + c, y + c, cfg) - k) <= 1e-12


def test_gram_two_points():
    G = gram_matrix([[0.0], [1.0]], KernelConfig(1.0)).entries
    e = np.exp(-0.5)
    np.testing.assert_allclose(G, [[1.0, e], [e, 1.0]], atol=1e-15)


def test_gram_single_point_and_empty():
    assert gram_matrix([[3.0, 4.0]], KernelConfig(2.0)).entries.tolist() == [[1.0]]
    with pytest.raises(InputError):
        gram_matrix(np.empty((0, 2)), KernelConfig(1.0))


def test_gram_invariants_on_normal_points():
    rng = np.random.default_rng(0)
    G = gram_matrix(rng.standard_normal((50, 1)), KernelConfig(1.0)).entries
    assert np.max(np.abs(G - G.T)) <= 1e-12
    assert np.all(np.diag(G) == 1.0)
    evals = np.linalg.eigvalsh(0.5 * (G + G.T))
    assert evals.min() >= -1e-8 * evals.max()


def test_gram_entries_match_pointwise_kernel():
    rng = np.random.default_rng(1)
    pts = rng.standard_normal((7, 3))
    cfg = KernelConfig(1.7)
    G = gram_matrix(pts, cfg).entries
    for i in range(7):
        for j in range(7):
            assert G[i, j] == pytest.approx(kernel_eval(pts[i], pts[j], cfg), abs=1e-14)


@pytest.mark.parametrize("points, expected", [([[0.0], [1.0], [3.0]], 2.0), ([[0.0], [2.0]], 2.0)])
def test_median_heuristic_examples(points, expected):
    assert median_heuristic(points) == expected


def test_median_heuristic_degenerate():
    with pytest.raises(DegenerateInputError):
        median_heuristic([[1.0], [1.0], [1.0]])
    with pytest.raises(InputError):
        median_heuristic([[1.0]])


def test_median_heuristic_on_scenario_data():
    data = generate(ScenarioConfig(1, 200, seed=3))
    value = median_heuristic(data.W)
    assert np.isfinite(value) and value > 0


def test_standardize_flag_helper():
    rng = np.random.default_rng(2)
    pts = rng.normal(5.0, 3.0, size=(100, 2))
    out = standardize(pts)
    np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)


def _moore_penrose_errors(M, P):
    scale = max(1.0, np.linalg.norm(M))
    pscale = max(1.0, np.linalg.norm(P))
    return [
        np.linalg.norm(M @ P @ M - M) / scale,
        np.linalg.norm(P @ M @ P - P) / pscale,
        np.linalg.norm((M @ P).T - M @ P) / scale,
        np.linalg.norm((P @ M).T - P @ M) / scale,
    ]


def test_pseudo_inverse_examples():
    np.testing.assert_allclose(pseudo_inverse(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]), atol=1e-15)


def test_pseudo_inverse_random_rectangular():
    rng = np.random.default_rng(4)
    M = rng.standard_normal((6, 4))
    assert max(_moore_penrose_errors(M, pseudo_inverse(M))) <= 1e-8


def test_pseudo_inverse_symmetric_path_matches_svd_path():
    rng = np.random.default_rng(5)
    B = rng.standard_normal((8, 3))
    M = B @ B.T
    np.testing.assert_allclose(pseudo_inverse(M, symmetric=True), pseudo_inverse(M), atol=1e-10)
    P, rank = pseudo_inverse(M, symmetric=True, return_rank=True)
    assert rank == 3
    assert max(_moore_penrose_errors(M, P)) <= 1e-8


def test_pseudo_inverse_of_invertible_is_inverse():
    rng = np.random.default_rng(6)
    M = rng.standard_normal((5, 5)) + 5 * np.eye(5)
    inv = np.linalg.inv(M)
    assert np.linalg.norm(pseudo_inverse(M) - inv) <= 1e-8 * np.linalg.norm(inv)


def test_pseudo_inverse_rejects_nonfinite():
    with pytest.raises(InputError):
        pseudo_inverse(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_solve_spd_examples():
    B = np.arange(6.0).reshape(3, 2)
    np.testing.assert_allclose(solve_spd(np.eye(3), B), B)
    np.testing.assert_allclose(solve_spd(np.diag([2.0, 4.0]), [[2.0], [8.0]]), [[1.0], [2.0]])


def test_solve_spd_regularized_gram_residual():
    rng = np.random.default_rng(7)
    K = gram_matrix(rng.standard_normal((20, 2)), KernelConfig(1.0)).entries
    M = K / 20 + 0.01 * np.eye(20)
    B = rng.standard_normal((20, 3))
    X = solve_spd(M, B)
    assert np.linalg.norm(M @ X - B) <= 1e-8 * np.linalg.norm(B)
    P = pseudo_inverse(M)
    assert np.linalg.norm(X - P @ B) <= 1e-6 * np.linalg.norm(X)


def test_solve_spd_reports_pivot():
    M = np.diag([1.0, 2.0, -1.0, 4.0])
    with pytest.raises(NumericError) as info:
        solve_spd(M, np.ones(4))
    assert info.value.pivot == 2


def test_solve_spd_rejects_asymmetric():
    with pytest.raises(InputError):
        solve_spd(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2))
