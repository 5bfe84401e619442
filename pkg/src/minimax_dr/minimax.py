"""
Closed-form kernel minimax estimation of a nuisance function.

For a learned function ``f`` in an RKHS with kernel ``K_T`` and an adversary in
an RKHS with kernel ``K_A``, the empirical problem is::

    min_f sup_b  E_n[ b(V_a) (f(V_t) w + o) - b(V_a)^2 ] - lam_a ||b||^2 + lam_t ||f||^2

where ``w`` are the weights and ``o`` the offsets. The inner supremum has the
closed form ``xi' Gamma xi`` with ``xi = (w * f(V_t) + o) / n`` and
``Gamma = K_A (K_A / n + lam_a I)^{-1} / 4``; the outer problem is then a
quadratic in the dual coefficients of ``f``.

Learning the outcome bridge and the treatment bridge are the same computation
with the roles of the two variable sets exchanged, so a single ``fit_nuisance``
serves both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InputError
from .kernels import KernelConfig, as_points, cross_gram, gram_matrix, pseudo_inverse, solve_spd


@dataclass(frozen=True)
class Hyperparameters:
    """Regularization constants and bandwidths of one minimax fit.

    A bandwidth of ``None`` is resolved later as the median heuristic of the
    training points times the matching ``*_scale`` factor; the scale factors
    are ignored when a bandwidth is given explicitly.
    """

    lambda_target: float = 1e-3
    lambda_adversary: float = 1e-2
    bandwidth_target: float | None = None
    bandwidth_adversary: float | None = None
    bandwidth_target_scale: float = 1.0
    bandwidth_adversary_scale: float = 1.0

    def __post_init__(self):
        for name in ("lambda_target", "lambda_adversary", "bandwidth_target_scale", "bandwidth_adversary_scale"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
                raise InputError(f"{name} must be a positive number, got {value!r}")
        for name in ("bandwidth_target", "bandwidth_adversary"):
            value = getattr(self, name)
            if value is not None and not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
                raise InputError(f"{name} must be a positive number or None, got {value!r}")


@dataclass
class MinimaxProblem:
    """All inputs to one regularized minimax fit (or one held-out scoring)."""

    target_points: np.ndarray
    adversary_points: np.ndarray
    weights: np.ndarray
    offsets: np.ndarray
    target_kernel: KernelConfig
    adversary_kernel: KernelConfig
    lambda_target: float
    lambda_adversary: float

    def __post_init__(self):
        self.target_points = as_points(self.target_points, "target_points")
        self.adversary_points = as_points(self.adversary_points, "adversary_points")
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.offsets = np.asarray(self.offsets, dtype=float).ravel()
        n = self.target_points.shape[0]
        sizes = {
            self.adversary_points.shape[0],
            self.weights.shape[0],
            self.offsets.shape[0],
        }
        if sizes != {n}:
            raise InputError("target_points, adversary_points, weights and offsets need equal row counts")
        if n < 2:
            raise InputError(f"need at least 2 records, got {n}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.offsets))):
            raise InputError("weights and offsets must be finite")
        if not (self.lambda_target > 0 and self.lambda_adversary > 0):
            raise InputError("both regularization constants must be strictly positive")

    @property
    def n(self) -> int:
        return self.target_points.shape[0]

    @cached_property
    def target_gram(self) -> np.ndarray:
        return gram_matrix(self.target_points, self.target_kernel).entries

    @cached_property
    def adversary_gram(self) -> np.ndarray:
        return gram_matrix(self.adversary_points, self.adversary_kernel).entries

    @cached_property
    def _adversary_system(self) -> np.ndarray:
        n = self.n
        return self.adversary_gram / n + self.lambda_adversary * np.eye(n)

    def apply_gamma(self, v) -> np.ndarray:
        """``Gamma @ v`` without forming the inverse explicitly."""
        return 0.25 * (self.adversary_gram @ solve_spd(self._adversary_system, v))

    def swapped(self, offsets, weights=None, lambda_target=None, lambda_adversary=None):
        """The mirror problem: adversary and target variable sets exchanged."""
        return MinimaxProblem(
            target_points=self.adversary_points,
            adversary_points=self.target_points,
            weights=self.weights if weights is None else weights,
            offsets=offsets,
            target_kernel=self.adversary_kernel,
            adversary_kernel=self.target_kernel,
            lambda_target=self.lambda_adversary if lambda_target is None else lambda_target,
            lambda_adversary=self.lambda_target if lambda_adversary is None else lambda_adversary,
        )


@dataclass(frozen=True)
class NuisanceFunction:
    """Kernel expansion ``f(v) = sum_j coefficients[j] * k(anchors[j], v)``."""

    anchors: np.ndarray
    coefficients: np.ndarray
    kernel: KernelConfig
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.coefficients)):
            raise InputError("nuisance coefficients must be finite")

    def evaluate(self, query) -> np.ndarray:
        query = as_points(query, "query")
        if query.shape[1] != self.anchors.shape[1]:
            raise InputError(
                f"query has dimension {query.shape[1]}, anchors have {self.anchors.shape[1]}"
            )
        return cross_gram(query, self.anchors, self.kernel) @ self.coefficients

    __call__ = evaluate


def minimax_objective(problem: MinimaxProblem, alpha) -> float:
    """Outer objective ``xi' Gamma xi + lam_t * alpha' K_T alpha`` at dual coefficients ``alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    K = problem.target_gram
    xi = (problem.weights * (K @ alpha) + problem.offsets) / problem.n
    return float(xi @ problem.apply_gamma(xi) + problem.lambda_target * alpha @ K @ alpha)


def fit_nuisance(problem: MinimaxProblem, method: str = "reduced") -> NuisanceFunction:
    """Solve the regularized minimax problem in closed form.

    The dual coefficients minimize the quadratic outer objective; its normal
    equations are ``K_T (K_T D Gamma D K_T + n^2 lam_t K_T) alpha = -K_T D Gamma o``
    with ``D = diag(weights)`` and ``o`` the offsets.

    Parameters
    ----------
    problem : MinimaxProblem
    method : {"reduced", "pinv"}
        ``"pinv"`` applies the Moore-Penrose pseudoinverse literally::

            alpha = -(K_T D Gamma D K_T + n^2 lam_t K_T)^+ K_T D Gamma o

        ``"reduced"`` (default) solves ``(D Gamma D K_T + n^2 lam_t I) alpha = -D Gamma o``
        instead. Any solution of this system solves the normal equations; it
        vanishes wherever the weight is zero, so only the block on the weight
        support needs a dense solve. The two answers differ by a null-space
        direction of ``K_T``, which is the zero function, so fitted values and
        objective agree to rounding error.
    """
    if method == "pinv":
        return _fit_pinv(problem)
    if method != "reduced":
        raise InputError(f"unknown method {method!r}")
    n = problem.n
    w = problem.weights
    support = np.flatnonzero(w != 0)
    alpha = np.zeros(n)
    if support.size:
        # Gamma = (n/4) (I - lam_a M^{-1}) with M = K_A/n + lam_a I
        lam_a = problem.lambda_adversary
        m_inv_cols = solve_spd(problem._adversary_system, _unit_columns(n, support))
        gamma_ss = -(0.25 * n * lam_a) * m_inv_cols[support]
        gamma_ss[np.diag_indices_from(gamma_ss)] += 0.25 * n
        gamma_o = problem.apply_gamma(problem.offsets)[support]
        ws = w[support]
        K_ss = problem.target_gram[np.ix_(support, support)]
        system = (ws[:, None] * gamma_ss * ws[None, :]) @ K_ss
        system[np.diag_indices_from(system)] += n**2 * problem.lambda_target
        alpha[support] = -np.linalg.solve(system, ws * gamma_o)
    info = {"n": n, "method": "reduced", "support": int(support.size)}
    return NuisanceFunction(problem.target_points, alpha, problem.target_kernel, info)


def _unit_columns(n, idx):
    out = np.zeros((n, idx.size))
    out[idx, np.arange(idx.size)] = 1.0
    return out


def _fit_pinv(problem: MinimaxProblem) -> NuisanceFunction:
    n = problem.n
    K = problem.target_gram
    w = problem.weights

    gamma_dk = problem.apply_gamma(w[:, None] * K)
    outer = K @ (w[:, None] * gamma_dk) + (n**2 * problem.lambda_target) * K
    rhs = K @ (w * problem.apply_gamma(problem.offsets))
    outer_pinv, rank = pseudo_inverse(outer, symmetric=True, return_rank=True)
    alpha = -(outer_pinv @ rhs)

    info = {"n": n, "method": "pinv", "outer_rank": rank}
    return NuisanceFunction(problem.target_points, alpha, problem.target_kernel, info)


def _weighted_residual(f, problem: MinimaxProblem) -> np.ndarray:
    return f(problem.target_points) * problem.weights + problem.offsets


def adversary_value(f, val: MinimaxProblem) -> float:
    """Closed-form supremum of the inner (adversary) problem for a fixed ``f``.

    This is ``xi' Gamma xi`` computed on ``val``; used as the held-out
    projected-risk score.
    """
    xi = _weighted_residual(f, val) / val.n
    return max(0.0, float(xi @ val.apply_gamma(xi)))


def moment_residual_diagnostic(f, val: MinimaxProblem, probe_count: int, seed=0) -> float:
    """Largest absolute empirical moment against random kernel probe functions.

    Each probe is ``b(v) = k(c, v)`` with ``c`` a randomly chosen adversary
    point (unit RKHS norm for the Gaussian kernel). Returns
    ``max_b |mean_i residual_i * b(V_a,i)|``.
    """
    if probe_count < 1:
        raise InputError("probe_count must be at least 1")
    rng = np.random.Generator(np.random.Philox(seed))
    centers = val.adversary_points[rng.integers(0, val.n, size=probe_count)]
    probes = cross_gram(val.adversary_points, centers, val.adversary_kernel)
    moments = _weighted_residual(f, val) @ probes / val.n
    return float(np.max(np.abs(moments)))
