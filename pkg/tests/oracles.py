"""Independent reference computations used by the tests.

Nothing here calls the closed-form solver; the minimax objective is evaluated
from its definition with the inner supremum found by direct maximization.
"""

import numpy as np
from scipy.optimize import minimize

from minimax_dr.kernels import KernelConfig
from minimax_dr.minimax import MinimaxProblem


def gaussian_gram(a, b, bandwidth):
    a = np.asarray(a, dtype=float).reshape(len(a), -1)
    b = np.asarray(b, dtype=float).reshape(len(b), -1)
    out = np.empty((len(a), len(b)))
    for i in range(len(a)):
        for j in range(len(b)):
            out[i, j] = np.exp(-np.sum((a[i] - b[j]) ** 2) / (2 * bandwidth**2))
    return out


def inner_supremum(residual, K_adv, lam_adv):
    """``sup_beta mean(b r) - mean(b^2) - lam ||b||^2`` with ``b = K beta``.

    The objective is a concave quadratic in beta; its maximum is found by a
    least-squares solve of the stationarity condition and then evaluated
    from the definition.
    """
    n = len(residual)

    def value(beta):
        b = K_adv @ beta
        return np.mean(b * residual) - np.mean(b**2) - lam_adv * beta @ K_adv @ beta

    hessian = 2 * (K_adv @ K_adv / n + lam_adv * K_adv)
    gradient_at_zero = K_adv @ residual / n
    beta, *_ = np.linalg.lstsq(hessian, gradient_at_zero, rcond=None)
    return value(beta)


def definition_objective(alpha, target, adversary, weights, offsets, bw_t, bw_a, lam_t, lam_a):
    K_t = gaussian_gram(target, target, bw_t)
    K_a = gaussian_gram(adversary, adversary, bw_a)
    return _objective(alpha, K_t, K_a, weights, offsets, lam_t, lam_a)


def _objective(alpha, K_t, K_a, weights, offsets, lam_t, lam_a):
    residual = (K_t @ alpha) * weights + offsets
    return inner_supremum(residual, K_a, lam_a) + lam_t * alpha @ K_t @ alpha


def descent_minimum(target, adversary, weights, offsets, bw_t, bw_a, lam_t, lam_a):
    """Minimize the definition objective over dual coefficients, starting from zero.

    BFGS and Powell are both run; the lower value is returned.
    """
    K_t = gaussian_gram(target, target, bw_t)
    K_a = gaussian_gram(adversary, adversary, bw_a)
    fun = lambda a: _objective(a, K_t, K_a, weights, offsets, lam_t, lam_a)
    start = np.zeros(len(weights))
    runs = [
        minimize(fun, start, method="BFGS", options={"maxiter": 20000, "gtol": 1e-12}),
        minimize(fun, start, method="Powell", options={"maxiter": 20000, "xtol": 1e-12, "ftol": 1e-15}),
    ]
    best = min(runs, key=lambda r: r.fun)
    return best.fun, best.x


def random_instance(rng, n=None):
    n = n or int(rng.integers(4, 11))
    d = int(rng.integers(1, 3))
    target = rng.standard_normal((n, d))
    adversary = target[:, :1] + 0.5 * rng.standard_normal((n, 1))
    weights = -rng.integers(0, 2, size=n).astype(float)
    weights[0] = -1.0
    offsets = rng.standard_normal(n) * 2
    bw_t = float(rng.uniform(0.5, 2.0))
    bw_a = float(rng.uniform(0.5, 2.0))
    lam_t = float(10 ** rng.uniform(-3, -1))
    lam_a = float(10 ** rng.uniform(-2, 0))
    problem = MinimaxProblem(target, adversary, weights, offsets, KernelConfig(bw_t), KernelConfig(bw_a), lam_t, lam_a)
    return problem, (target, adversary, weights, offsets, bw_t, bw_a, lam_t, lam_a)
