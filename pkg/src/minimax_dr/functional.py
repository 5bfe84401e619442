"""
Doubly robust functionals with a bilinear influence function and their
cross-fitted estimation.

The moment function is::

    IF(V; psi, q, h) = q(V_q) h(V_h) g1(V) + q(V_q) g2(V) + h(V_h) g3(V) + g4(V) - psi

All maps in a :class:`FunctionalSpec` act on a whole batch of records at once
and return arrays. A batch can be a :class:`~minimax_dr.proximal.ProximalDataset`,
a dict of equal-length arrays, or a plain array; see :func:`take`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .errors import InputError, MinimaxDRError

Z_95 = 1.959964


class CrossFitError(MinimaxDRError):
    """Nuisance fitting failed inside one cross-fitting fold."""

    def __init__(self, message, fold):
        super().__init__(message)
        self.fold = fold


@dataclass(frozen=True)
class FunctionalSpec:
    g1: Callable[[Any], np.ndarray]
    g2: Callable[[Any], np.ndarray]
    g3: Callable[[Any], np.ndarray]
    g4: Callable[[Any], np.ndarray]
    vq_selector: Callable[[Any], np.ndarray]
    vh_selector: Callable[[Any], np.ndarray]


@dataclass
class CrossFitEstimate:
    """Result of :func:`cross_fit`.

    ``influence`` holds each record's influence value at ``psi_hat`` under its
    own fold's nuisances; ``nuisances[l]`` is the ``(q, h)`` pair fit without
    fold ``l``.
    """

    psi_hat: float
    fold_estimates: np.ndarray
    standard_error: float
    ci_lower: float
    ci_upper: float
    n: int
    folds: int
    influence: np.ndarray = field(repr=False)
    fold_ids: np.ndarray = field(repr=False)
    nuisances: list = field(default_factory=list, repr=False)


def n_records(data) -> int:
    if hasattr(data, "n"):
        return int(data.n)
    if isinstance(data, Mapping):
        return len(next(iter(data.values())))
    return len(data)


def take(data, idx):
    """Row subset of a record batch."""
    if hasattr(data, "subset"):
        return data.subset(idx)
    if isinstance(data, Mapping):
        return {k: np.asarray(v)[idx] for k, v in data.items()}
    return np.asarray(data)[idx]


def _column(values, n, name) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    arr = arr.ravel()
    if arr.shape[0] != n:
        raise InputError(f"{name} returned {arr.shape[0]} values for {n} records")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} returned non-finite values")
    return arr


def moment_values(data, q, h, spec: FunctionalSpec) -> np.ndarray:
    """Per-record ``q h g1 + q g2 + h g3 + g4`` (the influence value plus psi)."""
    n = n_records(data)
    qv = _column(q(spec.vq_selector(data)), n, "q")
    hv = _column(h(spec.vh_selector(data)), n, "h")
    g1 = _column(spec.g1(data), n, "g1")
    g2 = _column(spec.g2(data), n, "g2")
    g3 = _column(spec.g3(data), n, "g3")
    g4 = _column(spec.g4(data), n, "g4")
    return qv * hv * g1 + qv * g2 + hv * g3 + g4


def influence_values(data, psi, q, h, spec: FunctionalSpec) -> np.ndarray:
    return moment_values(data, q, h, spec) - psi


def influence_value(record, psi, q, h, spec: FunctionalSpec) -> float:
    """Influence function at a single record (a batch of length one)."""
    values = influence_values(record, psi, q, h, spec)
    if values.shape[0] != 1:
        raise InputError(f"expected a single record, got {values.shape[0]}")
    return float(values[0])


def solve_psi_fold(data, q, h, spec: FunctionalSpec) -> float:
    """Root in psi of the fold-average influence function.

    The influence function is affine in psi with slope -1, so the root is the
    fold mean of the moment values.
    """
    if n_records(data) == 0:
        raise InputError("empty fold")
    return float(np.mean(moment_values(data, q, h, spec)))


def make_folds(n: int, folds: int, seed) -> np.ndarray:
    """Seeded random assignment of ``n`` records to ``folds`` near-equal folds."""
    if folds < 2:
        raise InputError("need at least 2 folds")
    if folds > n:
        raise InputError(f"{folds} folds requested for {n} records")
    rng = np.random.Generator(np.random.Philox(seed))
    fold_ids = np.empty(n, dtype=int)
    fold_ids[rng.permutation(n)] = np.arange(n) % folds
    return fold_ids


def cross_fit(data, spec: FunctionalSpec, fit_plan, folds=5, seed=0, fold_ids=None) -> CrossFitEstimate:
    """Cross-fitted estimate of psi.

    Parameters
    ----------
    data
        Record batch.
    spec : FunctionalSpec
    fit_plan : callable
        ``fit_plan(training_batch) -> (q, h)``; both returned objects are
        callables on the selector outputs.
    folds : int
        Number of folds L.
    seed : int
        Seed of the random partition; ignored when ``fold_ids`` is given.
    fold_ids : array of int, optional
        Precomputed partition, e.g. to share folds between treatment arms.
    """
    n = n_records(data)
    if fold_ids is None:
        if n < 2 * folds:
            raise InputError(f"need at least {2 * folds} records for {folds} folds, got {n}")
        fold_ids = make_folds(n, folds, seed)
    else:
        fold_ids = np.asarray(fold_ids, dtype=int)
        if fold_ids.shape != (n,):
            raise InputError("fold_ids must assign every record")
        folds = int(fold_ids.max()) + 1

    moments = np.empty(n)
    fold_estimates = np.empty(folds)
    nuisances = []
    for ell in range(folds):
        held_out = np.flatnonzero(fold_ids == ell)
        train = np.flatnonzero(fold_ids != ell)
        if held_out.size == 0:
            raise CrossFitError(f"fold {ell} is empty", fold=ell)
        try:
            q, h = fit_plan(take(data, train))
        except MinimaxDRError as exc:
            raise CrossFitError(f"nuisance fit failed in fold {ell}: {exc}", fold=ell) from exc
        nuisances.append((q, h))
        moments[held_out] = moment_values(take(data, held_out), q, h, spec)
        fold_estimates[ell] = np.mean(moments[held_out])

    psi_hat = float(np.mean(fold_estimates))
    influence = moments - psi_hat
    se = float(np.std(influence, ddof=1) / np.sqrt(n))
    return CrossFitEstimate(
        psi_hat=psi_hat,
        fold_estimates=fold_estimates,
        standard_error=se,
        ci_lower=psi_hat - Z_95 * se,
        ci_upper=psi_hat + Z_95 * se,
        n=n,
        folds=folds,
        influence=influence,
        fold_ids=fold_ids,
        nuisances=nuisances,
    )
