"""
Hyperparameter selection by k-fold cross-validation of the held-out
projected-risk surrogate.

For each grid point the nuisance is fit on k-1 folds and scored on the
remaining fold by :func:`~minimax_dr.minimax.adversary_value`, i.e. the closed
form of the regularized inner supremum evaluated on held-out rows. The grid
point with the smallest mean score wins.

Every candidate is scored against the same adversary (one bandwidth, one
regularization constant). Scoring each candidate with its own adversary
regularization would make the score fall monotonically in
``lambda_adversary`` and always select the largest value.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InputError, MinimaxDRError, TuningError
from .functional import make_folds, n_records, take
from .kernels import median_heuristic
from .minimax import Hyperparameters, adversary_value, fit_nuisance

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (1e-4, 1e-3, 1e-2, 1e-1)
DEFAULT_BANDWIDTH_MULTIPLIERS = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class HyperGrid:
    """Candidate values for the four hyperparameters.

    With ``bandwidth_mode="median"`` the bandwidth values are multipliers of
    the median pairwise distance of the corresponding variables on the full
    data; with ``"absolute"`` they are used as given.
    """

    lambda_target_values: tuple = DEFAULT_LAMBDAS
    lambda_adversary_values: tuple = DEFAULT_LAMBDAS
    bandwidth_target_values: tuple = DEFAULT_BANDWIDTH_MULTIPLIERS
    bandwidth_adversary_values: tuple = DEFAULT_BANDWIDTH_MULTIPLIERS
    bandwidth_mode: str = "median"

    def __post_init__(self):
        for name in ("lambda_target_values", "lambda_adversary_values",
                     "bandwidth_target_values", "bandwidth_adversary_values"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise InputError(f"{name} is empty")
            if any(not np.isfinite(v) or v <= 0 for v in values):
                raise InputError(f"{name} must contain positive values")
            object.__setattr__(self, name, values)
        if self.bandwidth_mode not in ("median", "absolute"):
            raise InputError(f"unknown bandwidth_mode {self.bandwidth_mode!r}")

    def points(self):
        """Grid points in canonical order, as raw (unresolved) tuples."""
        return list(itertools.product(
            self.lambda_target_values,
            self.lambda_adversary_values,
            self.bandwidth_target_values,
            self.bandwidth_adversary_values,
        ))

    def __len__(self):
        return len(self.points())


@dataclass
class TunedHyperparams:
    hypers: Hyperparameters
    score: float
    table: list = field(default_factory=list, repr=False)
    scoring: Hyperparameters | None = None

    @property
    def lambda_target(self):
        return self.hypers.lambda_target

    @property
    def lambda_adversary(self):
        return self.hypers.lambda_adversary

    @property
    def bandwidth_target(self):
        return self.hypers.bandwidth_target

    @property
    def bandwidth_adversary(self):
        return self.hypers.bandwidth_adversary


def _median_scales(problem_builder, data):
    probe = problem_builder(data, Hyperparameters(1.0, 1.0, 1.0, 1.0))
    return median_heuristic(probe.target_points), median_heuristic(probe.adversary_points)


def _resolve_grid(grid: HyperGrid, med_t, med_a):
    points = grid.points()
    if grid.bandwidth_mode == "absolute":
        return [Hyperparameters(*p) for p in points]
    return [Hyperparameters(lt, la, bt * med_t, ba * med_a) for lt, la, bt, ba in points]


def cv_score(problem_builder, data, hypers: Hyperparameters, fold_ids, scoring=None) -> float:
    """Mean held-out adversary value over the folds in ``fold_ids``.

    ``scoring`` supplies the adversary's ``lambda_adversary`` and
    ``bandwidth_adversary`` on the validation folds; by default the
    candidate's own values are used.
    """
    val_hypers = hypers
    if scoring is not None:
        val_hypers = replace(
            hypers,
            lambda_adversary=scoring.lambda_adversary,
            bandwidth_adversary=scoring.bandwidth_adversary,
        )
    scores = []
    for ell in range(int(fold_ids.max()) + 1):
        train = take(data, np.flatnonzero(fold_ids != ell))
        val = take(data, np.flatnonzero(fold_ids == ell))
        f = fit_nuisance(problem_builder(train, hypers))
        scores.append(adversary_value(f, problem_builder(val, val_hypers)))
    return float(np.mean(scores))


def default_scoring(grid: HyperGrid, med_a) -> Hyperparameters:
    """Common validation adversary: smallest grid ``lambda_adversary``, median-heuristic bandwidth."""
    bandwidth = med_a if grid.bandwidth_mode == "median" else float(np.median(grid.bandwidth_adversary_values))
    return Hyperparameters(
        lambda_target=min(grid.lambda_target_values),
        lambda_adversary=min(grid.lambda_adversary_values),
        bandwidth_adversary=bandwidth,
    )


def tune(problem_builder, data, grid: HyperGrid | None = None, k=5, seed=0, scoring=None) -> TunedHyperparams:
    """Exhaustive grid search minimizing the k-fold held-out adversary value.

    Parameters
    ----------
    problem_builder : callable
        ``problem_builder(rows, hypers) -> MinimaxProblem``. Called on training
        folds to fit and on validation folds to score.
    data
        Record batch accepted by ``problem_builder``.
    grid : HyperGrid, optional
    k : int
        Number of cross-validation folds.
    seed : int
        Seed of the fold partition.
    scoring : Hyperparameters, optional
        Validation adversary shared by all candidates; see
        :func:`default_scoring`.

    Ties are broken towards the larger ``lambda_target``, then the larger
    target bandwidth, then grid order.
    """
    grid = grid or HyperGrid()
    n = n_records(data)
    if k < 2:
        raise InputError("k must be at least 2")
    if n < 2 * k:
        raise InputError(f"need at least {2 * k} records for {k}-fold tuning, got {n}")
    fold_ids = make_folds(n, k, seed)
    med_t, med_a = _median_scales(problem_builder, data)
    candidates = _resolve_grid(grid, med_t, med_a)
    scoring = scoring or default_scoring(grid, med_a)

    table = []
    failures = []
    for index, hypers in enumerate(candidates):
        try:
            score = cv_score(problem_builder, data, hypers, fold_ids, scoring)
        except (MinimaxDRError, np.linalg.LinAlgError) as exc:
            logger.warning("grid point %d failed: %s", index, exc)
            failures.append((index, asdict(hypers), str(exc)))
            score = float("inf")
        table.append({"index": index, **asdict(hypers), "score": score})

    if len(failures) == len(candidates):
        raise TuningError("every grid point failed", failures)

    def key(row):
        return (row["score"], -row["lambda_target"], -row["bandwidth_target"], row["index"])

    best = min(table, key=key)
    return TunedHyperparams(candidates[best["index"]], best["score"], table, scoring)


@dataclass
class BridgeTuning:
    """Tuning results for every (bridge, arm) pair of the proximal problem."""

    results: dict

    @property
    def hypers(self) -> dict:
        return {b: {a: r.hypers for a, r in arms.items()} for b, arms in self.results.items()}

    def table(self) -> list:
        rows = []
        for bridge, arms in self.results.items():
            for arm, result in arms.items():
                for row in result.table:
                    rows.append({"bridge": bridge, "arm": arm, **row})
        return rows


def tune_bridges(data, grid: HyperGrid | None = None, k=5, seed=0, bridges=("h", "q"), arms=(0, 1)) -> BridgeTuning:
    """Tune both bridges for both arms of a proximal dataset independently."""
    from .proximal import bridge_problem

    results = {}
    for bridge in bridges:
        results[bridge] = {}
        for arm in arms:
            def builder(rows, hypers, bridge=bridge, arm=arm):
                return bridge_problem(rows, bridge, arm, hypers)

            results[bridge][arm] = tune(builder, data, grid, k=k, seed=seed)
            logger.info("tuned %s-bridge arm %d: %s", bridge, arm, results[bridge][arm].hypers)
    return BridgeTuning(results)


__all__ = [
    "HyperGrid",
    "TunedHyperparams",
    "BridgeTuning",
    "cv_score",
    "tune",
    "tune_bridges",
]
