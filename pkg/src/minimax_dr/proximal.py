"""
Average causal effect under proximal causal inference.

Per treatment arm ``a`` the counterfactual mean ``E[Y^(a)]`` has the bilinear
influence function with ``g1 = -1{A=a}``, ``g2 = 1{A=a} Y``, ``g3 = 1`` and
``g4 = 0``. The outcome bridge ``h_a(W, X)`` and the treatment bridge
``q_a(Z, X)`` are each fit by the closed-form kernel minimax solver over all
records, with the arm indicator carried by the weights and offsets.

Three estimators are reported from the same cross-fitting folds:

* POR  -- fold mean of ``h_a(W, X)``
* PIPW -- fold mean of ``1{A=a} q_a(Z, X) Y``
* PDR  -- fold mean of the full influence function
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InputError
from .functional import (
    Z_95,
    CrossFitError,
    CrossFitEstimate,
    FunctionalSpec,
    cross_fit,
    make_folds,
)
from .kernels import KernelConfig, median_heuristic, standardize
from .minimax import Hyperparameters, MinimaxProblem, NuisanceFunction, fit_nuisance

ARMS = (0, 1)
BRIDGES = ("h", "q")


def _as_matrix(values, n, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] != n:
        raise InputError(f"{name} must have {n} rows, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ProximalDataset:
    """Columns ``(X, Z, W, A, Y)``; X, Z and W are 2-D, A and Y are vectors."""

    X: np.ndarray
    Z: np.ndarray
    W: np.ndarray
    A: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float).ravel()
        Y = np.asarray(self.Y, dtype=float).ravel()
        n = A.shape[0]
        if Y.shape[0] != n:
            raise InputError(f"A has {n} rows but Y has {Y.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Y", Y)
        for name in ("X", "Z", "W"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), n, name))
        for name in ("X", "Z", "W", "A", "Y"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InputError(f"column {name} has non-finite entries")
        if not np.all((A == 0) | (A == 1)):
            raise InputError("treatment A must be binary {0, 1}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def wx(self) -> np.ndarray:
        """Arguments of the outcome bridge."""
        return np.hstack([self.W, self.X])

    @property
    def zx(self) -> np.ndarray:
        """Arguments of the treatment bridge."""
        return np.hstack([self.Z, self.X])

    def subset(self, idx) -> "ProximalDataset":
        return ProximalDataset(self.X[idx], self.Z[idx], self.W[idx], self.A[idx], self.Y[idx])

    def standardized(self) -> "ProximalDataset":
        """Copy with X, Z and W columns z-scored (A and Y untouched)."""
        return ProximalDataset(standardize(self.X), standardize(self.Z), standardize(self.W), self.A, self.Y)

    def check_both_arms(self):
        treated = int(self.A.sum())
        if treated == 0 or treated == self.n:
            raise InputError("both treatment arms must be present")


BridgeHypers = Hyperparameters

# Defaults chosen on an independent pilot study of scenario 1 (see README);
# the target bandwidth is twice the median heuristic of the target variables.
DEFAULT_H = BridgeHypers(lambda_target=1e-4, lambda_adversary=1e-2, bandwidth_target_scale=2.0)
DEFAULT_Q = BridgeHypers(lambda_target=1e-4, lambda_adversary=1e-3, bandwidth_target_scale=2.0)


@dataclass(frozen=True)
class ProximalConfig:
    """Settings for :func:`estimate_ace`.

    ``h`` and ``q`` are either one :class:`BridgeHypers` shared by both arms or
    a ``{arm: BridgeHypers}`` mapping.

    ``tuning`` is ``None`` (use the hyperparameters as given), ``"global"``
    (tune once on the full data, then cross-fit) or ``"nested"`` (tune inside
    every cross-fitting training split); ``grid`` is the
    :class:`~minimax_dr.tuning.HyperGrid` used when tuning.
    """

    h: object = DEFAULT_H
    q: object = DEFAULT_Q
    folds: int = 5
    seed: int = 0
    standardize: bool = False
    tuning: str | None = None
    grid: object = None
    tuning_folds: int = 5

    def hypers_for(self, bridge: str, arm: int) -> BridgeHypers:
        value = getattr(self, bridge)
        if isinstance(value, dict):
            return value[arm]
        return value

    def with_hypers(self, table) -> "ProximalConfig":
        """Copy with ``table[bridge][arm]`` hyperparameters."""
        return replace(self, h=dict(table["h"]), q=dict(table["q"]), tuning=None)


def supplement_config(**kwargs) -> ProximalConfig:
    """Fixed hyperparameters used for the real-data analysis.

    The outcome-proxy space (W, X) uses bandwidth 35 and the treatment-proxy
    space (Z, X) uses bandwidth 20, on raw covariate scales.
    """
    h = BridgeHypers(lambda_target=0.001, lambda_adversary=0.01, bandwidth_target=35.0, bandwidth_adversary=20.0)
    q = BridgeHypers(lambda_target=0.001, lambda_adversary=0.01, bandwidth_target=20.0, bandwidth_adversary=35.0)
    return ProximalConfig(h=h, q=q, **kwargs)


def proximal_spec(arm: int) -> FunctionalSpec:
    return FunctionalSpec(
        g1=lambda d: -(d.A == arm).astype(float),
        g2=lambda d: (d.A == arm) * d.Y,
        g3=lambda d: np.ones(d.n),
        g4=lambda d: np.zeros(d.n),
        vq_selector=lambda d: d.zx,
        vh_selector=lambda d: d.wx,
    )


def resolve_hypers(hypers: BridgeHypers, target_points, adversary_points) -> BridgeHypers:
    """Fill in scaled median-heuristic bandwidths."""
    bt = hypers.bandwidth_target
    ba = hypers.bandwidth_adversary
    return replace(
        hypers,
        bandwidth_target=hypers.bandwidth_target_scale * median_heuristic(target_points) if bt is None else bt,
        bandwidth_adversary=hypers.bandwidth_adversary_scale * median_heuristic(adversary_points) if ba is None else ba,
    )


def bridge_problem(data: ProximalDataset, bridge: str, arm: int, hypers: BridgeHypers) -> MinimaxProblem:
    """Minimax problem whose solution is the ``bridge`` function of arm ``arm``.

    Outcome bridge: target (W, X), adversary (Z, X), offsets ``1{A=a} Y``.
    Treatment bridge: target (Z, X), adversary (W, X), offsets ``1``.
    Both use weights ``-1{A=a}``.
    """
    if arm not in ARMS:
        raise InputError(f"arm must be 0 or 1, got {arm}")
    indicator = (data.A == arm).astype(float)
    if bridge == "h":
        target, adversary, offsets = data.wx, data.zx, indicator * data.Y
    elif bridge == "q":
        target, adversary, offsets = data.zx, data.wx, np.ones(data.n)
    else:
        raise InputError(f"unknown bridge {bridge!r}")
    hypers = resolve_hypers(hypers, target, adversary)
    return MinimaxProblem(
        target_points=target,
        adversary_points=adversary,
        weights=-indicator,
        offsets=offsets,
        target_kernel=KernelConfig(hypers.bandwidth_target),
        adversary_kernel=KernelConfig(hypers.bandwidth_adversary),
        lambda_target=hypers.lambda_target,
        lambda_adversary=hypers.lambda_adversary,
    )


def fit_h_bridge(data: ProximalDataset, arm: int, hypers: BridgeHypers | None = None) -> NuisanceFunction:
    """Outcome bridge ``h_a(W, X)``."""
    return fit_nuisance(bridge_problem(data, "h", arm, hypers or DEFAULT_H))


def fit_q_bridge(data: ProximalDataset, arm: int, hypers: BridgeHypers | None = None) -> NuisanceFunction:
    """Treatment bridge ``q_a(Z, X)``."""
    return fit_nuisance(bridge_problem(data, "q", arm, hypers or DEFAULT_Q))


@dataclass(frozen=True)
class MethodEstimate:
    psi1: float
    psi0: float
    ace: float


@dataclass
class AceResult:
    por: MethodEstimate
    pipw: MethodEstimate
    pdr: MethodEstimate
    pdr_se: float
    pdr_ci: tuple
    fold_detail: list
    metadata: dict = field(default_factory=dict)
    arms: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "por": asdict(self.por),
            "pipw": asdict(self.pipw),
            "pdr": asdict(self.pdr),
            "pdr_se": self.pdr_se,
            "ci": list(self.pdr_ci),
            "fold_detail": self.fold_detail,
            "metadata": self.metadata,
        }


def kernel_fitter(config: ProximalConfig) -> Callable:
    """Default nuisance fitter: ``fitter(train, arm) -> (q, h)``."""

    def fitter(train: ProximalDataset, arm: int):
        cfg = config
        if config.tuning == "nested":
            from .tuning import tune_bridges

            cfg = config.with_hypers(tune_bridges(train, config.grid, k=config.tuning_folds, seed=config.seed).hypers)
        q = fit_q_bridge(train, arm, cfg.hypers_for("q", arm))
        h = fit_h_bridge(train, arm, cfg.hypers_for("h", arm))
        return q, h

    return fitter


def _hypers_metadata(config: ProximalConfig) -> dict:
    out = {}
    for bridge in BRIDGES:
        out[bridge] = {str(arm): asdict(config.hypers_for(bridge, arm)) for arm in ARMS}
    return out


def estimate_ace(data: ProximalDataset, config: ProximalConfig | None = None, fitter=None,
                 fold_ids=None) -> AceResult:
    """POR, PIPW and PDR estimates of the average causal effect.

    Both arms share one random partition into ``config.folds`` folds. The PDR
    standard error is the sample standard deviation of the per-record
    difference of arm-1 and arm-0 influence values, divided by sqrt(n).

    Parameters
    ----------
    data : ProximalDataset
    config : ProximalConfig, optional
    fitter : callable, optional
        ``fitter(train, arm) -> (q, h)`` replacing the kernel bridge fits, e.g.
        to plug in known bridge functions.
    fold_ids : array of int, optional
        Explicit partition overriding the seeded one.
    """
    config = config or ProximalConfig()
    data.check_both_arms()
    if config.standardize:
        data = data.standardized()

    tuning_table = None
    if fitter is None:
        if config.tuning == "global":
            from .tuning import tune_bridges

            tuned = tune_bridges(data, config.grid, k=config.tuning_folds, seed=config.seed)
            tuning_table = tuned.table()
            config = config.with_hypers(tuned.hypers)
        elif config.tuning not in (None, "nested"):
            raise InputError(f"unknown tuning mode {config.tuning!r}")
        fitter = kernel_fitter(config)

    n = data.n
    if n < 2 * config.folds:
        raise InputError(f"need at least {2 * config.folds} records for {config.folds} folds")
    if fold_ids is None:
        fold_ids = make_folds(n, config.folds, config.seed)
    else:
        fold_ids = np.asarray(fold_ids, dtype=int)
        if fold_ids.shape != (n,) or set(np.unique(fold_ids)) != set(range(config.folds)):
            raise InputError(f"fold_ids must assign each record to one of {config.folds} folds")

    arms: dict[int, CrossFitEstimate] = {}
    por_folds = {}
    pipw_folds = {}
    for arm in ARMS:

        def fit_plan(train, arm=arm):
            if not np.any(train.A == arm) or np.all(train.A == arm):
                raise InputError("training split lacks one treatment arm")
            return fitter(train, arm)

        try:
            est = cross_fit(data, proximal_spec(arm), fit_plan, fold_ids=fold_ids)
        except CrossFitError as exc:
            raise CrossFitError(f"arm {arm}: {exc}", fold=exc.fold) from exc.__cause__
        arms[arm] = est
        por = np.empty(config.folds)
        pipw = np.empty(config.folds)
        for ell, (q, h) in enumerate(est.nuisances):
            fold = data.subset(np.flatnonzero(fold_ids == ell))
            por[ell] = np.mean(h(fold.wx))
            pipw[ell] = np.mean((fold.A == arm) * q(fold.zx) * fold.Y)
        por_folds[arm] = por
        pipw_folds[arm] = pipw

    def method(folds_by_arm):
        psi1 = float(np.mean(folds_by_arm[1]))
        psi0 = float(np.mean(folds_by_arm[0]))
        return MethodEstimate(psi1, psi0, psi1 - psi0)

    por = method(por_folds)
    pipw = method(pipw_folds)
    pdr = method({arm: arms[arm].fold_estimates for arm in ARMS})
    diff = arms[1].influence - arms[0].influence
    se = float(np.std(diff, ddof=1) / np.sqrt(n))

    fold_detail = []
    for ell in range(config.folds):
        fold_detail.append({
            "fold": ell,
            "size": int(np.sum(fold_ids == ell)),
            "por_psi1": float(por_folds[1][ell]),
            "por_psi0": float(por_folds[0][ell]),
            "pipw_psi1": float(pipw_folds[1][ell]),
            "pipw_psi0": float(pipw_folds[0][ell]),
            "pdr_psi1": float(arms[1].fold_estimates[ell]),
            "pdr_psi0": float(arms[0].fold_estimates[ell]),
        })

    metadata = {
        "n": n,
        "folds": config.folds,
        "seed": config.seed,
        "standardize": config.standardize,
        "partition": "shared",
        "tuning": config.tuning if tuning_table is None else "global",
        "hyperparameters": _hypers_metadata(config),
    }
    if tuning_table is not None:
        metadata["tuning_scores"] = tuning_table
    return AceResult(
        por=por,
        pipw=pipw,
        pdr=pdr,
        pdr_se=se,
        pdr_ci=(pdr.ace - Z_95 * se, pdr.ace + Z_95 * se),
        fold_detail=fold_detail,
        metadata=metadata,
        arms=arms,
    )
