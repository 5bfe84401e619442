"""
Seeded Monte Carlo studies of the proximal ACE estimators.

Replication ``i`` draws its dataset and its cross-fitting partition from seed
``seed + i``, so any single replication can be rerun in isolation. Results are
collected in replication order regardless of how many worker processes ran
them.

An optional cache directory stores one JSON file per replication, keyed by a
hash of everything that determines it (scenario, parameters, seed, estimator
settings, and the code of the computational modules, ignoring comments and
docstrings). Rerunning a study with the same settings
then only reads files.
"""

from __future__ import annotations

import ast
import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dgp import ScenarioConfig, generate, scenario_name, true_ace
from .errors import InputError, MinimaxDRError
from .proximal import ProximalConfig, estimate_ace

logger = logging.getLogger(__name__)

WORKERS_ENV = "MINIMAX_DR_WORKERS"
METHODS = ("por", "pipw", "pdr")
ROW_FIELDS = (
    "rep", "seed", "status", "por_ace", "pipw_ace", "pdr_ace", "pdr_se",
    "ci_lower", "ci_upper", "ci_covers_truth", "error",
)


@dataclass(frozen=True)
class SimulationConfig:
    scenario: str
    n: int
    reps: int = 100
    seed: int = 0
    estimator: ProximalConfig = field(default_factory=ProximalConfig)
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scenario", scenario_name(self.scenario))
        if self.reps < 1:
            raise InputError("reps must be at least 1")
        if self.n < 2 * self.estimator.folds:
            raise InputError(f"n={self.n} is too small for {self.estimator.folds} folds")

    @property
    def truth(self) -> float:
        return true_ace(self.scenario)


@dataclass
class SimulationSummary:
    rows: list
    aggregates: dict
    config: dict

    def to_dict(self) -> dict:
        return {"config": self.config, "aggregates": self.aggregates}


def worker_count(requested=None) -> int:
    """Worker processes to use: ``requested``, else the environment cap, else 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


# modules whose source determines a replication's numbers
_COMPUTATIONAL_MODULES = ("dgp", "functional", "kernels", "minimax", "proximal", "simulation", "tuning")


def _code_fingerprint(source: str) -> str:
    """AST dump with docstrings removed: insensitive to comments and documentation."""
    tree = ast.parse(source)
    for node in ast.walk(tree):
        body = getattr(node, "body", None)
        if (isinstance(body, list) and body and isinstance(body[0], ast.Expr)
                and isinstance(body[0].value, ast.Constant) and isinstance(body[0].value.value, str)):
            node.body = body[1:] or [ast.Pass()]
    return ast.dump(tree)


def _source_digest() -> str:
    h = hashlib.sha256()
    for name in _COMPUTATIONAL_MODULES:
        path = Path(__file__).parent / f"{name}.py"
        h.update(name.encode())
        h.update(_code_fingerprint(path.read_text()).encode())
    return h.hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def config_record(cfg: SimulationConfig) -> dict:
    """Plain-data description of a study, embedded in its outputs."""
    return _jsonable({
        "scenario": cfg.scenario,
        "n": cfg.n,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "truth": cfg.truth,
        "overrides": cfg.overrides,
        "estimator": cfg.estimator,
    })


def _replication_key(cfg: SimulationConfig, rep_seed: int, digest: str) -> str:
    record = config_record(cfg)
    record.pop("reps")
    record["seed"] = rep_seed
    record["source"] = digest
    blob = json.dumps(record, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:32]


def run_replication(cfg: SimulationConfig, rep: int) -> dict:
    """One generate-estimate pipeline; failures are recorded, not raised."""
    rep_seed = cfg.seed + rep
    row = dict.fromkeys(ROW_FIELDS, "")
    row.update(rep=rep, seed=rep_seed)
    try:
        data = generate(ScenarioConfig(cfg.scenario, cfg.n, rep_seed, cfg.overrides))
        result = estimate_ace(data, replace(cfg.estimator, seed=rep_seed))
    except (MinimaxDRError, np.linalg.LinAlgError) as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return row
    lo, hi = result.pdr_ci
    row.update(
        status="ok",
        por_ace=result.por.ace,
        pipw_ace=result.pipw.ace,
        pdr_ace=result.pdr.ace,
        pdr_se=result.pdr_se,
        ci_lower=lo,
        ci_upper=hi,
        ci_covers_truth=int(lo <= cfg.truth <= hi),
    )
    return row


def _cached_replication(args):
    cfg, rep, cache_dir, digest = args
    if cache_dir is None:
        return run_replication(cfg, rep)
    path = Path(cache_dir) / f"{_replication_key(cfg, cfg.seed + rep, digest)}.json"
    if path.exists():
        row = json.loads(path.read_text())
        row["rep"] = rep
        return row
    row = run_replication(cfg, rep)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(row, sort_keys=True))
    tmp.replace(path)
    return row


def run_simulation(cfg: SimulationConfig, workers=None, cache_dir=None) -> SimulationSummary:
    """Run all replications of a study and aggregate them.

    Parameters
    ----------
    cfg : SimulationConfig
    workers : int, optional
        Process count; defaults to the ``MINIMAX_DR_WORKERS`` environment
        variable, else 1.
    cache_dir : path, optional
        Directory of per-replication result files (created if needed).
    """
    digest = _source_digest()
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, rep, cache_dir, digest) for rep in range(cfg.reps)]
    workers = min(worker_count(workers), cfg.reps)
    if workers == 1:
        rows = [_cached_replication(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_cached_replication, jobs))
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        logger.warning("replication %d (seed %d) failed: %s", r["rep"], r["seed"], r["error"])
    return SimulationSummary(rows, aggregate(rows, cfg.truth), config_record(cfg))


def _boxplot(values) -> dict:
    q = np.percentile(values, [0, 25, 50, 75, 100])
    return dict(zip(("min", "q1", "median", "q3", "max"), (float(v) for v in q)))


def aggregate(rows, truth) -> dict:
    """Per-method bias summaries from replication rows.

    Only rows with ``status == "ok"`` enter. ``mc_se_bias`` is the Monte
    Carlo standard error of the mean bias (sd / sqrt(reps)).
    """
    ok = [r for r in rows if r["status"] == "ok"]
    out = {"reps_ok": len(ok), "reps_failed": len(rows) - len(ok), "truth": truth}
    if not ok:
        return out
    for method in METHODS:
        est = np.array([float(r[f"{method}_ace"]) for r in ok])
        bias = est - truth
        sd = float(np.std(est, ddof=1)) if est.size > 1 else 0.0
        out[method] = {
            "mean": float(np.mean(est)),
            "mean_bias": float(np.mean(bias)),
            "median_bias": float(np.median(bias)),
            "sd": sd,
            "rmse": float(np.sqrt(np.mean(bias**2))),
            "mc_se_bias": sd / np.sqrt(est.size),
            "bias_boxplot": _boxplot(bias),
        }
    covers = np.array([int(r["ci_covers_truth"]) for r in ok])
    out["pdr"]["coverage"] = float(np.mean(covers))
    out["pdr"]["mean_se"] = float(np.mean([float(r["pdr_se"]) for r in ok]))
    return out


def write_summary(summary: SimulationSummary, out_dir) -> tuple[Path, Path]:
    """Write ``replications.csv`` and ``summary.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "replications.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ROW_FIELDS)
        writer.writeheader()
        for row in summary.rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    json_path = out_dir / "summary.json"
    json_path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def read_rows(csv_path) -> list:
    """Replication rows back from ``replications.csv`` (numeric fields as floats)."""
    rows = []
    with open(csv_path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = dict(raw)
            row["rep"], row["seed"] = int(row["rep"]), int(row["seed"])
            if row["status"] == "ok":
                for key in ("por_ace", "pipw_ace", "pdr_ace", "pdr_se", "ci_lower", "ci_upper"):
                    row[key] = float(row[key])
                row["ci_covers_truth"] = int(row["ci_covers_truth"])
            rows.append(row)
    return rows
