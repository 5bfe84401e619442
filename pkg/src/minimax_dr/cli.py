"""
Command-line entry point: ``minimax-dr {simulate, estimate, tune}``.

Settings come from an optional YAML file (``--config``) with command-line
flags taking precedence. Every key has a default, so
``minimax-dr simulate --scenario 1 --n 800`` runs as is. Configuration keys::

    scenario: 1                 # 1, 2, 3 or a scenario name
    n: 800
    reps: 100
    seed: 0
    folds: 5
    standardize: false
    data: path/to/file.csv      # estimate / tune
    columns: {X: [x1, x2], Z: [z1], W: [w1], A: a, Y: y}
    out: results
    hyperparameters:            # per bridge, optionally per arm {0: {...}, 1: {...}}
      h: {lambda_target: 1.0e-3, lambda_adversary: 1.0e-2, bandwidth_target: 35, bandwidth_adversary: 20}
      q: {lambda_target: 1.0e-3, lambda_adversary: 1.0e-2, bandwidth_target: 20, bandwidth_adversary: 35}
    tuning: null                # null, global or nested
    tuning_folds: 5
    grid: {lambda_target_values: [...], lambda_adversary_values: [...],
           bandwidth_target_values: [...], bandwidth_adversary_values: [...],
           bandwidth_mode: median}
    overrides: {}               # scenario parameter overrides
    cache: null                 # per-replication cache directory (simulate)

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml

from .csvio import normalize_columns, parse_columns, read_dataset
from .dgp import ScenarioConfig, generate, scenario_name
from .errors import ConfigError, DataError, InputError, MinimaxDRError, NumericError, TuningError
from .functional import CrossFitError
from .minimax import Hyperparameters
from .proximal import DEFAULT_H, DEFAULT_Q, ProximalConfig, estimate_ace
from .simulation import SimulationConfig, run_simulation, write_summary
from .tuning import HyperGrid, tune_bridges

logger = logging.getLogger("minimax_dr")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "scenario": 1,
    "n": 800,
    "reps": 100,
    "seed": 0,
    "folds": 5,
    "standardize": False,
    "data": None,
    "columns": None,
    "out": "results",
    "hyperparameters": None,
    "tuning": None,
    "tuning_folds": 5,
    "grid": None,
    "overrides": {},
    "cache": None,
    "workers": None,
}
_HYPER_KEYS = {"lambda_target", "lambda_adversary", "bandwidth_target", "bandwidth_adversary"}
_GRID_KEYS = {"lambda_target_values", "lambda_adversary_values", "bandwidth_target_values",
              "bandwidth_adversary_values", "bandwidth_mode"}


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a mapping")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return raw


def resolve_settings(args) -> dict:
    """Defaults, then the config file, then explicit command-line flags."""
    settings = dict(DEFAULTS)
    settings.update(load_config(args.config))
    for key in ("scenario", "n", "reps", "seed", "folds", "out", "data", "cache", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if getattr(args, "standardize", False):
        settings["standardize"] = True
    if getattr(args, "columns", None):
        settings["columns"] = parse_columns(args.columns)
    elif settings["columns"] is not None:
        settings["columns"] = normalize_columns(settings["columns"])
    for key in ("n", "reps", "seed", "folds", "tuning_folds"):
        try:
            settings[key] = int(settings[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {settings[key]!r}") from None
    if settings["reps"] < 1:
        raise ConfigError("reps must be at least 1")
    if settings["folds"] < 2:
        raise ConfigError("folds must be at least 2")
    if settings["tuning"] not in (None, "global", "nested"):
        raise ConfigError(f"tuning must be null, global or nested, got {settings['tuning']!r}")
    try:
        settings["scenario"] = scenario_name(settings["scenario"])
    except InputError as exc:
        raise ConfigError(str(exc)) from None
    return settings


def _hypers(entry, default) -> object:
    if entry is None:
        return default
    if not isinstance(entry, dict):
        raise ConfigError(f"hyperparameter entry must be a mapping, got {entry!r}")
    if set(entry) <= _HYPER_KEYS:
        try:
            return Hyperparameters(**{**asdict(default if isinstance(default, Hyperparameters)
                                               else Hyperparameters()), **entry})
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
    per_arm = {}
    for arm, value in entry.items():
        if str(arm) not in ("0", "1"):
            raise ConfigError(f"unknown hyperparameter key {arm!r}")
        per_arm[int(arm)] = _hypers(value, default)
    if set(per_arm) != {0, 1}:
        raise ConfigError("per-arm hyperparameters need entries for both arms 0 and 1")
    return per_arm


def proximal_config(settings) -> ProximalConfig:
    hyper = settings["hyperparameters"] or {}
    if not isinstance(hyper, dict) or set(hyper) - {"h", "q"}:
        raise ConfigError("hyperparameters must map 'h' and/or 'q' to settings")
    grid = None
    if settings["grid"] is not None:
        if not isinstance(settings["grid"], dict) or set(settings["grid"]) - _GRID_KEYS:
            raise ConfigError(f"grid keys must be among {sorted(_GRID_KEYS)}")
        try:
            grid = HyperGrid(**settings["grid"])
        except InputError as exc:
            raise ConfigError(f"invalid grid: {exc}") from None
    return ProximalConfig(
        h=_hypers(hyper.get("h"), DEFAULT_H),
        q=_hypers(hyper.get("q"), DEFAULT_Q),
        folds=settings["folds"],
        seed=settings["seed"],
        standardize=bool(settings["standardize"]),
        tuning=settings["tuning"],
        grid=grid,
        tuning_folds=settings["tuning_folds"],
    )


def _dump(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return _plain(asdict(obj))
    return obj


def _load_data(settings):
    if settings["data"] is None:
        raise ConfigError("no input data: pass --data or set 'data' in the config")
    return read_dataset(settings["data"], settings["columns"])


def cmd_simulate(settings) -> int:
    cfg = SimulationConfig(
        scenario=settings["scenario"],
        n=settings["n"],
        reps=settings["reps"],
        seed=settings["seed"],
        estimator=proximal_config(settings),
        overrides=settings["overrides"] or {},
    )
    summary = run_simulation(cfg, workers=settings["workers"], cache_dir=settings["cache"])
    csv_path, json_path = write_summary(summary, settings["out"])
    agg = summary.aggregates
    print(f"wrote {csv_path} and {json_path}")
    if agg["reps_ok"] == 0:
        print("every replication failed", file=sys.stderr)
        return EXIT_NUMERIC
    for method in ("por", "pipw", "pdr"):
        m = agg[method]
        print(f"{method:>4}: mean {m['mean']:.4f}  bias {m['mean_bias']:+.4f}  sd {m['sd']:.4f}  rmse {m['rmse']:.4f}")
    print(f"pdr 95% CI coverage: {agg['pdr']['coverage']:.3f} ({agg['reps_ok']} reps, {agg['reps_failed']} failed)")
    return EXIT_OK


def cmd_estimate(settings) -> int:
    data = _load_data(settings)
    result = estimate_ace(data, proximal_config(settings))
    payload = result.to_dict()
    payload["metadata"]["data"] = str(settings["data"])
    path = Path(settings["out"]) / "estimate.json"
    _dump(payload, path)
    lo, hi = result.pdr_ci
    print(f"POR {result.por.ace:.4f}  PIPW {result.pipw.ace:.4f}  PDR {result.pdr.ace:.4f} "
          f"(se {result.pdr_se:.4f}, 95% CI [{lo:.4f}, {hi:.4f}])")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_tune(settings) -> int:
    if settings["data"] is not None:
        data, source = _load_data(settings), str(settings["data"])
    else:
        data = generate(ScenarioConfig(settings["scenario"], settings["n"], settings["seed"],
                                       settings["overrides"] or {}))
        source = f"{settings['scenario']} n={settings['n']} seed={settings['seed']}"
    if settings["standardize"]:
        data = data.standardized()
    cfg = proximal_config(settings)
    tuned = tune_bridges(data, cfg.grid, k=settings["tuning_folds"], seed=settings["seed"])
    chosen = {b: {str(a): {**asdict(r.hypers), "score": r.score} for a, r in arms.items()}
              for b, arms in tuned.results.items()}
    payload = {
        "data": source,
        "seed": settings["seed"],
        "k": settings["tuning_folds"],
        "standardize": bool(settings["standardize"]),
        "grid": asdict(cfg.grid or HyperGrid()),
        "chosen": chosen,
        "scores": tuned.table(),
    }
    path = Path(settings["out"]) / "tuning.json"
    _dump(payload, path)
    for bridge, arms in chosen.items():
        for arm, row in arms.items():
            print(f"{bridge}-bridge arm {arm}: lambda_t={row['lambda_target']:g} lambda_a={row['lambda_adversary']:g} "
                  f"bw_t={row['bandwidth_target']:.4g} bw_a={row['bandwidth_adversary']:.4g} score={row['score']:.4g}")
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "tune": cmd_tune}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimax-dr",
        description="Kernel minimax doubly robust estimation of proximal causal effects.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "Monte Carlo study on a synthetic scenario"),
        ("estimate", "POR/PIPW/PDR estimates from a CSV file"),
        ("tune", "cross-validated hyperparameter selection"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--scenario", help="synthetic scenario: 1, 2 or 3")
        p.add_argument("--n", type=int, help="sample size of each synthetic dataset")
        p.add_argument("--reps", type=int, help="number of replications (simulate)")
        p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--folds", type=int, help="cross-fitting folds")
        p.add_argument("--out", help="output directory")
        p.add_argument("--data", help="input CSV (estimate, tune)")
        p.add_argument("--columns", help="column mapping, e.g. 'X=x1,x2;Z=z1;W=w1;A=a;Y=y'")
        p.add_argument("--standardize", action="store_true", help="z-score X, Z and W before fitting")
        if name == "simulate":
            p.add_argument("--cache", help="directory caching per-replication results")
            p.add_argument("--workers", type=int,
                           help="worker processes (default: $MINIMAX_DR_WORKERS, else 1)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, TuningError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CrossFitError as exc:
        code = EXIT_NUMERIC if isinstance(exc.__cause__, NumericError) else EXIT_DATA
        print(f"cross-fitting failed: {exc}", file=sys.stderr)
        return code
    except InputError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MinimaxDRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
