"""Command-line entry points for the experiment harness.

Subcommands: ``toy``, ``synthetic``, ``sweep``, ``replay``, and
``plot-data`` (re-aggregates existing logs).  Flags override values from
an optional flat ``key=value`` config file.  Exit codes: 0 success, 2
validation error, 3 runtime/convergence error.
"""

import argparse
import sys
from dataclasses import fields

from netbandit.harness import (
    ConfigError,
    ExperimentConfig,
    reaggregate,
    run_experiment,
    run_replay,
    run_sweep,
)
from netbandit.environment import EnvironmentInputError
from netbandit.graph import GraphInputError, GraphLoadError
from netbandit.sparse_regression import LassoConvergenceError

EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _parse_config_file(path):
    """Flat key=value file; '#' starts a comment line."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _parse_floats(text):
    return [float(v) for v in str(text).split(",") if v != ""]


def _parse_ints(text):
    return [int(v) for v in str(text).split(",") if v != ""]


def _add_common_flags(sub):
    sub.add_argument("--config", help="flat key=value config file; flags win")
    sub.add_argument("--n", type=int, help="number of users")
    sub.add_argument("--d", type=int, help="feature dimension")
    sub.add_argument("--arms", type=int, dest="m", help="arms offered per round")
    sub.add_argument("--horizon", type=int, help="number of rounds T")
    sub.add_argument("--gamma", help="anomaly norm target (comma list for sweep)")
    sub.add_argument("--anomalies", type=int, dest="anomaly_count")
    sub.add_argument("--nonzero-dims", dest="nonzero_dims",
                     help="residual nonzero dimensions (comma list for sweep)")
    sub.add_argument("--policies", help="comma list of policy names")
    sub.add_argument("--seeds", help="comma list of integer seeds")
    sub.add_argument("--out", dest="out_dir", help="output directory")
    sub.add_argument("--lasso-every", type=int, dest="lasso_every")
    sub.add_argument("--warmup", type=float, dest="warmup_rounds")
    sub.add_argument("--sigma", type=float)
    sub.add_argument("--delta", type=float)
    sub.add_argument("--lambda0", type=float)
    sub.add_argument("--lambda1", type=float)
    sub.add_argument("--keep-fraction", type=float, dest="keep_fraction")
    sub.add_argument("--rho-sq", type=float, dest="rho_sq")
    sub.add_argument("--s-v", type=float, dest="s_v")


def _build_config(args, scenario, extra=None):
    field_names = {f.name for f in fields(ExperimentConfig)}
    values = {"scenario": scenario}
    if getattr(args, "config", None):
        raw = _parse_config_file(args.config)
        for key, text in raw.items():
            if key not in field_names:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = text
    for key in field_names:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if extra:
        values.update(extra)
    # coerce strings coming from the config file
    coerced = {}
    for key, value in values.items():
        if key in ("policies", "seeds") and isinstance(value, str):
            parts = [p for p in value.split(",") if p]
            coerced[key] = tuple(int(p) for p in parts) if key == "seeds" else tuple(parts)
        elif isinstance(value, str) and key in (
            "n", "d", "m", "horizon", "anomaly_count", "lasso_every", "nonzero_dims"
        ):
            coerced[key] = int(value)
        elif isinstance(value, str) and key in (
            "sigma", "delta", "lambda0", "lambda1", "gamma",
            "keep_fraction", "rho_sq", "warmup_rounds", "s_v",
        ):
            coerced[key] = float(value)
        else:
            coerced[key] = value
    return ExperimentConfig(**coerced)


def _progress(msg):
    print(msg, file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="netbandit",
        description="Networked-bandit simulations with anomaly detection",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    toy = subs.add_parser("toy", help="4-node toy graphs")
    toy.add_argument("--graph", choices=["star", "full"], default="full")
    _add_common_flags(toy)

    synth = subs.add_parser("synthetic", help="synthetic similarity-graph scenario")
    _add_common_flags(synth)

    sweep = subs.add_parser("sweep", help="gamma x nonzero-dims recall sweep")
    _add_common_flags(sweep)

    replay = subs.add_parser("replay", help="file-loaded feature replay")
    replay.add_argument("--user-features", required=True)
    replay.add_argument("--item-features", required=True)
    _add_common_flags(replay)

    plot_data = subs.add_parser("plot-data", help="re-aggregate existing per-seed logs")
    plot_data.add_argument("--out", dest="out_dir", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "toy":
            scenario = "toy-star" if args.graph == "star" else "toy-full"
            extra = {}
            if args.n is None:
                extra["n"] = 4
            if args.anomaly_count is None:
                extra["anomaly_count"] = 1
            config = _build_config(args, scenario, extra=extra)
            run_experiment(config, progress=_progress)
        elif args.command == "synthetic":
            config = _build_config(args, "synthetic")
            run_experiment(config, progress=_progress)
        elif args.command == "sweep":
            gammas = _parse_floats(args.gamma) if args.gamma else [2.0, 5.0, 10.0]
            nzds = _parse_ints(args.nonzero_dims) if args.nonzero_dims else [1, 2, 3]
            base = _build_config(
                args, "sweep", extra={"gamma": gammas[0], "nonzero_dims": nzds[0]}
            )
            run_sweep(base, gammas, nzds, progress=_progress)
        elif args.command == "replay":
            config = _build_config(args, "replay")
            run_replay(config, args.user_features, args.item_features, progress=_progress)
        elif args.command == "plot-data":
            reaggregate(args.out_dir)
    except (ConfigError, GraphInputError, GraphLoadError, EnvironmentInputError,
            ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (LassoConvergenceError, RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
