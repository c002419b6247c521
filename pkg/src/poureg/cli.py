"""Command-line harness.

Subcommands: ``validate`` (partition checks), ``fit`` / ``eval`` (fit and
evaluate coefficients from CSV files), the experiment sweeps
``exp-variance``, ``exp-rate``, ``exp-tail``, ``exp-bernstein``, and
``oracle``.

Flags may also be supplied through ``--config FILE`` holding flat
``key = value`` lines (keys match the long flag names); command-line flags
override file values.  Exit codes: 0 when every check passes, 1 when any
acceptance check fails, 2 on usage/configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import estimator, problems
from .experiments import ConfigError, ExperimentConfig, build_family, run_experiment
from .metrics import EnumerationBudgetError
from .partition import DomainError, validate_partition
from .problems import InputError
from .reporting import render, write_gnuplot, write_output

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


_COERCE = {
    "int": int,
    "float": float,
    "str": str,
    "ints": _parse_ints,
    "floats": _parse_floats,
}

# option name -> (coercion, help); shared across subcommands that use them
_OPTIONS = {
    "problem": ("str", "problem preset name"),
    "family": ("str", "family kind: dyadic, hat, or tensor-hat"),
    "dim": ("int", "dimension of the unit cube"),
    "level": ("int", "dyadic level (family size 2**(dim*level))"),
    "knots": ("int", "knots per axis for hat families (size knots**dim)"),
    "m": ("ints", "comma-separated sample sizes"),
    "N": ("ints", "comma-separated family sizes"),
    "eta": ("floats", "comma-separated tail thresholds"),
    "eps": ("floats", "comma-separated deviation thresholds"),
    "s": ("float", "approximation order override"),
    "replications": ("int", "replication count"),
    "seed": ("int", "master seed"),
    "A": ("float", "response bound override"),
    "mc-points": ("int", "Monte Carlo points per distance evaluation"),
    "quadrature-points": ("int", "Monte Carlo points for population integrals"),
    "threads": ("int", "worker threads (results are independent of this)"),
    "cell": ("str", "basis index for exp-bernstein, or 'all'"),
    "probes": ("int", "probe points for validate"),
    "out": ("str", "output path ('-' for stdout)"),
    "format": ("str", "output format: csv or text"),
    "plot": ("str", "basename for a gnuplot data+script pair"),
    "config": ("str", "flat key=value config file; flags override it"),
    "data": ("str", "input dataset CSV (columns x_1..x_d,y)"),
    "coeffs": ("str", "coefficient CSV (columns index,c_v,rho_v)"),
    "points": ("str", "points CSV (columns x_1..x_d)"),
}

_EXPERIMENT_FLAGS = [
    "problem", "family", "dim", "level", "knots", "m", "N", "eta", "eps", "s",
    "replications", "seed", "A", "mc-points", "quadrature-points", "threads",
    "cell", "out", "format", "plot", "config",
]

_SUBCOMMANDS = {
    "validate": (
        ["family", "dim", "level", "knots", "probes", "seed", "config"],
        "check the partition-of-unity contract on probe points",
    ),
    "fit": (
        ["data", "family", "dim", "level", "knots", "A", "out", "config"],
        "fit coefficients from a dataset CSV and dump them",
    ),
    "eval": (
        ["coeffs", "family", "dim", "level", "knots", "points", "out", "config"],
        "evaluate dumped coefficients at points from a CSV",
    ),
    "exp-variance": (_EXPERIMENT_FLAGS, "error scaling against family-size/sample-count"),
    "exp-rate": (_EXPERIMENT_FLAGS, "convergence rate with size chosen from m and s"),
    "exp-tail": (_EXPERIMENT_FLAGS, "tail frequencies against the exponential bound"),
    "exp-bernstein": (_EXPERIMENT_FLAGS, "per-index deviations against Bernstein bounds"),
    "oracle": (_EXPERIMENT_FLAGS, "exact enumeration vs Monte Carlo on atomic problems"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poureg",
        description="Partition-of-unity local-averaging regression harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (flags, summary) in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=summary, description=summary)
        for flag in flags:
            _, help_text = _OPTIONS[flag]
            p.add_argument(f"--{flag}", default=None, help=help_text)
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line (expected key = value): {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("_", "-")] = value.strip()
    return values


class _Options:
    """Merged view of CLI flags over config-file values over defaults."""

    def __init__(self, args: argparse.Namespace):
        self._cli = {k.replace("_", "-"): v for k, v in vars(args).items()}
        self._file: dict[str, str] = {}
        if self._cli.get("config"):
            self._file = _load_config_file(self._cli["config"])
            unknown = set(self._file) - set(_OPTIONS)
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    def get(self, key: str, default=None):
        raw = self._cli.get(key)
        if raw is None:
            raw = self._file.get(key)
        if raw is None:
            return default
        try:
            return _COERCE[_OPTIONS[key][0]](raw)
        except (ValueError, TypeError):
            raise ConfigError(f"invalid value for --{key}: {raw!r}") from None

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"--{key} is required")
        return value


def _family_from(opts: _Options):
    config = ExperimentConfig(
        experiment="family",
        family=opts.get("family", "dyadic"),
        dim=opts.get("dim", 1),
        level=opts.get("level"),
        knots=opts.get("knots"),
    )
    return build_family(config)


def _cmd_validate(opts: _Options) -> int:
    family = _family_from(opts)
    report = validate_partition(
        family, probes=opts.get("probes", 10_000), seed=opts.get("seed", 0)
    )
    print(f"{family.key()}: {report}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_fit(opts: _Options) -> int:
    family = _family_from(opts)
    data = problems.dataset_from_csv(Path(opts.require("data")).read_text(encoding="utf-8"))
    y_bound = opts.require("A")
    stats = estimator.empirical_stats(data, family, y_bound=y_bound)
    values = estimator.coeffs_from_stats(stats)
    write_output(estimator.coeffs_to_csv(values, stats.cell_mass), opts.get("out"))
    return EXIT_PASS


def _cmd_eval(opts: _Options) -> int:
    family = _family_from(opts)
    values, _ = estimator.coeffs_from_csv(
        Path(opts.require("coeffs")).read_text(encoding="utf-8")
    )
    fitted = estimator.FittedFunction(family, values)
    text = Path(opts.require("points")).read_text(encoding="utf-8")
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    header = [h.strip() for h in lines[0].split(",")]
    if not all(h.startswith("x_") for h in header):
        raise InputError("expected points header x_1,...,x_d")
    pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    out_lines = [",".join(header + ["value"])]
    for row, value in zip(pts, fitted(pts)):
        out_lines.append(",".join([repr(float(v)) for v in row] + [repr(float(value))]))
    write_output("\n".join(out_lines) + "\n", opts.get("out"))
    return EXIT_PASS


def _experiment_config(command: str, opts: _Options) -> ExperimentConfig:
    return ExperimentConfig(
        experiment=command,
        problem=opts.get("problem", "lipschitz-1d"),
        family=opts.get("family", "dyadic"),
        dim=opts.get("dim", 1),
        level=opts.get("level"),
        knots=opts.get("knots"),
        m_values=opts.get("m", ()),
        sizes=opts.get("N", ()),
        etas=opts.get("eta", ()),
        eps_values=opts.get("eps", ()),
        smoothness=opts.get("s"),
        replications=opts.get("replications", 1000),
        seed=opts.get("seed", 0),
        mc_points=opts.get("mc-points", 4096),
        quadrature_n=opts.get("quadrature-points", 10**6),
        threads=opts.get("threads", 1),
        cell=opts.get("cell", "all"),
        y_bound=opts.get("A"),
    )


def _cmd_experiment(command: str, opts: _Options) -> int:
    config = _experiment_config(command, opts)
    report = run_experiment(config)
    fmt = opts.get("format", "csv")
    write_output(render(report, fmt), opts.get("out"))
    plot = opts.get("plot")
    if plot:
        write_gnuplot(report, plot)
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        opts = _Options(args)
        if args.command == "validate":
            return _cmd_validate(opts)
        if args.command == "fit":
            return _cmd_fit(opts)
        if args.command == "eval":
            return _cmd_eval(opts)
        return _cmd_experiment(args.command, opts)
    except (
        ConfigError,
        InputError,
        DomainError,
        EnumerationBudgetError,
        LookupError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run():  # console entry point
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
