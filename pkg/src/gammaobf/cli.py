"""Command-line front end.

Subcommands: select | obfuscate | estimate | measure | simulate.  Every
run writes a JSON report embedding the tool version, the resolved
configuration, and the seed, so results are reconstructible from the
report alone; numeric CSV output uses round-trip precision.

Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure.
"""

import argparse
import csv
import json
import secrets
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .confidentiality import (
    DatasetSummary,
    MeasureEvaluator,
    PrivacyBudget,
    empirical_mu,
)
from .deconvolution import (
    BIAS_CONSTANT_KERNEL_MOMENT,
    BIAS_CONSTANT_PAPER,
    estimate_from_masked,
)
from .errors import DataError, GammaObfError, ParameterError
from .evaluation import DISTRIBUTIONS, StudyConfig, run_study
from .noise import GammaNoiseParams, sample
from .optimizer import run_selection

_BIAS_CONSTANTS = {
    "paper": BIAS_CONSTANT_PAPER,
    "kernel": BIAS_CONSTANT_KERNEL_MOMENT,
}


@dataclass
class RunConfig:
    """Resolved invocation: everything a report needs to reproduce the run."""

    command: str
    input_path: str | None
    output_prefix: str
    q: float
    delta: float
    shape_grid_spec: str | None
    seed: int
    grid_size: int
    bias_constant: str
    extra: dict

    def budget(self) -> PrivacyBudget:
        return PrivacyBudget(deviation_multiplier=self.q, level=self.delta)

    def bias_value(self) -> float:
        return _BIAS_CONSTANTS[self.bias_constant]

    def to_dict(self) -> dict:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        return d


def _fmt(value) -> str:
    """Round-trip decimal representation."""
    return repr(float(value))


def read_numeric_column(path: str) -> np.ndarray:
    """Single-column numeric CSV; optional header auto-detected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    values = []
    seen_first = False
    for lineno, raw in enumerate(lines, start=1):
        token = raw.strip()
        if not token:
            continue
        fields = [f for f in (p.strip() for p in token.split(",")) if f]
        if len(fields) != 1:
            raise DataError(
                f"{path}:{lineno}: expected a single column, found {len(fields)} fields"
            )
        try:
            value = float(fields[0])
        except ValueError:
            if not seen_first:
                seen_first = True  # header row
                continue
            raise DataError(f"{path}:{lineno}: not a number: {fields[0]!r}") from None
        seen_first = True
        values.append(value)
    if not values:
        raise DataError(f"{path}: no numeric values found")
    return np.asarray(values, dtype=float)


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row]
            )


def _write_report(path: str, config: RunConfig, results: dict) -> None:
    document = {
        "tool": "gammaobf",
        "version": __version__,
        "config": config.to_dict(),
        "results": results,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2)
        fh.write("\n")


def _output_prefix(path: str) -> str:
    for suffix in (".json", ".csv"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def parse_shape_grid(spec: str) -> np.ndarray:
    """Parse 'start:stop:step' into an inclusive grid within (0, 1]."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ParameterError(f"theta grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ParameterError(f"theta grid must be numeric, got {spec!r}") from None
    if step <= 0.0 or start <= 0.0 or stop < start or stop > 1.0:
        raise ParameterError(
            f"theta grid needs 0 < start <= stop <= 1 and step > 0, got {spec!r}"
        )
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def _noise_params(args) -> GammaNoiseParams:
    return GammaNoiseParams(shape=args.theta, scale=args.eta)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_select(config: RunConfig, args) -> None:
    data = DatasetSummary.from_values(read_numeric_column(config.input_path))
    shapes = parse_shape_grid(config.shape_grid_spec) if config.shape_grid_spec else None
    report = run_selection(
        data, config.budget(), shapes, bias_constant=config.bias_value()
    )
    frontier_rows = [
        (p.shape, p.calibrated_scale, p.bandwidth, p.objective) for p in report.frontier
    ]
    _write_csv(
        config.output_prefix + ".frontier.csv",
        ["theta", "eta", "bandwidth", "objective"],
        frontier_rows,
    )
    _write_report(
        config.output_prefix + ".json",
        config,
        {
            "optimal_shape": report.optimal_shape,
            "optimal_scale": report.optimal_scale,
            "data_sd": report.data_sd,
            "n": data.n,
            "frontier": [
                {
                    "theta": p.shape,
                    "eta": p.calibrated_scale,
                    "bandwidth": p.bandwidth,
                    "objective": p.objective,
                }
                for p in report.frontier
            ],
        },
    )


def cmd_obfuscate(config: RunConfig, args) -> None:
    x = read_numeric_column(config.input_path)
    params = _noise_params(args)
    masked = x + sample(params, x.size, config.seed)
    _write_csv(config.output_prefix + ".csv", ["z"], [(v,) for v in masked])
    _write_report(
        config.output_prefix + ".json",
        config,
        {"n": int(x.size), "theta": params.shape, "eta": params.scale},
    )


def cmd_estimate(config: RunConfig, args) -> None:
    masked = read_numeric_column(config.input_path)
    params = _noise_params(args)
    est = estimate_from_masked(
        masked, params, grid_size=config.grid_size, bias_constant=config.bias_value()
    )
    _write_csv(
        config.output_prefix + ".csv",
        ["x", "g_hat", "G_hat"],
        zip(est.grid, est.density, est.cdf),
    )
    _write_report(
        config.output_prefix + ".json",
        config,
        {
            "n": int(masked.size),
            "theta": params.shape,
            "eta": params.scale,
            "bandwidth": est.bandwidth,
            "density_integral": float(np.trapezoid(est.density, est.grid)),
            "cdf_overshoot": est.cdf_overshoot,
        },
    )


def cmd_measure(config: RunConfig, args) -> None:
    data = DatasetSummary.from_values(read_numeric_column(config.input_path))
    params = _noise_params(args)
    evaluator = MeasureEvaluator(data)
    mu_hat = empirical_mu(data, params, config.delta, evaluator=evaluator)
    curve = evaluator.curve(params, mu_hat)
    _write_csv(
        config.output_prefix + ".curve.csv",
        ["z", "m_hat"],
        zip(curve.z_grid, curve.values),
    )
    _write_report(
        config.output_prefix + ".json",
        config,
        {
            "mu_hat": mu_hat,
            "n": data.n,
            "data_sd": data.sd,
            "theta": params.shape,
            "eta": params.scale,
            "curve_points": int(curve.z_grid.size),
        },
    )


def cmd_simulate(config: RunConfig, args) -> None:
    shapes = parse_shape_grid(config.shape_grid_spec) if config.shape_grid_spec else None
    study = StudyConfig(
        distribution=args.distribution,
        n=args.n,
        budget=config.budget(),
        replications=args.reps,
        error_grid_size=args.error_grid_size,
        base_seed=config.seed,
        shape_grid=tuple(shapes) if shapes is not None else None,
        estimate_grid_size=config.grid_size,
        bias_constant=config.bias_value(),
        reselect_per_replication=not args.fast,
    )
    report = run_study(study)
    _write_csv(
        config.output_prefix + ".reps.csv",
        ["rep", "S_e", "L_e", "O_e", "theta_star", "eta_star"],
        [
            (r.rep, r.sampling_error, r.laplace_error, r.optimal_error,
             r.theta_star, r.eta_star)
            for r in report.trace
        ],
    )
    _write_report(config.output_prefix + ".json", config, report.to_dict())


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gammaobf",
        description="Select, apply, and invert optimal Gamma obfuscation noise.",
    )
    parser.add_argument("--version", action="version", version=f"gammaobf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", required=True, help="output path prefix")
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: fresh OS entropy, recorded)")
    common.add_argument("--q", type=float, default=0.75,
                        help="required deviation multiple of sd(X) (default 0.75)")
    common.add_argument("--delta", type=float, default=0.9,
                        help="conditional probability level (default 0.9)")
    common.add_argument("--grid-size", type=int, default=201,
                        help="output grid size (default 201)")
    common.add_argument("--bias-constant", choices=sorted(_BIAS_CONSTANTS),
                        default="paper",
                        help="AIMSE bias constant: 11520 (paper) or 36 (kernel)")

    withinput = argparse.ArgumentParser(add_help=False)
    withinput.add_argument("--input", required=True,
                           help="single-column numeric CSV")

    noise_args = argparse.ArgumentParser(add_help=False)
    noise_args.add_argument("--theta", type=float, required=True,
                            help="noise shape parameter (0 < theta <= 1)")
    noise_args.add_argument("--eta", type=float, required=True,
                            help="noise scale parameter (> 0)")

    p = sub.add_parser("select", parents=[common, withinput],
                       help="sweep shapes, calibrate scales, pick the optimum")
    p.add_argument("--theta-grid", default=None, metavar="START:STOP:STEP",
                   help="shape grid (default 0.05:1.0:0.05)")
    p.set_defaults(func=cmd_select, bias_constant="kernel")

    p = sub.add_parser("obfuscate", parents=[common, withinput, noise_args],
                       help="add two-sided Gamma noise to the data column")
    p.set_defaults(func=cmd_obfuscate)

    p = sub.add_parser("estimate", parents=[common, withinput, noise_args],
                       help="deconvolution density/CDF estimate from masked data")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("measure", parents=[common, withinput, noise_args],
                       help="empirical confidentiality measure of the true data")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("simulate", parents=[common],
                       help="Monte Carlo error study on a reference law")
    p.add_argument("--distribution", required=True,
                   help=f"one of: {', '.join(DISTRIBUTIONS)}")
    p.add_argument("--n", type=int, default=1000, help="sample size (default 1000)")
    p.add_argument("--reps", type=int, default=100,
                   help="replications (default 100)")
    p.add_argument("--error-grid-size", type=int, default=201,
                   help="CDF-error grid size (default 201)")
    p.add_argument("--theta-grid", default=None, metavar="START:STOP:STEP")
    p.add_argument("--fast", action="store_true",
                   help="select the optimal pair once (first replication) and reuse it")
    p.set_defaults(func=cmd_simulate)
    return parser


def _run_config(args) -> RunConfig:
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    extra = {}
    for key in ("theta", "eta", "distribution", "n", "reps", "error_grid_size", "fast"):
        if hasattr(args, key):
            extra[key] = getattr(args, key)
    return RunConfig(
        command=args.command,
        input_path=getattr(args, "input", None),
        output_prefix=_output_prefix(args.output),
        q=args.q,
        delta=args.delta,
        shape_grid_spec=getattr(args, "theta_grid", None),
        seed=seed,
        grid_size=args.grid_size,
        bias_constant=args.bias_constant,
        extra=extra,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _run_config(args)
        args.func(config, args)
    except ParameterError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except GammaObfError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
