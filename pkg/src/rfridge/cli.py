"""Command-line front end: sweeps over theory curves, simulations, and comparisons.

Five subcommands share one flat record layout so their outputs concatenate and
join cleanly:

  stats     activation moment statistics
  theory    asymptotic curves (general / ridgeless / wide / lsamp variants)
  simulate  finite-dimensional Monte Carlo
  compare   simulation and theory side by side with z-scores
  phase     optimal-penalty phase quantities and verdict

Shape parameters are given either as finite sizes (--d --n --N --lambda) or as
asymptotic ratios (--psi1 --psi2 --lambda-bar); mixing the two groups is an
error.  The penalty conversion lambda_bar = lambda / mu_star_sq happens here,
at the CLI boundary, exactly once; in asymptotic mode the regularization axis
already is lambda_bar.  Exit codes: 0 success, 2 argument or domain error,
3 numerical failure, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .activations import (
    Activation,
    DegenerateActivation,
    QuadratureFailure,
    hermite_stats,
)
from .risk import (
    ChiDisagreement,
    DenominatorVanishes,
    TargetSpec,
    ThresholdSingularity,
    risk_general,
    risk_large_sample,
    risk_ridgeless,
    risk_wide,
    test_error,
    wide_phase,
)
from .selfconsistent import (
    InconsistentChi,
    InvariantViolation,
    NoConvergence,
    RootSelectionAmbiguous,
    SingularDenominator,
)
from .simulate import (
    SimConfig,
    TargetKind,
    aggregate,
    nonlinear_power,
    run_trials,
)
from .training import training_theory

NAN = float("nan")
INF = float("inf")

THREADS_ENV = "RFRIDGE_THREADS"

# one fixed, ordered layout per table kind; every writer and reader uses these
COLUMNS = (
    "command",
    "variant",
    "model",
    "target",
    "activation",
    "d",
    "n",
    "N",
    "lambda",
    "psi1",
    "psi2",
    "lambda_bar",
    "zeta_sq",
    "mu_star_sq",
    "f1_sq",
    "fstar_sq",
    "tau_sq",
    "rho",
    "theory_bias_B",
    "theory_var_V",
    "theory_risk_R",
    "theory_test_error",
    "theory_train_error",
    "theory_norm_msq",
    "sim_test_error_mean",
    "sim_test_error_sem",
    "sim_train_error_mean",
    "sim_train_error_sem",
    "sim_penalty_mean",
    "sim_penalty_sem",
    "sim_norm_sq_mean",
    "sim_norm_sq_sem",
    "sim_norm_msq_mean",
    "sim_norm_msq_sem",
    "trials",
    "z_test_error",
    "z_train_error",
    "z_norm_msq",
    "seed",
    "tool_version",
)

STATS_COLUMNS = (
    "command",
    "activation",
    "order",
    "mu0",
    "mu1",
    "mu_star_sq",
    "zeta",
    "zeta_sq",
    "quadrature_gap",
    "converged",
    "tool_version",
)

PHASE_COLUMNS = (
    "command",
    "zeta_sq",
    "psi2",
    "rho",
    "omega0",
    "omega1",
    "rho_star",
    "zeta_star_sq",
    "lambda_star",
    "verdict",
    "tool_version",
)

# a record is a plain dict covering one column tuple; unknown numerics are nan
OutputRecord = dict


def new_record(columns=COLUMNS, **fields) -> OutputRecord:
    rec = {c: NAN for c in columns}
    for c in ("command", "variant", "model", "target", "activation", "verdict"):
        if c in rec:
            rec[c] = ""
    rec["tool_version"] = __version__
    for k, v in fields.items():
        if k not in rec:
            raise KeyError(f"unknown column {k!r}")
        rec[k] = v
    return rec


def format_value(v) -> str:
    """CSV cell: 17 significant digits, '.' decimal, 'inf'/'nan' literals."""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _parse_cell(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_records(records, columns, fmt: str, out_path: str | None) -> None:
    """Serialize records to CSV (header mandatory) or JSONL, to a file or stdout."""
    buffer = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([format_value(rec[c]) for c in columns])
    elif fmt == "jsonl":
        for rec in records:
            row = {}
            for c in columns:
                v = rec[c]
                if isinstance(v, (bool, np.bool_)):
                    v = int(v)
                elif isinstance(v, (int, np.integer)):
                    v = int(v)
                elif isinstance(v, float) and not math.isfinite(v):
                    v = format_value(v)  # strict JSON has no inf/nan literals
                elif isinstance(v, (float, np.floating)):
                    v = float(v)
                row[c] = v
            buffer.write(json.dumps(row) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    text = buffer.getvalue()
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_records(path_or_text: str, from_text: bool = False) -> list[OutputRecord]:
    """Parse a CSV written by write_records back into records."""
    if from_text:
        text = path_or_text
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV input")
    header = rows[0]
    return [dict(zip(header, map(_parse_cell, row))) for row in rows[1:]]


def records_equal(a: OutputRecord, b: OutputRecord) -> bool:
    """Dict equality where nan compares equal to nan."""
    if a.keys() != b.keys():
        return False
    for k in a:
        va, vb = a[k], b[k]
        if isinstance(va, float) and isinstance(vb, (int, float)):
            if math.isnan(va) and math.isnan(float(vb)):
                continue
            if float(va) != float(vb):
                return False
        elif va != vb:
            return False
    return True


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Grid for the swept parameter, strictly increasing."""

    param: str
    values: tuple[float, ...]

    PARAMS = ("psi1", "psi2", "lambda", "rho")

    def __post_init__(self):
        if self.param not in self.PARAMS:
            raise ValueError(f"swept parameter must be one of {self.PARAMS}, got {self.param!r}")
        if len(self.values) == 0:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"sweep grid must be strictly increasing, got {self.values}")

    @classmethod
    def from_args(cls, args) -> "SweepSpec | None":
        if args.sweep is None:
            if args.grid is not None or args.min is not None or args.max is not None:
                raise ValueError("--grid/--min/--max given without --sweep")
            return None
        if args.grid is not None:
            if args.min is not None or args.max is not None or args.points is not None:
                raise ValueError("give either --grid or --min/--max/--points, not both")
            values = tuple(float(tok) for tok in args.grid.split(","))
        else:
            if args.min is None or args.max is None or args.points is None:
                raise ValueError("a sweep needs --grid or all of --min/--max/--points")
            if args.points < 1:
                raise ValueError(f"--points must be >= 1, got {args.points}")
            if args.spacing == "log":
                if args.min <= 0:
                    raise ValueError("log spacing needs --min > 0")
                values = tuple(np.geomspace(args.min, args.max, args.points))
            else:
                values = tuple(np.linspace(args.min, args.max, args.points))
        return cls(param=args.sweep, values=values)


def _add_output_opts(p):
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def _add_activation_opts(p):
    p.add_argument(
        "--activation",
        default="relu",
        help="relu | identity | shifted_relu:C | custom (with --expr-file)",
    )
    p.add_argument("--expr-file", default=None, help="file with a numpy expression in u")
    p.add_argument("--breakpoints", default=None, help="comma-separated kink locations of a custom activation")
    p.add_argument("--order", type=int, default=64, help="quadrature order for custom activations")


def _add_shape_opts(p):
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--psi1", type=float, default=None)
    p.add_argument("--psi2", type=float, default=None)
    p.add_argument("--lambda-bar", dest="lambda_bar", type=float, default=None)


def _add_sweep_opts(p):
    p.add_argument("--sweep", choices=SweepSpec.PARAMS, default=None)
    p.add_argument("--grid", default=None, help="comma-separated values for the swept parameter")
    p.add_argument("--min", type=float, default=None)
    p.add_argument("--max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")


def parse_activation(args) -> Activation:
    spec = args.activation
    if spec == "relu":
        return Activation.relu()
    if spec == "identity":
        return Activation.identity()
    if spec.startswith("shifted_relu:"):
        return Activation.shifted_relu(float(spec.split(":", 1)[1]))
    if spec == "custom":
        if args.expr_file is None:
            raise ValueError("--activation custom needs --expr-file")
        with open(args.expr_file, encoding="utf-8") as fh:
            expr = fh.read().strip()
        code = compile(expr, args.expr_file, "eval")
        breakpoints = ()
        if getattr(args, "breakpoints", None):
            breakpoints = tuple(float(t) for t in args.breakpoints.split(","))
        return Activation.custom(
            lambda u, _code=code: eval(_code, {"np": np, "math": math, "u": u}),
            breakpoints=breakpoints,
        )
    raise ValueError(f"unknown activation {spec!r}")


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def _mode(args, parser, command: str) -> str:
    finite = [args.d, args.n, args.N, args.lam]
    asym = [args.psi1, args.psi2, args.lambda_bar]
    has_finite = any(v is not None for v in finite)
    has_asym = any(v is not None for v in asym)
    if has_finite and has_asym:
        parser.error("give either finite sizes (--d --n --N --lambda) or ratios "
                     "(--psi1 --psi2 --lambda-bar), not both")
    if command in ("simulate", "compare"):
        if not has_finite:
            parser.error(f"{command} needs finite sizes --d --n --N --lambda")
        return "finite"
    if not has_finite and not has_asym:
        parser.error("no shape parameters given")
    return "finite" if has_finite else "asym"


def _require(parser, cond: bool, message: str):
    if not cond:
        parser.error(message)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_stats(args, parser) -> int:
    activation = parse_activation(args)
    stats = hermite_stats(activation, order=args.order)
    rec = new_record(
        STATS_COLUMNS,
        command="stats",
        activation=activation.label(),
        order=args.order,
        mu0=stats.mu0,
        mu1=stats.mu1,
        mu_star_sq=stats.mu_star_sq,
        zeta=stats.zeta,
        zeta_sq=stats.zeta_sq,
        quadrature_gap=NAN if stats.quadrature_gap is None else stats.quadrature_gap,
        converged=1,
    )
    write_records([rec], STATS_COLUMNS, args.format, args.out)
    return 0


def _finite_point(args, sweep_param, value):
    """Realized (d, n, N, lam) for one grid point in finite mode."""
    d = args.d
    n = args.n
    N = args.N
    lam = args.lam
    if sweep_param == "psi1":
        N = int(round(value * d))
    elif sweep_param == "psi2":
        n = int(round(value * d))
    elif sweep_param == "lambda":
        lam = value
    return d, n, N, lam


def cmd_theory(args, parser) -> int:
    mode = _mode(args, parser, "theory")
    sweep = SweepSpec.from_args(args)
    if sweep is not None and sweep.param == "rho" and args.rho is not None:
        parser.error("--rho conflicts with sweeping rho")

    if args.zeta_sq is not None:
        _require(parser, mode == "asym",
                 "--zeta-sq only makes sense with ratio flags; finite sizes need an "
                 "activation for the penalty conversion")
        zeta_sq, mu_star_sq = args.zeta_sq, None
        act_label = ""
    else:
        stats = hermite_stats(parse_activation(args), order=args.order)
        zeta_sq, mu_star_sq = stats.zeta_sq, stats.mu_star_sq
        act_label = parse_activation(args).label()

    powers = None
    if args.f1_sq is not None or args.fstar_sq is not None or args.tau_sq_theory is not None:
        powers = TargetSpec(
            f1_sq=args.f1_sq if args.f1_sq is not None else 0.0,
            fstar_sq=args.fstar_sq or 0.0,
            tau_sq=args.tau_sq_theory or 0.0,
        )

    grid = sweep.values if sweep is not None else (None,)
    records = []
    for value in grid:
        rho = args.rho if powers is None else powers.rho
        if sweep is not None and sweep.param == "rho":
            rho = value
        rec = new_record(
            COLUMNS,
            command="theory",
            variant=args.variant,
            activation=act_label,
            zeta_sq=zeta_sq,
            rho=rho if rho is not None else NAN,
            seed=NAN,
        )
        if mu_star_sq is not None:
            rec["mu_star_sq"] = mu_star_sq
        if powers is not None:
            rec["f1_sq"] = powers.f1_sq
            rec["fstar_sq"] = powers.fstar_sq
            rec["tau_sq"] = powers.tau_sq

        if mode == "finite":
            sweep_param = sweep.param if sweep is not None else None
            d, n, N, lam = _finite_point(args, sweep_param, value)
            _require(parser, d is not None and n is not None, "--d and --n are required")
            _require(parser, N is not None or args.variant == "wide",
                     "--N is required (or sweep psi1)")
            _require(parser, lam is not None, "--lambda is required (or sweep lambda)")
            psi1 = N / d if N is not None else NAN
            psi2 = n / d
            lambda_bar = lam / mu_star_sq
            rec.update({"d": d, "n": n, "lambda": lam})
            if N is not None:
                rec["N"] = N
        else:
            psi1, psi2, lambda_bar = args.psi1, args.psi2, args.lambda_bar
            if sweep is not None:
                if sweep.param == "psi1":
                    psi1 = value
                elif sweep.param == "psi2":
                    psi2 = value
                elif sweep.param == "lambda":
                    lambda_bar = value
        rec["psi1"] = psi1 if psi1 is not None else NAN
        rec["psi2"] = psi2 if psi2 is not None else NAN
        rec["lambda_bar"] = lambda_bar if lambda_bar is not None else NAN

        if args.variant == "general":
            _require(parser, psi1 is not None and psi2 is not None and lambda_bar is not None,
                     "general variant needs psi1, psi2 and the penalty")
            dec = risk_general(rho if rho is not None else INF, zeta_sq, psi1, psi2, lambda_bar)
        elif args.variant == "ridgeless":
            _require(parser, psi1 is not None and psi2 is not None,
                     "ridgeless variant needs psi1 and psi2")
            dec = risk_ridgeless(zeta_sq, psi1, psi2)
        elif args.variant == "wide":
            _require(parser, psi2 is not None and lambda_bar is not None,
                     "wide variant needs psi2 and the penalty")
            dec = risk_wide(zeta_sq, psi2, lambda_bar)
        else:
            _require(parser, psi1 is not None and lambda_bar is not None,
                     "lsamp variant needs psi1 and the penalty")
            dec = risk_large_sample(zeta_sq, psi1, lambda_bar)

        rec["theory_bias_B"] = dec.bias_B
        rec["theory_var_V"] = dec.var_V
        if rho is not None:
            rec["theory_risk_R"] = dec.risk_at(rho)
        if powers is not None:
            rec["theory_test_error"] = (
                powers.f1_sq * dec.bias_B
                + (powers.tau_sq + powers.fstar_sq) * dec.var_V
                + powers.fstar_sq
            )
            if args.variant == "general":
                asym = training_theory(powers.rho, zeta_sq, psi1, psi2, lambda_bar)
                rec["theory_train_error"] = powers.total_power * asym.L
                rec["theory_norm_msq"] = powers.total_power * asym.A
        records.append(rec)
    write_records(records, COLUMNS, args.format, args.out)
    return 0


def _target_from_args(args) -> TargetKind:
    if args.target == "linear":
        return TargetKind.linear(args.beta_norm)
    if args.beta_norm != 1.0:
        raise ValueError("--beta-norm applies to the linear target only")
    return TargetKind(args.target)


def _simulate_grid(args, parser, command):
    _mode(args, parser, command)
    sweep = SweepSpec.from_args(args)
    if sweep is not None and sweep.param == "rho":
        parser.error(f"{command} cannot sweep rho; sweep psi1, psi2 or lambda")
    _require(parser, args.d is not None, "--d is required")
    _require(parser, args.n is not None or (sweep and sweep.param == "psi2"),
             "--n is required (or sweep psi2)")
    _require(parser, args.N is not None or (sweep and sweep.param == "psi1"),
             "--N is required (or sweep psi1)")
    _require(parser, args.lam is not None or (sweep and sweep.param == "lambda"),
             "--lambda is required (or sweep lambda)")
    target = _target_from_args(args)
    activation = parse_activation(args)
    grid = sweep.values if sweep is not None else (None,)
    sweep_param = sweep.param if sweep is not None else None
    configs = []
    for value in grid:
        d, n, N, lam = _finite_point(args, sweep_param, value)
        configs.append(
            SimConfig(
                d=d,
                n=n,
                N=N,
                lam=lam,
                activation=activation,
                target=target,
                tau_sq=args.tau_sq,
                trials=args.trials,
                seed=args.seed,
                n_test=args.n_test,
                model=args.model,
            )
        )
    return configs, activation, target


def _sim_fields(rec, config, agg, mu_star_sq):
    rec.update(
        {
            "command": rec["command"],
            "model": config.model,
            "target": config.target.name,
            "d": config.d,
            "n": config.n,
            "N": config.N,
            "lambda": config.lam,
            "psi1": config.psi1_d,
            "psi2": config.psi2_d,
            "tau_sq": config.tau_sq,
            "f1_sq": config.target.f1_sq,
            "fstar_sq": 0.0 if config.model == "gaussian_covariates"
            else nonlinear_power(config.target, config.d),
            "trials": agg.n_trials,
            "seed": config.seed,
            "sim_test_error_mean": agg.test_error_mean,
            "sim_test_error_sem": agg.test_error_sem,
            "sim_train_error_mean": agg.train_error_mean,
            "sim_train_error_sem": agg.train_error_sem,
            "sim_penalty_mean": agg.penalty_mean,
            "sim_penalty_sem": agg.penalty_sem,
            "sim_norm_sq_mean": agg.coef_norm_sq_mean,
            "sim_norm_sq_sem": agg.coef_norm_sq_sem,
            "sim_norm_msq_mean": mu_star_sq * agg.coef_norm_sq_mean,
            "sim_norm_msq_sem": mu_star_sq * agg.coef_norm_sq_sem,
        }
    )
    rec["rho"] = TargetSpec(
        f1_sq=rec["f1_sq"], fstar_sq=rec["fstar_sq"], tau_sq=rec["tau_sq"]
    ).rho


def cmd_simulate(args, parser) -> int:
    configs, activation, _target = _simulate_grid(args, parser, "simulate")
    threads = _threads(args)
    stats = hermite_stats(activation, order=args.order)
    records = []
    for config in configs:
        agg = aggregate(run_trials(config, threads))
        rec = new_record(COLUMNS, command="simulate", activation=activation.label())
        rec["mu_star_sq"] = stats.mu_star_sq
        rec["zeta_sq"] = stats.zeta_sq
        rec["lambda_bar"] = config.lam / stats.mu_star_sq
        _sim_fields(rec, config, agg, stats.mu_star_sq)
        records.append(rec)
    write_records(records, COLUMNS, args.format, args.out)
    return 0


def _z(diff: float, sem: float) -> float:
    if sem > 0.0:
        return diff / sem
    return 0.0 if diff == 0.0 else math.copysign(INF, diff)


def cmd_compare(args, parser) -> int:
    configs, activation, target = _simulate_grid(args, parser, "compare")
    threads = _threads(args)
    stats = hermite_stats(activation, order=args.order)
    records = []
    for config in configs:
        agg = aggregate(run_trials(config, threads))
        variant = "general" if config.lam > 0.0 else "ridgeless"
        rec = new_record(COLUMNS, command="compare", variant=variant,
                         activation=activation.label())
        rec["mu_star_sq"] = stats.mu_star_sq
        rec["zeta_sq"] = stats.zeta_sq
        lambda_bar = config.lam / stats.mu_star_sq
        rec["lambda_bar"] = lambda_bar
        _sim_fields(rec, config, agg, stats.mu_star_sq)

        powers = TargetSpec(
            f1_sq=rec["f1_sq"], fstar_sq=rec["fstar_sq"], tau_sq=rec["tau_sq"]
        )
        psi1, psi2 = config.psi1_d, config.psi2_d
        if config.lam > 0.0:
            dec = risk_general(powers.rho, stats.zeta_sq, psi1, psi2, lambda_bar)
            asym = training_theory(powers.rho, stats.zeta_sq, psi1, psi2, lambda_bar)
            rec["theory_train_error"] = powers.total_power * asym.L
            rec["theory_norm_msq"] = powers.total_power * asym.A
            rec["z_train_error"] = _z(
                agg.train_error_mean - rec["theory_train_error"], agg.train_error_sem
            )
            rec["z_norm_msq"] = _z(
                rec["sim_norm_msq_mean"] - rec["theory_norm_msq"], rec["sim_norm_msq_sem"]
            )
        else:
            dec = risk_ridgeless(stats.zeta_sq, psi1, psi2)
        rec["theory_bias_B"] = dec.bias_B
        rec["theory_var_V"] = dec.var_V
        rec["theory_risk_R"] = dec.risk_at(powers.rho)
        rec["theory_test_error"] = (
            powers.f1_sq * dec.bias_B
            + (powers.tau_sq + powers.fstar_sq) * dec.var_V
            + powers.fstar_sq
        )
        rec["z_test_error"] = _z(
            agg.test_error_mean - rec["theory_test_error"], agg.test_error_sem
        )
        records.append(rec)
    write_records(records, COLUMNS, args.format, args.out)
    return 0


def cmd_phase(args, parser) -> int:
    if args.zeta_sq is None and args.activation is None:
        parser.error("phase needs --zeta-sq or --activation")
    if args.zeta_sq is not None:
        zeta_sq = args.zeta_sq
    else:
        zeta_sq = hermite_stats(parse_activation(args), order=args.order).zeta_sq
    sweep = SweepSpec.from_args(args)
    if sweep is not None and sweep.param not in ("rho", "psi2"):
        parser.error("phase sweeps rho or psi2 only")
    grid = sweep.values if sweep is not None else (None,)
    records = []
    for value in grid:
        rho = args.rho
        psi2 = args.psi2
        if sweep is not None:
            if sweep.param == "rho":
                rho = value
            else:
                psi2 = value
        _require(parser, rho is not None and psi2 is not None,
                 "phase needs --rho and --psi2 (or a sweep over one of them)")
        pq = wide_phase(zeta_sq, psi2, rho)
        verdict = "interior lambda_star" if pq.lambda_star > 0.0 else "optimal lambda_bar = 0"
        records.append(
            new_record(
                PHASE_COLUMNS,
                command="phase",
                zeta_sq=zeta_sq,
                psi2=psi2,
                rho=rho,
                omega0=pq.omega0,
                omega1=pq.omega1,
                rho_star=pq.rho_star,
                zeta_star_sq=pq.zeta_star_sq,
                lambda_star=pq.lambda_star,
                verdict=verdict,
            )
        )
    write_records(records, PHASE_COLUMNS, args.format, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfridge",
        description="Asymptotic theory and Monte Carlo for random-features ridge regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="activation moment statistics")
    _add_activation_opts(p)
    _add_output_opts(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("theory", help="asymptotic risk curves")
    p.add_argument("--variant", choices=("general", "ridgeless", "wide", "lsamp"),
                   default="general")
    p.add_argument("--zeta-sq", dest="zeta_sq", type=float, default=None)
    p.add_argument("--rho", type=float, default=None,
                   help="signal-to-noise ratio (accepts inf)")
    p.add_argument("--f1-sq", dest="f1_sq", type=float, default=None)
    p.add_argument("--fstar-sq", dest="fstar_sq", type=float, default=None)
    p.add_argument("--tau-sq", dest="tau_sq_theory", type=float, default=None)
    _add_activation_opts(p)
    _add_shape_opts(p)
    _add_sweep_opts(p)
    _add_output_opts(p)
    p.set_defaults(func=cmd_theory)

    for name in ("simulate", "compare"):
        p = sub.add_parser(name, help=f"{name} finite-dimensional experiments")
        p.add_argument("--target", choices=("linear", "linear_plus_quad", "linear_plus_cross"),
                       default="linear")
        p.add_argument("--beta-norm", dest="beta_norm", type=float, default=1.0)
        p.add_argument("--tau-sq", dest="tau_sq", type=float, default=0.0)
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n-test", dest="n_test", type=int, default=None)
        p.add_argument("--model", choices=("random_features", "gaussian_covariates"),
                       default="random_features")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default ${THREADS_ENV} or cpu count)")
        _add_activation_opts(p)
        _add_shape_opts(p)
        _add_sweep_opts(p)
        _add_output_opts(p)
        p.set_defaults(func=cmd_simulate if name == "simulate" else cmd_compare)

    p = sub.add_parser("phase", help="optimal-penalty phase quantities")
    p.add_argument("--zeta-sq", dest="zeta_sq", type=float, default=None)
    p.add_argument("--activation", default=None,
                   help="relu | identity | shifted_relu:C | custom (with --expr-file)")
    p.add_argument("--expr-file", default=None)
    p.add_argument("--breakpoints", default=None)
    p.add_argument("--order", type=int, default=64)
    p.add_argument("--psi2", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    _add_sweep_opts(p)
    _add_output_opts(p)
    p.set_defaults(func=cmd_phase)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args, parser)
    except SystemExit as exc:  # parser.error inside a command
        return exc.code if isinstance(exc.code, int) else 2
    except (DegenerateActivation, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (
        NoConvergence,
        RootSelectionAmbiguous,
        QuadratureFailure,
        ThresholdSingularity,
        DenominatorVanishes,
        SingularDenominator,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (InvariantViolation, InconsistentChi, ChiDisagreement) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
