"""
Command-line interface for infodelay.

Every command prints CSV (header row, one record per index) or JSON.

Usage:
    infodelay gamma --kappa 1
    infodelay policy --kappa 1 --m 1
    infodelay table1 --format json
    infodelay impulse --kappa 0.01 --m 100 --n-terms 60
    infodelay metrics --kappa 0.1 --m 10
    infodelay finite --kappa 1 --m 1 --n-max 20
    infodelay scan-m --kappa 0.01 --n 50 --m-max 40
    infodelay simulate --kappa 1 --m 1 --periods 1000000 --seed 7 --memory full

Exit codes: 0 success, 2 invalid input, 3 numerical failure. On failure the
error class name is printed on stderr.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import sys

import click

from . import __version__
from .errors import InfoDelayError
from .finite_memory import msfe_curve, optimal_complexity_scan
from .metrics import TABLE_KAPPAS, TABLE_MS, CostParameters, policy_metrics, relative_cost_table
from .policy_factory import (
    SQRT5,
    arma_approx,
    average_filter,
    ma1_optimal,
    outer_approx_of_inner,
    solve_gamma,
)
from .simulator import FiniteMemory, FullHistory, SimulationConfig, simulate
from .transfer_core import RationalTransfer

__all__ = [
    "cli",
]

POSITIVE = click.FloatRange(min=0.0, min_open=True)


# -- output helpers ----------------------------------------------------------

def format_number(value, precision: int) -> str:
    """
    Format a scalar for CSV output with ``precision`` significant digits.

    Example:
        >>> format_number(0.968409, 3)
        '0.968'
        >>> format_number(True, 6)
        'true'
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, f".{precision}g")
    return "" if value is None else str(value)


def _round_json(obj, precision: int):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(format(obj, f".{precision}g")) if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round_json(v, precision) for k, v in obj.items()}
    return [_round_json(v, precision) for v in obj]


def _write(text: str, output: str | None):
    if output:
        with open(output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def emit(rows: list[dict], fmt: str, precision: int, output: str | None, document=None):
    """Write ``rows`` as CSV, or ``document`` (default: the rows) as JSON."""
    if fmt == "json":
        payload = rows if document is None else document
        _write(json.dumps(_round_json(payload, precision), indent=2) + "\n", output)
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys()) if rows else []
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(row.get(k), precision) for k in header])
    _write(buf.getvalue(), output)


def output_options(default_precision: int = 6):
    def wrap(fn):
        fn = click.option("--output", "-o", type=click.Path(dir_okay=False, writable=True),
                          default=None, help="Write to a file instead of stdout.")(fn)
        fn = click.option("--precision", type=click.IntRange(1, 17), default=default_precision,
                          show_default=True, help="Significant digits (decimals for table1).")(fn)
        fn = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                          show_default=True, help="Output format.")(fn)
        return fn
    return wrap


def handle_errors(fn):
    """Map package errors to exit codes: 2 for bad input, 3 for numerical failure."""
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InfoDelayError as exc:
            code = 3 if isinstance(exc, (RuntimeError, ArithmeticError)) else 2
            click.echo(f"Error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(code)
    return inner


def build_family(family: str, kappa: float, m: int) -> RationalTransfer:
    if family == "arma":
        return arma_approx(kappa, m)
    if family == "ma1":
        if kappa < SQRT5:
            raise click.BadParameter("the MA(1) optimum needs kappa >= sqrt(5)", param_hint="--kappa")
        return ma1_optimal(kappa)
    if family == "outer":
        g = solve_gamma(kappa).gamma
        return outer_approx_of_inner(([-g, g], [1.0, 1.0]), max(m, 1))
    if family == "average":
        return average_filter()
    return RationalTransfer()


FAMILIES = click.Choice(["arma", "ma1", "outer", "average", "identity"])


# -- commands ----------------------------------------------------------------

@click.group()
@click.version_option(__version__, prog_name="infodelay")
def cli():
    """Information-delay ordering policies: construction, costs and simulation."""


@cli.command()
@click.option("--kappa", type=POSITIVE, required=True, help="Cost ratio K_r/K_s.")
@output_options()
@handle_errors
def gamma(kappa, fmt, precision, output):
    """Delay intensity solving kappa^2 = (5 + 2 gamma) exp(-2 gamma)."""
    sol = solve_gamma(kappa)
    emit([{"kappa": sol.kappa, "gamma": sol.gamma, "residual": sol.residual}], fmt, precision, output,
         document={"kappa": sol.kappa, "gamma": sol.gamma, "residual": sol.residual})


@cli.command()
@click.option("--kappa", type=POSITIVE, required=True)
@click.option("--m", type=click.IntRange(min=0), default=1, show_default=True, help="AR order.")
@click.option("--family", type=FAMILIES, default="arma", show_default=True)
@output_options()
@handle_errors
def policy(kappa, m, family, fmt, precision, output):
    """ARMA coefficients, group delay and invertibility of a policy.

    Convention: psi(z) = (sum_j ma_j z^j) / (1 + sum_j ar_j z^j), so the
    order recursion reads O_t = sum_j ma_j D_{t-j} - sum_j ar_j O_{t-j}.
    """
    tf = build_family(family, kappa, m)
    den = tf.denominator.coeffs
    ma = [float(c) / den[0] for c in tf.numerator.coeffs]
    ar = [float(c) / den[0] for c in den[1:]]
    gd, inv = tf.group_delay(), tf.is_invertible
    rows = [{"quantity": "ma", "index": j, "value": v} for j, v in enumerate(ma)]
    rows += [{"quantity": "ar", "index": j + 1, "value": v} for j, v in enumerate(ar)]
    rows += [{"quantity": "group_delay", "index": "", "value": gd},
             {"quantity": "invertible", "index": "", "value": inv}]
    emit(rows, fmt, precision, output,
         document={"kappa": kappa, "m": m, "family": family, "ma": ma, "ar": ar,
                   "group_delay": gd, "invertible": inv})


@cli.command()
@click.option("--gamma-rule", type=click.Choice(["tuned", "kappa"]), default="tuned", show_default=True,
              help="Per-cell cost-minimizing delay intensity, or gamma_kappa for every m.")
@output_options(default_precision=3)
@handle_errors
def table1(gamma_rule, fmt, precision, output):
    """Relative cost C(psi^m)/C* over the standard kappa x m grid."""
    table = relative_cost_table(TABLE_KAPPAS, TABLE_MS, gamma_rule=gamma_rule)
    if fmt == "json":
        doc = {"kappas": list(TABLE_KAPPAS), "ms": list(TABLE_MS),
               "values": [[round(float(v), precision) for v in row] for row in table]}
        _write(json.dumps(doc, indent=2) + "\n", output)
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kappa"] + [f"m={m}" for m in TABLE_MS])
    for k, row in zip(TABLE_KAPPAS, table):
        writer.writerow([format(k, "g")] + [f"{v:.{precision}f}" for v in row])
    _write(buf.getvalue(), output)


@cli.command()
@click.option("--kappa", type=POSITIVE, required=True)
@click.option("--m", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--n-terms", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--family", type=FAMILIES, default="arma", show_default=True)
@output_options()
@handle_errors
def impulse(kappa, m, n_terms, family, fmt, precision, output):
    """Impulse-response coefficients psi_0 .. psi_{n-1}."""
    psi = build_family(family, kappa, m).impulse_response(n_terms)
    rows = [{"lag": j, "psi": float(v)} for j, v in enumerate(psi)]
    emit(rows, fmt, precision, output)


@cli.command()
@click.option("--kappa", type=POSITIVE, required=True)
@click.option("--m", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--family", type=FAMILIES, default="arma", show_default=True)
@output_options()
@handle_errors
def metrics(kappa, m, family, fmt, precision, output):
    """Inventory variance, supplier MSFE, group delay and costs of one policy."""
    tf = build_family(family, kappa, m)
    method = "outer" if tf.is_invertible else "quadrature"
    rec = {"m": m, "family": family, "gamma": solve_gamma(kappa).gamma}
    rec.update(policy_metrics(tf, kappa, msfe_method=method).to_dict())
    emit([rec], fmt, precision, output, document=rec)


@cli.command()
@click.option("--kappa", type=POSITIVE, required=True)
@click.option("--m", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--n-max", type=click.IntRange(min=0), default=20, show_default=True)
@click.option("--family", type=FAMILIES, default="arma", show_default=True)
@output_options()
@handle_errors
def finite(kappa, m, n_max, family, fmt, precision, output):
    """Forecast error variance with memory n = 0..n_max."""
    curve = msfe_curve(build_family(family, kappa, m), n_max)
    rows = [{"n": n, "msfe": float(v)} for n, v in enumerate(curve)]
    emit(rows, fmt, precision, output)


@cli.command("scan-m")
@click.option("--kappa", type=POSITIVE, required=True)
@click.option("--n", type=click.IntRange(min=0), required=True, help="Supplier memory.")
@click.option("--m-max", type=click.IntRange(min=1), default=40, show_default=True)
@output_options()
@handle_errors
def scan_m(kappa, n, m_max, fmt, precision, output):
    """Relative finite-memory cost over AR orders m = 0..m_max."""
    scan = optimal_complexity_scan(kappa, n, m_max)
    rows = [{"m": m, "relative_cost": float(c), "is_min": m == scan.m_star}
            for m, c in enumerate(scan.cost_curve)]
    emit(rows, fmt, precision, output,
         document={"kappa": kappa, "n": n, "m_star": scan.m_star,
                   "relative_cost": [float(c) for c in scan.cost_curve]})


def _parse_memory(ctx, param, value):
    if value == "full":
        return FullHistory()
    try:
        n = int(value)
    except ValueError:
        raise click.BadParameter("use 'full' or a nonnegative integer")
    if n < 0:
        raise click.BadParameter("memory must be nonnegative")
    return FiniteMemory(n)


@cli.command("simulate")
@click.option("--kappa", type=POSITIVE, default=1.0, show_default=True)
@click.option("--m", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--family", type=FAMILIES, default="arma", show_default=True)
@click.option("--periods", type=click.IntRange(min=100), default=1_000_000, show_default=True)
@click.option("--burn-in", type=click.IntRange(min=1), default=None, help="Default max(1000, 50 x decay length).")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--memory", default="full", callback=_parse_memory, show_default=True,
              help="'full' or the number n of extra past orders used.")
@click.option("--batches", type=click.IntRange(min=30), default=100, show_default=True)
@click.option("--h-r", type=POSITIVE, default=1.0, show_default=True)
@click.option("--b-r", type=POSITIVE, default=1.0, show_default=True)
@click.option("--h-s", type=POSITIVE, default=1.0, show_default=True)
@click.option("--b-s", type=POSITIVE, default=1.0, show_default=True)
@click.option("--mean-demand", type=float, default=10.0, show_default=True)
@click.option("--shock-std", type=POSITIVE, default=1.0, show_default=True)
@output_options()
@handle_errors
def simulate_cmd(kappa, m, family, periods, burn_in, seed, memory, batches, h_r, b_r, h_s, b_s,
                 mean_demand, shock_std, fmt, precision, output):
    """Monte Carlo run of the chain with batch-means standard errors."""
    cfg = SimulationConfig(
        policy=build_family(family, kappa, m), mean_demand=mean_demand, shock_std=shock_std,
        periods=periods, burn_in=burn_in, seed=seed, forecaster=memory,
        cost_params=CostParameters(h_r, b_r, h_s, b_s), n_batches=batches,
    )
    res = simulate(cfg).to_dict()
    flat = {}
    for k, v in res.items():
        if isinstance(v, list):
            flat.update({f"{k}_{j}": x for j, x in enumerate(v)})
        else:
            flat[k] = v
    emit([flat], fmt, precision, output, document=res)


if __name__ == "__main__":
    cli()
