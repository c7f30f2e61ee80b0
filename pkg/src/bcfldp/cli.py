"""Command-line front end: every library capability as a CSV/JSON table.

Each run writes its table plus a manifest (the full configuration and the
library version). ``bcfldp replay MANIFEST`` regenerates the table from the
manifest alone. Exit codes: 0 success, 2 bad configuration, 3 resource
budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .deviation import DeviationQuery, bn_measure, measure, rate_fit
from .digitstats import get_psi, three_means
from .errors import BudgetExceededError
from .exact import cylinder, digits, thaler_sequence
from .interval import parse_interval, parse_number
from .measures import theorem_c_sequence
from .thermo import lambda_curve, lyapunov_spectrum, minimizer_scan

OUTPUT_DIR_ENV = "BCFLDP_OUTPUT_DIR"
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    pass


# -- value formatting ----------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, type(None))):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)) and math.isfinite(float(value)):
        return float(format(float(value), ".17g"))
    return fmt(value)


def render(rows: list, columns: list, fmt_name: str, manifest: dict) -> str:
    if fmt_name == "json":
        body = {"manifest": manifest,
                "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows]}
        return json.dumps(body, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


# -- argument parsing helpers ----------------------------------------------------

def parse_range(text: str) -> list:
    """'5' -> [5]; '2:12' -> 2..12; '3:500:10' -> stepped; '1,4,9' -> list."""
    s = str(text).strip()
    try:
        if ":" in s:
            parts = [int(p) for p in s.split(":")]
            step = parts[2] if len(parts) == 3 else 1
            return list(range(parts[0], parts[1] + 1, step))
        return [int(p) for p in s.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse integer range {text!r}") from None


def parse_grid(text):
    """'a:b:count' (linear) or a comma list of reals; None keeps the default."""
    if text is None:
        return None
    s = str(text).strip()
    try:
        if ":" in s:
            a, b, count = s.split(":")
            return [float(x) for x in np.linspace(float(parse_number(a)), float(parse_number(b)), int(count))]
        return [float(parse_number(p)) for p in s.split(",")]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse grid {text!r}") from None


def _psi(name):
    try:
        return get_psi(name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _interval(text):
    try:
        return parse_interval(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad interval {text!r}: {exc}") from None


# -- subcommands ---------------------------------------------------------------

def cmd_expand(cfg):
    x = Fraction(cfg["x"])
    if not 0 <= x < 1:
        raise ConfigError("x must lie in [0, 1)")
    word = digits(x, cfg["n"])
    rows = []
    for j in range(1, cfg["n"] + 1):
        h, g, a = three_means(x, j)
        rows.append({"j": j, "digit": word[j - 1], "harmonic_mean": h,
                     "geometric_mean": g, "arithmetic_mean": Fraction(sum(word[:j]), j)})
    return rows, ["j", "digit", "harmonic_mean", "geometric_mean", "arithmetic_mean"], {}


def cmd_cylinder(cfg):
    try:
        word = [int(b) for b in cfg["word"].split(",")]
        cyl = cylinder(word)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    row = {"word": " ".join(map(str, cyl.word)), "lo": cyl.lo, "hi": cyl.hi, "length": cyl.length}
    return [row], ["word", "lo", "hi", "length"], {}


def cmd_thaler(cfg):
    if cfg["n"] < 0:
        raise ConfigError("n must be >= 0")
    rows = [{"n": j, "c_n": c} for j, c in enumerate(thaler_sequence(cfg["n"]))]
    return rows, ["n", "c_n"], {}


def cmd_deviation(cfg):
    psi, J = _psi(cfg["psi"]), _interval(cfg["J"])
    method = "exact" if cfg["method"] == "exact" else "monte-carlo"
    rows = []
    for n in parse_range(cfg["n"]):
        try:
            q = DeviationQuery(psi, n, J, method=method, B=cfg["B"], samples=cfg["samples"],
                               seed=cfg["seed"], min_mass=cfg["min_mass"],
                               exact=not cfg["float"], threads=cfg["threads"],
                               max_nodes=cfg["max_nodes"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        est = measure(q)
        rows.append({"n": n, "method": est.method, "lower": est.lower, "upper": est.upper,
                     "tail_unresolved": est.tail_unresolved if method == "exact" else None,
                     "out": est.out, "stderr": est.stderr})
    cols = ["n", "method", "lower", "upper", "tail_unresolved", "out", "stderr"]
    return rows, cols, {}


def cmd_bn_bound(cfg):
    J = _interval(cfg["J"])
    rows, series = [], []
    gamma = cfg["exponent"]
    for n in parse_range(cfg["n"]):
        try:
            res = bn_measure(n, J)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        bound = n ** -gamma / float(J.hi - 2) ** 2
        rows.append({"n": n, "z": res.z, "m": res.m, "lo": res.lo, "hi": res.hi,
                     "measure": res.measure, "measure_float": float(res.measure),
                     "bound": bound, "above_bound": float(res.measure) >= bound,
                     "member": res.member})
        series.append((n, res.measure))
    summary = {}
    if len(series) >= 4:
        fit = rate_fit(series)
        summary = {"exp_rate": fit.exp_rate, "poly_exponent": fit.poly_exponent,
                   "exp_only_slope": fit.exp_only_slope, "poly_only_slope": fit.poly_only_slope,
                   "residual_exp_only": fit.residual_exp_only,
                   "residual_poly_only": fit.residual_poly_only}
    cols = ["n", "z", "m", "lo", "hi", "measure", "measure_float", "bound", "above_bound", "member"]
    return rows, cols, summary


def _thermo_kwargs(cfg):
    kw = {"method": cfg["method"]}
    if cfg.get("max_words"):
        kw["max_words"] = cfg["max_words"]
    return kw


def cmd_pressure(cfg):
    psi = _psi(cfg["psi"])
    grid = parse_grid(cfg["q_grid"])
    curve = lambda_curve(psi, cfg["B"], cfg["depth"], grid, t=cfg["t"], **_thermo_kwargs(cfg))
    rows = [{"q": b.q, "t": b.t, "B": b.B, "depth": b.n, "lower": b.lower, "upper": b.upper,
             "method": b.method, "approximation": b.approximation,
             "partition_sum": b.partition_sum} for b in curve]
    cols = ["q", "t", "B", "depth", "lower", "upper", "method", "approximation", "partition_sum"]
    return rows, cols, {}


def cmd_rate(cfg):
    psi = _psi(cfg["psi"])
    alphas = parse_grid(cfg["alpha_grid"])
    if not alphas:
        raise ConfigError("--alpha-grid is required")
    scan = minimizer_scan(psi, cfg["B"], cfg["depth"], alphas, parse_grid(cfg["q_grid"]),
                          tol=cfg["tol"], **_thermo_kwargs(cfg))
    rows = [{"alpha": s.alpha, "I_lower": s.rate.lower, "I_upper": s.rate.upper,
             "finite": s.rate.finite, "q_star": s.rate.q_star,
             "grid_limited": s.rate.grid_limited, "contains_zero": s.rate.contains_zero,
             "is_zero": s.is_zero} for s in scan]
    cols = ["alpha", "I_lower", "I_upper", "finite", "q_star", "grid_limited",
            "contains_zero", "is_zero"]
    return rows, cols, {"label": "cap-B lower-bound family"}


def cmd_spectrum(cfg):
    alphas = parse_grid(cfg["alpha_grid"])
    if not alphas:
        raise ConfigError("--alpha-grid is required")
    if min(alphas) <= 0:
        raise ConfigError("alpha values must be positive")
    table = lyapunov_spectrum(cfg["B"], cfg["depth"], alphas, parse_grid(cfg["t_grid"]),
                              **_thermo_kwargs(cfg))
    rows = [{"alpha": r.alpha, "lower": r.lower, "upper": r.upper, "in_range": r.in_range,
             "t_star": r.t_star} for r in table.rows]
    return rows, ["alpha", "lower", "upper", "in_range", "t_star"], {}


def cmd_theoremc(cfg):
    psi = _psi(cfg["psi"])
    report = theorem_c_sequence(psi, cfg["K"], n_max=cfg["n_max"], depth=cfg["depth"])
    rows = []
    for s in report.steps:
        st = s.mu_stats
        rows.append({"k": s.k, "n_k": s.n_k, "r_k": s.r_k, "r_clamped": s.r_clamped,
                     "weight3": s.weight3, "chi_target": s.chi_target,
                     "chi_nu_lower": s.nu_stats.chi.lo, "chi_nu_upper": s.nu_stats.chi.hi,
                     "chi_delta": s.delta_chi, "h_mu": st.h,
                     "chi_mu_lower": st.chi.lo, "chi_mu_upper": st.chi.hi,
                     "F_lower": st.F.lo, "F_upper": st.F.hi,
                     "psi_integral": st.psi_integral, "psi_lower_bound": s.psi_lower_bound})
    cols = ["k", "n_k", "r_k", "r_clamped", "weight3", "chi_target", "chi_nu_lower",
            "chi_nu_upper", "chi_delta", "h_mu", "chi_mu_lower", "chi_mu_upper",
            "F_lower", "F_upper", "psi_integral", "psi_lower_bound"]
    summary = {"complete": report.complete, "failed_at": report.failed_at,
               "message": report.message}
    return rows, cols, summary


COMMANDS = {
    "expand": cmd_expand,
    "cylinder": cmd_cylinder,
    "thaler": cmd_thaler,
    "deviation": cmd_deviation,
    "bn-bound": cmd_bn_bound,
    "pressure": cmd_pressure,
    "rate": cmd_rate,
    "spectrum": cmd_spectrum,
    "theoremc": cmd_theoremc,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcfldp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bcfldp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--output", "-o", default=None,
                        help=f"output file (relative paths resolve under ${OUTPUT_DIR_ENV} if set)")
        sp.add_argument("--threads", type=int, default=1, help="worker cap")
        return sp

    s = common(sub.add_parser("expand", help="digits and three means of a rational"))
    s.add_argument("--x", required=True)
    s.add_argument("--n", type=int, required=True)

    s = common(sub.add_parser("cylinder", help="exact endpoints of a digit word's cylinder"))
    s.add_argument("--word", required=True, help="comma-separated digits, e.g. 2,3,2")

    s = common(sub.add_parser("thaler", help="table of c_n"))
    s.add_argument("--n", type=int, required=True)

    def psi_arg(sp, default="identity"):
        sp.add_argument("--psi", default=default,
                        help="identity | logarithm | reciprocal | prime | table:2=1,3=1/2,default=0")

    def thermo_args(sp):
        sp.add_argument("--B", type=int, required=True)
        sp.add_argument("--depth", type=int, required=True)
        sp.add_argument("--method", choices=["auto", "enumerate", "transfer"], default="auto")
        sp.add_argument("--max-words", type=int, default=None)

    s = common(sub.add_parser("deviation", help="exact or Monte Carlo deviation measure"))
    psi_arg(s)
    s.add_argument("--J", required=True)
    s.add_argument("--n", required=True, help="window or range a:b")
    s.add_argument("--method", choices=["exact", "mc", "monte-carlo"], default="exact")
    s.add_argument("--B", type=int, default=20, help="digit cap for exact mode")
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--min-mass", type=float, default=0.0)
    s.add_argument("--float", action="store_true", help="float sums in exact mode")
    s.add_argument("--max-nodes", type=int, default=5_000_000, help="exact-mode tree budget")

    s = common(sub.add_parser("bn-bound", help="explicit B_n sets, their measure and decay fit"))
    s.add_argument("--J", required=True)
    s.add_argument("--n", required=True)
    s.add_argument("--exponent", type=float, default=5.1)

    s = common(sub.add_parser("pressure", help="pressure brackets over a q-grid"))
    psi_arg(s)
    thermo_args(s)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--q-grid", default=None, help="a:b:count or comma list")

    s = common(sub.add_parser("rate", help="rate function table by Legendre transform"))
    psi_arg(s)
    thermo_args(s)
    s.add_argument("--alpha-grid", required=True)
    s.add_argument("--q-grid", default=None)
    s.add_argument("--tol", type=float, default=None)

    s = common(sub.add_parser("spectrum", help="cap-B Lyapunov spectrum"))
    thermo_args(s)
    s.add_argument("--alpha-grid", required=True)
    s.add_argument("--t-grid", default=None)

    s = common(sub.add_parser("theoremc", help="mixture sequence diagnostics"))
    psi_arg(s)
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--n-max", type=int, default=10**6)
    s.add_argument("--depth", type=int, default=12)

    s = sub.add_parser("replay", help="regenerate an output from its manifest")
    s.add_argument("manifest")
    s.add_argument("--output", "-o", default=None)
    return p


_IO_KEYS = ("command", "format", "output")


def _resolve_output(path, command, fmt_name):
    env = os.environ.get(OUTPUT_DIR_ENV)
    if path is None:
        # with the override set, an unnamed output lands in that directory
        return Path(env) / f"{command}.{fmt_name}" if env else None
    p = Path(path)
    if env and not p.is_absolute():
        p = Path(env) / p
    return p


def execute(command: str, cfg: dict, fmt_name: str, output):
    rows, cols, summary = COMMANDS[command](cfg)
    manifest = {"tool": "bcfldp", "version": __version__, "command": command,
                "format": fmt_name, "config": cfg}
    if summary:
        manifest["summary"] = {k: _json_value(v) for k, v in summary.items()}
    text = render(rows, cols, fmt_name, manifest)
    manifest_text = json.dumps(manifest, indent=2) + "\n"
    target = _resolve_output(output, command, fmt_name)
    if target is None:
        sys.stdout.write(text)
        sys.stderr.write(manifest_text)
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        with open(str(target) + ".manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest_text)
    return rows


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            with open(args.manifest, encoding="utf-8") as fh:
                man = json.load(fh)
            command, cfg, fmt_name = man["command"], man["config"], man["format"]
            output = args.output
        else:
            cfg = {k: v for k, v in vars(args).items() if k not in _IO_KEYS}
            command, fmt_name, output = args.command, args.format, args.output
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        execute(command, cfg, fmt_name, output)
    except BudgetExceededError as exc:
        print(f"bcfldp: resource budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"bcfldp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0
