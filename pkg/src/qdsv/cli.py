"""Command-line front end: ``qdsv {price,converge,mc,steady-state,diagnose}``.

Exit codes: 0 on success, 1 on usage errors, 2 when the model parameters
fail validation (the violated constraints are listed on stderr).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels, steady_state
from .errors import InvalidParams, NotMartingale, QdsvError
from .mixture import build_mixture
from .model import Infinite, ModelParams, critical_moments, is_martingale, smile_tail_slopes, validate
from .montecarlo import DEFAULT_STEPS, Measure, Scheme, SimulationConfig, mc_price
from .polynomial import build_generator, generator_csv
from .pricer import (TABLE_COLUMNS, Payoff, PricingRequest, convergence_table, price, table_to_csv,
                     table_to_json)

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2

log = logging.getLogger("qdsv")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default, which is reserved for invalid parameters
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _number(text: str) -> float:
    """A decimal or an exact fraction such as ``1/12``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _number_list(text: str) -> list[float]:
    return [_number(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")


def jsonable(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("+inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, Infinite):
        return str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2) + "\n"


def _csv(header, rows) -> str:
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return f"{v:.17g}"
        return str(v)

    return "\n".join([",".join(header)] + [",".join(fmt(v) for v in r) for r in rows]) + "\n"


# -- argument parsing -------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", required=True, help="ModelParams JSON file")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--output-path", help="write the result here instead of stdout")


def _add_maturity(p: argparse.ArgumentParser, multi: bool) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    conv = _number_list if multi else _number
    g.add_argument("--T", type=conv, help="maturity in years (decimals or fractions like 1/12)")
    g.add_argument("--T-months", type=conv,
                   help="maturity in months, converted as months/12 exactly")


def _add_strike(p: argparse.ArgumentParser, multi: bool) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    conv = _number_list if multi else _number
    g.add_argument("--strike", type=conv)
    g.add_argument("--logK", type=conv, help="log-strike")


def _add_mc(p: argparse.ArgumentParser, default_paths: int) -> None:
    p.add_argument("--mc-paths", type=int, default=default_paths)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--measure", choices=[m.value for m in Measure], default=Measure.QZ.value)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.LOG_EULER.value)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--backend", choices=("cython", "python"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qdsv", description="Polynomial-expansion option pricing for quadratic-drift volatility.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("price", help="expansion price pi_0..pi_n of one option")
    _add_common(p)
    _add_maturity(p, multi=False)
    _add_strike(p, multi=False)
    p.add_argument("--payoff", choices=("call", "put"), default="call")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--K", type=int, default=15)
    p.add_argument("--prune-threshold", type=float, default=None)
    p.add_argument("--implied-vol", action="store_true", help="add Black-Scholes implied vols (calls only)")
    p.add_argument("--dump-generator", metavar="PATH", help="write the generator matrix G_n as CSV")
    p.add_argument("--dump-mixture", metavar="PATH", help="write the mixture components as CSV")

    p = sub.add_parser("converge", help="convergence table against the Monte-Carlo benchmark")
    _add_common(p)
    p.set_defaults(output="csv")
    _add_maturity(p, multi=True)
    _add_strike(p, multi=True)
    p.add_argument("--nmax", type=int, default=10)
    p.add_argument("--d", type=_int_list, default=[1], help="comma-separated mixture dimensions")
    p.add_argument("--K", type=int, default=15)
    p.add_argument("--prune-threshold", type=float, default=None)
    _add_mc(p, default_paths=1_000_000)

    p = sub.add_parser("mc", help="Monte-Carlo price with control variates")
    _add_common(p)
    _add_maturity(p, multi=False)
    _add_strike(p, multi=False)
    p.add_argument("--payoff", choices=("call", "put"), default="call")
    _add_mc(p, default_paths=1_000_000)

    p = sub.add_parser("steady-state", help="stationary volatility law")
    _add_common(p)
    p.add_argument("--grid", type=int, default=0, help="number of density grid points (csv output)")
    p.add_argument("--grid-max", type=float, default=None, help="right end of the density grid")

    p = sub.add_parser("diagnose", help="martingale flag, critical moments, steady state, tail slopes")
    _add_common(p)
    p.add_argument("--T", type=_number, default=1.0, help="maturity for the smile tail slopes")
    return parser


# -- commands ---------------------------------------------------------------------------

def _maturity(args) -> float | list[float]:
    if args.T is not None:
        return args.T
    if isinstance(args.T_months, list):
        return [m / 12.0 for m in args.T_months]
    return args.T_months / 12.0


def _strike(args) -> float | list[float]:
    if args.strike is not None:
        return args.strike
    if isinstance(args.logK, list):
        return [math.exp(k) for k in args.logK]
    return math.exp(args.logK)


def _positive(name: str, values) -> None:
    for v in values if isinstance(values, list) else [values]:
        if not v > 0:
            raise UsageError(f"{name} must be positive, got {v}")


def _mc_config(args) -> SimulationConfig:
    try:
        return SimulationConfig(n_paths=args.mc_paths, n_steps=args.steps, seed=args.seed,
                                measure=args.measure, scheme=args.scheme, threads=args.threads,
                                backend=args.backend)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_price(params: ModelParams, args) -> str:
    T, strike = _maturity(args), _strike(args)
    _positive("T", T)
    _positive("strike", strike)
    payoff = Payoff.call(strike) if args.payoff == "call" else Payoff.put(strike)
    try:
        request = PricingRequest(params, payoff, T, args.n, args.d, args.K, args.prune_threshold)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.dump_generator:
        Path(args.dump_generator).write_text(generator_csv(build_generator(params, args.n)))
    if args.dump_mixture:
        Path(args.dump_mixture).write_text(build_mixture(params, T, args.d, args.K, args.prune_threshold).to_csv())
    res = price(request, with_implied_vol=args.implied_vol)
    if args.output == "csv":
        ivs = res.implied_vol_by_degree or [None] * len(res.pi_by_degree)
        rows = [(n, p, iv, lam) for n, (p, iv, lam) in
                enumerate(zip(res.pi_by_degree, ivs, res.regularization_by_degree))]
        return _csv(("n", "pi_n", "implied_vol", "regularization"), rows)
    return _dump_json({"T": T, "strike": strike, "payoff": args.payoff, **res.__dict__})


def cmd_converge(params: ModelParams, args) -> str:
    maturities, strikes = _maturity(args), _strike(args)
    _positive("T", maturities)
    _positive("strike", strikes)
    if args.nmax < 1 or any(d < 1 for d in args.d) or args.K < 1:
        raise UsageError("need --nmax >= 1, --d >= 1 and --K >= 1")
    mc = _mc_config(args) if args.mc_paths > 0 else None
    rows = convergence_table(params, maturities, strikes, args.nmax, args.d, args.K, args.prune_threshold, mc)
    if args.output == "csv":
        return table_to_csv(rows)
    meta = {"params": params.to_dict(), "mc": None if mc is None else {
        "n_paths": mc.n_paths, "n_steps": mc.n_steps, "seed": mc.seed, "measure": mc.measure.value,
        "scheme": mc.scheme.value, "threads": mc.threads, "backend": mc.backend or kernels.BACKEND}}
    return _dump_json({"metadata": meta, "columns": list(TABLE_COLUMNS), "rows": json.loads(table_to_json(rows))})


def cmd_mc(params: ModelParams, args) -> str:
    T, strike = _maturity(args), _strike(args)
    _positive("T", T)
    _positive("strike", strike)
    cfg = _mc_config(args)
    payoff = Payoff.call(strike) if args.payoff == "call" else Payoff.put(strike)
    est = mc_price(params, payoff, T, cfg)
    if args.output == "csv":
        return _csv(("value", "std_error", "ci99_half_width", "n_paths"),
                    [(est.value, est.std_error, est.ci99_half_width, est.n_paths)])
    out = est.to_dict()
    out["metadata"] = {"T": T, "strike": strike, "payoff": args.payoff, "seed": cfg.seed, "steps": cfg.n_steps,
                       "measure": cfg.measure.value, "scheme": cfg.scheme.value, "threads": cfg.threads,
                       "backend": cfg.backend or kernels.BACKEND}
    return _dump_json(out)


def cmd_steady_state(params: ModelParams, args) -> str:
    cls = steady_state.classify(params)
    out = {"class": cls.tag.value, "xi": cls.xi, "a": cls.a, "b": cls.b}
    try:
        out["mean"] = steady_state.mean(params)
    except QdsvError as exc:
        out["mean"] = None
        out["mean_error"] = str(exc)
    try:
        out["mean_lower_bound"] = steady_state.mean_lower_bound(params)
    except ValueError:
        out["mean_lower_bound"] = None
    if args.output == "csv":
        if args.grid < 2:
            raise UsageError("csv output of steady-state needs --grid >= 2")
        hi = args.grid_max
        if hi is None:
            hi = 5.0 * (out["mean"] if out["mean"] else params.R2)
        grid = np.linspace(0.0, hi, args.grid)
        dens = steady_state.density(params, grid)
        return _csv(("sigma", "density"), [(float(s), float(p)) for s, p in zip(grid, dens)])
    return _dump_json(out)


def cmd_diagnose(params: ModelParams, args) -> str:
    martingale = is_martingale(params)
    out: dict = {"martingale": martingale}
    try:
        cm = critical_moments(params)
        out["critical_moments"] = {"m_minus": cm.m_minus, "m_plus": cm.m_plus}
        left, right = smile_tail_slopes(params, args.T)
        out["tail_slopes"] = {"T": args.T, "left": left, "right": right}
    except NotMartingale:
        out["critical_moments"] = None
        out["tail_slopes"] = None
    cls = steady_state.classify(params)
    out["steady_state"] = {"class": cls.tag.value, "xi": cls.xi}
    try:
        out["steady_state"]["mean"] = steady_state.mean(params)
    except QdsvError:
        out["steady_state"]["mean"] = None
    if args.output == "csv":
        flat = [("martingale", martingale),
                ("m_minus", out["critical_moments"] and out["critical_moments"]["m_minus"]),
                ("m_plus", out["critical_moments"] and out["critical_moments"]["m_plus"]),
                ("steady_state_class", cls.tag.value), ("xi", cls.xi),
                ("steady_state_mean", out["steady_state"]["mean"])]
        return _csv(("key", "value"), [(k, jsonable(v)) for k, v in flat])
    return _dump_json(out)


COMMANDS = {
    "price": cmd_price,
    "converge": cmd_converge,
    "mc": cmd_mc,
    "steady-state": cmd_steady_state,
    "diagnose": cmd_diagnose,
}


def _load_params(path: str) -> ModelParams:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read params file: {exc}")
    try:
        return ModelParams.from_json(text)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParams):
            raise
        raise InvalidParams(f"params file is not valid ModelParams JSON: {exc}")


_VALUE_FLAGS = ("--T", "--T-months", "--logK", "--strike")
_NUMERIC = re.compile(r"^-[\d.]")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--logK -0.1,0`` as ``--logK=-0.1,0`` so argparse does not read an option."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and _NUMERIC.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_attach_negative_values(argv))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params = _load_params(args.params)
        report = validate(params)
        if not report.ok:
            print("invalid model parameters:", file=sys.stderr)
            for reason in report.reasons:
                print(f"  - {reason}", file=sys.stderr)
            return EXIT_INVALID
        text = COMMANDS[args.command](params, args)
    except UsageError as exc:
        print(f"qdsv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidParams as exc:
        print(f"invalid model parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QdsvError as exc:
        print(f"qdsv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output_path:
        Path(args.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
