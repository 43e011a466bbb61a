"""Command-line front end.

Curves are written as CSV, scalars and reports as JSON. Infinite values
appear as the string ``"inf"`` in JSON. Exit codes: 0 success, 1 failed
verification, 2 bad input or file, 3 dimension cap exceeded. Errors are
reported as one line of JSON on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .channel import distribution, load_channel, parse_family, uniform
from .errors import CqrelError, DimensionCapError, ValidationError

# Built-in defaults, applied after the config file so that flags win over
# config and config wins over these.
DEFAULTS = {
    "rmin": 0.05,
    "rmax": 0.3,
    "steps": 6,
    "M": 4,
    "n": 2,
    "s": 1.0,
    "kind": "rc",
    "c": None,
    "conjecture": False,
    "r": 0.5,
    "trials": 1000,
    "seed": 0,
    "suite": "fast",
    "s_steps": 200,
    "pi": None,
    "output": None,
}

CHANNEL_COMMANDS = {"capacity", "cutoff", "exponents", "zero-rate", "bounds", "simulate", "expurgate", "probe-concavity"}


def _fmt(x) -> str:
    """12 significant digits; infinities as ``inf``."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqrel", description="Reliability-function bounds for classical-quantum channels.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", help="channel JSON file")
    common.add_argument("--family", help='built-in family, e.g. "bsc(0.1)" or "pure2(eps=0.5)"')
    common.add_argument("--config", help="JSON file of option values; flags win")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--pi", help="input distribution as comma-separated weights (default uniform)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("capacity", parents=[common], help="classical capacity (maximal chi)")
    sub.add_parser("cutoff", parents=[common], help="cutoff rate")
    p = sub.add_parser("exponents", parents=[common], help="E_r and E_ex curves as CSV")
    p.add_argument("--rmin", type=float)
    p.add_argument("--rmax", type=float)
    p.add_argument("--steps", type=_positive_int)
    sub.add_parser("zero-rate", parents=[common], help="zero-rate bounds")
    p = sub.add_parser("bounds", parents=[common], help="finite-M error bound")
    p.add_argument("--M", type=int)
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--s", type=float)
    p.add_argument("--kind", choices=["rc", "ex"])
    p.add_argument("--c", type=float, help="constant for the conjectural rc bound")
    p.add_argument("--conjecture", action="store_true", default=None, help="allow rc with s < 1")
    p = sub.add_parser("simulate", parents=[common], help="random-coding ensemble with the square-root rule")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--M", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--seed", type=int)
    p = sub.add_parser("expurgate", parents=[common], help="expurgated-code experiment")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--M", type=int)
    p.add_argument("--s", type=float)
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--seed", type=int)
    p = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    p.add_argument("--suite", choices=["fast", "all"])
    p = sub.add_parser("probe-concavity", parents=[common], help="second differences of mu in s (exploratory)")
    p.add_argument("--s-steps", dest="s_steps", type=_positive_int)
    return parser


def _load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge flags, config file and defaults, in that order of precedence."""
    config = _load_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if value is None and key in config:
            setattr(args, key, config[key])
    for key, value in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.command in CHANNEL_COMMANDS:
        if (args.channel is None) == (args.family is None):
            raise ValidationError("give exactly one of --channel or --family")
    return args


def _channel(args):
    return load_channel(args.channel) if args.channel is not None else parse_family(args.family)


def _pi(args, ch):
    if args.pi is None:
        return uniform(ch.alphabet_size)
    raw = args.pi
    if isinstance(raw, str):
        try:
            raw = [float(x) for x in raw.split(",")]
        except ValueError as exc:
            raise ValidationError(f"cannot parse --pi {args.pi!r}") from exc
    return distribution(raw, ch.alphabet_size)


def cmd_capacity(args) -> str:
    from .exponents import capacity_report

    rep = capacity_report(_channel(args))
    return dumps({"chi_max": rep.optimum, "pi_opt": rep.pi, "kkt_residual": rep.kkt_residual})


def cmd_cutoff(args) -> str:
    from .exponents import cutoff_report

    value, rep = cutoff_report(_channel(args))
    return dumps({"cutoff_bits": value, "pi_opt": rep.pi})


def cmd_exponents(args) -> str:
    from .exponents import expurgation_exponent, random_coding_exponent, zero_rate_bounds

    ch = _channel(args)
    if args.rmin < 0 or args.rmax < args.rmin:
        raise ValidationError("need 0 <= rmin <= rmax")
    rates = np.unique(np.linspace(args.rmin, args.rmax, args.steps))
    er = random_coding_exponent(ch, rates)
    positive = rates[rates > 0]
    ex = list(expurgation_exponent(ch, positive)) if positive.size else []
    if positive.size < rates.size:
        ex.insert(0, None)
    a = ch.alphabet_size
    lines = [",".join(["R", "E_r", "E_ex", "s_opt_r", "s_opt_ex"] + [f"pi_opt_{i + 1}" for i in range(a)])]
    for rec, rex in zip(er, ex):
        if rex is None:
            e_ex, s_ex = zero_rate_bounds(ch).lower, math.inf
        else:
            e_ex, s_ex = rex.value, rex.s_opt
        row = [rec.rate, rec.value, e_ex, rec.s_opt, s_ex, *rec.pi_opt]
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def cmd_zero_rate(args) -> str:
    from .exponents import zero_rate_bounds

    z = zero_rate_bounds(_channel(args))
    return dumps({"lower": z.lower, "upper": z.upper, "infinite": z.infinite})


def cmd_bounds(args) -> str:
    from .exponents import finite_M_bounds

    ch = _channel(args)
    rep = finite_M_bounds(ch, _pi(args, ch), args.M, args.n, args.s, args.kind, bool(args.conjecture), args.c)
    return dumps(rep.to_dict())


def cmd_simulate(args) -> str:
    from .decoder import run_random_coding

    ch = _channel(args)
    summary = run_random_coding(ch, _pi(args, ch), args.n, args.M, args.r, args.trials, args.seed)
    return dumps(summary.to_dict())


def cmd_expurgate(args) -> str:
    from .decoder import expurgate_trial

    ch = _channel(args)
    summary = expurgate_trial(ch, _pi(args, ch), args.n, args.M, args.s, args.trials, args.seed)
    return dumps(summary.to_dict())


def cmd_probe(args) -> str:
    from .exponents import conjecture_probe

    ch = _channel(args)
    return dumps(conjecture_probe(ch, _pi(args, ch), args.s_steps))


def cmd_verify(args) -> tuple[str, int]:
    from .verify import run_suite

    results = run_suite(args.suite)
    width = max(len(name) for name, _, _ in results)
    lines = [f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}" for name, ok, detail in results]
    failed = sum(not ok for _, ok, _ in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n", 1 if failed else 0


COMMANDS = {
    "capacity": cmd_capacity,
    "cutoff": cmd_cutoff,
    "exponents": cmd_exponents,
    "zero-rate": cmd_zero_rate,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "expurgate": cmd_expurgate,
    "probe-concavity": cmd_probe,
    "verify": cmd_verify,
}


def _fail(exc: Exception, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args = resolve(args)
        result = COMMANDS[args.command](args)
        code = 0
        if isinstance(result, tuple):
            result, code = result
        if args.output:
            Path(args.output).write_text(result)
        else:
            sys.stdout.write(result)
        return code
    except DimensionCapError as exc:
        return _fail(exc, 3)
    except (CqrelError, ValueError, OSError) as exc:
        return _fail(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
