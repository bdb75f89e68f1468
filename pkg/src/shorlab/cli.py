"""Command-line front end: ``shorlab factor | fidelity | resources | split``.

Exit codes: 0 success, 1 usage or input error, 2 ran but failed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from math import gcd

import numpy as np

from . import resources, shor
from .arith import CosetParams
from .errors import FootprintExceeded, NotCoprime, ShorlabError
from .modnum import ModCtx, midpoint_split, smallest_coprime_base

DEFAULT_MAX_BITS = 10
EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors share exit code 1 with bad inputs
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def max_bits() -> int:
    raw = os.environ.get("SHORLAB_MAX_QUBITS")
    if not raw:
        return DEFAULT_MAX_BITS
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"SHORLAB_MAX_QUBITS must be an integer, got {raw!r}")
    if value > DEFAULT_MAX_BITS:
        print(f"warning: moduli above {DEFAULT_MAX_BITS} bits may need a lot of memory "
              "and time", file=sys.stderr)
    return value


def check_modulus(N: int) -> int:
    if N < 3 or N % 2 == 0:
        raise InputError(f"modulus must be odd and >= 3, got {N}")
    bits = (N - 1).bit_length()
    limit = max_bits()
    if bits > limit:
        raise InputError(f"N = {N} needs {bits} bits; the limit is {limit} "
                         "(set SHORLAB_MAX_QUBITS to raise it)")
    return N


def pick_base(N: int, a: int | None) -> int:
    if a is None:
        return smallest_coprime_base(N)
    if not 0 < a < N:
        raise InputError(f"base must lie in (0, {N}), got {a}")
    g = gcd(a, N)
    if g != 1:
        raise InputError(f"base {a} shares the factor {g} with {N}")
    return a


def write_output(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def factors_from_order(a: int, N: int, d: int | None):
    """Nontrivial factors from gcd(a^(d/2) +- 1, N), or None when d does not help."""
    if d is None or d % 2:
        return None
    half = pow(a, d // 2, N)
    if half == N - 1:
        return None
    f = sorted({gcd(half - 1, N), gcd(half + 1, N)} - {1, N})
    if not f:
        return None
    p = f[0]
    return sorted({p, N // p})


# ---------------------------------------------------------------- commands ----


def cmd_factor(args) -> int:
    N = check_modulus(args.modulus)
    a = pick_base(N, args.base)
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    config = shor.OrderFindConfig.build(N, a, args.variant, x_max=args.xmax, seed=args.seed)
    footprint = None
    if args.strict_footprint:
        if args.variant != "short_factor":
            raise InputError("--strict-footprint applies to the short_factor variant")
        limit = resources.qubit_count("short_factor", config.ctx.n) - 1  # minus control
        try:
            footprint = shor.short_factor_footprint(config.ctx, limit)
        except FootprintExceeded as exc:
            print(f"footprint check failed: {exc}", file=sys.stderr)
            return EXIT_FAILED
    result = shor.run_trials(config, args.trials, args.jobs)
    factors = None
    for t in result.trials:
        if t["success"]:
            factors = factors_from_order(a, N, t["candidate"])
            break
    report = result.to_dict()
    report["factors"] = factors
    if footprint is not None:
        report["footprint"] = footprint
    if args.format == "csv":
        lines = ["index,y,candidate,success"]
        lines += [f"{t['index']},{t['y']},{t['candidate'] if t['candidate'] is not None else ''},"
                  f"{int(t['success'])}" for t in result.trials]
        write_output("\n".join(lines), args.out)
    else:
        write_output(json.dumps(report, indent=2, sort_keys=True), args.out)
    if factors:
        print(f"N = {N}: order of {a} is {result.order}, factors {factors[0]} x {factors[1]}",
              file=sys.stderr)
        return EXIT_OK
    why = "order never recovered" if not result.successes else \
        f"order {result.order} gives no factor (odd, or a^(d/2) = -1 mod N)"
    print(f"N = {N}, a = {a}: {why}", file=sys.stderr)
    return EXIT_FAILED


def cmd_fidelity(args) -> int:
    N = check_modulus(args.modulus)
    a = pick_base(N, args.base)
    ctx = ModCtx(N, a)
    x_max = args.xmax if args.xmax is not None else 1000 * ctx.n ** 2
    adds = args.adds if args.adds is not None else 4 * ctx.n ** 2
    if x_max < 1 or adds < 1:
        raise InputError("--xmax and --adds must be >= 1")
    rng = np.random.default_rng(args.seed)
    trace = shor.fidelity_experiment(ctx, CosetParams(x_max), adds, rng)
    if args.format == "json":
        doc = {"N": N, "x_max": x_max, "adds": adds, "seed": args.seed,
               "shifts": trace.shifts, "wraps": trace.wraps,
               "cumulative_fidelity": trace.cumulative,
               "steps": [{"step": s, "per_step_fidelity": p, "cumulative_fidelity": c}
                         for s, p, c in trace.steps]}
        write_output(json.dumps(doc, indent=2, sort_keys=True), args.out)
    else:
        write_output(trace.to_csv(), args.out)
    print(f"cumulative fidelity {trace.cumulative:.6f} after {adds} additions "
          f"(x_max = {x_max}, {trace.shifts} rung shifts)", file=sys.stderr)
    return EXIT_OK


def cmd_resources(args) -> int:
    if args.bits is not None:
        n = args.bits
    elif args.modulus is not None:
        n = (check_modulus(args.modulus) - 1).bit_length()
    else:
        raise InputError("give --bits or --modulus")
    if n < 2:
        raise InputError("n must be >= 2")
    variants = [args.variant] if args.variant else list(resources.VARIANTS)
    reports = resources.report_all(n, variants)
    if args.format == "json":
        write_output(resources.to_json(reports), args.out)
    elif args.format == "csv":
        keys = list(reports[0].to_dict())
        lines = [",".join(keys)] + [",".join(str(r.to_dict()[k]) for k in keys) for r in reports]
        write_output("\n".join(lines), args.out)
    else:
        write_output(resources.render_table(reports), args.out)
    return EXIT_OK


def cmd_split(args) -> int:
    N = args.modulus
    if N < 3 or N % 2 == 0:
        raise InputError(f"modulus must be odd and >= 3, got {N}")
    a = pick_base(N, args.base)
    s = midpoint_split(a, N)
    ok = (s.r * a - s.r_prime) % N == 0
    doc = {"N": N, "a": a, "r": s.r, "r_prime": s.r_prime, "n_prime": s.n_prime,
           "both_below_sqrt": s.both_below_sqrt, "shared_factor": s.shared_factor,
           "verified": ok}
    if args.format == "json":
        write_output(json.dumps(doc, indent=2, sort_keys=True), args.out)
    else:
        lines = [f"a = {a}, N = {N}: r = {s.r}, r' = {s.r_prime}, n' = {s.n_prime}",
                 f"check: {s.r} * {a} = {s.r_prime} (mod {N}) ... {'ok' if ok else 'FAILED'}"]
        if s.shared_factor != 1:
            lines.append(f"note: gcd(r, N) = {s.shared_factor} is a factor of N")
        write_output("\n".join(lines), args.out)
    return EXIT_OK if ok else EXIT_FAILED


# ------------------------------------------------------------------ parser ----


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shorlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, modulus_required=True, fmt=("json", "csv"), default_fmt="json"):
        p.add_argument("-N", "--modulus", type=int, required=modulus_required)
        p.add_argument("-a", "--base", type=int, default=None,
                       help="default: smallest base >= 2 coprime with N")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=fmt, default=default_fmt)

    p = sub.add_parser("factor", help="run order finding and derive factors")
    common(p)
    p.add_argument("--variant", choices=shor.VARIANTS, default="standard")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--xmax", type=int, default=None, help="coset rungs (coset variant)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict-footprint", action="store_true",
                   help="check the short-factor qubit footprint before running")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("fidelity", help="coset-representation fidelity trace")
    common(p, modulus_required=False, fmt=("csv", "json"), default_fmt="csv")
    p.set_defaults(modulus=21)
    p.add_argument("--xmax", type=int, default=None, help="default 1000 n^2")
    p.add_argument("--adds", type=int, default=None, help="default 4 n^2")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("resources", help="qubit and step counts per variant")
    p.add_argument("-n", "--bits", type=int, default=None)
    p.add_argument("-N", "--modulus", type=int, default=None)
    p.add_argument("--variant", choices=resources.VARIANTS, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("split", help="Euclid midpoint split of a modulo N")
    common(p, fmt=("text", "json"), default_fmt="text")
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, NotCoprime) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ShorlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
