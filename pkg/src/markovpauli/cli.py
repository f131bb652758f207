"""Command-line interface.

One dispatcher with subcommands for every computation; all randomized
subcommands take (or generate and print) a seed, and every emitted
artifact embeds the full run configuration plus a schema version, so
identical invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import secrets
import sys

import numpy as np

from . import __version__, code_sim
from ._kernels import available_backends, get_backend, make_ln_table
from .channel import (MarkovPauliChannel, channel_from_config,
                      gilbert_capacity_bound, gilbert_channel,
                      load_channel_config, pauli_twirl)
from .errors import ConvergenceError, DegenerateChainError, ResourceLimitError
from .exponent import capacity_threshold, exponent, exponent_sweep
from .markov_types import (enumerate_types, eq3_bound, eq4_bound,
                           conditional_type_entropy, type_class_size,
                           type_divergence, type_probability)

SCHEMA_VERSION = 1


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _emit(args, columns, rows, path=None, fmt="csv"):
    """Write rows with the run config embedded; returns the text."""
    config = {k: v for k, v in sorted(vars(args).items())
              if k != "func" and v is not None}
    if fmt == "json":
        payload = {"schema_version": SCHEMA_VERSION,
                   "tool": f"markovpauli {__version__}",
                   "config": {k: _fmt(v) for k, v in config.items()},
                   "columns": list(columns),
                   "rows": [[_fmt(v) for v in row] for row in rows]}
        text = json.dumps(payload, indent=2) + "\n"
    else:
        lines = [f"# markovpauli {__version__} schema_version={SCHEMA_VERSION}"]
        for k, v in config.items():
            lines.append(f"# {k}={_fmt(v)}")
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _load_channel(args) -> MarkovPauliChannel:
    if getattr(args, "gilbert", None):
        eps, gamma = args.gilbert
        return gilbert_channel(eps, gamma)
    if getattr(args, "channel", None):
        return load_channel_config(args.channel)
    raise ValueError("a channel is required: pass --channel FILE or "
                     "--gilbert EPS:GAMMA")


def _parse_gilbert(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"--gilbert expects EPS:GAMMA, got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"--sweep expects START:STEP:END, got {text!r}")
    start, step, end = map(float, parts)
    if step <= 0:
        raise argparse.ArgumentTypeError("--sweep step must be positive")
    out = []
    r = start
    while r <= end + 1e-12:
        out.append(min(r, 1.0))
        r += step
    return out


def _parse_int_list(text: str):
    return [int(p) for p in text.split(",") if p]


def _unit_factor(units: str, d: int) -> float:
    return math.log2(d) if units == "bits" else 1.0


def _need_seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed={args.seed}", file=sys.stderr)
    return args.seed


def _ceil_rate(rate_str: str, n: int) -> int:
    """k = ceil(R n) from the exact decimal the user typed."""
    from fractions import Fraction
    R = Fraction(rate_str)
    return int(-(-(R.numerator * n) // R.denominator))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_capacity(args):
    ch = _load_channel(args)
    value = capacity_threshold(ch) * _unit_factor(args.units, ch.d)
    if args.out:
        _emit(args, ("capacity_lower_bound",), [(value,)], args.out)
    else:
        print(_fmt(value))
    return 0


def _cmd_gilbert(args):
    eps, gamma = args.gilbert
    ch = gilbert_channel(eps, gamma)
    text = json.dumps(ch.to_config(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_exponent(args):
    ch = _load_channel(args)
    factor = _unit_factor(args.units, ch.d)
    rates = args.sweep if args.sweep else [args.rate]
    if rates == [None]:
        raise ValueError("pass --rate R or --sweep START:STEP:END")
    seed = _need_seed(args)
    thr = capacity_threshold(ch)
    results = exponent_sweep(ch, rates, seed=seed, tol=args.tol)
    rows = [(r.rate * factor, r.value * factor, thr * factor,
             r.kkt_residual) for r in results]
    _emit(args, ("R", "E", "threshold", "kkt_residual"), rows, args.out,
          args.format)
    return 0


def _cmd_types(args):
    ch = _load_channel(args)
    factor = _unit_factor(args.units, ch.d)
    rows = []
    for t in enumerate_types(args.n, ch.m, args.initial):
        flat = ";".join(str(c) for row in t.counts for c in row)
        rows.append((t.n, t.initial, flat, type_class_size(t),
                     conditional_type_entropy(t, ch.d) * factor,
                     type_divergence(t, ch.transition, ch.d) * factor,
                     type_probability(ch, t),
                     eq3_bound(t, ch.d), eq4_bound(t, ch)))
    _emit(args, ("n", "initial", "counts", "class_size", "Hc", "D",
                 "prob", "eq3_bound", "eq4_bound"), rows, args.out,
          args.format)
    return 0


def _cmd_simulate(args):
    ch = _load_channel(args)
    if not args.exhaustive:
        _need_seed(args)
    rows = []
    for n in args.n:
        k = _ceil_rate(args.rate, n)
        rep = code_sim.ensemble_average(
            n, k, ch, samples=args.samples, seed=args.seed,
            exhaustive=args.exhaustive, threads=args.threads)
        rows.append((rep.n, rep.k, rep.rate, rep.samples,
                     rep.mean_failure_bound, rep.ci95, rep.analytic_bound,
                     "" if rep.seed is None else rep.seed))
    _emit(args, ("n", "k", "R", "samples", "mean_failure_bound", "ci95",
                 "analytic_bound", "seed"), rows, args.out, args.format)
    return 0


def _cmd_twirl(args):
    with open(args.kraus) as fh:
        obj = json.load(fh)
    for key in ("d", "operators"):
        if key not in obj:
            raise ValueError(f"kraus file is missing '{key}'")
    d = int(obj["d"])
    ops = []
    for i, mat in enumerate(obj["operators"]):
        arr = np.asarray(mat, dtype=float)
        if arr.shape != (d, d, 2):
            raise ValueError(f"operator {i} must be a {d}x{d} matrix of "
                             f"[re, im] pairs, got shape {arr.shape}")
        ops.append(arr[..., 0] + 1j * arr[..., 1])
    dist = pauli_twirl(ops, d)
    rows = [(s % d, s // d, s, float(p)) for s, p in enumerate(dist)]
    _emit(args, ("x_power", "z_power", "symbol", "probability"), rows,
          args.out, args.format)
    return 0


def _cmd_check_counting(args):
    chk = code_sim.counting_ratio_check(args.n, args.k, args.d)
    status = "PASS" if chk.exact and chk.zero_count == 0 else "FAIL"
    line = (f"n={chk.n} k={chk.k} d={chk.d} subspaces={chk.num_subspaces} "
            f"ratio={float(chk.expected_ratio):.6f} "
            f"({chk.expected_ratio.numerator}/{chk.expected_ratio.denominator}) "
            f"exact-match {status}")
    if args.out:
        _emit(args, ("n", "k", "d", "num_subspaces", "ratio", "exact"),
              [(chk.n, chk.k, chk.d, chk.num_subspaces,
                float(chk.expected_ratio), chk.exact)], args.out)
    print(line)
    return 0 if status == "PASS" else 2


def _cmd_bench(args):
    import time
    ch = gilbert_channel(0.1, 0.3)
    d = 2
    n, k = args.n, args.k
    rng = np.random.default_rng(_need_seed(args))
    import markovpauli.symplectic as sp
    Ls = [sp.sample_isotropic(n, k, d, rng) for _ in range(args.samples)]
    wb = [code_sim._twisted_basis(L) for L in Ls]
    print(f"# kernels benchmark: n={n} k={k} d=2, {args.samples} samples, "
          f"N={d**(2*n)} vectors")
    for name in available_backends():
        mod = get_backend(name)
        t0 = time.perf_counter()
        scores = mod.hc_scores(n, d, make_ln_table(n))
        t1 = time.perf_counter()
        probs = mod.seq_probs(n, d, ch.transition, ch.initial)
        t2 = time.perf_counter()
        total = 0.0
        for w in wb:
            keys = mod.syndrome_keys(n, d, w)
            reps = mod.coset_min(keys, scores, d ** (n - k))
            total += 1.0 - probs[reps].sum()
        t3 = time.perf_counter()
        print(f"{name:7s} hc_scores {t1-t0:8.4f}s  seq_probs {t2-t1:8.4f}s  "
              f"syndrome+argmin {t3-t2:8.4f}s  "
              f"(mean failure {total/len(wb):.6f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="markovpauli",
        description="Error exponents, capacity bounds and stabilizer-"
                    "ensemble checks for Markov-correlated Pauli channels")
    p.add_argument("--version", action="version",
                   version=f"markovpauli {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_channel_opts(sp_):
        sp_.add_argument("--channel", metavar="FILE",
                         help="channel config JSON")
        sp_.add_argument("--gilbert", type=_parse_gilbert, metavar="EPS:GAMMA",
                         help="inline Gilbert channel parameters")

    def add_output_opts(sp_):
        sp_.add_argument("--out", metavar="FILE", help="output path "
                         "(default: stdout)")
        sp_.add_argument("--format", choices=("csv", "json"), default="csv")

    s = sub.add_parser("capacity", help="capacity lower bound 1 - H(P|q)")
    add_channel_opts(s)
    s.add_argument("--units", choices=("dary", "bits"), default="dary")
    s.add_argument("--out", metavar="FILE")
    s.set_defaults(func=_cmd_capacity)

    s = sub.add_parser("gilbert", help="emit a Gilbert channel config JSON")
    s.add_argument("--gilbert", type=_parse_gilbert, metavar="EPS:GAMMA",
                   required=True)
    s.add_argument("--out", metavar="FILE")
    s.set_defaults(func=_cmd_gilbert)

    s = sub.add_parser("exponent", help="error exponent E(R)")
    add_channel_opts(s)
    s.add_argument("--rate", type=float, help="single rate R in [0, 1]")
    s.add_argument("--sweep", type=_parse_sweep, metavar="START:STEP:END")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--seed", type=int)
    s.add_argument("--units", choices=("dary", "bits"), default="dary")
    add_output_opts(s)
    s.set_defaults(func=_cmd_exponent)

    s = sub.add_parser("types", help="enumerate Markov types with bounds")
    add_channel_opts(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--initial", type=int)
    s.add_argument("--units", choices=("dary", "bits"), default="dary")
    add_output_opts(s)
    s.set_defaults(func=_cmd_types)

    s = sub.add_parser("simulate", help="ensemble failure-bound averages")
    add_channel_opts(s)
    s.add_argument("--n", type=_parse_int_list, required=True,
                   metavar="N[,N...]")
    s.add_argument("--rate", required=True,
                   help="rate R; k = ceil(R n) per n")
    s.add_argument("--samples", type=int)
    s.add_argument("--exhaustive", action="store_true")
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    add_output_opts(s)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("twirl", help="Pauli-twirl distribution of a Kraus map")
    s.add_argument("--kraus", metavar="FILE", required=True,
                   help="JSON {d, operators: [[[re,im],...],...]}")
    add_output_opts(s)
    s.set_defaults(func=_cmd_twirl)

    s = sub.add_parser("check-counting",
                       help="exhaustive dual-counting identity check")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--out", metavar="FILE")
    s.set_defaults(func=_cmd_check_counting)

    s = sub.add_parser("bench", help="compare kernel backends")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=_cmd_bench)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ResourceLimitError, DegenerateChainError,
            ConvergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
