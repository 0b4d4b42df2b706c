"""Command-line front end.

Exit codes: 0 when every check passed, 1 when a mathematical check
failed, 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, bounds, suites
from .antivoter import complete_graph, exact_stationary, load_graph, mcmc_estimate, pair_model_from_stationary, petersen_graph
from .dist import make_tp, poisson_pmf
from .errors import InputError, SteinTPAError
from .models import build_binomial, build_hypergeometric, build_parity, build_poisson_binomial

TOOL = "stein-tpa"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MAX_TP_ROWS = 1_000_000


# -- serialization -----------------------------------------------------------


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _encode(obj, out: list, indent: int | None, level: int) -> None:
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append((sep if i else "") + pad + json.dumps(str(k)) + ": ")
            _encode(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(items):
            out.append((sep if i else "") + pad)
            _encode(v, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float written to 17 significant digits (so the
    parsed value is bit-identical) and non-finite floats as null."""
    out: list[str] = []
    _encode(obj, out, indent, 0)
    return "".join(out)


def envelope(command: list[str], payload, seed=None, elapsed: float | None = None) -> dict:
    return {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "seed": seed,
        "payload": payload,
        "timing": {"elapsed_seconds": elapsed},
    }


# -- argument helpers --------------------------------------------------------


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return value


def resolve_graph(spec: str):
    """``K<n>``, ``petersen`` or a path to an edge-list file."""
    if spec.lower() == "petersen":
        return petersen_graph()
    if len(spec) > 1 and spec[0] in "Kk" and spec[1:].isdigit():
        return complete_graph(int(spec[1:]))
    if not os.path.exists(spec):
        raise UsageError(f"graph {spec!r} is neither K<n>, petersen nor an existing file")
    with open(spec, encoding="utf-8") as fh:
        text = fh.read()
    return load_graph(text, name=os.path.splitext(os.path.basename(spec))[0])


def _probabilities(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--probs must be a comma-separated list of numbers: {exc}") from None


# -- commands ----------------------------------------------------------------


def cmd_tp(args) -> tuple[int, object, str | None]:
    if args.kmax < args.kmin:
        raise UsageError("--kmax must be at least --kmin")
    if args.kmax - args.kmin + 1 > MAX_TP_ROWS:
        raise UsageError(f"at most {MAX_TP_ROWS} rows per table")
    tp = make_tp(args.mu, args.sigma2)
    ks = np.arange(args.kmin, args.kmax + 1)
    probs = poisson_pmf(ks - tp.s, tp.poisson_mean)
    rows = [{"k": int(k), "pmf": float(p)} for k, p in zip(ks, probs)]
    payload = {"mu": args.mu, "sigma2": args.sigma2, "shift": tp.s, "gamma": tp.gamma, "rows": rows}
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "pmf"])
        for row in rows:
            writer.writerow([row["k"], _format_float(row["pmf"])])
        return EXIT_OK, payload, buf.getvalue()
    return EXIT_OK, payload, None


def build_model(args):
    """Model and (for the anti-voter model) its stationary summary."""
    kind = args.model
    if kind == "binomial":
        if args.n is None or args.p is None:
            raise UsageError("binomial needs --n and --p")
        return build_binomial(args.n, args.p), None
    if kind == "poisson-binomial":
        if not args.probs:
            raise UsageError("poisson-binomial needs --probs p1,p2,...")
        return build_poisson_binomial(_probabilities(args.probs)), None
    if kind == "hypergeometric":
        if None in (args.N, args.m, args.n):
            raise UsageError("hypergeometric needs --N, --m and --n")
        return build_hypergeometric((args.N, args.m, args.n)), None
    if kind == "parity":
        if args.n is None:
            raise UsageError("parity needs --n")
        return build_parity(args.n), None
    if kind == "antivoter":
        if not args.graph:
            raise UsageError("antivoter needs --graph")
        summary = exact_stationary(resolve_graph(args.graph))
        return pair_model_from_stationary(summary), summary
    raise UsageError(f"unknown model {kind!r}")


def cmd_bound(args):
    model, summary = build_model(args)
    if summary is not None:
        report = bounds.antivoter_report(model, summary, args.eps)
    else:
        report = bounds.full_report(model, args.eps)
    for c in report.failures():
        print(f"FAIL {c.name} [{report.model}]: {c.description} (bound={c.bound!r}, exact={c.exact!r})", file=sys.stderr)
    return (EXIT_OK if report.all_hold else EXIT_FAIL), report.to_dict(), None


def cmd_verify(args):
    results = suites.run_suite(args.suite, seed=args.seed, eps=args.eps)
    ok = all(r.passed for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} suite {r.suite}: {len(r.checks) - len(r.failures())}/{len(r.checks)} checks", file=sys.stderr)
        for c in r.failures():
            print(
                f"  FAIL {r.suite}.{c.name} [{c.instance}]: {c.reference} (value={c.value!r} {c.relation} limit={c.limit!r}) {c.detail}",
                file=sys.stderr,
            )
    payload = {"suite": args.suite, "passed": ok, "results": [r.to_dict() for r in results]}
    return (EXIT_OK if ok else EXIT_FAIL), payload, None


def cmd_antivoter(args):
    g = resolve_graph(args.graph)
    if args.mode == "exact":
        summary = exact_stationary(g)
    else:
        if args.steps is None or args.steps <= 0:
            raise UsageError("mcmc mode needs a positive --steps")
        summary = mcmc_estimate(g, args.steps, burnin=args.burnin, chains=args.chains, seed=args.seed)
    return EXIT_OK, summary.to_dict(), None


def cmd_rates(args):
    sizes = [int(x) for x in args.sizes.split(",")] if args.sizes else list(suites.RATE_FAMILIES[args.family])
    if len(sizes) < 2 or any(n < 2 for n in sizes):
        raise UsageError("--sizes needs at least two sizes, each at least 2")
    rows = suites.rate_table(args.family, sizes, args.eps)
    payload = {
        "family": args.family,
        "rows": rows,
        "tv_slope": suites.loglog_slope(sizes, [r["d_tv"] for r in rows]),
        "loc_slope": suites.loglog_slope(sizes, [r["d_loc"] for r in rows]),
    }
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["family", "n", "mu", "sigma2", "d_tv", "d_loc"])
        for r in rows:
            writer.writerow([r["family"], r["n"]] + [_format_float(r[k]) for k in ("mu", "sigma2", "d_tv", "d_loc")])
        return EXIT_OK, payload, buf.getvalue()
    return EXIT_OK, payload, None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL, description="Translated Poisson approximation via exchangeable pairs.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tp", help="translated Poisson pmf table")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--sigma2", type=_positive_float, required=True)
    p.add_argument("--kmin", type=int, required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_tp)

    p = sub.add_parser("bound", help="exact distances next to every applicable bound")
    p.add_argument("--model", required=True, choices=("binomial", "poisson-binomial", "hypergeometric", "parity", "antivoter"))
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--probs", help="comma-separated success probabilities")
    p.add_argument("--N", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--graph", help="K<n>, petersen or an edge-list file")
    p.add_argument("--eps", type=_positive_float)
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=suites.SUITES + ("all",))
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--eps", type=_positive_float)
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("antivoter", help="stationary summary of the anti-voter chain")
    p.add_argument("--graph", required=True, help="K<n>, petersen or an edge-list file")
    p.add_argument("--mode", choices=("exact", "mcmc"), default="exact")
    p.add_argument("--steps", type=int)
    p.add_argument("--burnin", type=int, default=10_000)
    p.add_argument("--chains", type=int, default=8)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_antivoter)

    p = sub.add_parser("rates", help="exact distances along a model family")
    p.add_argument("--family", choices=tuple(suites.RATE_FAMILIES), required=True)
    p.add_argument("--sizes", help="comma-separated sizes (default: the suite grid)")
    p.add_argument("--eps", type=_positive_float)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_rates)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    start = time.perf_counter()
    try:
        code, payload, text = args.func(args)
    except (UsageError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SteinTPAError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    elapsed = time.perf_counter() - start
    if text is not None:
        sys.stdout.write(text)
    else:
        seed = getattr(args, "seed", None) if args.command in ("verify", "antivoter") else None
        if args.command == "antivoter" and args.mode == "exact":
            seed = None
        sys.stdout.write(dumps(envelope(argv, payload, seed, elapsed)) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
