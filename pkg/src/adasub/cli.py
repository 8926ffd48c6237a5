"""Command-line harness: ``adasub <infmax|feature|ratio|verify> [flags]``.

Every random choice derives from ``--seed`` through :func:`adasub.seeding.mix`,
so two runs with the same configuration write byte-identical CSV files.
The ``runtime_ms`` column stays empty unless ``--timing`` is given, since
wall-clock times would break that guarantee.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from collections import defaultdict

import numpy as np

from . import brute
from .cases import VERIFIERS, build_chain, build_tight_gap, run_verifier
from .core import AdaptiveProblem, default_cap
from .exceptions import AdasubError, BudgetExceeded, InvalidParams, ParseError
from .features import gen_synthetic, non_adaptive_greedy_saa, noise_oblivious_greedy
from .infmax import degree_baseline, gen_erdos_renyi, gen_random_small, gen_star, load_edge_list
from .policies import adaptive_greedy, non_adaptive_greedy, random_policy
from .seeding import mix

HEADER = ["trial", "algorithm", "budget", "value", "seed", "runtime_ms"]
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RATIO_METRICS = ("gamma", "beta", "zeta_star", "gap")


# -- config files ----------------------------------------------------------


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys may use - or _."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected 'key = value'", lineno, path)
            key, val = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ParseError("empty key", lineno, path)
            out[key.replace("-", "_")] = val
    return out


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, argv, cfg: dict):
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in cfg.items():
        if key not in known or key in ("help", "config"):
            parser.error(f"unknown config key {key!r}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        try:
            defaults[key] = action.type(raw) if action.type else raw
        except (TypeError, ValueError, argparse.ArgumentTypeError):
            parser.error(f"bad value for config key {key!r}: {raw!r}")
        if action.choices and defaults[key] not in action.choices:
            parser.error(f"config key {key!r} must be one of {sorted(action.choices)}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# -- output ----------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def write_rows(rows, out_path, stdout):
    """Write per-trial rows sorted by (trial, algorithm, budget) plus a summary."""
    rows = sorted(rows, key=lambda r: (r[0], r[1], r[2]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for trial, alg, budget, value, seed, ms in rows:
        w.writerow([trial, alg, budget, _fmt(value), seed, "" if ms is None else f"{ms:.3f}"])
    groups = defaultdict(list)
    for _, alg, budget, value, _, _ in rows:
        groups[(alg, budget)].append(value)
    sbuf = io.StringIO()
    sw = csv.writer(sbuf, lineterminator="\n")
    sw.writerow(["algorithm", "budget", "mean", "count"])
    for (alg, budget), vals in sorted(groups.items()):
        sw.writerow([alg, budget, _fmt(math.fsum(vals) / len(vals)), len(vals)])
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        with open(f"{out_path}.summary.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(sbuf.getvalue())
    else:
        stdout.write(buf.getvalue())
    stdout.write(sbuf.getvalue())
    return rows


class _Clock:
    def __init__(self, enabled):
        self.enabled = enabled

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = (time.perf_counter() - self.t0) * 1000 if self.enabled else None


def _budgets(args, n):
    k = min(args.k, n)
    return list(range(1, k + 1)), k


# -- subcommands -----------------------------------------------------------


def _influence_instance(args, trial_seed):
    if args.graph == "er":
        return gen_erdos_renyi(args.n_src, args.n_sink, args.edge_prob, args.model, seed=mix(trial_seed, 0), t=args.t)
    if args.graph == "star":
        return gen_star(args.star_k or max(args.k, 1))
    if not args.path:
        raise InvalidParams("--graph file needs --path")
    return load_edge_list(args.path, model_kind=args.model, t=args.t)


def cmd_infmax(args, stdout) -> int:
    rows = []
    for trial in range(args.trials):
        seed = mix(args.seed, trial)
        inst = _influence_instance(args, seed)
        live = inst.sample_live(np.random.default_rng(mix(seed, 1)))
        budgets, k = _budgets(args, inst.n_elements)
        picks = {}
        with _Clock(args.timing) as c:
            picks["adaptive"] = adaptive_greedy(inst, k, live).selected
        times = {"adaptive": c.ms}
        with _Clock(args.timing) as c:
            picks["non-adaptive"] = non_adaptive_greedy(inst.expected_spread, inst.n_elements, k)
        times["non-adaptive"] = c.ms
        with _Clock(args.timing) as c:
            picks["degree"] = degree_baseline(inst.graph, k)
        times["degree"] = c.ms
        with _Clock(args.timing) as c:
            picks["random"] = random_policy(inst.n_elements, k, mix(seed, 2))
        times["random"] = c.ms
        for alg, order in picks.items():
            for b in budgets:
                rows.append((trial, alg, b, inst.spread(order[:b], live), seed, times[alg]))
    write_rows(rows, args.out, stdout)
    return EXIT_OK


def cmd_feature(args, stdout) -> int:
    rows = []
    for trial in range(args.trials):
        seed = mix(args.seed, trial)
        inst = gen_synthetic(args.n, args.m, args.sparsity, args.sigma, seed=mix(seed, 0), n_samples=args.samples)
        budgets, k = _budgets(args, inst.n)
        picks, times = {}, {}
        with _Clock(args.timing) as c:
            picks["adaptive"] = adaptive_greedy(inst, k, inst.hidden).selected
        times["adaptive"] = c.ms
        with _Clock(args.timing) as c:
            picks["non-adaptive"] = non_adaptive_greedy_saa(inst, k, n_scenarios=args.scenarios, seed=mix(seed, 1))
        times["non-adaptive"] = c.ms
        with _Clock(args.timing) as c:
            picks["noise-oblivious"] = noise_oblivious_greedy(inst, k)
        times["noise-oblivious"] = c.ms
        for alg, order in picks.items():
            for b in budgets:
                rows.append((trial, alg, b, inst.value(order[:b], inst.hidden), seed, times[alg]))
    write_rows(rows, args.out, stdout)
    return EXIT_OK


def _ratio_problem(args):
    cap = args.cap
    if args.instance == "star":
        prior, f = gen_star(args.k).to_tabular(cap)
        return AdaptiveProblem(f, prior, cap)
    if args.instance == "chain":
        return build_chain(args.ell or args.k, args.eps, cap=cap).problem
    if args.instance == "tightgap":
        case = build_tight_gap(args.k, args.a, args.p, args.M)
        case.problem.cap = cap
        return case.problem
    if args.instance in ("ic-random", "lt-random", "elt-random", "triggering-random"):
        rng = np.random.default_rng(mix(args.seed, 0))
        prior, f = gen_random_small(args.instance.split("-")[0], rng).to_tabular(cap)
        return AdaptiveProblem(f, prior, cap)
    if not args.path:
        raise InvalidParams("--instance file needs --path")
    prior, f = load_edge_list(args.path, model_kind=args.model, t=args.t).to_tabular(cap)
    return AdaptiveProblem(f, prior, cap)


def cmd_ratio(args, stdout) -> int:
    """Print each metric; one that exceeds the cap is reported and the rest still run."""
    P = _ratio_problem(args)
    k = min(args.k, P.n_elements)
    metrics = {
        "gamma": lambda: brute.gamma_adaptive(P, k),
        "beta": lambda: brute.beta_nonadaptive(P.expected_value, P.n_elements, (), k, P.cap),
        "zeta_star": lambda: brute.zeta_star(P),
        "gap": lambda: brute.adaptivity_gap_exact(P, k),
    }
    results = []
    failed = False
    for name in args.metrics:
        fn = metrics[name]
        try:
            rep = fn()
        except BudgetExceeded as exc:
            stdout.write(f"{name} = skipped  ({exc})\n")
            failed = True
            continue
        stdout.write(f"{name} = {_fmt(rep.value)}  witness: {_describe(rep.witness)}\n")
        results.append((name, rep.value))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["instance", "k", "metric", "value"])
            for name, value in results:
                w.writerow([args.instance, k, name, _fmt(value)])
    return EXIT_FAIL if failed else EXIT_OK


def _metric_list(text) -> list:
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in names if t not in RATIO_METRICS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"metrics must be a comma-separated subset of {','.join(RATIO_METRICS)}")
    return names


def _describe(witness) -> str:
    if witness is None:
        return "-"
    parts = []
    for item in witness:
        if isinstance(item, frozenset):
            parts.append("{" + ", ".join(str(x) for x in sorted(item)) + "}")
        else:
            parts.append(repr(item))
    return "; ".join(parts)


def cmd_verify(args, stdout) -> int:
    names = list(VERIFIERS) if args.case == "all" else [args.case]
    ok = True
    for name in names:
        rep = run_verifier(name)
        for line in rep.lines():
            stdout.write(line + "\n")
        ok &= rep.ok
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adasub", description="Adaptive submodular maximization experiments and checks.")
    subs = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("--config", help="key = value file; flags given on the command line win")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--k", type=int, default=25)
        p.add_argument("--out", help="CSV output path (default: standard output)")
        p.add_argument("--cap", type=int, default=None, help="enumeration cap (default: ADASUB_CAP or 2000000)")
        if trials:
            p.add_argument("--trials", type=int, default=20)
            p.add_argument("--timing", action="store_true", help="fill runtime_ms (output is then not reproducible)")

    p = subs.add_parser("infmax", help="influence maximization benchmark")
    common(p)
    p.add_argument("--graph", choices=("er", "star", "file"), default="er")
    p.add_argument("--path")
    p.add_argument("--model", choices=("ic", "lt", "elt"), default="lt")
    p.add_argument("--t", type=int, default=3)
    p.add_argument("--n-src", dest="n_src", type=int, default=100)
    p.add_argument("--n-sink", dest="n_sink", type=int, default=100)
    p.add_argument("--edge-prob", dest="edge_prob", type=float, default=0.01)
    p.add_argument("--star-k", dest="star_k", type=int, default=None)
    p.set_defaults(handler=cmd_infmax)

    p = subs.add_parser("feature", help="feature selection benchmark")
    common(p)
    p.set_defaults(k=30)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--sparsity", type=int, default=10)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--scenarios", type=int, default=32)
    p.set_defaults(handler=cmd_feature)

    p = subs.add_parser("ratio", help="exact ratios and gap of a small instance")
    common(p, trials=False)
    p.set_defaults(k=2)
    p.add_argument("--instance", choices=("star", "chain", "tightgap", "ic-random", "lt-random", "elt-random", "triggering-random", "file"), default="star")
    p.add_argument("--path")
    p.add_argument("--model", choices=("ic", "lt", "elt"), default="lt")
    p.add_argument("--t", type=int, default=3)
    p.add_argument("--a", type=float, default=5.0)
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--M", type=int, default=5)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--metrics", type=_metric_list, default=list(RATIO_METRICS), help="comma-separated subset of " + ",".join(RATIO_METRICS))
    p.set_defaults(handler=cmd_ratio)

    p = subs.add_parser("verify", help="check a constructed example")
    p.add_argument("case", choices=tuple(VERIFIERS) + ("all",))
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "config", None):
            sub = parser._subparsers._group_actions[0].choices[args.command]
            args = _apply_config(parser, sub, argv, read_config(args.config))
        if getattr(args, "cap", None) is None and hasattr(args, "cap"):
            args.cap = default_cap()
        for name in ("trials", "k"):
            if getattr(args, name, 1) < 1:
                parser.error(f"--{name} must be at least 1")
        return args.handler(args, stdout)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ParseError, InvalidParams) as exc:
        sys.stderr.write(f"adasub: {exc}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        sys.stderr.write(f"adasub: {exc}\n")
        return EXIT_FAIL
    except OSError as exc:
        sys.stderr.write(f"adasub: {exc.filename or ''}: {exc.strerror or exc}\n")
        return EXIT_USAGE
    except AdasubError as exc:
        sys.stderr.write(f"adasub: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
