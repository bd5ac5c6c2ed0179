"""Command-line entry point: ``filtra <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .arith import format_weight, parse_weight
from .graph import (
    GRAPH_SCHEMA,
    Equipment,
    GradedGraph,
    SizeError,
    ValidationError,
    build_family,
    central_equipment,
    dim,
    graph_to_dict,
    load_graph,
    validate_equipment,
)
from .measures import (
    MEASURE_SCHEMA,
    AgreeingMeasure,
    PathSampler,
    fibonacci_chain_measure,
    load_measure,
    measure_to_dict,
    mixture,
    pascal_bernoulli_measure,
    rwrs_words_sample,
    two_state_chain_measure,
    uniform_path_measure,
)
from .minimal import minimize, pushforward_measure
from .realization import FILTRATION_SCHEMA, load_filtration, realize
from .simplices import extremality_spread, projection_matrix
from .standardness import Semantics, epsilon_entropy, statistic_trajectory
from .trees import CylinderFunction, constant_function, first_copy_indicator, first_step_indicator
from .triples import TRIPLE_SCHEMA, MetricTriple, compare, sample_matrix_distribution

SCHEMAS = {
    "graph": GRAPH_SCHEMA,
    "measure": MEASURE_SCHEMA,
    "filtration": FILTRATION_SCHEMA,
    "triple": TRIPLE_SCHEMA,
}


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = 1):
        super().__init__(message)
        self.kind = kind
        self.code = code


# ---------------------------------------------------------------- resolution helpers


class Context:
    """Graph, equipment and (when a chain family provides one) a built-in measure."""

    def __init__(self, graph: GradedGraph, equipment: Optional[Equipment], measure: Optional[AgreeingMeasure] = None, ref: str = ""):
        self.graph = graph
        self.equipment = equipment
        self.measure = measure
        self.ref = ref


def resolve_graph(ref: str, equipment: str = "auto", depth: Optional[int] = None) -> Context:
    if os.path.exists(ref):
        graph, eq = load_graph(ref)
        if equipment == "central" or eq is None:
            eq = central_equipment(graph)
        return Context(graph, eq, None, ref)
    name, _, rest = ref.partition(":")
    if name == "two_state":
        p, _, d = rest.partition(":")
        g, eq, m = two_state_chain_measure(parse_weight(p or "3/4"), int(d or depth or 10))
        return Context(g, central_equipment(g) if equipment == "central" else eq, m, ref)
    if name == "fibonacci":
        g, eq, m = fibonacci_chain_measure(int(rest or depth or 12))
        return Context(g, central_equipment(g) if equipment == "central" else eq, m, ref)
    graph = build_family(ref, depth)
    return Context(graph, central_equipment(graph), None, ref)


def resolve_measure(ctx: Context, ref: Optional[str]) -> AgreeingMeasure:
    if ref is None or ref == "builtin":
        if ctx.measure is None:
            raise CliError("usage", "this graph has no built-in measure; pass --measure")
        return ctx.measure
    if os.path.exists(ref):
        return load_measure(ref, ctx.equipment)
    name, _, arg = ref.partition(":")
    if name in ("lebesgue", "uniform"):
        return uniform_path_measure(ctx.graph, ctx.equipment)
    if name == "bernoulli":
        return pascal_bernoulli_measure(ctx.graph, parse_weight(arg), ctx.equipment)
    if name == "mixture":
        ps, _, ws = arg.partition(":")
        probs = [parse_weight(x) for x in ps.split(",")]
        weights = [parse_weight(x) for x in ws.split(",")] if ws else [Fraction(1, len(probs))] * len(probs)
        return mixture([pascal_bernoulli_measure(ctx.graph, p, ctx.equipment) for p in probs], weights)
    raise CliError("usage", f"unknown measure {ref!r}")


def resolve_function(ctx: Context, ref: str) -> CylinderFunction:
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            data = json.load(fh)
        table = {tuple(tuple(s) for s in row["path"]): parse_weight(row["value"]) for row in data["table"]}
        return CylinderFunction(int(data["depth"]), table, data.get("name", os.path.basename(ref)))
    name, _, arg = ref.partition(":")
    if name == "first-step":
        return first_step_indicator(ctx.graph, arg or None)
    if name == "first-copy":
        return first_copy_indicator(ctx.graph, int(arg or 0))
    if name == "const":
        return constant_function(ctx.graph, parse_weight(arg or "1"))
    raise CliError("usage", f"unknown function {ref!r}")


def parse_range(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=1, sort_keys=False) + "\n"


def dry(args, **info) -> int:
    sys.stdout.write(dump_json({"dry_run": True, "command": args.command, **info}))
    return 0


# ---------------------------------------------------------------- subcommands


def cmd_graph(args) -> int:
    if args.action == "build":
        ctx = resolve_graph(args.family, "auto", args.depth)
        if args.dry_run:
            return dry(args, levels=[len(lv) for lv in ctx.graph.levels])
        eq = None if args.equipment == "none" else ctx.equipment
        emit(dump_json(graph_to_dict(ctx.graph, eq)), args.out)
        return 0
    graph, eq = load_graph(args.graph)
    if eq is not None:
        bad = validate_equipment(graph, eq)
        if bad is not None:
            raise CliError("validation", f"{bad.kind} at {bad.vertex}: {bad.detail}")
    if args.dry_run:
        return dry(args, graph=args.graph)
    sys.stdout.write(dump_json({"ok": True, "levels": [len(lv) for lv in graph.levels], "equipment": eq is not None}))
    return 0


def cmd_dim(args) -> int:
    ctx = resolve_graph(args.graph, "auto")
    if args.dry_run:
        return dry(args, levels=[len(lv) for lv in ctx.graph.levels])
    if args.vertex:
        sys.stdout.write(f"{dim(ctx.graph, args.vertex)}\n")
        return 0
    level = ctx.graph.depth if args.level is None else args.level
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(["vertex", "dim"])
    for v in ctx.graph.levels[level]:
        w.writerow([v, dim(ctx.graph, v)])
    emit(rows.getvalue(), args.out)
    return 0


def cmd_minimize(args) -> int:
    ctx = resolve_graph(args.graph, args.equipment)
    if args.dry_run:
        return dry(args, levels=[len(lv) for lv in ctx.graph.levels])
    res = minimize(ctx.graph, ctx.equipment, args.depth)
    emit(dump_json(graph_to_dict(res.graph, res.equipment)), args.out)
    if args.map:
        with open(args.map, "w", encoding="utf-8") as fh:
            fh.write(dump_json(res.vertex_map))
    if args.measure_out:
        m = pushforward_measure(res, resolve_measure(ctx, args.measure).truncated(res.graph.depth))
        with open(args.measure_out, "w", encoding="utf-8") as fh:
            fh.write(dump_json(measure_to_dict(m, args.out or "")))
    return 0


def _standardness_inputs(args):
    ctx = resolve_graph(args.graph, args.equipment)
    measure = resolve_measure(ctx, args.measure)
    f = resolve_function(ctx, args.f)
    return ctx, measure, f


def cmd_standardness(args) -> int:
    ctx, measure, f = _standardness_inputs(args)
    ns = parse_range(args.n)
    if max(ns) > measure.depth:
        raise CliError("usage", f"n up to {max(ns)} but the measure has depth {measure.depth}")
    if args.dry_run:
        return dry(args, n=ns, semantics=args.semantics, f=f.name)
    traj = statistic_trajectory(ctx.graph, ctx.equipment, measure, f, ns, Semantics(args.semantics), args.threads, horizon=args.horizon)
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(["n", "S_n", "eps_n", "pairs_evaluated", "semantics"])
    for r in traj.records:
        w.writerow(r.row())
    emit(rows.getvalue(), args.out)
    sys.stderr.write(dump_json({"verdict": traj.verdict, "nonincreasing": traj.nonincreasing}))
    return 0


def cmd_entropy(args) -> int:
    ctx, measure, f = _standardness_inputs(args)
    ns = parse_range(args.n)
    if args.dry_run:
        return dry(args, n=ns, eps=args.eps)
    eps = parse_weight(args.eps)
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(["n", "eps", "entropy", "semantics"])
    for n in ns:
        w.writerow([n, format_weight(eps), epsilon_entropy(ctx.graph, ctx.equipment, measure, f, n, Semantics(args.semantics), eps, args.threads), args.semantics])
    emit(rows.getvalue(), args.out)
    return 0


def cmd_realize(args) -> int:
    filt = load_filtration(args.input)
    if args.dry_run:
        return dry(args, atoms=len(filt.atoms), depth=filt.depth)
    res = realize(filt)
    emit(dump_json(graph_to_dict(res.graph, res.equipment)), args.out)
    if args.measure_out:
        with open(args.measure_out, "w", encoding="utf-8") as fh:
            fh.write(dump_json(measure_to_dict(res.measure, args.out or "")))
    if args.paths_out:
        with open(args.paths_out, "w", encoding="utf-8") as fh:
            fh.write(dump_json({a: [list(s) for s in p] for a, p in res.atom_paths.items()}))
    return 0


def cmd_extremality(args) -> int:
    Ns = parse_range(args.N)
    ctx = resolve_graph(args.graph or f"pascal:{max(Ns)}", "auto")
    measure = resolve_measure(ctx, args.measure)
    if max(Ns) > measure.depth:
        raise CliError("usage", f"N up to {max(Ns)} but the measure has depth {measure.depth}")
    if args.dry_run:
        return dry(args, m=args.m, N=Ns)
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(["N", "m", "spread"])
    for N in Ns:
        w.writerow([N, args.m, repr(extremality_spread(measure, args.m, N, projection_matrix(ctx.equipment, N, args.m)))])
    emit(rows.getvalue(), args.out)
    return 0


def _triple(ref: str) -> MetricTriple:
    if os.path.exists(ref):
        return MetricTriple.load(ref)
    name, _, arg = ref.partition(":")
    if name == "interval":
        return MetricTriple.interval(int(arg or 1000))
    if name == "two-point":
        return MetricTriple.two_point(float(arg or 1.0))
    if name == "one-point":
        return MetricTriple.one_point()
    raise CliError("usage", f"unknown triple {ref!r}")


def cmd_mdist(args) -> int:
    t = _triple(args.triple)
    other = _triple(args.compare) if args.compare else None
    if args.dry_run:
        return dry(args, points=len(t.masses), k=args.k, count=args.count)
    samples = sample_matrix_distribution(t, args.k, args.count, args.seed)
    upper = samples[:, np.triu(np.ones((args.k, args.k), dtype=bool), 1)]
    out = {
        "k": args.k,
        "count": args.count,
        "seed": args.seed,
        "entry_mean": float(upper.mean()),
        "entry_quantiles": {q: float(x) for q, x in zip(("0.1", "0.25", "0.5", "0.75", "0.9"), np.quantile(upper, [0.1, 0.25, 0.5, 0.75, 0.9]))},
        "row_sum_mean": float(samples.sum(axis=2).mean()),
    }
    if other is not None:
        out["compare_score"] = compare(t, other, args.k, args.count, args.seed)
    emit(dump_json(out), args.out)
    return 0


def cmd_sample(args) -> int:
    ctx = resolve_graph(args.graph, "auto")
    measure = resolve_measure(ctx, args.measure)
    if args.dry_run:
        return dry(args, n=args.n, count=args.count, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    sampler = PathSampler(measure)
    lines = [json.dumps([list(s) for s in sampler.sample(args.n, rng)], ensure_ascii=False) for _ in range(args.count)]
    emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_rwrs(args) -> int:
    if args.dry_run:
        return dry(args, n=args.n, count=args.count)
    seeds = np.random.SeedSequence(args.seed).generate_state(2 * args.count)
    lines = [
        json.dumps([list(s) for s in rwrs_words_sample(int(seeds[2 * i]), int(seeds[2 * i + 1]), args.n)], ensure_ascii=False)
        for i in range(args.count)
    ]
    emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    schemas = ", ".join(f"{k}={v}" for k, v in SCHEMAS.items())
    p = argparse.ArgumentParser(prog="filtra", description="Filtrations of graded graphs: trees, standardness, minimal models.")
    p.add_argument("--version", action="version", version=f"filtra {__version__} ({schemas})")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True, threads=False):
        sp.add_argument("--dry-run", action="store_true", help="validate inputs and exit without computing")
        if out:
            sp.add_argument("--out", help="output file (default: stdout)")
        if threads:
            sp.add_argument("--threads", type=int, default=1, help="worker threads for pair distances")
        return sp

    g = sub.add_parser("graph", help="build or validate graph JSON")
    gsub = g.add_subparsers(dest="action", required=True)
    gb = common(gsub.add_parser("build"))
    gb.add_argument("--family", required=True, help="pascal, glimm[:r1,r2..|:arity], young, ordered_pairs, words_Z, two_state:p:depth, fibonacci:depth")
    gb.add_argument("--depth", type=int)
    gb.add_argument("--equipment", choices=["central", "none", "auto"], default="auto")
    gv = common(gsub.add_parser("validate"), out=False)
    gv.add_argument("--graph", required=True)
    g.set_defaults(func=cmd_graph)

    d = common(sub.add_parser("dim", help="path counts"))
    d.add_argument("--graph", required=True)
    d.add_argument("--vertex")
    d.add_argument("--level", type=int)
    d.set_defaults(func=cmd_dim)

    mz = common(sub.add_parser("minimize", help="minimal-model quotient"))
    mz.add_argument("--graph", required=True)
    mz.add_argument("--equipment", choices=["central", "auto"], default="auto")
    mz.add_argument("--depth", type=int)
    mz.add_argument("--map", help="write the vertex map here")
    mz.add_argument("--measure", help="measure to push forward")
    mz.add_argument("--measure-out")
    mz.set_defaults(func=cmd_minimize)

    for name, fn, helptext in (
        ("standardness", cmd_standardness, "criterion statistic trajectory (CSV)"),
        ("entropy", cmd_entropy, "epsilon-entropy of the criterion semimetric"),
    ):
        sp = common(sub.add_parser(name, help=helptext), threads=True)
        sp.add_argument("--graph", required=True)
        sp.add_argument("--equipment", choices=["central", "auto"], default="auto")
        sp.add_argument("--measure", help="JSON file, lebesgue, bernoulli:p, mixture:p1,p2[:w1,w2] or builtin")
        sp.add_argument("--f", default="first-step", help="first-step[:vertex], first-copy[:copy], const[:c] or JSON table")
        sp.add_argument("--n", required=True, help="a..b, or a comma list")
        sp.add_argument("--semantics", choices=[s.value for s in Semantics], default=Semantics.ORBIT.value)
        if name == "entropy":
            sp.add_argument("--eps", default="1/10")
        else:
            sp.add_argument("--horizon", type=int, help="keep only this many top generations of each tree")
        sp.set_defaults(func=fn)

    rz = common(sub.add_parser("realize", help="Markov realization of a finite filtration"))
    rz.add_argument("--in", dest="input", required=True)
    rz.add_argument("--measure-out")
    rz.add_argument("--paths-out")
    rz.set_defaults(func=cmd_realize)

    ex = common(sub.add_parser("extremality", help="projection spread diagnostic (CSV)"))
    ex.add_argument("--graph", help="graph reference (default pascal:max N)")
    ex.add_argument("--measure", required=True)
    ex.add_argument("--m", type=int, required=True)
    ex.add_argument("--N", required=True, help="comma list or a..b")
    ex.set_defaults(func=cmd_extremality)

    md = common(sub.add_parser("mdist", help="matrix distribution summary"))
    md.add_argument("--triple", required=True, help="JSON file, interval:size, two-point[:d], one-point")
    md.add_argument("--compare", help="second triple to score against")
    md.add_argument("--k", type=int, default=4)
    md.add_argument("--count", type=int, default=10_000)
    md.add_argument("--seed", type=int, required=True)
    md.set_defaults(func=cmd_mdist)

    sa = common(sub.add_parser("sample", help="sample paths, one JSON path per line"))
    sa.add_argument("--graph", required=True)
    sa.add_argument("--measure", help="measure reference")
    sa.add_argument("--n", type=int, required=True)
    sa.add_argument("--count", type=int, default=1)
    sa.add_argument("--seed", type=int, required=True)
    sa.set_defaults(func=cmd_sample)

    rw = common(sub.add_parser("rwrs", help="random-walk-in-random-scenery paths in words_Z"))
    rw.add_argument("--n", type=int, required=True)
    rw.add_argument("--count", type=int, default=1)
    rw.add_argument("--seed", type=int, required=True)
    rw.set_defaults(func=cmd_rwrs)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        err = {"error": exc.kind, "message": str(exc)}
        code = exc.code
    except SizeError as exc:
        err, code = {"error": "size", "message": str(exc)}, 2
    except (ValidationError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        err, code = {"error": "validation", "message": str(exc)}, 1
    sys.stderr.write(json.dumps(err, ensure_ascii=False) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
