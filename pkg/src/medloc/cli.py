"""Command-line front end.

Exit codes: 0 success, 2 invalid input or parameters, 3 mechanism does not fit
the instance, 4 audit found a counterexample, 5 campaign bound violated.
All output is JSON on stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

from .ic_audit import (
    AuditReport,
    audit_agent_side,
    audit_mediator_side,
    audit_naive,
    default_candidates,
    default_hierarchy_candidates,
)
from .mechanisms import (
    HierarchyInstance,
    Instance,
    InstanceError,
    MechanismOutcome,
    MetricShapeError,
    get_mechanism,
    instance_to_hierarchy,
    iwmm,
)
from .instance_io import (
    GeneratorParams,
    family_ex51,
    family_ex61,
    fig1_tree,
    gen_random,
    gen_random_hierarchy,
    parse,
    parse_point_label,
    point_label,
    sec6_example,
    serialize,
)
from .oracle import CostReport, competitive_report
from .tree_metric import MetricError, as_rational, format_rational

EXIT_OK, EXIT_INPUT, EXIT_MISMATCH, EXIT_COUNTEREXAMPLE, EXIT_BOUND = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


# -- rendering ---------------------------------------------------------------


def decimal6(q: Fraction) -> str:
    """Six significant digits, display only."""
    with localcontext() as ctx:
        ctx.prec = 40
        return f"{Decimal(q.numerator) / Decimal(q.denominator):.6g}"


def _rat(q: Fraction | None) -> dict | None:
    if q is None:
        return None
    return {"exact": format_rational(q), "decimal": decimal6(q)}


def digest(inst) -> str:
    return "sha256:" + hashlib.sha256(serialize(inst).encode("utf-8")).hexdigest()


def _outcome_json(outcome: MechanismOutcome) -> dict:
    out: dict = {"kind": outcome.kind}
    if outcome.kind == "deterministic":
        out["location"] = point_label(outcome.location)
    dist = outcome.distribution
    out["distribution"] = {point_label(p): format_rational(pr) for p, pr in dist.support}
    out["distribution_decimal"] = {point_label(p): decimal6(pr) for p, pr in dist.support}
    diag = outcome.diagnostics
    medians = getattr(diag, "medians", None) or (diag.get("medians") if isinstance(diag, dict) else None)
    if medians is not None:
        out["medians"] = [point_label(p) for p in medians]
    if hasattr(diag, "root"):
        out["trm_root"] = point_label(diag.root)
        out["trm_vertices"] = [
            {
                "vertex": point_label(rec.point),
                "size": rec.size,
                "treesize": rec.treesize,
                "in_x": rec.in_x,
                "p": format_rational(rec.p),
            }
            for rec in diag.records
        ]
    return out


def _cost_json(rep: CostReport) -> dict:
    return {
        "cost": _rat(rep.cost),
        "optimal_location": point_label(rep.optimal_location),
        "optimal_cost": _rat(rep.optimal_cost),
        "ratio": _rat(rep.ratio),
        "ratio_infinite": rep.infinite,
    }


def _audit_json(rep: AuditReport) -> dict:
    out = {
        "mechanism": rep.mechanism,
        "side": rep.side,
        "deviations_tested": rep.deviations_tested,
        "verdict": rep.verdict,
        "counterexample": None,
    }
    cex = rep.counterexample
    if cex is not None:
        out["counterexample"] = {
            "deviator": cex.deviator,
            "truthful_cost": _rat(cex.truthful_cost),
            "deviating_cost": _rat(cex.deviating_cost),
            "description": cex.description,
        }
    return out


# -- helpers -----------------------------------------------------------------


def _load(path: str):
    try:
        if path == "-":
            text = sys.stdin.buffer.read()
        else:
            with open(path, "rb") as fh:
                text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {path}: {exc}") from None
    try:
        return parse(text, default_ties=True)
    except (InstanceError, MetricError, UnicodeDecodeError) as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc}") from None


def _with_z(inst, text: str | None):
    if text is None:
        return inst
    try:
        z = parse_point_label(inst.metric, text)
    except (MetricError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"--z: {exc}") from None
    if isinstance(inst, Instance):
        return inst.with_z(z)
    nodes = dict(inst.nodes)
    nodes[inst.root] = type(nodes[inst.root])(inst.root, nodes[inst.root].children, None, z)
    return HierarchyInstance(inst.metric, inst.root, nodes)


def _run(inst, mechanism: str) -> MechanismOutcome:
    name = mechanism.replace("_", "-")
    if name == "iwmm":
        h = instance_to_hierarchy(inst) if isinstance(inst, Instance) else inst
        return iwmm(h)
    if isinstance(inst, HierarchyInstance):
        raise CliError(EXIT_MISMATCH, f"{mechanism} needs a single-level instance; got a hierarchy")
    try:
        spec = get_mechanism(mechanism)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    try:
        return spec.run(inst)
    except MetricShapeError as exc:
        raise CliError(EXIT_MISMATCH, f"{mechanism}: {exc}") from None


def _range(text: str, conv=int) -> tuple:
    lo, sep, hi = text.partition(":")
    try:
        lo_v = conv(lo)
        hi_v = conv(hi) if sep else lo_v
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    return (lo_v, hi_v)


def _rational_arg(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _header(command: Sequence[str]) -> dict:
    return {"command": list(command)}


# -- commands ----------------------------------------------------------------


def cmd_solve(args, command) -> tuple[dict, int]:
    inst = _with_z(_load(args.instance), args.z)
    outcome = _run(inst, args.mechanism)
    report = _header(command)
    report["instance_digest"] = digest(inst)
    report["mechanism"] = args.mechanism
    report["outcome"] = _outcome_json(outcome)
    report["cost_report"] = _cost_json(competitive_report(inst, outcome))
    return report, EXIT_OK


def cmd_audit(args, command) -> tuple[dict, int]:
    inst = _load(args.instance)
    if args.side == "naive":
        h = instance_to_hierarchy(inst) if isinstance(inst, Instance) else inst
        if args.mechanism not in ("iwmm", "direct-median", "direct_median"):
            raise CliError(EXIT_MISMATCH, "naive audits support iwmm and direct-median")
        cands = default_hierarchy_candidates(h, args.samples_per_edge, args.seed)
        rep = audit_naive(h, args.mechanism, cands)
    else:
        if isinstance(inst, HierarchyInstance):
            raise CliError(EXIT_MISMATCH, f"{args.side}-side audits need a single-level instance")
        try:
            spec = get_mechanism(args.mechanism)
        except ValueError as exc:
            raise CliError(EXIT_MISMATCH, str(exc)) from None
        if spec.line_only and not inst.metric.is_path():
            raise CliError(EXIT_MISMATCH, f"{spec.name} needs a path metric")
        cands = default_candidates(inst, args.samples_per_edge, args.seed)
        if args.side == "agent":
            rep = audit_agent_side(inst, spec, cands)
        else:
            rep = audit_mediator_side(inst, spec, cands, mode=args.mode)
    report = _header(command)
    report["instance_digest"] = digest(inst)
    report["seed"] = args.seed
    report["samples_per_edge"] = args.samples_per_edge
    report["candidates"] = len(cands)
    report["audit"] = _audit_json(rep)
    return report, EXIT_OK if rep.clean else EXIT_COUNTEREXAMPLE


def _campaign_trial(job) -> dict:
    mechanism, params, index = job
    if mechanism == "iwmm":
        inst = gen_random_hierarchy(params)
        outcome = iwmm(inst)
    else:
        inst = gen_random(params)
        outcome = get_mechanism(mechanism).run(inst)
    rep = competitive_report(inst, outcome)
    row = {
        "index": index,
        "seed": params.seed,
        "instance_digest": digest(inst),
        "n": inst.n,
        "ratio": _rat(rep.ratio),
        "ratio_infinite": rep.infinite,
    }
    if mechanism == "iwmm":
        row["depth"] = inst.depth
    return row


def cmd_campaign(args, command) -> tuple[dict, int]:
    if args.trials < 0:
        raise CliError(EXIT_INPUT, "--trials must be >= 0")
    mech = args.mechanism.replace("-", "_")
    if mech != "iwmm":
        try:
            spec = get_mechanism(mech)
        except ValueError as exc:
            raise CliError(EXIT_INPUT, str(exc)) from None
        mech = spec.name
    path_only = args.path_only or (mech != "iwmm" and get_mechanism(mech).line_only)
    try:
        base = GeneratorParams(
            seed=args.seed,
            vertices=args.vertices,
            length=args.lengths,
            length_grid=args.length_grid,
            mediators=args.mediators,
            agents=args.agents,
            interior_prob=args.interior_prob,
            path_only=path_only,
            depth=args.depth,
            branching=args.branching,
        )
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    jobs = [
        (mech, GeneratorParams(**{**base.__dict__, "seed": args.seed + i}), i)
        for i in range(args.trials)
    ]
    if args.jobs > 1 and jobs:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_campaign_trial, jobs))
    else:
        rows = [_campaign_trial(j) for j in jobs]

    finite = [as_rational(r["ratio"]["exact"]) for r in rows if not r["ratio_infinite"]]
    infinite = any(r["ratio_infinite"] for r in rows)
    report = _header(command)
    report.update({
        "mechanism": mech,
        "seed": args.seed,
        "trials": args.trials,
        "generator": {
            "vertices": list(base.vertices),
            "lengths": [format_rational(x) for x in base.length],
            "length_grid": base.length_grid,
            "mediators": list(base.mediators),
            "agents": list(base.agents),
            "interior_prob": format_rational(base.interior_prob),
            "path_only": base.path_only,
            "depth": list(base.depth) if base.depth else None,
            "branching": list(base.branching),
        },
        "results": rows,
        "max_ratio": None if infinite else _rat(max(finite)) if finite else None,
        "max_ratio_infinite": infinite,
        "mean_ratio": _rat(sum(finite, Fraction(0)) / len(finite)) if finite else None,
    })
    code = EXIT_OK
    if args.assert_bound is not None:
        violations = [
            r["index"] for r in rows
            if r["ratio_infinite"] or as_rational(r["ratio"]["exact"]) > args.assert_bound
        ]
        report["bound"] = _rat(args.assert_bound)
        report["bound_violations"] = violations
        if violations:
            code = EXIT_BOUND
    return report, code


def cmd_family(args, command) -> tuple[str, int]:
    try:
        if args.name == "ex51":
            inst = family_ex51(args.l, args.h, args.r, args.variant, args.z)
        elif args.name == "ex61":
            inst = family_ex61(args.r, args.s, args.variant)
        elif args.name == "fig1":
            inst = fig1_tree()
        else:
            inst = sec6_example()
    except (InstanceError, MetricError, ValueError) as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    return serialize(inst), EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="medloc", description="Facility location with strategic mediators.")
    ap.add_argument("--timing", action="store_true", help="add elapsed wall-clock seconds (breaks byte-identical output)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("solve", help="run a mechanism and report its cost against the optimum")
    sp.add_argument("--mechanism", required=True, choices=["wmm", "tprm", "trm", "iwmm", "opt", "global-median"])
    sp.add_argument("--instance", required=True, help="instance file, or - for stdin")
    sp.add_argument("--z", help="override the global tie-break point (vertex id or a|b@offset)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("audit", help="search for a profitable deviation")
    sp.add_argument("--side", required=True, choices=["agent", "mediator", "naive"])
    sp.add_argument("--mechanism", required=True)
    sp.add_argument("--instance", required=True)
    sp.add_argument("--samples-per-edge", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mode", choices=["median", "lists"], default="median", help="mediator-side deviation space")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("campaign", help="competitive ratios over seeded random instances")
    sp.add_argument("--mechanism", required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--assert-bound", type=_rational_arg, help="exit 5 if any ratio exceeds this")
    sp.add_argument("--vertices", type=_range, default=(1, 8))
    sp.add_argument("--lengths", type=lambda t: _range(t, as_rational), default=(Fraction(1), Fraction(4)))
    sp.add_argument("--length-grid", type=int, default=4)
    sp.add_argument("--mediators", type=_range, default=(1, 4))
    sp.add_argument("--agents", type=_range, default=(1, 4))
    sp.add_argument("--interior-prob", type=_rational_arg, default=Fraction(1, 3))
    sp.add_argument("--path-only", action="store_true")
    sp.add_argument("--depth", type=_range, default=None, help="hierarchy depth range (iwmm)")
    sp.add_argument("--branching", type=_range, default=(1, 3))
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_campaign)

    sp = sub.add_parser("family", help="emit a named instance document")
    sp.add_argument("--name", required=True, choices=["ex51", "ex61", "fig1", "sec6"])
    sp.add_argument("--l", type=_rational_arg, default=Fraction(0))
    sp.add_argument("--h", type=_rational_arg, default=Fraction(1))
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--s", type=int, default=3)
    sp.add_argument("--variant", type=int, default=1)
    sp.add_argument("--z", type=_rational_arg, default=None, help="ex51 tie-break position on [0, 1]")
    sp.set_defaults(func=cmd_family)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        result, code = args.func(args, argv)
    except CliError as exc:
        print(f"medloc: {exc}", file=sys.stderr)
        return exc.code
    if isinstance(result, str):
        sys.stdout.write(result)
    else:
        if args.timing:
            result["elapsed_seconds"] = round(time.perf_counter() - start, 6)
        sys.stdout.write(json.dumps(result, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
