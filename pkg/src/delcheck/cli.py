"""Command-line interface.

Exit codes: 0 verdict true / 1 verdict false (or unsat, or non-bisimilar,
or S5 violations found) / 2 error / 3 expectation mismatch / 4 refused as
oversized.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
import time
from dataclasses import dataclass

from . import fastcheck, kripke, oracle, reduction, semantics
from .formula import FormulaError, formula_stats, parse_formula, render_formula
from .kripke import ModelError, load_instance, save_instance
from .oracle import OracleError
from .reduction import ReductionError

OK_TRUE, OK_FALSE, ERROR, MISMATCH, OVERSIZE = 0, 1, 2, 3, 4

DEFAULT_WORLD_CAP = 200_000
DEFAULT_CALL_BUDGET = 2_000_000

UserError = (FormulaError, ModelError, OracleError, ReductionError, fastcheck.FragmentError)


@dataclass
class RunReport:
    verdict: bool | None
    engine: str
    wall_ms: float
    recursive_calls: int | None = None
    product_worlds_materialized: int | None = None
    memo_entries: int | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "engine": self.engine,
            "wall_ms": round(self.wall_ms, 3),
            "recursive_calls": self.recursive_calls,
            "product_worlds_materialized": self.product_worlds_materialized,
        }
        if self.engine == "fast":
            out["memo_entries"] = self.memo_entries
        if self.error is not None:
            out["error"] = self.error
        return out


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    inst = load_instance(args.instance)
    if inst.formula is None:
        raise ModelError("the instance has no formula to check")
    pm = inst.sole_model()
    start = time.perf_counter()
    if args.engine == "fast":
        if pm.pointedness != "single":
            raise fastcheck.FragmentError(
                "instance outside the fragment: multi-pointed model"
            )
        fragment = fastcheck.FragmentInstance(pm.model, pm.point, inst.formula)
        decision = fastcheck.accepts_fragment(fragment)
        if not decision.accepted:
            raise fastcheck.FragmentError(
                f"instance outside the fragment: {decision.reason}"
            )
        probe = fastcheck.fragment_check_probe(fragment)
        report = RunReport(
            probe.verdict,
            "fast",
            (time.perf_counter() - start) * 1000,
            recursive_calls=probe.recursive_calls,
            memo_entries=probe.memo_entries,
        )
    else:
        ctx = semantics.EvalContext()
        verdict = semantics.evaluate_pointed(pm, inst.formula, ctx)
        report = RunReport(
            verdict,
            "naive",
            (time.perf_counter() - start) * 1000,
            recursive_calls=ctx.calls,
            product_worlds_materialized=ctx.product_worlds,
        )
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        _say(args, f"verdict: {str(report.verdict).lower()}  "
                   f"[{report.engine}, {report.wall_ms:.1f} ms, "
                   f"{report.recursive_calls} calls]")
    if args.expect:
        if inst.expected is None:
            raise ModelError("--expect given but the instance has no expected verdict")
        if report.verdict != inst.expected:
            _say(args, f"expected {inst.expected}, got {report.verdict}")
            return MISMATCH
    return OK_TRUE if report.verdict else OK_FALSE


# ---------------------------------------------------------------------------
# update
# ---------------------------------------------------------------------------

def cmd_update(args) -> int:
    model_file = load_instance(args.model)
    event_file = load_instance(args.event)
    pm = model_file.sole_model()
    pem = event_file.sole_event()
    product = semantics.product_update(pm.model, pem.model)
    designated = [
        semantics.compose_world(w, e)
        for w in sorted(pm.designated)
        for e in sorted(pem.designated)
        if semantics.compose_world(w, e) in product.worlds
    ]
    doc = {
        "agents": sorted(set(model_file.agents) | set(event_file.agents)),
        "props": sorted(
            set(model_file.props)
            | set(event_file.props)
            | {p for ps in product.valuation.values() for p in ps}
        ),
        "models": {
            "product": {
                "s5": False,
                "worlds": sorted(product.worlds),
                "relations": {
                    a: [list(p) for p in sorted(pairs)]
                    for a, pairs in sorted(product.relations.items())
                },
                "valuation": {
                    w: sorted(product.valuation[w])
                    for w in sorted(product.worlds)
                    if product.valuation[w]
                },
                "designated": designated,
            }
        },
        "formula": None,
        "expected": None,
    }
    save_instance(args.out, doc)
    if product.is_empty:
        _say(args, f"empty product written to {args.out}")
        return OK_FALSE
    _say(args, f"{len(product.worlds)} product worlds written to {args.out}")
    return OK_TRUE


# ---------------------------------------------------------------------------
# reduce
# ---------------------------------------------------------------------------

def _natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def _load_reduce_source(args):
    text = _read(args.input)
    if args.construction == "delta2":
        matrix = parse_formula(text.strip())
        if args.vars:
            variables = args.vars.split(",")
        else:
            variables = sorted(formula_stats(matrix).props_used, key=_natural_key)
        return (matrix, variables), None
    stripped = [ln for ln in text.splitlines() if ln.strip()]
    if stripped and (stripped[0].startswith("p ") or stripped[0].startswith("c")):
        q = oracle.load_qdimacs(text)
    else:
        q = oracle.parse_qbf_text(text)
    normalized = None
    if not q.is_alternating():
        normalized = oracle.normalize_alternating(q)
    return q if normalized is None else normalized, q


def cmd_reduce(args) -> int:
    source, original = _load_reduce_source(args)
    estimate = reduction.instance_size_estimate(args.construction, source)
    _say(
        args,
        f"size estimate: {estimate.initial_worlds} initial worlds, "
        f"<= {estimate.max_product_worlds} product worlds, "
        f"{estimate.formula_nodes} formula nodes",
    )
    cap = int(os.environ.get("DELCHECK_MAX_WORLDS", DEFAULT_WORLD_CAP))
    if estimate.max_product_worlds > cap:
        print(
            f"refusing: bound {estimate.max_product_worlds} exceeds the cap "
            f"{cap} (override with DELCHECK_MAX_WORLDS)",
            file=sys.stderr,
        )
        return OVERSIZE
    inst = reduction.generate(
        args.construction, source, compute_expected=not args.no_oracle
    )
    doc = inst.document()
    if original is not None and original.prefix != source.prefix:
        doc["provenance"]["normalized_from"] = oracle.render_qbf_text(original).strip()
    save_instance(args.out, doc)
    _say(args, f"instance written to {args.out} (expected: {inst.expected})")
    return OK_TRUE


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def cmd_qbf(args) -> int:
    q = oracle.parse_qbf_text(_read(args.input))
    verdict = oracle.qbf_eval(q)
    _say(args, "true" if verdict else "false")
    return OK_TRUE if verdict else OK_FALSE


def cmd_lexmax(args) -> int:
    matrix = parse_formula(_read(args.input).strip())
    if args.vars:
        variables = args.vars.split(",")
    else:
        variables = sorted(formula_stats(matrix).props_used, key=_natural_key)
    best = oracle.lexmax_sat(matrix, variables)
    if best is None:
        _say(args, "unsat")
        return OK_FALSE
    _say(args, " ".join(f"{x}={int(best[x])}" for x in variables))
    return OK_TRUE


def cmd_bisim(args) -> int:
    m1 = load_instance(args.first).sole_model().model
    m2 = load_instance(args.second).sole_model().model
    verdict = oracle.bisimilar(m1, args.w1, m2, args.w2)
    _say(args, "bisimilar" if verdict else "not bisimilar")
    return OK_TRUE if verdict else OK_FALSE


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    failures = 0
    for name, pm in inst.models.items():
        report = kripke.validate_s5(pm.model.relations, pm.model.worlds)
        label = "ok" if report.ok else f"{len(report.violations)} violations"
        _say(args, f"model {name}: {label}")
        for v in report.violations:
            _say(args, f"  agent {v.agent}: missing {v.kind} pair {v.pair}")
        failures += 0 if report.ok else 1
    for name, pem in inst.events.items():
        report = kripke.validate_s5(pem.model.relations, pem.model.events)
        label = "ok" if report.ok else f"{len(report.violations)} violations"
        _say(args, f"event model {name}: {label}")
        for v in report.violations:
            _say(args, f"  agent {v.agent}: missing {v.kind} pair {v.pair}")
        failures += 0 if report.ok else 1
    return OK_TRUE if failures == 0 else OK_FALSE


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _parse_range(text: str) -> range:
    m = re.fullmatch(r"(\d+)[:.]{1,2}(\d+)", text)
    if m is None:
        raise ReductionError(f"bad range {text!r}, expected like 4:10")
    return range(int(m.group(1)), int(m.group(2)) + 1)


def _bench_nested(args, rows: list[dict]) -> None:
    for k in _parse_range(args.k_range):
        inst = fastcheck.nested_update_family(k)
        t0 = time.perf_counter()
        probe = fastcheck.fragment_check_probe(inst)
        rows.append(
            {
                "family": "nested",
                "k": k,
                "engine": "fast",
                "verdict": probe.verdict,
                "ms": round((time.perf_counter() - t0) * 1000, 3),
                "calls": probe.recursive_calls,
                "memo_entries": probe.memo_entries,
            }
        )
        t0 = time.perf_counter()
        try:
            naive = semantics.call_count_probe(
                inst.model, inst.world, inst.formula, max_calls=args.budget
            )
            rows.append(
                {
                    "family": "nested",
                    "k": k,
                    "engine": "naive",
                    "verdict": naive.verdict,
                    "ms": round((time.perf_counter() - t0) * 1000, 3),
                    "calls": naive.recursive_calls,
                    "memo_entries": "",
                }
            )
        except semantics.CallBudgetExceeded as exc:
            rows.append(
                {
                    "family": "nested",
                    "k": k,
                    "engine": "naive",
                    "verdict": "timeout",
                    "ms": round((time.perf_counter() - t0) * 1000, 3),
                    "calls": exc.calls,
                    "memo_entries": "",
                }
            )


def _bench_reduction_scaling(args, rows: list[dict]) -> None:
    from .formula import Atom

    for n in _parse_range(args.k_range):
        if n % 2 != 0:
            continue
        prefix = tuple(
            ("e" if i % 2 == 0 else "a", f"x{i+1}") for i in range(n)
        )
        q = oracle.Qbf(prefix, Atom("x1"))
        for tag in ("multi1", "single2"):
            inst = reduction.generate(tag, q, compute_expected=False)
            ctx = semantics.EvalContext(max_calls=args.budget)
            t0 = time.perf_counter()
            try:
                verdict = semantics.evaluate_pointed(inst.pointed_model, inst.formula, ctx)
            except semantics.CallBudgetExceeded:
                verdict = "timeout"
            rows.append(
                {
                    "family": f"reduction-scaling/{tag}",
                    "k": n,
                    "engine": "naive",
                    "verdict": verdict,
                    "ms": round((time.perf_counter() - t0) * 1000, 3),
                    "calls": ctx.calls,
                    "memo_entries": "",
                }
            )


def cmd_bench(args) -> int:
    rows: list[dict] = []
    if args.family == "nested":
        _bench_nested(args, rows)
    else:
        _bench_reduction_scaling(args, rows)
    rows.sort(key=lambda r: (r["family"], r["k"], r["engine"]))
    buffer = io.StringIO()
    writer = csv.DictWriter(
        buffer, fieldnames=["family", "k", "engine", "verdict", "ms", "calls", "memo_entries"]
    )
    writer.writeheader()
    writer.writerows(rows)
    text = buffer.getvalue()
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not args.quiet:
        for row in rows:
            print(
                f"  {row['family']:>24} k={row['k']:<3} {row['engine']:<5} "
                f"verdict={row['verdict']} calls={row['calls']} ms={row['ms']}",
                file=sys.stderr,
            )
    return OK_TRUE


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def add_flags(target, at_top: bool) -> None:
        # subcommand copies use SUPPRESS so they never overwrite a value
        # already parsed from before the subcommand
        default = False if at_top else argparse.SUPPRESS
        target.add_argument(
            "--json", action="store_true", default=default,
            help="machine-readable output",
        )
        target.add_argument(
            "--quiet", action="store_true", default=default,
            help="suppress chatter",
        )

    parser = argparse.ArgumentParser(
        prog="delcheck",
        description="Explicit-state model checking for epistemic update logic",
    )
    add_flags(parser, at_top=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name: str, **kwargs):
        p = sub.add_parser(name, **kwargs)
        add_flags(p, at_top=False)
        return p

    p = add_parser("check", help="decide an instance file")
    p.add_argument("instance")
    p.add_argument("--engine", choices=("naive", "fast"), default="naive")
    p.add_argument("--expect", action="store_true",
                   help="exit 3 when the verdict differs from the file's expected field")
    p.set_defaults(func=cmd_check)

    p = add_parser("update", help="write the product of a model and an event model")
    p.add_argument("model")
    p.add_argument("event")
    p.add_argument("out")
    p.set_defaults(func=cmd_update)

    p = add_parser("reduce", help="generate an instance from a QBF or formula")
    p.add_argument("input")
    p.add_argument("--construction", choices=reduction.CONSTRUCTIONS, required=True)
    p.add_argument("--out", default="instance.json")
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the oracle; write expected: null")
    p.add_argument("--vars", help="comma-separated variable ordering (delta2)")
    p.set_defaults(func=cmd_reduce)

    p = add_parser("qbf", help="evaluate a QBF file")
    p.add_argument("input")
    p.set_defaults(func=cmd_qbf)

    p = add_parser("lexmax", help="lexicographically maximal satisfying assignment")
    p.add_argument("input")
    p.add_argument("--vars", help="comma-separated variable ordering")
    p.set_defaults(func=cmd_lexmax)

    p = add_parser("bisim", help="decide bisimilarity of two pointed models")
    p.add_argument("first")
    p.add_argument("w1")
    p.add_argument("second")
    p.add_argument("w2")
    p.set_defaults(func=cmd_bisim)

    p = add_parser("validate", help="S5 and structural checks on a file")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = add_parser("bench", help="benchmark the engines")
    p.add_argument("--family", choices=("nested", "reduction-scaling"), required=True)
    p.add_argument("--k-range", default="4:10")
    p.add_argument("--csv", help="write the CSV here instead of stdout")
    p.add_argument("--budget", type=int, default=DEFAULT_CALL_BUDGET,
                   help="naive-engine call budget per run")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    sys.setrecursionlimit(100_000)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
