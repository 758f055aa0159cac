"""Command-line entry point: ``spmiti validate|prepare|optimize|bench|explain``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from collections.abc import Sequence

from .bench import run_bench, to_csv
from .errors import ConfigError, SpmitiError
from .explorer import (
    OPTIMIZED,
    PLAIN,
    TOGGLES,
    SearchConfig,
    SearchResult,
    SpaceOptions,
    TraceNode,
    ccs_overheads,
    explore,
    optimize_monolithic,
    optimize_per_ccs,
    risk_game,
    to_dot,
)
from .games import ScriptedGame, path_label
from .jsonio import read_json
from .kb import load_kb
from .model import load_model
from .prep import ccs_stats, compute_ccs, format_ccs_row
from .solution import Solution

SCHEMA_VERSION = 1

logger = logging.getLogger("spmiti")


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _margins(text: str) -> dict[str, float]:
    names = {"f": "futility_margin", "ef": "ext_futility_margin", "rz": "razor_margin"}
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, _, value = item.partition("=")
        if key.strip() not in names:
            raise argparse.ArgumentTypeError(f"unknown margin {key!r}; use f, ef or rz")
        try:
            out[names[key.strip()]] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad margin value {value!r}") from None
    return out


def _number(x: float) -> float | None:
    return None if math.isinf(x) else x


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kb", required=True, help="knowledge base JSON file")
    p.add_argument("--model", required=True, help="application model JSON file")


def _add_search(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int, default=None, help="search depth (default 3, or the scripted tree's)")
    p.add_argument("--engine", choices=(PLAIN, OPTIMIZED), default=OPTIMIZED)
    p.add_argument("--enable", default=None,
                   help=f"comma-separated optimizations to enable (default all): {','.join(TOGGLES)}")
    p.add_argument("--margins", type=_margins, default={},
                   help="forward-pruning margins, e.g. f=0.5,ef=1,rz=2 (default inf)")
    p.add_argument("--aspiration-width", type=float, default=1.0)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--warm-start", default=None, help="previous JSON report used to center the window")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sigma", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exhaustive", action="store_true", help="enumerate every valid solution")
    p.add_argument("--skip-discouraged", action="store_true")
    p.add_argument("--seed-solution", default=None, help="JSON list of {cp, artifact} to start from")
    p.add_argument("--limit", type=int, default=None, help="candidate solutions per CCS")
    p.add_argument("--monolithic", action="store_true", help="one tree instead of one per CCS")
    p.add_argument("--scripted", action="store_true",
                   help="score states from the model's scripted_tree (test fixtures)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spmiti", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and validate a KB and a model")
    _add_inputs(p)

    p = sub.add_parser("prepare", help="compute code correlation sets")
    _add_inputs(p)
    p.add_argument("--name", default=None, help="also print a one-line summary with this name")

    p = sub.add_parser("optimize", help="search for the best protection solution")
    _add_inputs(p)
    _add_search(p)
    p.add_argument("--report", choices=("json", "text"), default="json")

    p = sub.add_parser("explain", help="render the search tree")
    _add_inputs(p)
    _add_search(p)
    p.add_argument("--dot", action="store_true", help="emit Graphviz DOT (the only format)")

    p = sub.add_parser("bench", help="scaling benchmark on synthetic instances, CSV output")
    p.add_argument("--po-counts", type=_ints, default=[4, 8, 16, 32, 64])
    p.add_argument("--path-counts", type=_ints, default=[4])
    p.add_argument("--depths", type=_ints, default=[3, 4])
    p.add_argument("--engines", default="plain,optimized")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true", help="run cells beyond the guardrails")
    p.add_argument("--out", default=None, help="write the CSV here instead of stdout")
    return parser


def _search_config(args, depth: int) -> SearchConfig:
    kwargs = dict(
        depth=depth,
        aspiration_half_width=args.aspiration_width,
        top_n=args.top_n,
        workers=args.workers,
        **args.margins,
    )
    if args.warm_start:
        kwargs["aspiration_center"] = float(read_json(args.warm_start)["residual"])
    if args.engine == PLAIN:
        return SearchConfig(engine=PLAIN, **kwargs)
    if args.enable is None:
        return SearchConfig(engine=OPTIMIZED, **kwargs)
    return SearchConfig.only(*[t.strip() for t in args.enable.split(",") if t.strip()], **kwargs)


def _space(args) -> SpaceOptions:
    start = None
    if args.seed_solution:
        start = Solution.from_json(read_json(args.seed_solution))
    return SpaceOptions(sigma=args.sigma, seed=args.seed, start=start,
                        skip_discouraged=args.skip_discouraged, limit=args.limit,
                        exhaustive=args.exhaustive)


def _run_search(args, trace: list[TraceNode] | None = None):
    kb = load_kb(args.kb)
    model = load_model(args.model, kb)
    if args.scripted:
        game = ScriptedGame.from_model(model)
        depth = args.depth or int(model.extras["scripted_tree"].get("depth", 3))
        result = explore(game, _search_config(args, depth), trace)
        return kb, model, [], game, result
    depth = args.depth or 3
    cfg = _search_config(args, depth)
    ccs = compute_ccs(model, kb)
    space = _space(args)
    if trace is not None:
        game = risk_game(model, kb, ccs, ccs, space)
        return kb, model, ccs, game, explore(game, cfg, trace)
    if args.monolithic:
        result = optimize_monolithic(model, kb, cfg, space, ccs_list=ccs)
    else:
        result = optimize_per_ccs(model, kb, cfg, space, ccs_list=ccs)
    return kb, model, ccs, None, result


def report_json(result: SearchResult, model, kb, ccs, game=None) -> dict:
    def label(s: Solution):
        return game.solution_label(s) if game is not None else None

    def attacks(state):
        return [{"path": p.id, "label": path_label(model, p)} for p in state.paths]

    out = {
        "schema_version": SCHEMA_VERSION,
        "solution": result.solution.to_json(),
        "solution_label": label(result.solution),
        "residual": result.residual,
        "base": result.base,
        "attack_sequence": attacks(result.state),
        "ranked": [
            {"solution": r.solution.to_json(), "label": label(r.solution),
             "residual": r.residual, "base": r.base, "attacks": attacks(r.leaf)}
            for r in result.ranked
        ],
        "stats": result.stats.to_json(),
        "approximate": result.approximate,
    }
    if ccs:
        out["ccs"] = [c.to_json() for c in ccs]
        out["overheads"] = {
            cid: {k: _number(v) for k, v in ov.items()}
            for cid, ov in ccs_overheads(result, model, kb, ccs).items()
        }
        out["per_ccs"] = {
            cid: {"residual": r.residual, "base": r.base, "nodes_visited": r.stats.nodes_visited}
            for cid, r in result.per_ccs.items()
        }
    return out


def report_text(rep: dict) -> str:
    lines = [
        f"best solution: {rep['solution_label'] or _fmt_solution(rep['solution'])}",
        f"residual index: {rep['residual']:.6g}   base index: {rep['base']:.6g}",
        "attack sequence: " + (", ".join(a["label"] for a in rep["attack_sequence"]) or "(none)"),
        f"nodes visited: {rep['stats']['nodes_visited']}   tt hits: {rep['stats']['tt_hits']}"
        + ("   (approximate)" if rep["approximate"] else ""),
        "ranking:",
    ]
    for i, r in enumerate(rep["ranked"], 1):
        name = r["label"] or _fmt_solution(r["solution"])
        lines.append(f"  {i:2d}. {r['residual']:12.6g} ({r['base']:.6g})  {name}")
    for cid, ov in rep.get("overheads", {}).items():
        parts = ", ".join(f"{k}={v:.4g}" for k, v in ov.items())
        lines.append(f"overheads {cid}: {parts}")
    return "\n".join(lines) + "\n"


def _fmt_solution(items) -> str:
    return "[" + ", ".join(f"{d['cp']}({d['artifact']})" for d in items) + "]"


def cmd_validate(args) -> int:
    kb = load_kb(args.kb)
    model = load_model(args.model, kb)
    print(f"ok: {len(kb.asps)} ASPs, {len(kb.cps)} CPs, {len(model.artifacts)} artifacts, "
          f"{len(model.pos)} POs, {len(model.attack_paths)} attack paths")
    return 0


def cmd_prepare(args) -> int:
    kb = load_kb(args.kb)
    model = load_model(args.model, kb)
    ccs = compute_ccs(model, kb)
    doc = {"schema_version": SCHEMA_VERSION, "ccs": [c.to_json() for c in ccs], "stats": ccs_stats(ccs)}
    print(json.dumps(doc, indent=2))
    if args.name:
        print(format_ccs_row(args.name, len(model.pos), ccs), file=sys.stderr)
    return 0


def cmd_optimize(args) -> int:
    kb, model, ccs, game, result = _run_search(args)
    rep = report_json(result, model, kb, ccs, game)
    if args.report == "json":
        print(json.dumps(rep, indent=2))
    else:
        sys.stdout.write(report_text(rep))
    return 0


def cmd_explain(args) -> int:
    trace: list[TraceNode] = []
    _, _, _, game, result = _run_search(args, trace)
    sys.stdout.write(to_dot(trace, result, game))
    return 0


def cmd_bench(args) -> int:
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    for e in engines:
        if e not in (PLAIN, OPTIMIZED):
            raise ConfigError(f"unknown engine {e!r}")
    rows = run_bench(args.po_counts, args.path_counts, args.depths, seed=args.seed,
                     repeats=args.repeats, engines=engines, force=args.force, workers=args.workers)
    text = to_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "prepare": cmd_prepare,
    "optimize": cmd_optimize,
    "explain": cmd_explain,
    "bench": cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("SPMITI_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SpmitiError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
