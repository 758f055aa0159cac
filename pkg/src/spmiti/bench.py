"""Scaling benchmark over synthetic instances."""
from __future__ import annotations

import csv
import io
import logging
import time
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .errors import GuardrailExceeded
from .explorer import PLAIN, SearchConfig, SpaceOptions, explore, risk_game
from .prep import compute_ccs
from .synth import bench_instance

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("po_count", "path_count", "depth", "engine", "nodes", "wall_ms", "value")
MAX_POS = 128
MAX_DEPTH = 5
SOLUTIONS_PER_PO = 4


@dataclass(frozen=True)
class BenchRow:
    po_count: int
    path_count: int
    depth: int
    engine: str
    nodes: int
    wall_ms: float
    value: float

    def as_row(self) -> list:
        return [self.po_count, self.path_count, self.depth, self.engine, self.nodes,
                f"{self.wall_ms:.3f}", repr(self.value)]


def check_guardrails(po_counts: Iterable[int], depths: Iterable[int], force: bool = False) -> None:
    if force:
        return
    too_many = [n for n in po_counts if n > MAX_POS]
    too_deep = [d for d in depths if d > MAX_DEPTH]
    if too_many or too_deep:
        raise GuardrailExceeded(
            f"cells beyond the desk-scale limits (POs <= {MAX_POS}, depth <= {MAX_DEPTH}): "
            f"POs {too_many} depths {too_deep}; pass --force to run them anyway"
        )


def run_cell(po_count: int, path_count: int, depth: int, engine: str, seed: int,
             workers: int = 1) -> BenchRow:
    """Search one synthetic instance; the solution budget grows linearly with the PO count."""
    kb, model = bench_instance(seed, po_count, path_count)
    ccs = compute_ccs(model, kb)
    space = SpaceOptions(sigma=1, seed=seed, limit=SOLUTIONS_PER_PO * po_count)
    cfg = SearchConfig(depth=depth, engine=engine, workers=workers)
    game = risk_game(model, kb, ccs, ccs, space)
    t0 = time.perf_counter()
    result = explore(game, cfg)
    wall = (time.perf_counter() - t0) * 1000.0
    return BenchRow(po_count, path_count, depth, engine, result.stats.nodes_visited, wall,
                    result.residual)


def run_bench(po_counts: Iterable[int], path_counts: Iterable[int], depths: Iterable[int],
              seed: int = 0, repeats: int = 1, engines: Iterable[str] = ("optimized",),
              force: bool = False, workers: int = 1) -> Iterator[BenchRow]:
    po_counts, path_counts, depths = list(po_counts), list(path_counts), list(depths)
    engines = list(engines)
    check_guardrails(po_counts, depths, force)
    for po in po_counts:
        for paths in path_counts:
            for depth in depths:
                for engine in engines:
                    for r in range(repeats):
                        row = run_cell(po, paths, depth, engine, seed + r, workers)
                        logger.info("bench po=%d paths=%d depth=%d %s nodes=%d %.1f ms",
                                    po, paths, depth, engine, row.nodes, row.wall_ms)
                        yield row


def to_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.as_row())
    return buf.getvalue()


__all__ = ["BenchRow", "CSV_COLUMNS", "PLAIN", "check_guardrails", "run_bench", "run_cell", "to_csv"]
