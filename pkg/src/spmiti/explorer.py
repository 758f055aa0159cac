"""Mini-max exploration of the defender/attacker game.

The defender moves once, at the root, by choosing a candidate solution. Every
level below belongs to the attacker, who appends attack paths and minimizes
the protection index; states at depth 0 are scored statically. The depth is
the number of attacker turns still available below the root.

Two engines are provided. ``plain`` is the literal recursion and serves as the
oracle. ``optimized`` adds alpha-beta cuts, a transposition table, an
aspiration window at the root and, with finite margins, futility pruning,
extended futility pruning and razoring. With every margin infinite the
optimized engine returns exactly the plain engine's ranking.
"""
from __future__ import annotations

import heapq
import logging
import math
import multiprocessing
import time
import zlib
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

from .errors import ConfigError, EmptySolutionSpace, SpmitiError, TooLarge
from .games import Game, RiskGame
from .index import Evaluator, IndexConfig, State
from .kb import KnowledgeBase
from .model import ApplicationModel
from .overhead import overheads
from .prep import CodeCorrelationSet, compute_ccs
from .solution import Solution

logger = logging.getLogger(__name__)

PLAIN = "plain"
OPTIMIZED = "optimized"
TOGGLES = ("alpha_beta", "aspiration", "tt", "futility", "ext_futility", "razoring")
EXACT_TOGGLES = ("alpha_beta", "aspiration", "tt")


@dataclass(frozen=True)
class SearchConfig:
    depth: int = 3
    engine: str = OPTIMIZED
    alpha_beta: bool = True
    aspiration: bool = True
    tt: bool = True
    futility: bool = True
    ext_futility: bool = True
    razoring: bool = True
    aspiration_center: float | None = None
    aspiration_half_width: float = 1.0
    futility_margin: float = math.inf
    ext_futility_margin: float = math.inf
    razor_margin: float = math.inf
    tt_capacity: int = 1 << 16
    top_n: int = 10
    workers: int = 1

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.engine not in (PLAIN, OPTIMIZED):
            raise ConfigError(f"engine must be {PLAIN!r} or {OPTIMIZED!r}, got {self.engine!r}")
        for name in ("futility_margin", "ext_futility_margin", "razor_margin"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise ConfigError(f"{name} must be >= 0 or inf, got {v}")
        if not self.aspiration_half_width > 0:
            raise ConfigError("aspiration_half_width must be > 0")
        if self.tt_capacity < 1 or self.tt_capacity & (self.tt_capacity - 1):
            raise ConfigError(f"tt_capacity must be a power of two, got {self.tt_capacity}")
        if self.top_n < 1:
            raise ConfigError(f"top_n must be >= 1, got {self.top_n}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.engine == PLAIN:
            for t in TOGGLES:
                object.__setattr__(self, t, False)

    @classmethod
    def only(cls, *enabled: str, **kwargs) -> SearchConfig:
        """Optimized engine with exactly the named toggles switched on."""
        unknown = set(enabled) - set(TOGGLES)
        if unknown:
            raise ConfigError(f"unknown optimization(s) {sorted(unknown)}")
        flags = {t: t in enabled for t in TOGGLES}
        return cls(engine=OPTIMIZED, **flags, **kwargs)

    @property
    def approximate(self) -> bool:
        """Whether speculative forward pruning can change the result."""
        return (
            (self.futility and math.isfinite(self.futility_margin))
            or (self.ext_futility and math.isfinite(self.ext_futility_margin))
            or (self.razoring and math.isfinite(self.razor_margin))
        )


@dataclass
class SearchStats:
    nodes_visited: int = 0
    tt_hits: int = 0
    evaluations: int = 0
    researches: int = 0
    wall_time: float = 0.0

    def add(self, other: SearchStats) -> None:
        self.nodes_visited += other.nodes_visited
        self.tt_hits += other.tt_hits
        self.evaluations += other.evaluations
        self.researches += other.researches
        self.wall_time += other.wall_time

    def to_json(self) -> dict:
        return {
            "nodes_visited": self.nodes_visited,
            "tt_hits": self.tt_hits,
            "evaluations": self.evaluations,
            "researches": self.researches,
            "wall_time": self.wall_time,
        }


@dataclass(frozen=True)
class RankedSolution:
    solution: Solution
    residual: float
    base: float
    leaf: State

    def sort_key(self):
        return (-self.residual, len(self.solution), self.solution.key)


@dataclass
class SearchResult:
    state: State
    residual: float
    base: float
    ranked: list[RankedSolution]
    stats: SearchStats
    approximate: bool = False
    per_ccs: dict[str, SearchResult] = field(default_factory=dict)

    @property
    def solution(self) -> Solution:
        return self.state.solution

    @property
    def attack_sequence(self):
        return self.state.paths


@dataclass
class TraceNode:
    id: int
    parent: int | None
    label: str
    static: float | None = None
    value: float | None = None
    leaf: bool = False


_EXACT = 0
_UPPER = 1


class TranspositionTable:
    """Fixed-capacity, depth-preferred table with one entry per bucket.

    Buckets are chosen by CRC-32 of the key's ``repr`` so placement does not
    depend on Python's per-process hash seed.
    """

    def __init__(self, capacity: int):
        self.mask = capacity - 1
        self.slots: dict[int, tuple] = {}

    def _bucket(self, key) -> int:
        return zlib.crc32(repr(key).encode()) & self.mask

    def probe(self, key, depth: int):
        entry = self.slots.get(self._bucket(key))
        if entry is not None and entry[0] == key and entry[1] == depth:
            return entry
        return None

    def store(self, key, depth: int, value: float, flag: int, leaf: State) -> None:
        b = self._bucket(key)
        old = self.slots.get(b)
        if old is None or depth >= old[1]:
            self.slots[b] = (key, depth, value, flag, leaf)


class _Engine:
    def __init__(self, game: Game, cfg: SearchConfig, trace: list[TraceNode] | None = None):
        self.game = game
        self.cfg = cfg
        self.stats = SearchStats()
        self.tt = TranspositionTable(cfg.tt_capacity) if cfg.tt else None
        self.trace = trace
        self.forward = cfg.approximate and cfg.alpha_beta

    # -- helpers -----------------------------------------------------------
    def _eval(self, state: State) -> float:
        self.stats.evaluations += 1
        return self.game.evaluate(state)

    def _enter(self, parent: int | None, label: str, state: State) -> int | None:
        self.stats.nodes_visited += 1
        if self.trace is None:
            return None
        node = TraceNode(len(self.trace), parent, label, static=self.game.evaluate(state))
        self.trace.append(node)
        return node.id

    def _leave(self, node: int | None, value: float, leaf: bool = False) -> None:
        if node is not None:
            self.trace[node].value = value
            self.trace[node].leaf = leaf

    # -- attacker levels ---------------------------------------------------
    def plain_min(self, state: State, depth: int, parent, label: str):
        node = self._enter(parent, label, state)
        moves = self.game.attacker_moves(state) if depth > 0 else ()
        if not moves:
            value = self._eval(state)
            self._leave(node, value, leaf=True)
            return value, state
        best, best_leaf = math.inf, None
        for move in moves:
            v, leaf = self.plain_min(self.game.play(state, move), depth - 1, node,
                                     self.game.move_label(move))
            if v < best:
                best, best_leaf = v, leaf
        self._leave(node, best)
        return best, best_leaf

    def opt_min(self, state: State, depth: int, alpha: float, parent, label: str):
        """Returns (value, leaf, exact); inexact values are upper bounds below ``alpha``."""
        node = self._enter(parent, label, state)
        key = None
        if self.tt is not None:
            key = self.game.key(state)
            hit = self.tt.probe(key, depth)
            if hit is not None and (hit[3] == _EXACT or hit[2] < alpha):
                self.stats.tt_hits += 1
                self._leave(node, hit[2], leaf=True)
                return hit[2], hit[4], hit[3] == _EXACT
        moves = self.game.attacker_moves(state) if depth > 0 else ()
        if not moves:
            value = self._eval(state)
            if key is not None:
                self.tt.store(key, depth, value, _EXACT, state)
            self._leave(node, value, leaf=True)
            return value, state, True
        if self.forward and depth <= 3:
            pruned = self._forward_prune(state, depth, alpha)
            if pruned is not None:
                self._leave(node, pruned, leaf=True)
                return pruned, state, False
        best, best_leaf, exact = math.inf, None, True
        for move in moves:
            v, leaf, _ = self.opt_min(self.game.play(state, move), depth - 1, alpha, node,
                                      self.game.move_label(move))
            if v < best:
                best, best_leaf = v, leaf
            if best < alpha:
                exact = False
                break
        if key is not None:
            self.tt.store(key, depth, best, _EXACT if exact else _UPPER, best_leaf)
        self._leave(node, best)
        return best, best_leaf, exact

    def _forward_prune(self, state: State, depth: int, alpha: float) -> float | None:
        cfg = self.cfg
        if alpha == -math.inf:
            return None
        static = self._eval(state)
        if cfg.futility and depth == 1 and static + cfg.futility_margin < alpha:
            return static
        if cfg.ext_futility and depth == 2 and static + cfg.ext_futility_margin < alpha:
            return static
        if cfg.razoring and static + cfg.razor_margin < alpha:
            return static
        return None

    # -- root ----------------------------------------------------------------
    def _rank(self, ranked: list[RankedSolution], entry: RankedSolution) -> None:
        ranked.append(entry)
        ranked.sort(key=RankedSolution.sort_key)
        del ranked[self.cfg.top_n:]

    def run_plain(self, root: int | None) -> list[RankedSolution]:
        ranked: list[RankedSolution] = []
        for s in self.game.defender_moves():
            start = State(s)
            v, leaf = self.plain_min(start, self.cfg.depth, root, self.game.solution_label(s))
            self._rank(ranked, RankedSolution(s, v, self._eval(start), leaf))
        return ranked

    def _root_pass(self, lo: float, hi: float, root: int | None):
        cfg = self.cfg
        ranked: list[RankedSolution] = []
        lo_cut = False
        for s in self.game.defender_moves():
            start = State(s)
            bound = ranked[-1].residual if len(ranked) >= cfg.top_n else -math.inf
            alpha = max(lo, bound) if cfg.alpha_beta else -math.inf
            v, leaf, exact = self.opt_min(start, cfg.depth, alpha, root,
                                          self.game.solution_label(s))
            if not exact:
                if alpha > bound:
                    lo_cut = True
                continue
            self._rank(ranked, RankedSolution(s, v, self._eval(start), leaf))
            if v >= hi:
                return "high", ranked
        if lo_cut and not (len(ranked) >= cfg.top_n and ranked[-1].residual >= lo):
            return "low", ranked
        return "ok", ranked

    def run_optimized(self, root: int | None) -> list[RankedSolution]:
        cfg = self.cfg
        if cfg.aspiration and cfg.alpha_beta:
            center = cfg.aspiration_center if cfg.aspiration_center is not None else 0.0
            lo, hi = center - cfg.aspiration_half_width, center + cfg.aspiration_half_width
        else:
            lo, hi = -math.inf, math.inf
        while True:
            mark = len(self.trace) if self.trace is not None else 0
            outcome, ranked = self._root_pass(lo, hi, root)
            if outcome == "ok":
                return ranked
            logger.debug("aspiration window (%g, %g) failed %s; re-searching", lo, hi, outcome)
            self.stats.researches += 1
            if self.trace is not None:
                del self.trace[mark:]
            lo, hi = -math.inf, math.inf


def explore(game: Game, cfg: SearchConfig, trace: list[TraceNode] | None = None) -> SearchResult:
    """Run one search and return the best state, its residual index and the top-N ranking."""
    engine = _Engine(game, cfg, trace)
    t0 = time.perf_counter()
    root = engine._enter(None, "root", State()) if trace is None else None
    if trace is not None:
        engine.stats.nodes_visited += 1
        trace.append(TraceNode(0, None, "root"))
        root = 0
    ranked = engine.run_plain(root) if cfg.engine == PLAIN else engine.run_optimized(root)
    engine.stats.wall_time = time.perf_counter() - t0
    if not ranked:
        raise EmptySolutionSpace("no feasible solution, not even the vanilla one")
    best = ranked[0]
    if trace is not None:
        trace[0].value = best.residual
    return SearchResult(
        state=best.leaf,
        residual=best.residual,
        base=best.base,
        ranked=ranked,
        stats=engine.stats,
        approximate=cfg.approximate and cfg.engine == OPTIMIZED,
    )


@dataclass(frozen=True)
class SpaceOptions:
    """How candidate solutions are generated for each CCS."""

    sigma: int = 3
    seed: int = 0
    start: Solution | None = None
    skip_discouraged: bool = False
    limit: int | None = None
    exhaustive: bool = False


def _scope(ccs_list: Sequence[CodeCorrelationSet]) -> dict[str, str]:
    return {a: c.id for c in ccs_list for a in c.assets}


def risk_game(model: ApplicationModel, kb: KnowledgeBase, groups: Sequence[CodeCorrelationSet],
              ccs_list: Sequence[CodeCorrelationSet], space: SpaceOptions,
              index_cfg: IndexConfig | None = None) -> RiskGame:
    return RiskGame(model, kb, groups, index_cfg, scope=_scope(ccs_list), sigma=space.sigma,
                    seed=space.seed, start=space.start, skip_discouraged=space.skip_discouraged,
                    limit=space.limit, exhaustive=space.exhaustive)


def optimize_monolithic(model: ApplicationModel, kb: KnowledgeBase, cfg: SearchConfig,
                        space: SpaceOptions = SpaceOptions(), index_cfg: IndexConfig | None = None,
                        ccs_list: Sequence[CodeCorrelationSet] | None = None) -> SearchResult:
    """One tree over the whole application, every CCS at once."""
    ccs_list = list(ccs_list) if ccs_list is not None else compute_ccs(model, kb)
    return explore(risk_game(model, kb, ccs_list, ccs_list, space, index_cfg), cfg)


_FORK_JOB: tuple | None = None


def _ccs_worker(i: int) -> SearchResult:
    model, kb, cfg, space, index_cfg, ccs_list = _FORK_JOB
    return _search_ccs(model, kb, cfg, space, index_cfg, ccs_list, i)


def _search_ccs(model, kb, cfg, space, index_cfg, ccs_list, i) -> SearchResult:
    ccs = ccs_list[i]
    try:
        return explore(risk_game(model, kb, [ccs], ccs_list, space, index_cfg), cfg)
    except SpmitiError as exc:
        raise type(exc)(f"CCS {ccs.id}: {exc}") from exc


def _k_best(parts: list[list[RankedSolution]], n: int) -> list[tuple[int, ...]]:
    """Index tuples of the n combinations with the largest summed residuals."""
    start = tuple(0 for _ in parts)

    def score(idx):
        return -math.fsum(parts[g][k].residual for g, k in enumerate(idx))

    heap = [(score(start), start)]
    seen = {start}
    out = []
    while heap and len(out) < n:
        _, idx = heapq.heappop(heap)
        out.append(idx)
        for g in range(len(parts)):
            if idx[g] + 1 < len(parts[g]):
                nxt = idx[:g] + (idx[g] + 1,) + idx[g + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (score(nxt), nxt))
    return out


def optimize_per_ccs(model: ApplicationModel, kb: KnowledgeBase, cfg: SearchConfig,
                     space: SpaceOptions = SpaceOptions(), index_cfg: IndexConfig | None = None,
                     ccs_list: Sequence[CodeCorrelationSet] | None = None) -> SearchResult:
    """One tree per CCS; partial optima are concatenated in CCS-id order.

    The global residual is the index of the combined state, which equals the
    sum of the per-CCS residuals because each asset is only attenuated by
    attacks inside its own CCS.
    """
    global _FORK_JOB
    ccs_list = list(ccs_list) if ccs_list is not None else compute_ccs(model, kb)
    if not ccs_list:
        raise EmptySolutionSpace("model has no assets")
    args = (model, kb, cfg, space, index_cfg, ccs_list)
    if cfg.workers > 1 and len(ccs_list) > 1 and "fork" in multiprocessing.get_all_start_methods():
        _FORK_JOB = args
        try:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(min(cfg.workers, len(ccs_list))) as pool:
                results = pool.map(_ccs_worker, range(len(ccs_list)))
        finally:
            _FORK_JOB = None
    else:
        results = [_search_ccs(*args, i) for i in range(len(ccs_list))]

    evaluator = Evaluator(model, kb, index_cfg, scope=_scope(ccs_list))
    stats = SearchStats()
    for r in results:
        stats.add(r.stats)
    ranked = []
    for idx in _k_best([r.ranked for r in results], cfg.top_n):
        picks = [results[g].ranked[k] for g, k in enumerate(idx)]
        sol = Solution(tuple(d for p in picks for d in p.solution))
        leaf = State(sol, tuple(cp for p in picks for cp in p.leaf.paths))
        ranked.append(RankedSolution(sol, evaluator.evaluate(leaf), evaluator.evaluate(State(sol)), leaf))
    ranked.sort(key=RankedSolution.sort_key)
    best = ranked[0]
    return SearchResult(
        state=best.leaf,
        residual=best.residual,
        base=best.base,
        ranked=ranked,
        stats=stats,
        approximate=any(r.approximate for r in results),
        per_ccs={c.id: r for c, r in zip(ccs_list, results)},
    )


def ccs_overheads(result: SearchResult, model: ApplicationModel, kb: KnowledgeBase,
                  ccs_list: Sequence[CodeCorrelationSet]) -> dict[str, dict[str, float]]:
    out = {}
    for ccs in ccs_list:
        arts = [model.artifacts[a] for a in sorted(ccs.closure)]
        out[ccs.id] = overheads(result.solution, arts, kb)
    return out


MAX_DOT_NODES = 200


def to_dot(trace: list[TraceNode], result: SearchResult, game: Game) -> str:
    """Render a traced search tree; edges on the winning line are highlighted."""
    if len(trace) > MAX_DOT_NODES:
        raise TooLarge(f"tree has {len(trace)} nodes; the DOT limit is {MAX_DOT_NODES}")
    children: dict[int, list[int]] = {}
    for n in trace:
        if n.parent is not None:
            children.setdefault(n.parent, []).append(n.id)
    # follow the winning line: the chosen solution, then the attack sequence
    winning = set()
    labels = [game.solution_label(result.solution)] + [
        game.move_label((p,)) for p in result.attack_sequence
    ]
    node = 0
    for label in labels:
        nxt = next((c for c in children.get(node, []) if trace[c].label == label), None)
        if nxt is None:
            break
        winning.add((node, nxt))
        node = nxt

    def fmt(x: float | None) -> str:
        if x is None:
            return "?"
        return f"{x:g}"

    lines = ["digraph search {", "  node [shape=box, style=rounded];"]
    for n in trace:
        if n.parent is None:
            text = f"({labels[0]}, ({', '.join(labels[1:])})):{fmt(result.residual)}"
        elif n.leaf and n.static == n.value:
            text = f"{n.label}:{fmt(n.value)}"
        else:
            text = f"{n.label}:{fmt(n.value)}({fmt(n.static)})"
        text = text.replace('"', '\\"')
        lines.append(f'  n{n.id} [label="{text}"];')
    for n in trace:
        if n.parent is not None:
            style = ' [color=red, penwidth=2]' if (n.parent, n.id) in winning else ""
            lines.append(f"  n{n.parent} -> n{n.id}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def with_engine(cfg: SearchConfig, engine: str) -> SearchConfig:
    return replace(cfg, engine=engine)


__all__ = [
    "RankedSolution",
    "SearchConfig",
    "SearchResult",
    "SearchStats",
    "SpaceOptions",
    "TraceNode",
    "TranspositionTable",
    "ccs_overheads",
    "explore",
    "optimize_monolithic",
    "optimize_per_ccs",
    "to_dot",
]
