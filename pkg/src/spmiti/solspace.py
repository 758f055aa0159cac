"""Streaming the solution space: ordered permutations, seeded fuzzing, exhaustive mode.

A candidate is built in two layers. A *multiset* fixes how many times each
compatible deployed protection occurs; it is identified by its rank in a
mixed-radix numbering. The *orderings* of a multiset are produced
lexicographically, extending only prefixes that respect the precedence
relations. The iterator walks from multiset to multiset by one random
mutation at a time and falls back to the smallest unvisited rank, so it only
keeps the set of visited ranks, never the solutions themselves.
"""
from __future__ import annotations

import logging
import math
import random
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence

from .errors import ConfigError, SpaceTooLarge
from .kb import KnowledgeBase, Relation
from .model import ApplicationModel, ProtectionObjective
from .overhead import within_thresholds
from .prep import CodeCorrelationSet, compatible_dsps
from .solution import VANILLA, DeployedProtection, Solution

__all__ = [
    "Solution",
    "SolutionIterator",
    "enumerate_all",
    "estimate_space",
    "is_valid_sequence",
    "valid_orderings",
]

logger = logging.getLogger(__name__)

ENUMERATION_GUARD = 10**6


def _may_follow(history: Sequence[str], asp: str, kb: KnowledgeBase, skip_discouraged: bool) -> bool:
    """Whether ``asp`` may be deployed after the ASPs already on the same artifact."""
    for prev in history:
        rel = kb.relation(prev, asp)
        if rel is Relation.FORBIDDEN:
            return False
        if skip_discouraged and rel is Relation.DISCOURAGED:
            return False
    required = kb.required_predecessors(asp)
    return not required or required <= set(history)


def is_valid_sequence(s: Solution, kb: KnowledgeBase, skip_discouraged: bool = False) -> bool:
    """Check the precedence relations on every artifact's subsequence of ``s``."""
    history: dict[str, list[str]] = {}
    for dsp in s:
        asp = kb.cps[dsp.cp_id].asp_id
        seen = history.setdefault(dsp.artifact_id, [])
        if not _may_follow(seen, asp, kb, skip_discouraged):
            return False
        seen.append(asp)
    return True


def valid_orderings(dsps: Iterable[DeployedProtection], kb: KnowledgeBase,
                    skip_discouraged: bool = False) -> Iterator[Solution]:
    """Lexicographic valid permutations of a multiset, pruning invalid prefixes."""
    items = sorted(Counter(dsps).items())
    distinct = [d for d, _ in items]
    counts = [c for _, c in items]
    asps = [kb.cps[d.cp_id].asp_id for d in distinct]
    total = sum(counts)
    prefix: list[DeployedProtection] = []
    history: dict[str, list[str]] = {d.artifact_id: [] for d in distinct}

    def extend() -> Iterator[Solution]:
        if len(prefix) == total:
            yield Solution(tuple(prefix))
            return
        for i, dsp in enumerate(distinct):
            if counts[i] == 0:
                continue
            seen = history[dsp.artifact_id]
            if not _may_follow(seen, asps[i], kb, skip_discouraged):
                continue
            counts[i] -= 1
            prefix.append(dsp)
            seen.append(asps[i])
            yield from extend()
            seen.pop()
            prefix.pop()
            counts[i] += 1

    return extend()


class _Space:
    """Mixed-radix numbering of the multisets allowed by the per-PO cap sigma."""

    def __init__(self, pos: Sequence[ProtectionObjective], pools: Sequence[frozenset],
                 sigma: int, kb: KnowledgeBase):
        self.dsps: list[DeployedProtection] = sorted(set().union(*pools)) if pools else []
        index = {d: i for i, d in enumerate(self.dsps)}
        self.index = index
        self.members: list[list[int]] = [[] for _ in self.dsps]
        for p, pool in enumerate(pools):
            for d in pool:
                self.members[index[d]].append(p)
        self.sigma = sigma
        self.n_pos = len(pos)
        self.caps = []
        for d in self.dsps:
            asp = kb.cps[d.cp_id].asp_id
            self.caps.append(1 if kb.relation(asp, asp) is Relation.FORBIDDEN else sigma)
        self.weights = []
        w = 1
        for cap in self.caps:
            self.weights.append(w)
            w *= cap + 1
        self.size = w

    def rank(self, counts: Sequence[int]) -> int:
        return sum(c * w for c, w in zip(counts, self.weights))

    def po_load(self, counts: Sequence[int]) -> list[int]:
        load = [0] * self.n_pos
        for i, c in enumerate(counts):
            if c:
                for p in self.members[i]:
                    load[p] += c
        return load

    def fits(self, counts: Sequence[int]) -> bool:
        return all(x <= self.sigma for x in self.po_load(counts))

    def multiset(self, counts: Sequence[int]) -> list[DeployedProtection]:
        return [d for d, c in zip(self.dsps, counts) for _ in range(c)]

    def feasible_in_rank_order(self) -> Iterator[tuple[int, tuple[int, ...]]]:
        """Every sigma-respecting count vector, by increasing rank.

        Rank order is lexicographic on the reversed digit vector, so digits
        are fixed from the most significant one downwards, smallest first.
        """
        n = len(self.dsps)
        counts = [0] * n
        load = [0] * self.n_pos

        def fill(i: int, rank: int) -> Iterator[tuple[int, tuple[int, ...]]]:
            if i < 0:
                yield rank, tuple(counts)
                return
            for c in range(self.caps[i] + 1):
                if c and any(load[p] + 1 > self.sigma for p in self.members[i]):
                    break
                if c:
                    for p in self.members[i]:
                        load[p] += 1
                counts[i] = c
                yield from fill(i - 1, rank + c * self.weights[i])
            for p in self.members[i]:
                load[p] -= counts[i]
            counts[i] = 0

        return fill(n - 1, 0)


def _pools(pos, model, kb, pools):
    if pools is None:
        return [compatible_dsps(po, model, kb) for po in pos]
    return [frozenset(p) for p in pools]


def estimate_space(pos: Sequence[ProtectionObjective], kb: KnowledgeBase, model: ApplicationModel,
                   sigma: int = 3, pools: Sequence[Iterable[DeployedProtection]] | None = None) -> float:
    """Upper bound on the number of ordered solutions.

    Sums n! [x^n] of prod_d sum_{k <= cap_d} x^k / k! over lengths
    n <= sigma * |POs|; the per-PO caps and precedence filtering only lower
    the true count.
    """
    space = _Space(pos, _pools(pos, model, kb, pools), sigma, kb)
    limit = sigma * len(pos)
    poly = [1.0]
    for cap in space.caps:
        factor = [1.0 / math.factorial(k) for k in range(cap + 1)]
        out = [0.0] * min(len(poly) + cap, limit + 1)
        for i, a in enumerate(poly):
            for k, b in enumerate(factor):
                if i + k <= limit:
                    out[i + k] += a * b
        poly = out
    return math.fsum(math.factorial(n) * c for n, c in enumerate(poly))


def enumerate_all(pos: Sequence[ProtectionObjective], kb: KnowledgeBase, model: ApplicationModel,
                  sigma: int = 3, ccs: CodeCorrelationSet | None = None,
                  pools: Sequence[Iterable[DeployedProtection]] | None = None,
                  skip_discouraged: bool = False, guard: float = ENUMERATION_GUARD) -> Iterator[Solution]:
    """Every valid, threshold-feasible solution once: multisets by rank, orderings lexicographic."""
    if sigma < 1:
        raise ConfigError(f"sigma must be >= 1, got {sigma}")
    pools = _pools(pos, model, kb, pools)
    estimate = estimate_space(pos, kb, model, sigma, pools)
    if estimate > guard:
        raise SpaceTooLarge(f"estimated {estimate:.3g} solutions exceeds the guard of {guard:.3g}")
    space = _Space(pos, pools, sigma, kb)
    for _, counts in space.feasible_in_rank_order():
        multiset = space.multiset(counts)
        if ccs is not None and not within_thresholds(Solution(tuple(multiset)), ccs, kb, model):
            continue
        yield from valid_orderings(multiset, kb, skip_discouraged)


class SolutionIterator:
    """Duplicate-free, seeded stream of candidate solutions.

    The seed solution (vanilla unless an expert solution is given) comes
    first, followed by the other orderings of its multiset. After that each
    move applies one mutation (add, remove, or replace a deployed protection,
    the kind drawn uniformly among kinds that lead to an unvisited multiset)
    with a ``random.Random`` (MT19937) generator seeded by ``seed``. When no
    mutation leads anywhere new, the walk jumps to the smallest unvisited
    rank. The stream ends once every multiset was visited or after ``limit``
    solutions.
    """

    def __init__(self, pos: Sequence[ProtectionObjective], kb: KnowledgeBase, model: ApplicationModel,
                 sigma: int = 3, ccs: CodeCorrelationSet | None = None, seed: int = 0,
                 start: Solution | None = None, skip_discouraged: bool = False,
                 limit: int | None = None, pools: Sequence[Iterable[DeployedProtection]] | None = None):
        if sigma < 1:
            raise ConfigError(f"sigma must be >= 1, got {sigma}")
        self.kb = kb
        self.model = model
        self.ccs = ccs
        self.skip_discouraged = skip_discouraged
        self.limit = limit
        self.rng = random.Random(seed)
        self.space = _Space(pos, _pools(pos, model, kb, pools), sigma, kb)
        self.visited: set[int] = set()
        self.yielded = 0
        self.exhausted = False
        self._ranks = self.space.feasible_in_rank_order()
        self._orderings: Iterator[Solution] | None = None
        self._counts: list[int] = [0] * len(self.space.dsps)
        self._load: list[int] = [0] * self.space.n_pos

        start = VANILLA if start is None else start
        if not is_valid_sequence(start, kb, skip_discouraged):
            raise ConfigError(f"seed solution {start} violates the precedence relations")
        counts = [0] * len(self.space.dsps)
        representable = True
        for dsp in start:
            i = self.space.index.get(dsp)
            if i is None:
                representable = False
                break
            counts[i] += 1
        if representable and not (all(c <= cap for c, cap in zip(counts, self.space.caps))
                                  and self.space.fits(counts)):
            representable = False
        self._pending: Solution | None = start if self._feasible(start) else None
        self._skip_key = start.key if representable else None
        if not representable:
            logger.warning("seed solution %s lies outside the enumerated space", start)
            counts = [0] * len(self.space.dsps)
        self._enter(counts)

    def _feasible(self, s: Solution) -> bool:
        return self.ccs is None or within_thresholds(s, self.ccs, self.kb, self.model)

    def _enter(self, counts: Sequence[int]) -> None:
        self._counts = list(counts)
        self._load = self.space.po_load(counts)
        self.visited.add(self.space.rank(counts))
        multiset = self.space.multiset(counts)
        if self._feasible(Solution(tuple(multiset))):
            self._orderings = valid_orderings(multiset, self.kb, self.skip_discouraged)
        else:
            self._orderings = None

    def _can_add(self, i: int) -> bool:
        return self._counts[i] < self.space.caps[i] and all(
            self._load[p] < self.space.sigma for p in self.space.members[i]
        )

    def _can_swap(self, out: int, into: int) -> bool:
        if self._counts[into] >= self.space.caps[into]:
            return False
        freed = set(self.space.members[out])
        return all(self._load[p] - (p in freed) < self.space.sigma for p in self.space.members[into])

    def _mutations(self) -> dict[str, list[int]]:
        rank = self.space.rank(self._counts)
        w = self.space.weights
        n = len(self.space.dsps)
        present = [i for i in range(n) if self._counts[i]]
        adds = [rank + w[i] for i in range(n) if self._can_add(i)]
        removes = [rank - w[i] for i in present]
        swaps = [rank - w[i] + w[j] for i in present for j in range(n)
                 if j != i and self._can_swap(i, j)]
        moves = {"add": adds, "remove": removes, "replace": swaps}
        return {kind: sorted({r for r in ranks if r not in self.visited})
                for kind, ranks in moves.items()}

    def _decode(self, rank: int) -> list[int]:
        counts = []
        for cap in self.space.caps:
            rank, c = divmod(rank, cap + 1)
            counts.append(c)
        return counts

    def _fuzz(self) -> list[int] | None:
        options = {k: v for k, v in self._mutations().items() if v}
        if not options:
            return None
        kinds = sorted(options)
        kind = kinds[self.rng.randrange(len(kinds))]
        choices = options[kind]
        return self._decode(choices[self.rng.randrange(len(choices))])

    def _jump(self) -> list[int] | None:
        for rank, counts in self._ranks:
            if rank not in self.visited:
                return list(counts)
        return None

    def next_solution(self) -> Solution | None:
        """The next candidate, or ``None`` once the space (or the budget) is exhausted."""
        if self.exhausted:
            return None
        if self.limit is not None and self.yielded >= self.limit:
            self.exhausted = True
            return None
        if self._pending is not None:
            s, self._pending = self._pending, None
            self.yielded += 1
            return s
        while True:
            if self._orderings is not None:
                for s in self._orderings:
                    if s.key == self._skip_key:
                        continue
                    self.yielded += 1
                    return s
                self._orderings = None
            counts = self._fuzz()
            if counts is None:
                counts = self._jump()
            if counts is None:
                self.exhausted = True
                return None
            self._enter(counts)

    def __iter__(self) -> Iterator[Solution]:
        while (s := self.next_solution()) is not None:
            yield s

