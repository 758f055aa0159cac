"""Game adapters consumed by the search engine.

A game exposes the defender's candidate solutions, the attacker's moves from
a state, state transitions, a static evaluation and a transposition key.
``RiskGame`` scores states with the protection index; ``ScriptedGame`` reads
the tree and its values from a fixture.
"""
from __future__ import annotations

import itertools
from collections.abc import Hashable, Iterator, Mapping, Sequence
from typing import Protocol

from .errors import ValidationError
from .index import Evaluator, IndexConfig, State
from .kb import KnowledgeBase
from .model import ApplicationModel, ConcreteAttackPath
from .prep import CodeCorrelationSet
from .solspace import SolutionIterator, enumerate_all
from .solution import VANILLA, Solution

Move = tuple[ConcreteAttackPath, ...]


class Game(Protocol):
    def defender_moves(self) -> Iterator[Solution]: ...
    def attacker_moves(self, state: State) -> Sequence[Move]: ...
    def play(self, state: State, move: Move) -> State: ...
    def evaluate(self, state: State) -> float: ...
    def key(self, state: State) -> Hashable: ...
    def solution_label(self, s: Solution) -> str: ...
    def move_label(self, move: Move) -> str: ...


def path_label(model: ApplicationModel, cpath: ConcreteAttackPath) -> str:
    path = model.attack_paths[cpath.path_id]
    return f"{cpath.id}({path.target_asset},{path.requirement})"


class RiskGame:
    """Protection game over one or several code correlation sets.

    With several groups the defender picks one partial solution per group
    (their concatenation in group order) and every attacker turn appends one
    concrete path per attacked group. For a single group this is the plain
    one-path-per-turn game.
    """

    def __init__(self, model: ApplicationModel, kb: KnowledgeBase,
                 groups: Sequence[CodeCorrelationSet], cfg: IndexConfig | None = None,
                 scope: Mapping[str, str] | None = None, sigma: int = 3, seed: int = 0,
                 start: Solution | None = None, skip_discouraged: bool = False,
                 limit: int | None = None, exhaustive: bool = False):
        self.model = model
        self.kb = kb
        self.groups = tuple(groups)
        members = {a for g in self.groups for a in g.assets}
        self.pos = tuple(po for po in model.pos if po.artifact_id in members)
        if scope is None:
            scope = {a: g.id for g in self.groups for a in g.assets}
        self.evaluator = Evaluator(model, kb, cfg, pos=self.pos, scope=scope)
        self.sigma = sigma
        self.seed = seed
        self.start = start or VANILLA
        self.skip_discouraged = skip_discouraged
        self.limit = limit
        self.exhaustive = exhaustive
        per_group = []
        for g in self.groups:
            paths = sorted((cp for cp in model.concrete_paths
                            if model.attack_paths[cp.path_id].target_asset in g.assets),
                           key=lambda cp: cp.id)
            if paths:
                per_group.append(paths)
        self._moves: tuple[Move, ...] = tuple(itertools.product(*per_group)) if per_group else ()
        self._lists: list[list[Solution]] | None = None

    def _stream(self, group: CodeCorrelationSet) -> Iterator[Solution]:
        pos = [po for po in self.pos if po.artifact_id in group.assets]
        if self.exhaustive:
            return enumerate_all(pos, self.kb, self.model, self.sigma, ccs=group,
                                 skip_discouraged=self.skip_discouraged)
        start = Solution(tuple(d for d in self.start if d.artifact_id in group.closure))
        return iter(SolutionIterator(pos, self.kb, self.model, self.sigma, ccs=group,
                                     seed=self.seed, start=start,
                                     skip_discouraged=self.skip_discouraged, limit=self.limit))

    def defender_moves(self) -> Iterator[Solution]:
        if len(self.groups) == 1:
            return self._stream(self.groups[0])
        if self._lists is None:
            self._lists = [list(self._stream(g)) for g in self.groups]
        return (Solution(tuple(d for part in combo for d in part))
                for combo in itertools.product(*self._lists))

    def attacker_moves(self, state: State) -> Sequence[Move]:
        return self._moves

    def play(self, state: State, move: Move) -> State:
        return state.extend(*move)

    def evaluate(self, state: State) -> float:
        return self.evaluator.evaluate(state)

    def key(self, state: State) -> Hashable:
        return (state.solution.key, tuple(sorted(p.id for p in state.paths)))

    def solution_label(self, s: Solution) -> str:
        return str(s)

    def move_label(self, move: Move) -> str:
        return "+".join(path_label(self.model, p) for p in move)


class ScriptedGame:
    """A game whose tree shape and node values come from a fixture.

    The fixture lists, per candidate solution label, a static value and the
    attacker children, each naming a concrete attack path and carrying its own
    static value and children. A node without children is terminal. Keys are
    order-sensitive, so scripted values need not be path-permutation invariant.
    """

    def __init__(self, model: ApplicationModel, tree: Mapping, candidates: Sequence[tuple[str, Solution]]):
        self.model = model
        self.candidates = list(candidates)
        self.labels = {s.key: label for label, s in self.candidates}
        self.cpaths = {cp.id: cp for cp in model.concrete_paths}
        self.static: dict[tuple, float] = {}
        self.children: dict[tuple, list[Move]] = {}
        self.expected: dict[tuple, float] = {}
        for label, node in tree["solutions"].items():
            if label not in {lab for lab, _ in self.candidates}:
                raise ValidationError(f"scripted tree names unknown candidate solution {label!r}")
            self._load((label,), node)

    def _load(self, key: tuple, node: Mapping) -> None:
        self.static[key] = float(node["static"])
        if "expect" in node:
            self.expected[key] = float(node["expect"])
        moves = []
        for child in node.get("children", []):
            cp = self.cpaths.get(child["path"])
            if cp is None:
                raise ValidationError(f"scripted tree names unknown attack path {child['path']!r}")
            moves.append((cp,))
            self._load(key + (cp.id,), child)
        self.children[key] = moves

    @classmethod
    def from_model(cls, model: ApplicationModel) -> ScriptedGame:
        tree = model.extras.get("scripted_tree")
        if tree is None:
            raise ValidationError("model has no scripted_tree section")
        return cls(model, tree, candidate_solutions(model))

    def _node(self, state: State) -> tuple:
        return (self.labels[state.solution.key],) + tuple(p.id for p in state.paths)

    def defender_moves(self) -> Iterator[Solution]:
        return (s for _, s in self.candidates)

    def attacker_moves(self, state: State) -> Sequence[Move]:
        return self.children.get(self._node(state), [])

    def play(self, state: State, move: Move) -> State:
        return state.extend(*move)

    def evaluate(self, state: State) -> float:
        return self.static[self._node(state)]

    def key(self, state: State) -> Hashable:
        return self._node(state)

    def solution_label(self, s: Solution) -> str:
        return self.labels[s.key]

    def move_label(self, move: Move) -> str:
        return "+".join(path_label(self.model, p) for p in move)


def candidate_solutions(model: ApplicationModel) -> list[tuple[str, Solution]]:
    """Labelled candidate solutions stored in a model file, in file order."""
    out = []
    for i, raw in enumerate(model.extras.get("candidate_solutions", [])):
        label = raw.get("label", f"S{i + 1}")
        out.append((label, Solution.from_json(raw.get("dsps", []))))
    return out
