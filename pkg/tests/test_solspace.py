import dataclasses
import itertools
import random
from collections import Counter

import pytest

from conftest import tiny_kb_dict
from spmiti.errors import ConfigError, SpaceTooLarge
from spmiti.kb import kb_from_dict
from spmiti.overhead import within_thresholds
from spmiti.prep import compatible_dsps, compute_ccs
from spmiti.solspace import (
    SolutionIterator,
    enumerate_all,
    estimate_space,
    is_valid_sequence,
    valid_orderings,
)
from spmiti.solution import VANILLA, Solution
from spmiti.synth import clustered_instance


def brute_force(pos, kb, model, sigma, ccs=None, skip_discouraged=False):
    """Every word over the deployable alphabet that passes the filters, by direct search."""
    pools = [compatible_dsps(po, model, kb) for po in pos]
    alphabet = sorted(set().union(*pools))
    out = set()
    for n in range(sigma * len(pos) + 1):
        for word in itertools.product(alphabet, repeat=n):
            counts = Counter(word)
            if any(sum(counts[d] for d in pool) > sigma for pool in pools):
                continue
            s = Solution(word)
            if not is_valid_sequence(s, kb, skip_discouraged):
                continue
            if ccs is not None and not within_thresholds(s, ccs, kb, model):
                continue
            out.add(s)
    return out


def test_sequence_validity(tiny):
    kb, _ = tiny
    assert is_valid_sequence(Solution.of(("x", "a"), ("g", "a")), kb)
    assert not is_valid_sequence(Solution.of(("g", "a"), ("x", "a")), kb)
    assert not is_valid_sequence(Solution.of(("g", "a"), ("g", "a")), kb)
    assert is_valid_sequence(Solution.of(("g", "a"), ("x", "b")), kb)
    assert is_valid_sequence(VANILLA, kb)


def test_required_and_discouraged():
    d = tiny_kb_dict()
    d["precedence"] += [
        {"before": "obf", "after": "check", "rel": "required"},
        {"before": "check", "after": "obf", "rel": "discouraged"},
    ]
    kb = kb_from_dict(d)
    assert not is_valid_sequence(Solution.of(("c", "a")), kb)
    assert is_valid_sequence(Solution.of(("x", "a"), ("c", "a")), kb)
    late = Solution.of(("x", "a"), ("c", "a"), ("x", "a"))
    assert is_valid_sequence(late, kb)
    assert not is_valid_sequence(late, kb, skip_discouraged=True)


def test_orderings_match_filtered_permutations(tiny):
    kb, _ = tiny
    ms = Solution.of(("x", "a"), ("x", "a"), ("g", "a"), ("c", "b")).dsps
    got = list(valid_orderings(ms, kb))
    expected = sorted({Solution(p) for p in itertools.permutations(ms)
                       if is_valid_sequence(Solution(p), kb)}, key=lambda s: s.dsps)
    assert got == expected
    # guard last on a: x x g must keep g after both x
    assert all(s.on("a")[-1] == "g" for s in got)


@pytest.mark.parametrize("sigma", [1, 2])
def test_enumeration_matches_brute_force(tiny, sigma):
    kb, model = tiny
    got = list(enumerate_all(model.pos, kb, model, sigma))
    assert len(got) == len(set(got))
    assert set(got) == brute_force(model.pos, kb, model, sigma)


def test_enumeration_respects_thresholds(tiny):
    kb, model = tiny
    ccs = compute_ccs(model, kb)[0]
    ccs = dataclasses.replace(ccs, thresholds={**ccs.thresholds, "client_time": 1.16})
    pos = [model.pos[0]]
    got = set(enumerate_all(pos, kb, model, 2, ccs=ccs))
    assert got == brute_force(pos, kb, model, 2, ccs=ccs)
    assert Solution.of(("x", "a"), ("g", "a")) not in got
    assert Solution.of(("x", "a")) in got


def test_estimate_is_an_upper_bound(tiny):
    kb, model = tiny
    for sigma in (1, 2, 3):
        assert estimate_space(model.pos, kb, model, sigma) >= len(list(enumerate_all(model.pos, kb, model, sigma)))


def test_guard(tiny):
    kb, model = tiny
    with pytest.raises(SpaceTooLarge):
        list(enumerate_all(model.pos, kb, model, 3, guard=10))
    with pytest.raises(ConfigError):
        list(enumerate_all(model.pos, kb, model, 0))


def test_iterator_starts_with_seed_and_covers_space(tiny):
    kb, model = tiny
    seed_solution = Solution.of(("x", "a"), ("c", "b"))
    it = SolutionIterator(model.pos, kb, model, sigma=2, seed=7, start=seed_solution)
    got = list(it)
    assert got[0] == seed_solution
    assert got[1] == Solution.of(("c", "b"), ("x", "a"))
    assert len(got) == len(set(got))
    assert set(got) == set(enumerate_all(model.pos, kb, model, 2))


def test_iterator_is_deterministic_per_seed(tiny):
    kb, model = tiny
    run = lambda seed: list(SolutionIterator(model.pos, kb, model, sigma=2, seed=seed, limit=15))
    assert run(3) == run(3)
    assert len(run(3)) == 15
    assert run(3)[0] == VANILLA


def test_iterator_rejects_invalid_seed(tiny):
    kb, model = tiny
    with pytest.raises(ConfigError):
        SolutionIterator(model.pos, kb, model, start=Solution.of(("g", "a"), ("x", "a")))


def test_seed_outside_space_still_first(tiny, caplog):
    kb, model = tiny
    odd = Solution.of(("x", "entry"))
    got = list(SolutionIterator(model.pos, kb, model, sigma=1, start=odd))
    assert got[0] == odd
    assert set(got[1:]) == set(enumerate_all(model.pos, kb, model, 1))
    assert "outside" in caplog.text


def test_next_solution_until_none(tiny):
    kb, model = tiny
    it = SolutionIterator(model.pos, kb, model, sigma=1, seed=1)
    seen = []
    while (s := it.next_solution()) is not None:
        seen.append(s)
    assert it.next_solution() is None
    assert set(seen) == set(enumerate_all(model.pos, kb, model, 1))


def test_random_instances_agree_with_brute_force():
    for seed in range(25):
        rng = random.Random(seed)
        kb, model = clustered_instance(rng, [(rng.randint(1, 2), 1)],
                                       kb_kwargs={"n_asps": 3, "cps_per_asp": 1})
        ccs = compute_ccs(model, kb)[0]
        got = list(enumerate_all(model.pos, kb, model, 1, ccs=ccs))
        assert len(got) == len(set(got))
        assert set(got) == brute_force(model.pos, kb, model, 1, ccs=ccs)
