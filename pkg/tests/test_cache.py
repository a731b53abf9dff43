"""LRU stores and the per-policy placement decision."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from icnsim.cache import (
    CacheContext,
    CacheState,
    dump_caches,
    duplicate_objects_per_as,
    insert,
    lookup,
    probcache_probability,
    should_cache,
)
from icnsim.policy import PolicyConfig, PolicyKind


def test_empty_cache_misses():
    assert not lookup(CacheState(3), 17)


def test_insert_then_hit():
    c = CacheState(3)
    insert(c, 17)
    assert lookup(c, 17)


def test_lookup_refreshes_recency():
    c = CacheState(2)
    insert(c, "a")
    insert(c, "b")
    assert lookup(c, "a")
    assert insert(c, "c") == "b"
    assert c.contents() == ["c", "a"]


def test_capacity_one_evicts_previous():
    c = CacheState(1)
    insert(c, "a")
    assert insert(c, "b") == "a"
    assert c.evictions == 1


def test_reinsert_is_a_refresh():
    c = CacheState(2)
    assert insert(c, "a") is None
    assert insert(c, "a") is None
    assert len(c) == 1 and c.evictions == 0 and c.insertions == 1


def test_capacity_zero_forwards_only():
    c = CacheState(0)
    assert insert(c, 1) is None
    assert not lookup(c, 1)
    assert len(c) == 0 and c.evictions == 0


def test_negative_capacity_rejected():
    with pytest.raises(ValueError):
        CacheState(-1)


class ListLru:
    """Reference model: a list ordered from least to most recently used."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.items = []

    def lookup(self, x):
        if x in self.items:
            self.items.remove(x)
            self.items.append(x)
            return True
        return False

    def insert(self, x):
        if x in self.items:
            self.items.remove(x)
            self.items.append(x)
            return None
        if self.capacity == 0:
            return None
        out = self.items.pop(0) if len(self.items) >= self.capacity else None
        self.items.append(x)
        return out


ops = st.lists(st.tuples(st.booleans(), st.integers(0, 12)), max_size=300)


@given(st.integers(0, 8), ops)
def test_lru_matches_reference_model(capacity, sequence):
    ours, ref = CacheState(capacity), ListLru(capacity)
    lookups = 0
    for is_lookup, x in sequence:
        if is_lookup:
            lookups += 1
            assert ours.lookup(x) == ref.lookup(x)
        else:
            assert ours.insert(x) == ref.insert(x)
        assert ours.contents() == ref.items[::-1]
        assert len(ours) <= capacity
    assert ours.hits + ours.misses == lookups
    assert ours.evictions <= ours.insertions


def test_lru_long_random_sequence():
    rng = np.random.default_rng(9)
    ours, ref = CacheState(8), ListLru(8)
    for op, x in zip(rng.integers(0, 2, 10_000), rng.integers(0, 20, 10_000)):
        x = int(x)
        assert (ours.lookup(x) == ref.lookup(x)) if op else (ours.insert(x) == ref.insert(x))
    assert ours.contents() == ref.items[::-1]


# -- placement decision -------------------------------------------------------------


def test_cee_always_caches():
    assert should_cache(PolicyConfig(PolicyKind.CEE), CacheContext())


def test_scene1_caches_only_at_the_designated_router():
    policy = PolicyConfig(PolicyKind.SCENE1)
    assert not should_cache(policy, CacheContext(router_is_designated=False))
    assert should_cache(policy, CacheContext(router_is_designated=True))


@pytest.mark.parametrize("kind", [PolicyKind.SCENE2, PolicyKind.SCENE3])
def test_f_variant_needs_an_interested_as(kind):
    f, t = PolicyConfig(kind), PolicyConfig(kind, cache_all_ases=True)
    passive = CacheContext(router_is_designated=True, as_is_interested=False)
    interested = CacheContext(router_is_designated=True, as_is_interested=True)
    assert not should_cache(f, passive)
    assert should_cache(f, interested)
    assert should_cache(t, passive)
    assert not should_cache(t, CacheContext(router_is_designated=False, as_is_interested=True))


def test_policy_labels():
    assert PolicyConfig(PolicyKind.SCENE2).label == "SCENE2_F"
    assert PolicyConfig(PolicyKind.SCENE3, cache_all_ases=True).label == "SCENE3_T"
    assert PolicyConfig("cee").label == "CEE"


def test_probcache_probability_formula():
    ctx = CacheContext(path_position=2, path_length=4, downstream_capacity_sum=20, avg_cache_size=5)
    assert probcache_probability(ctx) == pytest.approx(20 / (10 * 5) * 2 / 4)
    assert probcache_probability(ctx, target_times=1) == 1.0
    assert probcache_probability(CacheContext(avg_cache_size=0)) == 0.0


@given(st.integers(1, 10), st.integers(1, 10), st.floats(0, 500), st.floats(0.1, 50), st.floats(0.5, 20))
def test_probcache_probability_is_clamped(x, c, down, avg, times):
    p = probcache_probability(CacheContext(path_position=x, path_length=c, downstream_capacity_sum=down,
                                           avg_cache_size=avg), times)
    assert 0.0 <= p <= 1.0


def test_probcache_is_reproducible_and_calibrated():
    policy = PolicyConfig(PolicyKind.PROBCACHE)

    def draws(seed):
        ctx = CacheContext(path_position=1, path_length=4, downstream_capacity_sum=20, avg_cache_size=5,
                           rng=np.random.default_rng(seed))
        return [should_cache(policy, ctx) for _ in range(20_000)]

    first = draws(3)
    assert first == draws(3)
    assert np.mean(first) == pytest.approx(0.1, abs=0.01)


# -- audits ---------------------------------------------------------------------------


def test_dump_and_duplicate_audit():
    caches = {1: CacheState(2), 2: CacheState(2), 3: CacheState(2)}
    router_as = {1: 0, 2: 0, 3: 1}
    for r, objs in {1: [5, 6], 2: [6], 3: [5]}.items():
        for o in objs:
            caches[r].insert(o)
    assert dump_caches(caches, router_as) == (
        "router_id,as_id,object_id,recency_rank\n1,0,6,0\n1,0,5,1\n2,0,6,0\n3,1,5,0\n"
    )
    assert duplicate_objects_per_as(caches, router_as) == {0: {6}}
