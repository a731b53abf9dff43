"""Zipf-Mandelbrot popularity, request streams, traces and persistence."""
import io
import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from icnsim.topology import Graph, build_hierarchy, place_servers
from icnsim.traffic import (
    RequestEvent,
    ZmSampler,
    classify_persistence,
    client_routers,
    default_tau,
    generate_workload,
    read_trace,
    trace_hash,
    trace_to_text,
    write_trace,
    zm_pmf,
    zm_weights,
)

TOPO = place_servers(
    build_hierarchy(Graph.from_edges([(a, a + 1) for a in range(19)]), 10, 5, seed=0), 2000, seed=0
)


def test_pmf_harmonic_case():
    assert zm_pmf(1, 1.0, 0.0, 2) == pytest.approx(2 / 3)
    assert zm_pmf(2, 1.0, 0.0, 2) == pytest.approx(1 / 3)


def test_large_q_flattens_the_head():
    assert zm_pmf(1, 0.6, 121, 100) / zm_pmf(100, 0.6, 121, 100) < 1.5


def test_pmf_rejects_bad_arguments():
    with pytest.raises(ValueError):
        zm_pmf(0, 0.8, 5, 10)
    with pytest.raises(ValueError):
        zm_pmf(1, 0.0, 5, 10)
    with pytest.raises(ValueError):
        zm_pmf(1, 0.8, -1, 10)


@given(st.floats(0.05, 3.0), st.floats(0, 200), st.integers(1, 2000))
def test_pmf_sums_to_one(alpha, q, n_p):
    w = zm_weights(alpha, q, n_p)
    assert (w / w.sum()).sum() == pytest.approx(1.0)
    assert np.all(np.diff(w) < 0) or n_p == 1


@pytest.mark.parametrize("n_p", [1, 10, 1000])
def test_zero_shift_is_pure_zipf(n_p):
    ks = np.arange(1, n_p + 1)
    expected = stats.zipfian.pmf(ks, 0.8, n_p)
    assert [zm_pmf(int(k), 0.8, 0.0, n_p) for k in ks[:50]] == pytest.approx(expected[:50].tolist())


def test_cdf_strictly_increasing_to_one():
    s = ZmSampler(500, 0.8, 5)
    assert np.all(np.diff(s.cdf) > 0) and s.cdf[-1] == 1.0


def test_single_object_population():
    s = ZmSampler(1, seed=4)
    assert set(s.sample_many(100).tolist()) == {0}


def test_sampler_is_seeded():
    assert ZmSampler(300, seed=8).sample_many(1000).tolist() == ZmSampler(300, seed=8).sample_many(1000).tolist()
    assert ZmSampler(300, seed=8).sample_many(1000).tolist() != ZmSampler(300, seed=9).sample_many(1000).tolist()


def test_permutation_seed_is_independent_of_draws():
    a = ZmSampler(300, seed=1, permutation_seed=5)
    b = ZmSampler(300, seed=2, permutation_seed=5)
    assert a.rank_to_id.tolist() == b.rank_to_id.tolist()
    assert a.sample_ranks(200).tolist() != b.sample_ranks(200).tolist()


@given(st.integers(1, 3000), st.integers(0, 10**6))
@settings(max_examples=30)
def test_rank_to_id_is_a_bijection(n_p, seed):
    s = ZmSampler(n_p, seed=seed)
    assert sorted(s.rank_to_id.tolist()) == list(range(n_p))
    assert all(s.rank_to_id[s.id_to_rank[i] - 1] == i for i in range(0, n_p, max(1, n_p // 50)))


def test_samples_fit_the_pmf():
    s = ZmSampler(100, 0.8, 5.0, seed=21)
    counts = np.bincount(s.sample_ranks(1_000_000) - 1, minlength=100)
    expected = np.array([zm_pmf(k, 0.8, 5.0, 100) for k in range(1, 101)]) * 1_000_000
    assert stats.chisquare(counts, expected).pvalue > 0.01


# -- workloads -----------------------------------------------------------------------


def test_zero_requests():
    assert list(generate_workload(0, TOPO, ZmSampler(2000))) == []


def test_workload_sources_exist():
    routers = set(TOPO.routers)
    events = list(generate_workload(40_000, TOPO, ZmSampler(2000), seed=0))
    assert [e.seq for e in events] == list(range(40_000))
    assert all(e.source_router in routers and 0 <= e.object < 2000 for e in events)


def test_sources_are_uniform_over_ases():
    events = generate_workload(200_000, TOPO, ZmSampler(2000), seed=1)
    per_as = Counter(TOPO.router_as[e.source_router] for e in events)
    assert all(abs(n / 10_000 - 1) < 0.05 for n in per_as.values())


def test_workload_is_reproducible():
    a = list(generate_workload(2000, TOPO, ZmSampler(2000, seed=3), seed=3))
    b = list(generate_workload(2000, TOPO, ZmSampler(2000, seed=3), seed=3))
    assert a == b


def test_client_subsets():
    sub = client_routers(TOPO, 7, seed=2)
    assert len(sub) == 7 and sub == client_routers(TOPO, 7, seed=2)
    assert client_routers(TOPO, (5, 3, 5)) == (3, 5)
    with pytest.raises(ValueError):
        client_routers(TOPO, 0)
    with pytest.raises(ValueError):
        client_routers(TOPO, (10_000,))


def test_trace_round_trip_and_hash():
    events = list(generate_workload(500, TOPO, ZmSampler(2000), seed=4))
    text = trace_to_text(events)
    assert text.startswith("seq,source_router,object_id\n")
    assert list(read_trace(io.StringIO(text))) == events
    buf = io.StringIO()
    write_trace(events, buf)
    assert buf.getvalue() == text
    assert trace_hash(events) == trace_hash(read_trace(io.StringIO(text)))
    assert trace_hash(events) != trace_hash(events[:-1])


def test_trace_with_wrong_header_rejected():
    with pytest.raises(ValueError):
        list(read_trace(io.StringIO("a,b,c\n1,2,3\n")))


# -- persistence ----------------------------------------------------------------------


def test_close_repeat_is_persistent():
    trace = [RequestEvent(10, 0, 7), RequestEvent(12, 0, 7)]
    assert classify_persistence(trace, 7, tau=5).persistent_after == 10


def test_single_request_is_transient():
    p = classify_persistence([(3, 7), (4, 8)], 7, tau=5)
    assert p.transient and p.persistent_after is None


def test_tau_must_be_positive():
    with pytest.raises(ValueError):
        classify_persistence([], 1, 0)


def brute_persistence(pairs, obj, tau):
    hits = [s for s, o in pairs if o == obj]
    starts = [a for a, b in itertools.combinations(hits, 2) if b - a < tau]
    return min(starts) if starts else None


@given(st.lists(st.integers(0, 4), max_size=60), st.integers(0, 4), st.floats(0.5, 20))
def test_persistence_matches_quadratic_scan(objects, obj, tau):
    seqs = np.cumsum(np.random.default_rng(len(objects)).integers(1, 4, len(objects))).tolist()
    pairs = list(zip(seqs, objects))
    assert classify_persistence(pairs, obj, tau).persistent_after == brute_persistence(pairs, obj, tau)


def test_default_tau():
    assert default_tau(1000, 2000) == 1.0
