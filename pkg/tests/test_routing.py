"""Path selection, interest ranges and designated-router mapping."""
import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icnsim.errors import AggregationError, RoutingError
from icnsim.policy import PolicyKind
from icnsim.routing import (
    DesignatedRouters,
    InterestRange,
    InterestRegistry,
    PathOracle,
    aggregate_interest,
    all_shortest_as_paths,
    assign_interest,
    build_rings,
    designated_router,
    intra_as_route,
    nearest_interested_as,
    select_as_path,
    shortest_path,
)
from icnsim.topology import Graph, build_hierarchy, generate_waxman, generate_waxman_growth

A, B, C, D = 0, 1, 2, 3


def as_topology(edges, routers=1):
    """One router per AS unless asked otherwise; AS ids are the graph nodes."""
    return build_hierarchy(Graph.from_edges(edges), routers, 1, border_count=1, seed=0)


DIAMOND = as_topology([(A, B), (A, C), (B, D), (C, D)])


def nx_graph(g):
    out = nx.Graph()
    out.add_nodes_from(g.nodes)
    out.add_edges_from(g.edges)
    return out


random_graphs = st.builds(
    lambda n, seed: generate_waxman(n, 0.4, 0.4, seed), st.integers(1, 12), st.integers(0, 100_000)
)


# -- shortest paths ----------------------------------------------------------------


def test_shortest_path_identity():
    assert shortest_path(Graph.from_edges([(1, 2)]), 1, 1) == [1]


def test_shortest_path_line():
    assert shortest_path(Graph.from_edges([(1, 2), (2, 3)]), 1, 3) == [1, 2, 3]


def test_shortest_path_unreachable():
    with pytest.raises(RoutingError):
        shortest_path(Graph.from_edges([(1, 2), (3, 4)]), 1, 4)


@given(random_graphs, st.data())
@settings(max_examples=60, deadline=None)
def test_shortest_path_length_matches_networkx(g, data):
    s = data.draw(st.sampled_from(g.nodes))
    t = data.draw(st.sampled_from(g.nodes))
    p = shortest_path(g, s, t)
    assert p[0] == s and p[-1] == t
    assert all((min(u, v), max(u, v)) in set(g.edges) for u, v in zip(p, p[1:]))
    assert len(p) - 1 == nx.shortest_path_length(nx_graph(g), s, t)


def test_all_shortest_paths_diamond():
    assert set(all_shortest_as_paths(DIAMOND, A, D)) == {(A, B, D), (A, C, D)}


def test_all_shortest_paths_line():
    line = as_topology([(A, B), (B, C)])
    assert all_shortest_as_paths(line, A, C) == [(A, B, C)]


@given(st.integers(2, 12), st.integers(0, 100_000), st.data())
@settings(max_examples=60, deadline=None)
def test_all_shortest_paths_match_networkx(n, seed, data):
    topo = as_topology(generate_waxman_growth(n, 2, 0.15, 0.2, seed).edges)
    s, t = data.draw(st.sampled_from(topo.as_graph.nodes)), data.draw(st.sampled_from(topo.as_graph.nodes))
    ours = all_shortest_as_paths(topo, s, t)
    ref = sorted(tuple(p) for p in nx.all_shortest_paths(nx_graph(topo.as_graph), s, t))
    assert ours == ref


# -- AS path selection -------------------------------------------------------------


def test_scene2_equals_scene1_without_interest():
    empty = InterestRegistry()
    s1 = select_as_path("SCENE1", 5, A, D, DIAMOND, empty)
    assert select_as_path("SCENE2", 5, A, D, DIAMOND, empty) == s1 == (A, B, D)


def test_scene2_prefers_the_path_through_the_interested_as():
    reg = InterestRegistry({C: InterestRange(0, 10)})
    assert select_as_path("SCENE2", 5, A, D, DIAMOND, reg) == (A, C, D)
    assert select_as_path("SCENE2", 50, A, D, DIAMOND, reg) == (A, B, D)


def test_scene3_detours_through_the_nearest_interested_as():
    # A - B - S with C hanging off B; S is AS 3.
    topo = as_topology([(A, B), (B, 3), (B, C)])
    reg = InterestRegistry({C: InterestRange(0, 10)})
    path = select_as_path("SCENE3", 5, A, 3, topo, reg)
    assert path == (A, B, C, B, 3)
    d = dict(nx.all_pairs_shortest_path_length(nx_graph(topo.as_graph)))
    assert len(path) - 1 == d[A][C] + d[C][3]


registries = st.dictionaries(
    st.integers(0, 14), st.tuples(st.integers(0, 30), st.integers(0, 30)).map(lambda t: InterestRange(min(t), max(t))),
    max_size=6,
)


def restrict(ranges, topo):
    """Registry over the ASes that exist in ``topo``."""
    return InterestRegistry({a: r for a, r in ranges.items() if a in topo.as_graph.adjacency})


@given(st.integers(2, 15), st.integers(0, 100_000), registries, st.data())
@settings(max_examples=80, deadline=None)
def test_selected_paths_are_valid(n, seed, reg, data):
    topo = as_topology(generate_waxman_growth(n, 2, 0.15, 0.2, seed).edges)
    reg = restrict(reg, topo)
    ases = topo.as_graph.nodes
    src, dst = data.draw(st.sampled_from(ases)), data.draw(st.sampled_from(ases))
    obj = data.draw(st.integers(0, 30))
    d = dict(nx.all_pairs_shortest_path_length(nx_graph(topo.as_graph)))
    edges = set(topo.as_graph.edges)
    oracle = PathOracle(topo)
    paths = {k: select_as_path(k, obj, src, dst, topo, reg, oracle) for k in ("SCENE1", "SCENE2", "SCENE3")}
    for p in paths.values():
        assert p[0] == src and p[-1] == dst
        assert all((min(u, v), max(u, v)) in edges for u, v in zip(p, p[1:]))
    assert len(paths["SCENE1"]) - 1 == len(paths["SCENE2"]) - 1 == d[src][dst]
    assert len(paths["SCENE3"]) - 1 >= d[src][dst]
    # SCENE1 takes the lexicographically first minimal path.
    assert paths["SCENE1"] == min(tuple(p) for p in nx.all_shortest_paths(nx_graph(topo.as_graph), src, dst))
    assert select_as_path("SCENE2", obj, src, dst, topo, InterestRegistry(), oracle) == paths["SCENE1"]
    covering = [a for a in ases if reg.covers(a, obj)]
    on_minimal = [p for p in all_shortest_as_paths(topo, src, dst) if set(p) & set(covering)]
    assert paths["SCENE2"] == (on_minimal[0] if on_minimal else paths["SCENE1"])
    if covering:
        via = min(covering, key=lambda c: (d[src][c], c))
        assert len(paths["SCENE3"]) - 1 == d[src][via] + d[via][dst]


# -- interest ranges ----------------------------------------------------------------


def test_aggregate_overlapping_ranges():
    assert aggregate_interest([InterestRange(100, 200), InterestRange(200, 500)]) == InterestRange(100, 500)


def test_aggregate_single_range():
    assert aggregate_interest([InterestRange(3, 9)]) == InterestRange(3, 9)


def test_aggregate_gap_is_an_error():
    with pytest.raises(AggregationError):
        aggregate_interest([InterestRange(0, 10), InterestRange(20, 30)])


def test_empty_range_rejected():
    with pytest.raises(ValueError):
        InterestRange(5, 4)


ranges = st.lists(
    st.tuples(st.integers(0, 60), st.integers(0, 20)).map(lambda t: InterestRange(t[0], t[0] + t[1])),
    min_size=1, max_size=6,
)


def _outcome(rs):
    try:
        return aggregate_interest(rs)
    except AggregationError:
        return "gap"


@given(ranges, st.randoms(use_true_random=False))
def test_aggregate_is_order_insensitive(rs, rnd):
    shuffled = list(rs)
    rnd.shuffle(shuffled)
    assert _outcome(shuffled) == _outcome(rs)
    covered = set().union(*(range(r.lo, r.hi + 1) for r in rs))
    expect = "gap" if len(covered) != max(covered) - min(covered) + 1 else InterestRange(min(covered), max(covered))
    assert _outcome(rs) == expect


def test_registry_load_dump_round_trip():
    reg = InterestRegistry({3: InterestRange(0, 9), 1: InterestRange(10, 19)})
    assert InterestRegistry.load(reg.dump()) == reg
    assert reg.covering(12) == (1,)


def test_registry_rejects_second_range_for_an_as():
    with pytest.raises(Exception):
        InterestRegistry.load("1 0 5\n1 6 9\n")


def test_partition_interest_is_proportional_to_capacity():
    reg = assign_interest(DIAMOND, 100, "partition")
    assert [(a, r.lo, r.hi) for a, r in reg.items()] == [(0, 0, 24), (1, 25, 49), (2, 50, 74), (3, 75, 99)]
    assert len(assign_interest(DIAMOND, 100, "none")) == 0
    assert all(len(r) == 100 for _, r in assign_interest(DIAMOND, 100, "full").items())


def test_nearest_interested_as_is_self_when_interested():
    reg = InterestRegistry({A: InterestRange(0, 9), D: InterestRange(0, 9)})
    assert nearest_interested_as(reg, DIAMOND, A, 4) == A


def test_nearest_interested_as_prefers_shorter_distance():
    line = as_topology([(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)])
    reg = InterestRegistry({2: InterestRange(0, 9), 5: InterestRange(0, 9)})
    # From AS 0: AS 2 is two hops away, AS 5 five; from AS 3 they are 1 and 2.
    assert nearest_interested_as(reg, line, 0, 3) == 2
    reg = InterestRegistry({5: InterestRange(0, 9), 0: InterestRange(0, 9)})
    assert nearest_interested_as(reg, line, 3, 3) == 5
    assert nearest_interested_as(reg, line, 3, 50) is None


@given(st.integers(2, 15), st.integers(0, 100_000), registries, st.data())
@settings(max_examples=60, deadline=None)
def test_nearest_interested_as_matches_exhaustive_scan(n, seed, reg, data):
    topo = as_topology(generate_waxman_growth(n, 2, 0.15, 0.2, seed).edges)
    reg = restrict(reg, topo)
    src = data.draw(st.sampled_from(topo.as_graph.nodes))
    obj = data.draw(st.integers(0, 30))
    d = nx.single_source_shortest_path_length(nx_graph(topo.as_graph), src)
    scan = sorted((d[a], a) for a in topo.as_graph.nodes if reg.covers(a, obj))
    assert nearest_interested_as(reg, topo, src, obj) == (scan[0][1] if scan else None)


# -- intra-AS routes -----------------------------------------------------------------


def one_as(k, seed):
    return build_hierarchy(Graph.from_edges([], [0]), k, 1, border_count=1, seed=seed)


def test_intra_route_degenerate():
    t = one_as(6, 1)
    assert intra_as_route(t, 0, 3, 3, 3) == [3]


def test_intra_route_via_on_shortest_path_has_no_penalty():
    t = one_as(12, 4)
    g = t.as_by_id[0].graph
    direct = shortest_path(g, 0, 11)
    via = direct[len(direct) // 2]
    assert len(intra_as_route(t, 0, 0, via, 11)) == len(direct)


def test_intra_route_rejects_foreign_router():
    with pytest.raises(RoutingError):
        intra_as_route(DIAMOND, 0, 0, 1, 0)


@given(st.integers(1, 15), st.integers(0, 100_000), st.data())
@settings(max_examples=60, deadline=None)
def test_intra_route_length_matches_bfs(k, seed, data):
    t = one_as(k, seed)
    ing, via, egr = (data.draw(st.integers(0, k - 1)) for _ in range(3))
    route = intra_as_route(t, 0, ing, via, egr)
    g = nx_graph(t.as_by_id[0].graph)
    assert route[0] == ing and route[-1] == egr and via in route
    assert len(route) - 1 == nx.shortest_path_length(g, ing, via) + nx.shortest_path_length(g, via, egr)


# -- designated routers ----------------------------------------------------------------


def test_single_router_as_owns_every_id():
    rings = build_rings(DIAMOND)
    assert {designated_router(rings, B, i) for i in range(500)} == {DIAMOND.as_by_id[B].routers[0]}


def test_designated_router_is_deterministic():
    t = one_as(10, 3)
    first, second = build_rings(t), build_rings(t)
    assert [designated_router(first, 0, i) for i in range(1000)] == [designated_router(second, 0, i) for i in range(1000)]


def test_unknown_as_has_no_ring():
    with pytest.raises(RoutingError):
        designated_router(build_rings(DIAMOND), 99, 1)


def test_sector_mode_splits_own_range_by_capacity():
    t = one_as(4, 0)
    reg = InterestRegistry({0: InterestRange(0, 99)})
    dr = DesignatedRouters(t, reg, mode="sector")
    owners = [dr(0, i) for i in range(100)]
    assert owners == [0] * 25 + [1] * 25 + [2] * 25 + [3] * 25
    ring = DesignatedRouters(t, reg, mode="ring")
    assert [dr(0, i) for i in range(100, 300)] == [ring(0, i) for i in range(100, 300)]


@given(st.integers(1, 12), st.integers(0, 100_000), st.integers(0, 10**6))
@settings(max_examples=50, deadline=None)
def test_one_designated_router_per_as_and_id(k, seed, obj):
    t = one_as(k, seed)
    dr = DesignatedRouters(t, InterestRegistry({0: InterestRange(0, 1000)}))
    assert dr(0, obj) == dr(0, obj) and dr(0, obj) in t.as_by_id[0].routers


def test_designated_routers_reject_unknown_mode():
    with pytest.raises(ValueError):
        DesignatedRouters(DIAMOND, mode="random")


def test_scene_kinds_parse():
    assert PolicyKind.parse("scene2") is PolicyKind.SCENE2
    with pytest.raises(ValueError):
        PolicyKind.parse("LFU")


def test_paths_through_every_pair_on_small_line():
    line = as_topology([(0, 1), (1, 2), (2, 3)])
    for s, t in itertools.product(range(4), repeat=2):
        p = select_as_path("SCENE1", 0, s, t, line, InterestRegistry())
        step = 1 if s <= t else -1
        assert list(p) == list(range(s, t + step, step))
