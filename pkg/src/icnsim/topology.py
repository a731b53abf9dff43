"""Two-level AS/router topologies: parsing, synthetic generation, snapshots.

Every topology is immutable once built. Router ids are unique network-wide
and each router belongs to exactly one AS. All links have unit cost.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import ParseError, TopologyError

__all__ = [
    "Graph",
    "AutonomousSystem",
    "Server",
    "Topology",
    "parse_as_links",
    "serialize_as_links",
    "parse_router_counts",
    "generate_waxman",
    "generate_ba",
    "build_hierarchy",
    "place_servers",
    "collapse_to_as_level",
    "dump_snapshot",
    "load_snapshot",
]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph over integer node ids.

    ``edges`` holds each edge once as ``(u, v)`` with ``u < v``, sorted.
    """

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], nodes: Iterable[int] = ()) -> "Graph":
        seen = set(nodes)
        norm = set()
        for u, v in edges:
            if u == v:
                raise TopologyError(f"self-loop on node {u}")
            norm.add((u, v) if u < v else (v, u))
            seen.update((u, v))
        return cls(tuple(sorted(seen)), tuple(sorted(norm)))

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {n: tuple(sorted(nb)) for n, nb in adj.items()}

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def components(self) -> list[list[int]]:
        """Connected components, each sorted, ordered by smallest member."""
        adj = self.adjacency
        seen: set[int] = set()
        comps = []
        for start in self.nodes:
            if start in seen:
                continue
            comp = [start]
            seen.add(start)
            stack = [start]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        comp.append(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.nodes) <= 1 or len(self.components()) == 1


@dataclass(frozen=True)
class AutonomousSystem:
    id: int
    routers: tuple[int, ...]
    border_routers: tuple[int, ...]
    router_links: tuple[tuple[int, int], ...]
    cache_capacity_per_router: int

    @property
    def total_capacity(self) -> int:
        return self.cache_capacity_per_router * len(self.routers)

    @cached_property
    def graph(self) -> Graph:
        return Graph.from_edges(self.router_links, self.routers)


@dataclass(frozen=True)
class Server:
    """Authoritative origin for the inclusive object range ``[lo, hi]``."""

    lo: int
    hi: int
    as_id: int
    router_id: int


@dataclass(frozen=True)
class Topology:
    """AS graph whose nodes each contain a router graph.

    ``border_links`` pins every AS link to a router pair; an entry
    ``(as_a, as_b, router_a, router_b)`` is stored once with ``as_a < as_b``.
    """

    ases: tuple[AutonomousSystem, ...]
    border_links: tuple[tuple[int, int, int, int], ...]
    servers: tuple[Server, ...] = ()
    as_level_only: bool = False

    # -- lookups -----------------------------------------------------------

    @cached_property
    def as_by_id(self) -> dict[int, AutonomousSystem]:
        return {a.id: a for a in self.ases}

    @cached_property
    def router_as(self) -> dict[int, int]:
        return {r: a.id for a in self.ases for r in a.routers}

    @cached_property
    def as_graph(self) -> Graph:
        return Graph.from_edges(((a, b) for a, b, _, _ in self.border_links), self.as_by_id)

    @property
    def as_links(self) -> tuple[tuple[int, int], ...]:
        return self.as_graph.edges

    @cached_property
    def router_graph(self) -> Graph:
        edges = [e for a in self.ases for e in a.router_links]
        edges.extend((ra, rb) for _, _, ra, rb in self.border_links)
        return Graph.from_edges(edges, self.router_as)

    @cached_property
    def _border_map(self) -> dict[tuple[int, int], tuple[int, int]]:
        out = {}
        for a, b, ra, rb in self.border_links:
            out[(a, b)] = (ra, rb)
            out[(b, a)] = (rb, ra)
        return out

    def border_pair(self, from_as: int, to_as: int) -> tuple[int, int]:
        """(egress router in ``from_as``, ingress router in ``to_as``)."""
        try:
            return self._border_map[(from_as, to_as)]
        except KeyError:
            raise TopologyError(f"ASes {from_as} and {to_as} are not adjacent") from None

    def capacity(self, router: int) -> int:
        return self.as_by_id[self.router_as[router]].cache_capacity_per_router

    @property
    def routers(self) -> tuple[int, ...]:
        return self.router_graph.nodes

    @property
    def n_c(self) -> int:
        """Total cache slots in the network."""
        return sum(a.total_capacity for a in self.ases)

    @property
    def n_p(self) -> int:
        return self.servers[-1].hi + 1 if self.servers else 0

    def server_for(self, obj: int) -> Server:
        # servers tile [0, n_p) in order
        lo, hi = 0, len(self.servers) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            s = self.servers[mid]
            if obj < s.lo:
                hi = mid - 1
            elif obj > s.hi:
                lo = mid + 1
            else:
                return s
        raise TopologyError(f"object {obj} has no authoritative server")

    # -- validation --------------------------------------------------------

    def validate(self) -> "Topology":
        problems = []
        ids = [a.id for a in self.ases]
        if len(set(ids)) != len(ids):
            problems.append("duplicate AS ids")
        all_routers = [r for a in self.ases for r in a.routers]
        if len(set(all_routers)) != len(all_routers):
            problems.append("router ids are not unique network-wide")
        external = {a for a, b, _, _ in self.border_links} | {b for a, b, _, _ in self.border_links}
        for a in self.ases:
            if not a.routers:
                problems.append(f"AS {a.id} has no routers")
                continue
            if a.cache_capacity_per_router < 0:
                problems.append(f"AS {a.id} has negative capacity")
            if not set(a.border_routers) <= set(a.routers):
                problems.append(f"AS {a.id} border routers outside the AS")
            if a.id in external and not a.border_routers:
                problems.append(f"AS {a.id} has external links but no border routers")
            for u, v in a.router_links:
                if u not in a.routers or v not in a.routers:
                    problems.append(f"AS {a.id} link {u}-{v} leaves the AS")
            if not a.graph.is_connected():
                problems.append(f"AS {a.id} router graph is disconnected")
        known = set(self.as_by_id)
        for a, b, ra, rb in self.border_links:
            if a not in known or b not in known:
                problems.append(f"AS link {a}-{b} references an unknown AS")
            elif ra not in self.as_by_id[a].border_routers or rb not in self.as_by_id[b].border_routers:
                problems.append(f"AS link {a}-{b} is not pinned to border routers")
        if not problems and not self.as_graph.is_connected():
            problems.append("AS graph is disconnected")
        expect = 0
        for s in self.servers:
            if s.lo != expect or s.hi < s.lo:
                problems.append(f"servers do not tile the object space at {s.lo}")
                break
            if self.router_as.get(s.router_id) != s.as_id:
                problems.append(f"server router {s.router_id} not in AS {s.as_id}")
            expect = s.hi + 1
        if problems:
            raise TopologyError("; ".join(problems))
        return self


# -- AS link files ----------------------------------------------------------


def parse_as_links(lines: Iterable[str]) -> Graph:
    """Parse an AS-link list into an undirected, deduplicated AS graph.

    Accepts ``"ASID ASID"`` per line, ``#`` comments and blank lines. Lines
    tagged with a leading ``D``/``I`` (CAIDA as-links exports) are accepted
    and any trailing columns after the two ids are ignored.
    """
    edges = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] in ("D", "I"):
            parts = parts[1:3]
        elif len(parts) != 2:
            raise ParseError(f"expected two AS ids, got {len(parts)} field(s)", lineno)
        if len(parts) != 2:
            raise ParseError("expected two AS ids after link tag", lineno)
        try:
            a, b = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"non-integer AS id in {line!r}", lineno) from None
        if a < 0 or b < 0:
            raise ParseError("AS ids must be non-negative", lineno)
        if a == b:
            raise TopologyError(f"line {lineno}: self-loop on AS {a}")
        edges.append((a, b))
    return Graph.from_edges(edges)


def serialize_as_links(graph: Graph) -> list[str]:
    return [f"{u} {v}" for u, v in graph.edges]


def parse_router_counts(lines: Iterable[str]) -> dict[int, int]:
    """Parse ``"ASID router_count"`` lines (per-AS router counts)."""
    counts = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError("expected 'ASID count'", lineno)
        try:
            a, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", lineno) from None
        if c < 1:
            raise ParseError("router count must be >= 1", lineno)
        counts[a] = c
    return counts


# -- generators --------------------------------------------------------------


def _connect_components(edges: set, coords: np.ndarray) -> None:
    """Join components by repeatedly linking the nearest cross-component pair."""
    n = len(coords)
    while True:
        comps = Graph.from_edges(edges, range(n)).components()
        if len(comps) <= 1:
            return
        first = np.asarray(comps[0])
        rest = np.asarray(sorted(x for c in comps[1:] for x in c))
        d = np.linalg.norm(coords[first][:, None, :] - coords[rest][None, :, :], axis=2)
        i, j = np.unravel_index(np.argmin(d), d.shape)
        u, v = int(first[i]), int(rest[j])
        edges.add((min(u, v), max(u, v)))


def _waxman(n, alpha, beta, rng):
    coords = rng.random((n, 2))
    edges: set[tuple[int, int]] = set()
    if n > 1:
        iu, ju = np.triu_indices(n, k=1)
        dist = np.linalg.norm(coords[iu] - coords[ju], axis=1)
        L = dist.max()
        p = alpha * np.exp(-dist / (beta * L)) if L > 0 else np.full(dist.shape, alpha)
        keep = rng.random(len(dist)) < p
        edges = {(int(a), int(b)) for a, b in zip(iu[keep], ju[keep])}
    return coords, edges


def generate_waxman(n: int, alpha: float, beta: float, seed=None, *, connect: bool = True) -> Graph:
    """Waxman random graph on the unit square, nodes ``0..n-1``.

    Each pair is linked with probability ``alpha * exp(-d / (beta * L))``
    where ``L`` is the largest pairwise distance. With ``connect`` (the
    default) the minimum number of nearest-pair edges is added afterwards
    so the result is connected.
    """
    if n < 1:
        raise TopologyError("waxman: n must be >= 1")
    if not (0 < alpha <= 1) or not (0 < beta <= 1):
        raise TopologyError("waxman: alpha and beta must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    coords, edges = _waxman(n, alpha, beta, rng)
    if connect:
        _connect_components(edges, coords)
    return Graph.from_edges(edges, range(n))


def generate_waxman_growth(n: int, m: int, alpha: float, beta: float, seed=None) -> Graph:
    """Incremental Waxman graph in the style of the BRITE generator.

    Nodes are placed on the unit square first and then join one at a time;
    node ``v`` links to ``min(m, v)`` distinct earlier nodes drawn with
    probability proportional to ``alpha * exp(-d / (beta * L))``. The result
    is connected and has ``sum(min(m, v) for v < n)`` edges, so unlike the
    classic model it keeps alternative shortest paths even for small ``n``.
    """
    if n < 1 or m < 1:
        raise TopologyError("waxman growth: need n >= 1 and m >= 1")
    if not (0 < alpha <= 1) or not (0 < beta <= 1):
        raise TopologyError("waxman: alpha and beta must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    coords = rng.random((n, 2))
    dist = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
    L = dist.max()
    edges = []
    for v in range(1, n):
        w = alpha * np.exp(-dist[v, :v] / (beta * L)) if L > 0 else np.full(v, alpha)
        targets = rng.choice(v, size=min(m, v), replace=False, p=w / w.sum())
        edges.extend((int(u), v) for u in sorted(targets))
    return Graph.from_edges(edges, range(n))


def generate_ba(n: int, m: int, seed=None) -> Graph:
    """Barabasi-Albert preferential attachment, nodes ``0..n-1``.

    Starts from a clique on nodes ``0..m-1``; every later node attaches to
    ``m`` distinct earlier nodes chosen with probability proportional to
    degree (uniformly while all degrees are zero).
    """
    if not (n > m >= 1):
        raise TopologyError("ba: require n > m >= 1")
    rng = np.random.default_rng(seed)
    degree = np.zeros(n, dtype=np.int64)
    edges = []
    for u in range(m):
        for v in range(u + 1, m):
            edges.append((u, v))
            degree[u] += 1
            degree[v] += 1
    for new in range(m, n):
        w = degree[:new].astype(float)
        total = w.sum()
        p = w / total if total > 0 else None
        targets = rng.choice(new, size=m, replace=False, p=p)
        for t in sorted(int(t) for t in targets):
            edges.append((t, new))
            degree[t] += 1
            degree[new] += 1
    return Graph.from_edges(edges, range(n))


def build_hierarchy(
    as_graph: Graph,
    routers_per_as: int | dict[int, int],
    capacity: int,
    border_count: int = 2,
    seed=None,
    *,
    router_alpha: float = 0.15,
    router_beta: float = 0.2,
    router_m: int = 0,
) -> Topology:
    """Expand an AS graph into a router-level topology.

    Every AS receives an internal Waxman router graph: the classic model
    when ``router_m`` is 0, else incremental growth with ``router_m`` links
    per joining router. ``routers_per_as``
    may be a mapping from AS id to router count. Border routers are drawn
    per AS, and each AS link is pinned to one border router on either side.
    Router ids are assigned consecutively in AS-id order.
    """
    if not as_graph.is_connected():
        raise TopologyError("AS graph is disconnected")
    if capacity < 0:
        raise TopologyError("capacity must be >= 0")
    rng = np.random.default_rng(seed)
    counts = routers_per_as if isinstance(routers_per_as, dict) else dict.fromkeys(as_graph.nodes, routers_per_as)
    ases = []
    next_id = 0
    for as_id in as_graph.nodes:
        k = counts.get(as_id)
        if k is None:
            raise TopologyError(f"no router count for AS {as_id}")
        nb = min(border_count, k) if isinstance(routers_per_as, dict) else border_count
        if not (k >= nb >= 1):
            raise TopologyError(f"AS {as_id}: need routers_per_as >= border_count >= 1")
        if router_m > 0:
            local = generate_waxman_growth(k, router_m, router_alpha, router_beta, rng)
        else:
            local = generate_waxman(k, router_alpha, router_beta, rng)
        routers = tuple(range(next_id, next_id + k))
        links = tuple((u + next_id, v + next_id) for u, v in local.edges)
        borders = tuple(sorted(int(x) + next_id for x in rng.choice(k, size=nb, replace=False)))
        ases.append(AutonomousSystem(as_id, routers, borders, links, capacity))
        next_id += k
    by_id = {a.id: a for a in ases}
    pins = []
    for a, b in as_graph.edges:
        ra = int(rng.choice(by_id[a].border_routers))
        rb = int(rng.choice(by_id[b].border_routers))
        pins.append((a, b, ra, rb))
    return Topology(tuple(ases), tuple(pins)).validate()


def place_servers(topology: Topology, n_p: int, n_servers: int = 1, seed=None) -> Topology:
    """Attach origin servers holding ``[0, n_p)`` split in equal contiguous slices.

    Each server is attached to a router drawn uniformly from the network.
    """
    if n_p < 1 or n_servers < 1:
        raise TopologyError("need n_p >= 1 and n_servers >= 1")
    if n_servers > n_p:
        raise TopologyError("more servers than objects")
    rng = np.random.default_rng(seed)
    routers = topology.routers
    picks = rng.choice(len(routers), size=n_servers, replace=n_servers > len(routers))
    servers = []
    for i, idx in enumerate(picks):
        lo = (n_p * i) // n_servers
        hi = (n_p * (i + 1)) // n_servers - 1
        r = routers[int(idx)]
        servers.append(Server(lo, hi, topology.router_as[r], r))
    return replace(topology, servers=tuple(servers)).validate()


def collapse_to_as_level(topology: Topology) -> Topology:
    """Collapse each AS to one caching node holding the AS's summed capacity.

    The surviving node keeps the id of the AS's lowest router.
    """
    ases = []
    rep = {}
    for a in topology.ases:
        r = a.routers[0]
        rep[a.id] = r
        ases.append(AutonomousSystem(a.id, (r,), (r,), (), a.total_capacity))
    pins = tuple((a, b, rep[a], rep[b]) for a, b, _, _ in topology.border_links)
    servers = tuple(Server(s.lo, s.hi, s.as_id, rep[s.as_id]) for s in topology.servers)
    return Topology(tuple(ases), pins, servers, as_level_only=True).validate()


# -- snapshot format ----------------------------------------------------------

SNAPSHOT_HEADER = "# icnsim topology snapshot v1"


def dump_snapshot(topology: Topology) -> str:
    """Serialize to the line-oriented snapshot format.

    Sections, in order::

        [AS]      as_id capacity_per_router
        [ROUTER]  router_id as_id is_border(0|1)
        [LINK]    router_a router_b          (intra- and inter-AS, a < b)
        [SERVER]  lo hi as_id router_id

    An optional ``[FLAGS]`` section holds ``as_level_only``.
    """
    out = [SNAPSHOT_HEADER, "[AS]"]
    out += [f"{a.id} {a.cache_capacity_per_router}" for a in topology.ases]
    out.append("[ROUTER]")
    for a in topology.ases:
        borders = set(a.border_routers)
        out += [f"{r} {a.id} {int(r in borders)}" for r in a.routers]
    out.append("[LINK]")
    out += [f"{u} {v}" for u, v in topology.router_graph.edges]
    out.append("[SERVER]")
    out += [f"{s.lo} {s.hi} {s.as_id} {s.router_id}" for s in topology.servers]
    if topology.as_level_only:
        out += ["[FLAGS]", "as_level_only"]
    return "\n".join(out) + "\n"


def load_snapshot(text: str) -> Topology:
    section = None
    caps: dict[int, int] = {}
    routers: dict[int, list[int]] = {}
    borders: dict[int, list[int]] = {}
    router_as: dict[int, int] = {}
    links = []
    servers = []
    flags = set()
    arity = {"AS": 2, "ROUTER": 3, "LINK": 2, "SERVER": 4}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in arity and section != "FLAGS":
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        if section == "FLAGS":
            flags.add(line)
            continue
        if section is None:
            raise ParseError("data before first section", lineno)
        parts = line.split()
        if len(parts) != arity[section]:
            raise ParseError(f"[{section}] expects {arity[section]} fields", lineno)
        try:
            f = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", lineno) from None
        if section == "AS":
            caps[f[0]] = f[1]
            routers.setdefault(f[0], [])
            borders.setdefault(f[0], [])
        elif section == "ROUTER":
            if f[1] not in caps:
                raise ParseError(f"router {f[0]} in undeclared AS {f[1]}", lineno)
            routers[f[1]].append(f[0])
            router_as[f[0]] = f[1]
            if f[2]:
                borders[f[1]].append(f[0])
        elif section == "LINK":
            links.append((f[0], f[1]))
        else:
            servers.append(Server(*f))
    intra: dict[int, list] = {a: [] for a in caps}
    pins = []
    for u, v in links:
        if u not in router_as or v not in router_as:
            raise TopologyError(f"link {u}-{v} references an unknown router")
        au, av = router_as[u], router_as[v]
        if au == av:
            intra[au].append((u, v))
        elif au < av:
            pins.append((au, av, u, v))
        else:
            pins.append((av, au, v, u))
    ases = tuple(
        AutonomousSystem(a, tuple(sorted(routers[a])), tuple(sorted(borders[a])), tuple(sorted(intra[a])), caps[a])
        for a in sorted(caps)
    )
    return Topology(ases, tuple(sorted(pins)), tuple(servers), "as_level_only" in flags).validate()
