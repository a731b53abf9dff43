# %% [markdown]
# # Topologies and request paths
#
# Build the desk-scale network, look at its AS graph, and compare the AS
# paths a single request takes under the three designated-caching
# scenarios.

# %%
from collections import Counter

from icnsim.config import parse_config
from icnsim.experiments import build_registry, build_topology
from icnsim.routing import DesignatedRouters, PathOracle, all_shortest_as_paths, select_as_path

cfg = parse_config("policy.kind = SCENE2\nworkload.n_p = 2000\nworkload.n_requests = 0\n")
topo = build_topology(cfg)
print(f"{len(topo.ases)} ASes, {len(topo.routers)} routers, {len(topo.as_links)} AS links, n_c = {topo.n_c}")

# %% [markdown]
# The AS graph grows incrementally with two links per joining AS, so most
# AS pairs have more than one shortest path. That freedom is what lets a
# request be steered through an AS that covers the object.

# %%
oracle = PathOracle(topo)
multiplicity = Counter(
    len(all_shortest_as_paths(topo, a, b)) for a in topo.as_graph.nodes for b in topo.as_graph.nodes if a < b
)
print("shortest-path multiplicity over AS pairs:", dict(sorted(multiplicity.items())))

# %% [markdown]
# Interest ranges split the id space over the ASes in proportion to their
# capacity. Find a requester and an object whose covering AS lies on a
# shortest path to the server, but not on the lexicographically first one.

# %%
registry = build_registry(cfg, topo)
server_as = topo.servers[0].as_id


def steered():
    for obj in range(0, 2000, 7):
        (cover,) = registry.covering(obj)
        for requester in topo.as_graph.nodes:
            s1 = select_as_path("SCENE1", obj, requester, server_as, topo, registry, oracle)
            s2 = select_as_path("SCENE2", obj, requester, server_as, topo, registry, oracle)
            if s1 != s2:
                return obj, cover, requester


obj, cover, requester = steered()
print(f"object {obj}: covered by AS {cover}; requester AS {requester}; server AS {server_as}")
for scene in ("SCENE1", "SCENE2", "SCENE3"):
    path = select_as_path(scene, obj, requester, server_as, topo, registry, oracle)
    print(f"  {scene}: {' -> '.join(map(str, path))}  ({len(path) - 1} AS hops)")

# %% [markdown]
# Inside each AS exactly one router is responsible for the object. Ids in
# the AS's own range map to contiguous sub-sectors, and everything else goes
# through the AS's consistent-hash ring.

# %%
designated = DesignatedRouters(topo, registry)
own = registry.get(cover)
print(f"AS {cover} range [{own.lo}, {own.hi}]; routers {topo.as_by_id[cover].routers}")
print("  owner of its first, middle and last id:",
      [designated(cover, i) for i in (own.lo, (own.lo + own.hi) // 2, own.hi)])
print("  owners of ids 0..9 in AS", requester, ":", [designated(requester, i) for i in range(10)])
