# %% [markdown]
# # The unit-link access-cost model
#
# Four caching routers hold one object each: routers 1-3, 2-3 and 3-4, with
# the origin (node 5) behind router 4. Client A at router 1 wants a, b and
# d; client B at router 2 wants a, c and d. Compare two placements as the
# request rates change.

# %%
import numpy as np

from icnsim.metrics import total_access_cost

GRAPH = {1: [3], 2: [3], 3: [1, 2, 4], 4: [3, 5], 5: [4]}
SPREAD = {1: "a", 2: "a", 3: "d", 4: "b"}  # most popular object at both edges
UNIQUE = {1: "b", 2: "c", 3: "a", 4: "d"}  # every object stored exactly once


def demand(ra, rb, rc, rd):
    return {"a": (ra, [1, 2]), "b": (rb, [1]), "c": (rc, [2]), "d": (rd, [1, 2])}


# %% [markdown]
# With a steep popularity curve, duplicating the head object wins; as the
# curve flattens, storing each object once becomes cheaper.

# %%
for skew in (3.0, 1.5, 1.0, 0.5, 0.0):
    ra, rb, rc, rd = (np.arange(1, 5) ** -skew).tolist()
    d = demand(ra, rb, rc, rd)
    spread, unique = total_access_cost(SPREAD, d, GRAPH, 5), total_access_cost(UNIQUE, d, GRAPH, 5)
    better = "unique" if unique < spread else "spread"
    print(f"skew {skew:3.1f}: spread {spread:6.3f}  unique {unique:6.3f}  -> {better}")

# %% [markdown]
# The unique placement is cheaper exactly when r_b + 1.5 r_c > r_a + r_d.

# %%
rng = np.random.default_rng(0)
agree = 0
for _ in range(10_000):
    ra, rb, rc, rd = rng.random(4)
    d = demand(ra, rb, rc, rd)
    cheaper = total_access_cost(UNIQUE, d, GRAPH, 5) < total_access_cost(SPREAD, d, GRAPH, 5)
    agree += cheaper == (rb + 1.5 * rc > ra + rd)
print(f"condition agrees on {agree} of 10000 random rate vectors")
