# %% [markdown]
# # Comparing placement policies
#
# Run every policy over one shared request trace on the desk network and
# read the summary and per-window tables that the figure keys draw from.

# %%
from icnsim.config import parse_config
from icnsim.experiments import figure_rows, run_sweep

base = parse_config("""
policy.kind = SCENE1
workload.n_p = 2000
workload.n_requests = 20000
run.window = 2000
""")
labels = ["CEE", "PROBCACHE", "SCENE1", "SCENE2_F", "SCENE3_F", "SCENE2_T", "SCENE3_T"]
table = run_sweep(base, "policy", labels)
assert table.ok and len({r["workload_hash"] for r in table.summary}) == 1

# %% [markdown]
# Network-wide numbers. Retention is the share of requested objects still
# held somewhere at the end; the ideal cache would reach n_c / n_p = 0.5.

# %%
cols = ("policy", "server_hit_ratio", "hopcount_ratio", "as_hops_per_request",
        "evictions_per_million", "retention_ratio", "mean_jain")
print(" ".join(f"{c:>22}" for c in cols))
for r in table.summary:
    print(" ".join(f"{r[c]:>22.4f}" if isinstance(r[c], float) else f"{str(r[c]):>22}" for c in cols))

# %% [markdown]
# Server hit ratio per window (the data behind the time-series figure).

# %%
(_, rows), = figure_rows(table, "fig7").items()
series = {}
for r in rows:
    series.setdefault(r["policy"], []).append(r["server_hit_ratio"])
for label, values in series.items():
    print(f"{label:>10}: " + " ".join(f"{v:.2f}" for v in values))

# %% [markdown]
# Popular objects and whether any cache still holds them at the end.

# %%
for key, rows in figure_rows(table, "fig4").items():
    top = rows[:20]
    print(dict(key)["policy"].rjust(10), "".join("#" if r["in_cache"] else "." for r in top))
