"""Experiment orchestration: build a run from a config, sweep one axis, and
write run directories and per-figure CSV files.

A run directory holds everything needed to replay it bit for bit::

    effective.cfg     every config key, defaults included
    workload.sha256   hash of the request trace
    summary.csv       one row
    windows.csv       one row per metrics window
    per_as.csv        one row per AS
    scatter.csv       request count and cache presence per object rank
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import metrics as M
from .config import RunConfig
from .engine import Simulation
from .errors import ConfigError, IcnSimError
from .policy import PolicyConfig, PolicyKind
from .routing import InterestRegistry, assign_interest
from .topology import (
    Topology,
    build_hierarchy,
    collapse_to_as_level,
    generate_ba,
    generate_waxman,
    generate_waxman_growth,
    load_snapshot,
    parse_as_links,
    parse_router_counts,
    place_servers,
)
from .traffic import RequestEvent, ZmSampler, generate_workload, read_trace, trace_hash

log = logging.getLogger(__name__)

SNAPSHOT_MAGIC = "# icnsim topology snapshot"
AXES = ("policy", "capacity", "population", "zm")
DEFAULT_POLICIES = ("CEE", "PROBCACHE", "SCENE1", "SCENE2", "SCENE3")

# Columns attached to every row of a sweep table so rows from different
# axis values stay distinguishable.
TAG_COLUMNS = ("policy", "capacity", "n_p", "alpha", "q")


# -- building blocks ---------------------------------------------------------------


def parse_policy_label(label: str, default: PolicyConfig | None = None) -> PolicyConfig:
    """``"SCENE2"``, ``"scene3_t"`` or ``"SCENE2_F"`` to a :class:`PolicyConfig`.

    A trailing ``_T``/``_F`` selects whether every on-path AS caches. Other
    fields come from ``default``.
    """
    base = default or PolicyConfig()
    text = label.strip().upper()
    cache_all = base.cache_all_ases
    if text.endswith(("_T", "_F")):
        text, flag = text[:-2], text[-1]
        cache_all = flag == "T"
    kind = PolicyKind.parse(text)
    return PolicyConfig(kind, cache_all if kind in (PolicyKind.SCENE2, PolicyKind.SCENE3) else False,
                        base.probcache_target_times, base.seed)


def _as_graph(cfg: RunConfig):
    n, seed = cfg["topology.n_ases"], cfg["topology.seed"]
    if cfg["topology.as_model"] == "ba":
        return generate_ba(n, cfg["topology.as_m"], seed)
    if cfg["topology.as_m"] > 0:
        return generate_waxman_growth(n, cfg["topology.as_m"], cfg["topology.as_alpha"], cfg["topology.as_beta"], seed)
    return generate_waxman(n, cfg["topology.as_alpha"], cfg["topology.as_beta"], seed)


def build_topology(cfg: RunConfig) -> Topology:
    """Generate or load the topology and attach servers for ``workload.n_p``."""
    seed = cfg["topology.seed"]
    n_p = cfg["workload.n_p"]
    if cfg["topology.source"] == "file":
        text = Path(cfg["topology.file"]).read_text(encoding="utf-8")
        if text.startswith(SNAPSHOT_MAGIC):
            topo = load_snapshot(text)
            if topo.servers:
                if topo.n_p != n_p:
                    raise ConfigError(f"snapshot servers cover {topo.n_p} objects, config asks for {n_p}")
                return topo
            return place_servers(topo, n_p, cfg["topology.n_servers"], seed)
        as_graph = parse_as_links(text.splitlines())
        counts = cfg["topology.routers_per_as"]
        if cfg["topology.router_counts_file"]:
            per_as = parse_router_counts(Path(cfg["topology.router_counts_file"]).read_text().splitlines())
            counts = {a: per_as.get(a, 1) for a in as_graph.nodes}
        topo = _hierarchy(cfg, as_graph, counts)
    else:
        topo = _hierarchy(cfg, _as_graph(cfg), cfg["topology.routers_per_as"])
    if cfg["topology.as_level_only"]:
        topo = collapse_to_as_level(topo)
    return place_servers(topo, n_p, cfg["topology.n_servers"], seed)


def _hierarchy(cfg: RunConfig, as_graph, counts) -> Topology:
    return build_hierarchy(
        as_graph, counts, cfg["topology.capacity"], cfg["topology.border_count"], cfg["topology.seed"],
        router_alpha=cfg["topology.router_alpha"], router_beta=cfg["topology.router_beta"],
        router_m=cfg["topology.router_m"],
    )


def build_registry(cfg: RunConfig, topology: Topology) -> InterestRegistry:
    return assign_interest(topology, cfg["workload.n_p"], cfg["interest.strategy"],
                           cfg["interest.fraction"], cfg["interest.seed"])


def build_workload(cfg: RunConfig, topology: Topology) -> list[RequestEvent]:
    sampler = ZmSampler(cfg["workload.n_p"], cfg["workload.alpha"], cfg["workload.q"],
                        seed=cfg["workload.seed"], permutation_seed=cfg.permutation_seed)
    return list(generate_workload(cfg["workload.n_requests"], topology, sampler,
                                  cfg["workload.sources"], cfg["workload.seed"]))


@dataclass
class RunResult:
    config: RunConfig
    label: str
    workload_hash: str
    report: M.MetricsReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def tags(self) -> dict:
        c = self.config
        return {"policy": self.label, "capacity": c["topology.capacity"], "n_p": c["workload.n_p"],
                "alpha": c["workload.alpha"], "q": c["workload.q"]}

    def meta(self) -> dict:
        c = self.config
        return {
            "policy": self.label, "seed": c["policy.seed"], "topology_seed": c["topology.seed"],
            "workload_seed": c["workload.seed"], "n_ases": c["topology.n_ases"],
            "routers_per_as": c["topology.routers_per_as"], "capacity": c["topology.capacity"],
            "n_c": self.report.cache_slots if self.report else None, "n_p": c["workload.n_p"],
            "n_requests": c["workload.n_requests"], "alpha": c["workload.alpha"], "q": c["workload.q"],
            "workload_hash": self.workload_hash,
        }

    def summary(self) -> dict:
        return M.summary_row(self.report, self.meta())


def execute(cfg: RunConfig, topology: Topology | None = None, events: Sequence[RequestEvent] | None = None,
            registry: InterestRegistry | None = None, workload_hash: str | None = None,
            trace=None) -> RunResult:
    """Run one configuration. Shared inputs may be passed in to avoid rebuilding."""
    topology = topology or build_topology(cfg)
    if events is None:
        events = build_workload(cfg, topology)
    if registry is None:
        registry = build_registry(cfg, topology)
    whash = workload_hash or trace_hash(events)
    policy = cfg.policy
    sim = Simulation(topology, policy, registry, vnodes=cfg["routing.vnodes"],
                     designated_mode=cfg["routing.designated_mode"], window=cfg["run.window"],
                     debug_every=cfg["run.debug_every"], trace=trace)
    report = sim.run(events)
    if report.totals.server_hits + report.totals.cache_hits != report.totals.requests:
        raise IcnSimError("hit accounting does not add up to the request count")
    return RunResult(cfg, policy.label, whash, report)


def write_run_dir(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective.cfg").write_text(result.config.emit(), encoding="utf-8")
    (out / "workload.sha256").write_text(result.workload_hash + "\n", encoding="utf-8")
    tables = [
        ("summary.csv", [result.summary()], M.SUMMARY_COLUMNS),
        ("windows.csv", M.window_rows(result.report, result.label), M.WINDOW_COLUMNS),
        ("per_as.csv", M.per_as_rows(result.report, result.label), M.PER_AS_COLUMNS),
        ("scatter.csv", M.scatter_rows(result.report), M.SCATTER_COLUMNS),
    ]
    for name, rows, cols in tables:
        with open(out / name, "w", encoding="utf-8", newline="") as fh:
            M.write_csv(rows, cols, fh)
    return out


# -- sweeps ---------------------------------------------------------------------------


@dataclass
class ResultTable:
    """Rows of a sweep, each tagged with :data:`TAG_COLUMNS`."""

    summary: list[dict] = field(default_factory=list)
    windows: list[dict] = field(default_factory=list)
    per_as: list[dict] = field(default_factory=list)
    scatter: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def add(self, result: RunResult) -> None:
        tags = result.tags()
        if not result.ok:
            self.failures.append({**tags, "error": result.error})
            return
        self.summary.append({**tags, **result.summary()})
        for name, rows in (("windows", M.window_rows(result.report, result.label)),
                           ("per_as", M.per_as_rows(result.report, result.label)),
                           ("scatter", M.scatter_rows(result.report))):
            getattr(self, name).extend({**tags, **r} for r in rows)

    @property
    def ok(self) -> bool:
        return not self.failures


def _axis_configs(base: RunConfig, axis: str, values: Sequence) -> list[RunConfig]:
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {', '.join(AXES)}")
    out = []
    for v in values:
        if axis == "policy":
            out.append(base)  # policies are expanded per group
        elif axis == "capacity":
            out.append(base.replace(topology__capacity=int(v)))
        elif axis == "population":
            # The request count scales with the population.
            n_p = int(v)
            scaled = max(1, round(base["workload.n_requests"] * n_p / base["workload.n_p"]))
            out.append(base.replace(workload__n_p=n_p, workload__n_requests=scaled))
        else:
            alpha, q = v if isinstance(v, tuple) else (float(x) for x in str(v).split(":"))
            out.append(base.replace(workload__alpha=float(alpha), workload__q=float(q)))
    return out


def _policy_list(base: RunConfig, axis: str, values: Sequence, policies) -> list[PolicyConfig]:
    labels = values if axis == "policy" else (policies or [base["policy.kind"]])
    return [parse_policy_label(str(p), base.policy) for p in labels]


def _with_policy(cfg: RunConfig, p: PolicyConfig) -> RunConfig:
    return cfg.replace(policy__kind=p.kind.value, policy__cache_all_ases=p.cache_all_ases)


def _run_group(cfg: RunConfig, policies: Sequence[PolicyConfig]) -> list[RunResult]:
    """All policies of one axis value over one shared topology and trace."""
    try:
        topology = build_topology(cfg)
        events = build_workload(cfg, topology)
        registry = build_registry(cfg, topology)
    except (IcnSimError, ValueError) as exc:
        return [RunResult(_with_policy(cfg, p), p.label, "", error=f"setup failed: {exc}") for p in policies]
    whash = trace_hash(events)
    results = []
    for p in policies:
        run_cfg = _with_policy(cfg, p)
        try:
            results.append(execute(run_cfg, topology, events, registry, whash))
        except (IcnSimError, ValueError, RuntimeError) as exc:
            log.error("run %s failed: %s", p.label, exc)
            results.append(RunResult(run_cfg, p.label, whash, error=str(exc)))
    return results


def run_sweep(base: RunConfig, axis: str, values: Sequence, policies: Sequence[str] | None = None,
              workers: int = 1, out_dir=None,
              on_result: Callable[[RunResult], None] | None = None) -> ResultTable:
    """Run every ``(axis value, policy)`` pair and collect a tagged table.

    The topology and request trace are built once per axis value and shared
    by all policies. With ``workers > 1`` axis values run in separate
    processes; results are still added in axis order by this process only.
    A failed run is recorded in ``ResultTable.failures`` and the sweep goes on.
    """
    configs = _axis_configs(base, axis, values)
    if axis == "policy":
        configs = configs[:1]
    pols = _policy_list(base, axis, values, policies)
    table = ResultTable()

    def consume(results):
        for r in results:
            table.add(r)
            if out_dir is not None and r.ok:
                write_run_dir(r, Path(out_dir) / _run_name(r))
            if on_result:
                on_result(r)

    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1, len(configs))) as pool:
            for results in pool.map(_run_group, configs, [pols] * len(configs)):
                consume(results)
    else:
        for cfg in configs:
            consume(_run_group(cfg, pols))
    return table


def _run_name(r: RunResult) -> str:
    c = r.config
    return f"{r.label}_cap{c['topology.capacity']}_np{c['workload.n_p']}_a{c['workload.alpha']}_q{c['workload.q']}"


# -- figure data -------------------------------------------------------------------------


@dataclass(frozen=True)
class FigureSpec:
    table: str
    columns: tuple[str, ...]
    group_by: tuple[str, ...] = ()
    description: str = ""


FIGURES: dict[str, FigureSpec] = {
    "fig4": FigureSpec("scatter", ("rank", "requests", "in_cache"), ("policy",),
                       "request count and cache presence by popularity rank"),
    "fig5": FigureSpec("summary", ("policy", "median_as_retention"), (), "median per-AS retention"),
    "fig6": FigureSpec("summary", ("n_p", "policy", "retention_ratio", "ideal_retention"), (),
                       "network retention against population"),
    "fig7": FigureSpec("windows", ("window_end", "policy", "server_hit_ratio"), (), "server hit ratio over time"),
    "fig8": FigureSpec("scatter", ("alpha", "q", "rank", "requests"), ("policy",),
                       "rank against request frequency per popularity setting"),
    "fig9": FigureSpec("windows", ("window_end", "policy", "server_hit_ratio"), ("alpha", "q"),
                       "server hit ratio per popularity setting"),
    "fig10": FigureSpec("windows", ("window_end", "policy", "cache_hit_ratio"), (), "cache hit ratio over time"),
    "fig11": FigureSpec("windows", ("window_end", "policy", "hopcount_ratio"), (), "hop-count ratio over time"),
    "fig12": FigureSpec("windows", ("window_end", "policy", "as_hops_per_request"), (),
                        "average AS hops per request over time"),
    "fig15": FigureSpec("summary", ("policy", "evictions_per_million"), (), "evictions per million requests"),
    "fig16": FigureSpec("summary", ("capacity", "policy", "server_hit_ratio"), (),
                        "server hit ratio against router capacity"),
}


def figure_rows(table: ResultTable, key: str) -> dict[tuple, list[dict]]:
    """Rows of figure ``key`` keyed by ``((column, value), ...)`` groups."""
    spec = FIGURES.get(key)
    if spec is None:
        raise KeyError(f"unknown figure key {key!r}; known keys: {', '.join(FIGURES)}")
    rows = getattr(table, spec.table)
    need = spec.columns + spec.group_by
    if not rows:
        raise ValueError(f"{key}: no {spec.table} rows; required columns {', '.join(need)}")
    missing = [c for c in need if any(c not in r for r in rows)]
    if missing:
        raise ValueError(f"{key}: table lacks required columns {', '.join(missing)}")
    groups: dict[tuple, list[dict]] = {}
    keys = _group_keys(spec, rows)
    for r in rows:
        groups.setdefault(tuple((g, r[g]) for g in keys), []).append(r)
    return groups


def _group_keys(spec: FigureSpec, rows: list[dict]) -> tuple[str, ...]:
    """The figure's own grouping plus any sweep tag that varies across ``rows``."""
    extra = tuple(t for t in TAG_COLUMNS
                  if t not in spec.columns and t not in spec.group_by and len({r.get(t) for r in rows}) > 1)
    return spec.group_by + extra


def emit_plot_data(table: ResultTable, key: str, out_dir) -> list[Path]:
    """Write ``<key>.csv``, or one ``<key>_<col>=<value>....csv`` per group."""
    groups = figure_rows(table, key)
    spec = FIGURES[key]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for group, rows in groups.items():
        suffix = "".join(f"_{c}={M.fmt(v)}" for c, v in group)
        path = out / f"{key}{suffix}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            M.write_csv(rows, spec.columns, fh)
        paths.append(path)
    return paths


def write_sweep_tables(table: ResultTable, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = {
        "summary": TAG_COLUMNS[1:] + M.SUMMARY_COLUMNS,
        "windows": TAG_COLUMNS[1:] + M.WINDOW_COLUMNS,
        "per_as": TAG_COLUMNS[1:] + M.PER_AS_COLUMNS,
    }
    for name, c in cols.items():
        seen = list(dict.fromkeys(c))
        with open(out / f"sweep_{name}.csv", "w", encoding="utf-8", newline="") as fh:
            M.write_csv(getattr(table, name), seen, fh)
    if table.failures:
        with open(out / "sweep_failures.csv", "w", encoding="utf-8", newline="") as fh:
            M.write_csv(table.failures, TAG_COLUMNS + ("error",), fh)


def read_events(path) -> list[RequestEvent]:
    with open(path, encoding="utf-8") as fh:
        return list(read_trace(fh))


def replay(cfg: RunConfig, events: Iterable[RequestEvent]) -> RunResult:
    """Run ``cfg`` over a recorded trace instead of a generated workload."""
    events = list(events)
    return execute(cfg, events=events)
