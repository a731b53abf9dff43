"""Command line entry point: ``icnsim {run,sweep,gen-topology,replay,validate}``.

Exit status is 0 only when every requested run succeeded, 1 when a sweep
member failed and 2 for invalid input.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config, parse_config
from .errors import IcnSimError
from .experiments import (
    AXES,
    DEFAULT_POLICIES,
    FIGURES,
    build_topology,
    emit_plot_data,
    execute,
    read_events,
    run_sweep,
    write_run_dir,
    write_sweep_tables,
)
from .topology import dump_snapshot, serialize_as_links

log = logging.getLogger("icnsim")


def _overrides(pairs) -> dict[str, str]:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise IcnSimError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _config(args) -> RunConfig:
    return load_config(args.config, _overrides(args.set))


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_run(args) -> int:
    cfg = _config(args)
    trace_fh = open(args.trace, "w", encoding="utf-8", newline="") if args.trace else None
    try:
        result = execute(cfg, trace=trace_fh)
    finally:
        if trace_fh:
            trace_fh.close()
    out = write_run_dir(result, Path(args.out or cfg["run.output_dir"]) / result.label)
    row = result.summary()
    print(f"{result.label}: server_hit_ratio={row['server_hit_ratio']:.4f} "
          f"retention={row['retention_ratio'] if row['retention_ratio'] is not None else 'n/a'} -> {out}")
    return 0


def _sweep_values(axis: str, text: str) -> list:
    values = _csv_list(text)
    if axis in ("capacity", "population"):
        return [int(v) for v in values]
    return values


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = Path(args.out or cfg["run.output_dir"]) / f"sweep-{args.axis}"
    policies = _csv_list(args.policies) if args.policies else None
    if args.axis != "policy" and policies is None:
        policies = list(DEFAULT_POLICIES)

    def progress(r):
        status = "ok" if r.ok else f"FAILED: {r.error}"
        print(f"{r.label} cap={r.config['topology.capacity']} n_p={r.config['workload.n_p']} "
              f"zm=({r.config['workload.alpha']},{r.config['workload.q']}) {status}", flush=True)

    table = run_sweep(cfg, args.axis, _sweep_values(args.axis, args.values), policies,
                      workers=args.workers, out_dir=out / "runs", on_result=progress)
    write_sweep_tables(table, out)
    for key in _csv_list(args.figures or ""):
        for path in emit_plot_data(table, key, out / "figures"):
            print(f"wrote {path}")
    print(f"{len(table.summary)} runs ok, {len(table.failures)} failed -> {out}")
    return 0 if table.ok else 1


def cmd_gen_topology(args) -> int:
    base = f"policy.kind = SCENE1\nworkload.n_p = {args.n_p}\nworkload.n_requests = 0\n"
    if args.config:
        cfg = load_config(args.config, {**_overrides(args.set), "workload.n_p": str(args.n_p)})
    else:
        cfg = parse_config(base + "".join(f"{k} = {v}\n" for k, v in _overrides(args.set).items()))
    topo = build_topology(cfg)
    text = dump_snapshot(topo) if args.format == "snapshot" else "\n".join(serialize_as_links(topo.as_graph)) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{len(topo.ases)} ASes, {len(topo.routers)} routers, n_c={topo.n_c} -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_replay(args) -> int:
    cfg = _config(args)
    events = read_events(args.trace)
    result = execute(cfg, events=events)
    out = write_run_dir(result, Path(args.out or cfg["run.output_dir"]) / f"replay-{result.label}")
    print(f"{result.label}: {len(events)} requests replayed, workload {result.workload_hash[:12]} -> {out}")
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args)
    topo = build_topology(cfg)
    sys.stdout.write(cfg.emit())
    print(f"# ok: {len(topo.ases)} ASes, {len(topo.routers)} routers, n_c={topo.n_c}, n_p={topo.n_p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="icnsim", description="Inter-domain ICN caching simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp, required=True):
        if required:
            sp.add_argument("config", help="key = value configuration file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    sp = sub.add_parser("run", help="run one configuration")
    with_config(sp)
    sp.add_argument("--out", help="output root (default: run.output_dir)")
    sp.add_argument("--trace", help="write a per-request trace to this file")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="sweep one axis across policies")
    with_config(sp)
    sp.add_argument("--axis", required=True, choices=AXES)
    sp.add_argument("--values", required=True,
                    help="comma-separated values; policy labels, integers, or alpha:q pairs for zm")
    sp.add_argument("--policies", help=f"comma-separated policies (default: {','.join(DEFAULT_POLICIES)})")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--figures", help=f"figure keys to emit: {','.join(FIGURES)}")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("gen-topology", help="generate a topology snapshot")
    sp.add_argument("--config", help="take topology keys from this file")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.add_argument("--n-p", type=int, default=2000, help="population the servers hold")
    sp.add_argument("--format", choices=("snapshot", "as-links"), default="snapshot")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_gen_topology)

    sp = sub.add_parser("replay", help="run a configuration over a recorded request trace")
    sp.add_argument("trace")
    with_config(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("validate", help="check a configuration and print it with defaults")
    with_config(sp)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (IcnSimError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
