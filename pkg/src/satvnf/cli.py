"""Configuration loading, experiment sweeps, and the command line front end.

``run`` executes a sweep of (cell, repetition) simulations per algorithm and
writes per-run detail rows, per-cell aggregates, and a JSON summary.  Output
is byte-for-byte identical for a given config and seed regardless of worker
count: wall-clock timings go to a separate file and result rows are sorted
deterministically before writing.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np
import yaml

from .algorithms import SolverParams, viterbi_place
from .engine import (ALGORITHMS, PlacementContext, run_dynamic_simulation,
                     run_static_experiment)
from .oracle import brute_force_optimal, random_tiny_instance
from .pathing import PathTable
from .requests import WorkloadParams
from .state import strategy_bandwidth_cost
from .topology import (CoverageMap, DelayProfile, attach_cloud,
                       build_constellation)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration file; the message names the offending field."""


@dataclass(frozen=True)
class TopologyConfig:
    planes: int = 3
    sats_per_plane: int = 4
    cpu_capacity: float = 96.0
    mem_capacity: float = 112.0
    isl_bandwidth_mbps: float = 1000.0
    intra_plane_delays_ms: tuple[float, float] = (7.25, 12.6)
    inter_plane_delay_ms: float = 13.4
    cloud_gateways: tuple[int, ...] = (5, 6)
    ground_bandwidth_mbps: float = 10000.0
    ground_delay_ms: float = 13.1
    access_delay_ms: float = 13.1
    coverage_overlap: float = 0.1
    coverage_gap: float = 0.0


@dataclass(frozen=True)
class WorkloadConfig:
    chain_exponent: float = 2.0
    chain_min: int = 2
    chain_max: int = 7
    cpu_range: tuple[float, float] = (1.0, 2.0)
    mem_range: tuple[float, float] = (2.0, 4.0)
    compute_range_ms: tuple[float, float] = (20.0, 30.0)
    bandwidth_range_mbps: tuple[float, float] = (1.0, 5.0)
    max_delay_ms: float = 250.0
    integer_demands: bool = False
    duration_mean_slots: float = 3.0


@dataclass(frozen=True)
class SolverConfig:
    d: int = 8
    beam_width: int = 4


@dataclass(frozen=True)
class StaticConfig:
    m_values: tuple[int, ...] = tuple(range(10, 600, 40))
    repetitions: int = 30


@dataclass(frozen=True)
class DynamicConfig:
    lambda_values: tuple[float, ...] = tuple(float(v) for v in range(10, 320, 40))
    slots: int = 50
    repetitions: int = 30


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 42
    mode: str = "static"  # static | dynamic | both
    algorithms: tuple[str, ...] = ALGORITHMS
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    static: StaticConfig = field(default_factory=StaticConfig)
    dynamic: DynamicConfig = field(default_factory=DynamicConfig)


def _expect(cond: bool, where: str, what: str) -> None:
    if not cond:
        raise ConfigError(f"{where}: {what}")


def _as_number(value, where: str) -> float:
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool),
            where, f"expected a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool),
            where, f"expected an integer, got {value!r}")
    return value


def _as_pair(value, where: str) -> tuple[float, float]:
    _expect(isinstance(value, (list, tuple)) and len(value) == 2,
            where, f"expected a [low, high] pair, got {value!r}")
    lo = _as_number(value[0], where)
    hi = _as_number(value[1], where)
    _expect(lo <= hi, where, f"low {lo!r} exceeds high {hi!r}")
    return (lo, hi)


def _check_keys(section: dict, where: str, allowed) -> None:
    for key in section:
        _expect(key in allowed, f"{where}.{key}" if where else str(key),
                "unknown configuration key")


def _merge_topology(raw: dict) -> TopologyConfig:
    defaults = TopologyConfig()
    _check_keys(raw, "topology", {f.name for f in dataclasses.fields(defaults)})
    kw = {}
    for name in ("planes", "sats_per_plane"):
        if name in raw:
            v = _as_int(raw[name], f"topology.{name}")
            _expect(v >= 1, f"topology.{name}", f"must be >= 1, got {v}")
            kw[name] = v
    for name in ("cpu_capacity", "mem_capacity", "isl_bandwidth_mbps",
                 "inter_plane_delay_ms", "ground_bandwidth_mbps",
                 "ground_delay_ms", "access_delay_ms"):
        if name in raw:
            v = _as_number(raw[name], f"topology.{name}")
            _expect(v > 0, f"topology.{name}", f"must be positive, got {v!r}")
            kw[name] = v
    if "intra_plane_delays_ms" in raw:
        pair = _as_pair(raw["intra_plane_delays_ms"], "topology.intra_plane_delays_ms")
        _expect(pair[0] > 0, "topology.intra_plane_delays_ms",
                "delays must be positive")
        kw["intra_plane_delays_ms"] = pair
    if "cloud_gateways" in raw:
        v = raw["cloud_gateways"]
        _expect(isinstance(v, (list, tuple)), "topology.cloud_gateways",
                f"expected a list of satellite ids, got {v!r}")
        kw["cloud_gateways"] = tuple(
            _as_int(g, "topology.cloud_gateways") for g in v)
    for name in ("coverage_overlap", "coverage_gap"):
        if name in raw:
            v = _as_number(raw[name], f"topology.{name}")
            _expect(0.0 <= v < 1.0, f"topology.{name}",
                    f"must be in [0, 1), got {v!r}")
            kw[name] = v
    cfg = dataclasses.replace(defaults, **kw)
    n = cfg.planes * cfg.sats_per_plane
    for g in cfg.cloud_gateways:
        _expect(0 <= g < n, "topology.cloud_gateways",
                f"satellite {g} is outside the {n}-satellite constellation")
    return cfg


def _merge_workload(raw: dict) -> WorkloadConfig:
    defaults = WorkloadConfig()
    _check_keys(raw, "workload", {f.name for f in dataclasses.fields(defaults)})
    kw = {}
    if "chain_exponent" in raw:
        kw["chain_exponent"] = _as_number(raw["chain_exponent"], "workload.chain_exponent")
    for name in ("chain_min", "chain_max"):
        if name in raw:
            v = _as_int(raw[name], f"workload.{name}")
            _expect(v >= 2, f"workload.{name}", f"must be >= 2, got {v}")
            kw[name] = v
    for name in ("cpu_range", "mem_range", "compute_range_ms", "bandwidth_range_mbps"):
        if name in raw:
            pair = _as_pair(raw[name], f"workload.{name}")
            _expect(pair[0] >= 0, f"workload.{name}", "must be non-negative")
            kw[name] = pair
    if "max_delay_ms" in raw:
        v = _as_number(raw["max_delay_ms"], "workload.max_delay_ms")
        _expect(v > 0, "workload.max_delay_ms", f"must be positive, got {v!r}")
        kw["max_delay_ms"] = v
    if "integer_demands" in raw:
        _expect(isinstance(raw["integer_demands"], bool),
                "workload.integer_demands", "expected true or false")
        kw["integer_demands"] = raw["integer_demands"]
    if "duration_mean_slots" in raw:
        v = _as_number(raw["duration_mean_slots"], "workload.duration_mean_slots")
        _expect(v > 0, "workload.duration_mean_slots", f"must be positive, got {v!r}")
        kw["duration_mean_slots"] = v
    cfg = dataclasses.replace(defaults, **kw)
    _expect(cfg.chain_min <= cfg.chain_max, "workload.chain_max",
            f"must be >= chain_min ({cfg.chain_min}), got {cfg.chain_max}")
    return cfg


def _merge_solver(raw: dict) -> SolverConfig:
    _check_keys(raw, "solver", {"d", "beam_width"})
    kw = {}
    for name in ("d", "beam_width"):
        if name in raw:
            v = _as_int(raw[name], f"solver.{name}")
            _expect(v >= 1, f"solver.{name}", f"must be >= 1, got {v}")
            kw[name] = v
    return dataclasses.replace(SolverConfig(), **kw)


def _merge_static(raw: dict) -> StaticConfig:
    _check_keys(raw, "static", {"m_values", "repetitions"})
    kw = {}
    if "m_values" in raw:
        v = raw["m_values"]
        _expect(isinstance(v, (list, tuple)) and v, "static.m_values",
                f"expected a non-empty list, got {v!r}")
        values = tuple(_as_int(m, "static.m_values") for m in v)
        _expect(all(m >= 0 for m in values), "static.m_values",
                "request counts must be >= 0")
        kw["m_values"] = values
    if "repetitions" in raw:
        v = _as_int(raw["repetitions"], "static.repetitions")
        _expect(v >= 1, "static.repetitions", f"must be >= 1, got {v}")
        kw["repetitions"] = v
    return dataclasses.replace(StaticConfig(), **kw)


def _merge_dynamic(raw: dict) -> DynamicConfig:
    _check_keys(raw, "dynamic", {"lambda_values", "slots", "repetitions"})
    kw = {}
    if "lambda_values" in raw:
        v = raw["lambda_values"]
        _expect(isinstance(v, (list, tuple)) and v, "dynamic.lambda_values",
                f"expected a non-empty list, got {v!r}")
        values = tuple(_as_number(x, "dynamic.lambda_values") for x in v)
        _expect(all(x >= 0 for x in values), "dynamic.lambda_values",
                "arrival rates must be >= 0")
        kw["lambda_values"] = values
    for name in ("slots", "repetitions"):
        if name in raw:
            v = _as_int(raw[name], f"dynamic.{name}")
            _expect(v >= 1, f"dynamic.{name}", f"must be >= 1, got {v}")
            kw[name] = v
    return dataclasses.replace(DynamicConfig(), **kw)


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    """Build a full configuration from a (possibly partial) mapping."""
    raw = dict(raw or {})
    _check_keys(raw, "", {"schema_version", "seed", "mode", "algorithms",
                          "topology", "workload", "solver", "static", "dynamic"})
    if "schema_version" in raw:
        _expect(raw["schema_version"] == SCHEMA_VERSION, "schema_version",
                f"expected {SCHEMA_VERSION}, got {raw['schema_version']!r}")
    kw = {}
    if "seed" in raw:
        v = _as_int(raw["seed"], "seed")
        _expect(v >= 0, "seed", f"must be >= 0, got {v}")
        kw["seed"] = v
    if "mode" in raw:
        _expect(raw["mode"] in ("static", "dynamic", "both"), "mode",
                f"expected static, dynamic, or both, got {raw['mode']!r}")
        kw["mode"] = raw["mode"]
    if "algorithms" in raw:
        v = raw["algorithms"]
        _expect(isinstance(v, (list, tuple)) and v, "algorithms",
                f"expected a non-empty list, got {v!r}")
        for a in v:
            _expect(a in ALGORITHMS, "algorithms",
                    f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
        kw["algorithms"] = tuple(v)
    for name, merge in (("topology", _merge_topology), ("workload", _merge_workload),
                        ("solver", _merge_solver), ("static", _merge_static),
                        ("dynamic", _merge_dynamic)):
        section = raw.get(name, {})
        _expect(isinstance(section, dict), name, "expected a mapping")
        kw[name] = merge(section)
    return ExperimentConfig(**kw)


def load_config(path: str | FsPath | None) -> ExperimentConfig:
    """Load a YAML config; an absent or empty file yields all defaults."""
    if path is None:
        return config_from_dict({})
    text = FsPath(path).read_text()
    raw = yaml.safe_load(text)
    if raw is None:
        raw = {}
    _expect(isinstance(raw, dict), str(path), "top level must be a mapping")
    return config_from_dict(raw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["schema_version"] = SCHEMA_VERSION
    return out


def build_context(cfg: ExperimentConfig) -> PlacementContext:
    top = cfg.topology
    network = build_constellation(
        top.planes, top.sats_per_plane,
        cpu_capacity=top.cpu_capacity,
        mem_capacity=top.mem_capacity,
        delay_profile=DelayProfile(top.intra_plane_delays_ms[0],
                                   top.intra_plane_delays_ms[1],
                                   top.inter_plane_delay_ms),
        isl_bandwidth=top.isl_bandwidth_mbps,
    )
    if top.cloud_gateways:
        network = attach_cloud(network, top.cloud_gateways,
                               bandwidth=top.ground_bandwidth_mbps,
                               delay=top.ground_delay_ms)
    coverage = CoverageMap(top.planes, top.sats_per_plane,
                           overlap=top.coverage_overlap, gap=top.coverage_gap,
                           access_delay=top.access_delay_ms)
    params = SolverParams(d=cfg.solver.d, beam_width=cfg.solver.beam_width)
    table = PathTable(network, cfg.solver.d)
    return PlacementContext(network, coverage, table, params)


def workload_params(cfg: ExperimentConfig, arrival_rate: float = 0.0) -> WorkloadParams:
    w = cfg.workload
    return WorkloadParams(
        chain_exponent=w.chain_exponent,
        chain_min=w.chain_min,
        chain_max=w.chain_max,
        cpu_range=w.cpu_range,
        mem_range=w.mem_range,
        compute_range=w.compute_range_ms,
        bandwidth_range=w.bandwidth_range_mbps,
        max_delay=w.max_delay_ms,
        integer_demands=w.integer_demands,
        arrival_rate=arrival_rate,
        duration_mean=w.duration_mean_slots,
    )


def task_rng(seed: int, mode: str, cell_index: int, rep: int):
    """Independent stream per (mode, cell, repetition); shared by all algorithms
    so every algorithm sees the identical workload."""
    mode_key = 0 if mode == "static" else 1
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(mode_key, cell_index, rep)))


DETAIL_COLUMNS = ("mode", "algorithm", "cell_param", "repetition", "slot",
                  "seed", "C_bw_mbps", "C_user_ms", "allocated_fraction",
                  "edge_count", "cloud_count", "local_count", "rounds",
                  "solver_calls")


# Per-process context cache: workers rebuild the path table once, not per task.
_CTX_CACHE: dict[tuple, PlacementContext] = {}


def _cached_context(cfg: ExperimentConfig) -> PlacementContext:
    key = (cfg.topology, cfg.solver)
    ctx = _CTX_CACHE.get(key)
    if ctx is None:
        ctx = build_context(cfg)
        _CTX_CACHE[key] = ctx
    return ctx


def _fmt(x: float) -> str:
    return repr(round(float(x), 10))


def run_task(cfg: ExperimentConfig, mode: str, algorithm: str,
             cell_index: int, cell_value, rep: int):
    """One (mode, algorithm, cell, repetition) simulation -> detail rows + wall ms."""
    ctx = _cached_context(cfg)
    rng = task_rng(cfg.seed, mode, cell_index, rep)
    start = time.perf_counter()
    rows = []
    if mode == "static":
        res = run_static_experiment(ctx, workload_params(cfg), algorithm,
                                    int(cell_value), rng)
        rows.append((mode, algorithm, cell_value, rep, -1, cfg.seed,
                     _fmt(res.bandwidth_mbps), _fmt(res.mean_delay_ms),
                     _fmt(res.allocated_fraction), res.edge_count,
                     res.cloud_count, res.local_count, res.rounds,
                     res.solver_calls))
    else:
        run = run_dynamic_simulation(ctx, workload_params(cfg, float(cell_value)),
                                     algorithm, cfg.dynamic.slots, rng)
        for m in run.metrics:
            rows.append((mode, algorithm, cell_value, rep, m.slot, cfg.seed,
                         _fmt(m.bandwidth_mbps), _fmt(m.mean_delay_ms),
                         _fmt(m.allocated_fraction), m.edge_count,
                         m.cloud_count, m.local_count, m.rounds,
                         m.solver_calls))
        run.drain()
    wall_ms = (time.perf_counter() - start) * 1000.0
    return rows, (mode, algorithm, cell_value, rep, wall_ms)


def _task_list(cfg: ExperimentConfig):
    tasks = []
    modes = ("static", "dynamic") if cfg.mode == "both" else (cfg.mode,)
    for mode in modes:
        if mode == "static":
            cells = cfg.static.m_values
            reps = cfg.static.repetitions
        else:
            cells = cfg.dynamic.lambda_values
            reps = cfg.dynamic.repetitions
        for algorithm in cfg.algorithms:
            for ci, cell in enumerate(cells):
                for rep in range(reps):
                    tasks.append((mode, algorithm, ci, cell, rep))
    return tasks


def _run_task_star(args):
    return run_task(*args)


def _aggregate(rows):
    """Per (mode, algorithm, cell) mean/std of the three cost metrics.

    Dynamic runs are first averaged over slots within a repetition, then
    summarized across repetitions.
    """
    per_rep: dict[tuple, dict[int, list]] = {}
    for r in rows:
        key = (r[0], r[1], r[2])
        per_rep.setdefault(key, {}).setdefault(r[3], []).append(
            (float(r[6]), float(r[7]), float(r[8])))
    out = []
    for key in sorted(per_rep, key=lambda k: (k[0], k[1], float(k[2]))):
        reps = per_rep[key]
        means = [tuple(float(np.mean(col)) for col in zip(*vals))
                 for _, vals in sorted(reps.items())]
        bw, delay, alloc = (np.array(col) for col in zip(*means))
        out.append((key[0], key[1], key[2], len(means),
                    _fmt(bw.mean()), _fmt(bw.std()),
                    _fmt(delay.mean()), _fmt(delay.std()),
                    _fmt(alloc.mean()), _fmt(alloc.std())))
    return out


def run(cfg: ExperimentConfig, out_dir: str | FsPath, jobs: int = 1) -> dict:
    """Execute the configured sweep and write all artifacts into out_dir."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = _task_list(cfg)
    args = [(cfg,) + t for t in tasks]
    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task_star, args, chunksize=4))
    else:
        results = [run_task(*a) for a in args]

    detail = [row for rows, _ in results for row in rows]
    detail.sort(key=lambda r: (r[0], r[1], float(r[2]), r[3], r[4]))
    timings = sorted((t for _, t in results),
                     key=lambda t: (t[0], t[1], float(t[2]), t[3]))

    with open(out / "detail.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(DETAIL_COLUMNS)
        w.writerows(detail)
    aggregate = _aggregate(detail)
    with open(out / "aggregate.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("mode", "algorithm", "cell_param", "repetitions",
                    "C_bw_mean", "C_bw_std", "C_user_mean", "C_user_std",
                    "allocated_mean", "allocated_std"))
        w.writerows(aggregate)
    with open(out / "timings.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("mode", "algorithm", "cell_param", "repetition", "wall_ms"))
        w.writerows((m, a, c, r, f"{ms:.3f}") for m, a, c, r, ms in timings)
    with open(out / "resolved_config.yaml", "w") as f:
        yaml.safe_dump(config_to_dict(cfg), f, sort_keys=True)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "algorithms": list(cfg.algorithms),
        "tasks": len(tasks),
        "detail_rows": len(detail),
        "aggregate_rows": len(aggregate),
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary


def oracle_check(instances: int, seed: int, verbose: bool = False) -> int:
    """Compare the beam solver at an exhaustive beam width against brute force
    on random small instances.  Returns the number of mismatches."""
    mismatches = 0
    for i in range(instances):
        (network, coverage, table, request, snapshot,
         candidates) = random_tiny_instance(seed + i)
        params = SolverParams(d=4, beam_width=10_000)
        strat = viterbi_place(request, snapshot, table, coverage, params,
                              candidates=candidates)
        oracle = brute_force_optimal(request, snapshot, candidates, coverage)
        got = (None if strat is None
               else (strat.delay, strategy_bandwidth_cost(request, strat)))
        want = (None if oracle.strategy is None
                else (oracle.delay, oracle.bandwidth))
        ok = got == want
        mismatches += 0 if ok else 1
        if verbose or not ok:
            print(f"instance {seed + i}: solver={got} oracle={want} "
                  f"enumerated={oracle.enumeration_count} "
                  f"{'ok' if ok else 'MISMATCH'}")
    print(f"{instances - mismatches}/{instances} instances match")
    return mismatches


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="satvnf",
        description="Service-chain placement simulator for satellite edge networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured experiment sweep")
    p_run.add_argument("--config", help="YAML config file (defaults used if omitted)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_run.add_argument("--seed", type=int, help="override the configured seed")
    p_run.add_argument("--mode", choices=("static", "dynamic", "both"),
                       help="override the configured mode")

    p_val = sub.add_parser("validate", help="check a config file and echo the resolved values")
    p_val.add_argument("--config", help="YAML config file")

    p_orc = sub.add_parser("oracle-check",
                           help="compare the solver against brute force on small instances")
    p_orc.add_argument("--instances", type=int, default=20)
    p_orc.add_argument("--seed", type=int, default=0)
    p_orc.add_argument("--verbose", action="store_true")

    ns = parser.parse_args(argv)
    try:
        if ns.command == "run":
            cfg = load_config(ns.config)
            if ns.seed is not None:
                cfg = dataclasses.replace(cfg, seed=ns.seed)
            if ns.mode is not None:
                cfg = dataclasses.replace(cfg, mode=ns.mode)
            summary = run(cfg, ns.out, jobs=ns.jobs)
            print(json.dumps(summary, sort_keys=True))
            return 0
        if ns.command == "validate":
            cfg = load_config(ns.config)
            yaml.safe_dump(config_to_dict(cfg), sys.stdout, sort_keys=True)
            return 0
        if ns.command == "oracle-check":
            return 1 if oracle_check(ns.instances, ns.seed, ns.verbose) else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
