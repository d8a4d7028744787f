"""Command-line front end: ``solve``, ``sweep``, ``gap`` and ``alloc``.

Exit codes: 0 success, 1 solver failure, 2 configuration error. Output files
are written only after the command succeeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .link import build_coefficients
from .scenario import RadioConfig, Scenario, build_scenario, db_to_linear
from .solve import (Assignment, SolverError, branch_and_bound, evaluate_assignment,
                    solve_at_location, sweep_locations)

log = logging.getLogger(__name__)

WORKERS_ENV = "RABS_ISAC_WORKERS"
DEFAULT_DELTAS = tuple(float(v) for v in np.logspace(-4, 0, 13))

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2

_TOP_KEYS = {
    "area_w_m": "area_w", "area_h_m": "area_h", "cell_m": "cell",
    "lamppost_height_m": "lamppost_height", "num_locations": "num_locations",
    "seed": "seed", "m_sen_bits": "m_sen", "m_com_bps": "m_com",
    "sd_sen": "sd_sen", "sd_com": "sd_com", "delta": "delta",
}
_RADIO_FIELDS = {f.name: f.type for f in fields(RadioConfig)}
_DB_GAINS = ("gt_s", "gr_s", "gt_c", "gr_c")


class ConfigError(ValueError):
    pass


def _fmt(v: float) -> str:
    return format(float(v), ".9g")


# ---------------------------------------------------------------------------
# config


def read_config(path: str) -> Dict[str, Any]:
    """Parse a JSON or TOML config file into a plain dict."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        if path.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:  # python < 3.11
                import tomli as tomllib
            return tomllib.loads(raw.decode("utf-8"))
        data = json.loads(raw.decode("utf-8"))
    except Exception as exc:
        raise ConfigError(f"cannot parse config {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a table/object at top level")
    return data


def _number(key: str, value: Any, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if integer:
        if float(value) != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return float(value)


def radio_from_config(table: Dict[str, Any]) -> RadioConfig:
    """Build a RadioConfig; gains may also be given in dB as ``<name>_db``."""
    if not isinstance(table, dict):
        raise ConfigError("radio must be a table/object")
    kw = {}
    for key, value in table.items():
        if key.endswith("_db") and key[:-3] in _DB_GAINS:
            name = key[:-3]
            if name in table:
                raise ConfigError(f"radio.{name} given both linearly and in dB")
            kw[name] = db_to_linear(_number(f"radio.{key}", value))
        elif key in _RADIO_FIELDS:
            integer = key in ("num_subcarriers", "ns_symbols")
            kw[key] = _number(f"radio.{key}", value, integer)
        else:
            raise ConfigError(f"unknown radio key {key!r}")
    try:
        return RadioConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def scenario_from_config(cfg: Dict[str, Any], seed: Optional[int] = None,
                         delta: Optional[float] = None) -> Scenario:
    kw: Dict[str, Any] = {}
    for key, value in cfg.items():
        if key in _TOP_KEYS:
            integer = key in ("num_locations", "seed")
            kw[_TOP_KEYS[key]] = _number(key, value, integer)
        elif key not in ("radio", "locations"):
            raise ConfigError(f"unknown config key {key!r}")
    if "radio" in cfg:
        kw["radio"] = radio_from_config(cfg["radio"])
    if "locations" in cfg:
        locs = cfg["locations"]
        if not isinstance(locs, list) or not all(isinstance(p, list) and len(p) == 3 for p in locs):
            raise ConfigError("locations must be a list of [x, y, z] triples")
        kw["locations"] = [[_number("locations", v) for v in p] for p in locs]
    if seed is not None:
        kw["seed"] = seed
    if delta is not None:
        kw["delta"] = delta
    if not 0.0 <= kw.get("delta", 1e-4) <= 1.0:
        raise ConfigError("delta must lie in [0, 1]")
    try:
        return build_scenario(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_deltas(text: Optional[str]) -> List[float]:
    if text is None:
        return list(DEFAULT_DELTAS)
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --deltas list {text!r}") from exc
    if not vals or any(not 0.0 <= v <= 1.0 for v in vals):
        raise ConfigError("--deltas values must lie in [0, 1]")
    return vals


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def baseline_location(seed: int, num_locations: int) -> int:
    """Random fixed cell used as the comparison point for a given seed."""
    return int(np.random.default_rng([seed, 0xF1CED]).integers(num_locations))


# ---------------------------------------------------------------------------
# outputs


def solution_dict(scenario: Scenario, a: Assignment) -> Dict[str, Any]:
    coeffs = build_coefficients(scenario)
    ev = evaluate_assignment(a, scenario, coeffs)
    traces = {}
    for task_sol in a.per_location.get(a.location, ()):
        tr = task_sol.trace
        traces[task_sol.task] = {
            "lp_count": tr.lp_count if tr else 0,
            "simplex_iterations": tr.simplex_iterations if tr else 0,
            "root_bound": task_sol.root_bound,
        }
    return {
        "location": a.location,
        "location_xyz": list(scenario.locations[a.location].xyz) if a.location is not None else None,
        "objective": ev.objective,
        "sr_sense": ev.sr_sense,
        "sr_comm": ev.sr_comm,
        "x": [np.flatnonzero(row).tolist() for row in a.x],
        "y": [np.flatnonzero(row).tolist() for row in a.y],
        "grid_sr_sense": ev.grid_sr_sense.tolist(),
        "grid_sr_comm": ev.grid_sr_comm.tolist(),
        "delta": scenario.protection.delta,
        "trace": traces,
    }


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg: Dict[str, Any], seed: Optional[int], location: Optional[int]) -> str:
    sc = scenario_from_config(cfg, seed)
    coeffs = build_coefficients(sc)
    if location is not None:
        if not 0 <= location < sc.num_locations:
            raise ConfigError(f"--location {location} outside [0, {sc.num_locations})")
        a = solve_at_location(location, sc, coeffs)
    else:
        a = sweep_locations(sc, coeffs)
    return json.dumps(solution_dict(sc, a), indent=2, sort_keys=True) + "\n"


@dataclass
class SweepRow:
    delta: float
    objective_rabs: float
    objective_fixed_baseline: float
    gap_vs_exact: Optional[float]
    lp_count: int
    wall_time_s: Optional[float]
    seed: int


SWEEP_HEADER = ("delta", "objective_rabs", "objective_fixed_baseline", "gap_vs_exact",
                "lp_count", "wall_time_s", "seed")


def _lp_count(a: Assignment) -> int:
    return max(ts.trace.lp_count for pair in a.per_location.values() for ts in pair)


def _effective_levels(sc: Scenario) -> bytes:
    # levels above K protect exactly like K, so cells that agree here are identical
    K = sc.num_subcarriers
    return (np.minimum(sc.protection.gamma, K).tobytes() +
            np.minimum(sc.protection.lam, K).tobytes())


def sweep_seed(cfg: Dict[str, Any], deltas: Sequence[float], seed: int,
               exact_budget: Optional[int] = None,
               assignments: Optional[Dict[float, Assignment]] = None) -> Dict[float, SweepRow]:
    """All cells of one seed: RABS sweep, random fixed cell, optional exact gap.

    Protection levels are visited from the largest down and every cell is
    offered the previous cell's allocations, which stay feasible at a smaller
    level and never lose value there. If ``assignments`` is given it receives
    the sweep solution of every cell.
    """
    rows = {}
    carry = None
    prev_key = None
    prev_row = None
    j_fixed = None
    for delta in sorted(set(deltas), reverse=True):
        t0 = time.perf_counter()
        sc = scenario_from_config(cfg, seed, delta)
        key = _effective_levels(sc)
        if key == prev_key:
            rows[delta] = replace(prev_row, delta=delta, wall_time_s=time.perf_counter() - t0)
            if assignments is not None:
                assignments[delta] = carry
            continue
        coeffs = build_coefficients(sc)
        a = sweep_locations(sc, coeffs, carry=carry)
        if j_fixed is None:
            j_fixed = baseline_location(seed, sc.num_locations)
        s, c = a.per_location[j_fixed]
        gap = None
        if exact_budget is not None:
            exact = branch_and_bound(sc, coeffs, node_limit=exact_budget, incumbent=a)
            gap = relative_gap(a.objective, exact.objective)
        rows[delta] = SweepRow(delta, a.objective, s.weighted + c.weighted, gap, _lp_count(a),
                               time.perf_counter() - t0, seed)
        carry, prev_key, prev_row = a, key, rows[delta]
        if assignments is not None:
            assignments[delta] = a
    return rows


def _sweep_seed_star(args):
    return sweep_seed(*args)


def relative_gap(heuristic: float, exact: float) -> float:
    return 0.0 if exact == 0 else (exact - heuristic) / exact


def mean_relative_improvement(rows: Sequence[SweepRow]) -> float:
    """Mean of ``(rabs - fixed) / fixed`` over cells whose baseline is positive."""
    vals = [(r.objective_rabs - r.objective_fixed_baseline) / r.objective_fixed_baseline
            for r in rows if r.objective_fixed_baseline > 0]
    return float(np.mean(vals)) if vals else float("nan")


def run_sweep(cfg: Dict[str, Any], deltas: Sequence[float], seeds: Sequence[int],
              exact_budget: Optional[int] = None, workers: int = 1) -> List[SweepRow]:
    jobs = [(cfg, deltas, s, exact_budget) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            per_seed = list(pool.map(_sweep_seed_star, jobs))
    else:
        per_seed = [sweep_seed(*job) for job in jobs]
    # rows come out in (delta, seed) order whatever order the workers finished in
    return [per_seed[n][d] for d in deltas for n in range(len(seeds))]


def sweep_csv(rows: Sequence[SweepRow], timings: bool) -> str:
    return _csv_text(SWEEP_HEADER, [
        (r.delta, r.objective_rabs, r.objective_fixed_baseline,
         "" if r.gap_vs_exact is None else r.gap_vs_exact, r.lp_count,
         r.wall_time_s if timings else "", r.seed) for r in rows])


GAP_HEADER = ("delta", "heuristic_obj", "exact_obj", "relative_gap", "lp_count",
              "certified", "upper_bound")


def cmd_gap(cfg: Dict[str, Any], deltas: Sequence[float], seed: Optional[int],
            node_budget: int) -> str:
    results = {}
    carry = None
    prev_key = None
    for d in sorted(set(deltas), reverse=True):
        sc = scenario_from_config(cfg, seed, d)
        key = _effective_levels(sc)
        if key == prev_key:
            results[d] = (d,) + results[prev_d][1:]
            prev_d = d
            continue
        coeffs = build_coefficients(sc)
        a = sweep_locations(sc, coeffs, carry=carry)
        exact = branch_and_bound(sc, coeffs, node_limit=node_budget, incumbent=a)
        results[d] = (d, a.objective, exact.objective, relative_gap(a.objective, exact.objective),
                      _lp_count(a), int(exact.certified), exact.bound)
        carry, prev_key, prev_d = a, key, d
    return _csv_text(GAP_HEADER, [results[d] for d in deltas])


ALLOC_HEADER = ("grid", "sensing_demand", "comm_demand", "num_sense_subcarriers",
                "num_comm_subcarriers")


def cmd_alloc(cfg: Dict[str, Any], seed: Optional[int]) -> str:
    sc = scenario_from_config(cfg, seed)
    a = sweep_locations(sc, build_coefficients(sc))
    xs, ys = a.x.sum(axis=1), a.y.sum(axis=1)
    rows = [(i, float(sc.demands.m_sen[i]), float(sc.demands.r_com[i]), int(xs[i]), int(ys[i]))
            for i in range(sc.num_grids)]
    return _csv_text(ALLOC_HEADER, rows)


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rabs-isac", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help):
        sp.add_argument("--config", required=True, help="JSON or TOML scenario file")
        sp.add_argument("--out", default="-", help=out_help + " (default: stdout)")
        sp.add_argument("--seed", type=int, help="override the config seed")

    s = sub.add_parser("solve", help="place the base station and allocate subcarriers")
    common(s, "solution JSON")
    s.add_argument("--location", type=int, help="fixed-cell mode: deploy at this candidate")
    s.add_argument("--coeffs-out", help="also dump the coefficient tables as CSV")

    s = sub.add_parser("sweep", help="robustness sweep against a random fixed cell")
    common(s, "sweep CSV")
    s.add_argument("--deltas", help="comma-separated robustness values (default: 13 log-spaced in [1e-4, 1])")
    s.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    s.add_argument("--exact-budget", type=int,
                   help="also run branch-and-bound with this node budget and report the gap")
    s.add_argument("--timings", action="store_true",
                   help="fill wall_time_s (makes the CSV non-reproducible)")

    s = sub.add_parser("gap", help="rounding heuristic versus branch-and-bound")
    common(s, "gap CSV")
    s.add_argument("--deltas")
    s.add_argument("--exact-budget", type=int, default=20_000, help="branch-and-bound node budget")

    s = sub.add_parser("alloc", help="per-grid subcarrier counts")
    common(s, "allocation CSV")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = read_config(args.config)
        if args.command == "solve":
            text = cmd_solve(cfg, args.seed, args.location)
            if args.coeffs_out:
                sc = scenario_from_config(cfg, args.seed)
                buf = io.StringIO()
                build_coefficients(sc).to_csv(buf)
                _write(args.coeffs_out, buf.getvalue())
        elif args.command == "sweep":
            deltas = parse_deltas(args.deltas)
            if args.seeds < 1:
                raise ConfigError("--seeds must be at least 1")
            scenario_from_config(cfg, args.seed)  # validate before forking workers
            base = args.seed if args.seed is not None else int(cfg.get("seed", 0))
            rows = run_sweep(cfg, deltas, [base + s for s in range(args.seeds)],
                             args.exact_budget, worker_count())
            text = sweep_csv(rows, args.timings)
            print(f"mean relative improvement over fixed cell: "
                  f"{100 * mean_relative_improvement(rows):.2f}%", file=sys.stderr)
        elif args.command == "gap":
            text = cmd_gap(cfg, parse_deltas(args.deltas), args.seed, args.exact_budget)
        else:
            text = cmd_alloc(cfg, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _write(args.out, text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
