"""Command-line entry point: single runs, manifest replay and scenario batteries.

    semcover run --scenario grid_world --robots 2 --controller semantic-fuzzy --seed 1 --out runs/a
    semcover run --manifest runs/a/manifest.json --out runs/replay
    semcover battery --seeds 1..5 --robots 2,1 --out runs/battery
    semcover config > my.json

Config files are JSON objects of engine settings (see ``semcover config``);
flags override them.  The remote backend reads its key from
``SEMCOVER_API_KEY`` only.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from semcover import __version__
from semcover.engine import CONTROLLERS, RunResult, SimConfig, run
from semcover.semantics import HEURISTIC_TABLE_VERSION
from semcover.world import SCENARIO_NAMES, Scenario, build_scenario, load_scenario, scenario_from_dict, scenario_to_dict

logger = logging.getLogger("semcover")

CSV_COLUMNS = ("scenario", "controller", "robots", "seed", "total_length", "covered_oois", "coverage_length",
               "coverage_ratio", "ooi_density", "ooi_efficiency")
MANIFEST_FORMAT = "semcover-manifest/1"
BATTERY_SCENARIOS = ("grid_world", "e_shape", "disconnected_paths")
ROBOT_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


class CliError(Exception):
    pass


# --------------------------------------------------------------------------
# Config handling
# --------------------------------------------------------------------------


def controller_name(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in CONTROLLERS:
        raise CliError(f"unknown controller {name!r}; choose from {', '.join(c.replace('_', '-') for c in CONTROLLERS)}")
    return key


def parse_int_list(text: str) -> list[int]:
    """``"1..5"`` -> [1..5]; ``"1,3,7"`` -> [1, 3, 7]; ranges and lists may mix."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ".." in part:
                lo, hi = (int(v) for v in part.split("..", 1))
                if hi < lo:
                    raise CliError(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise CliError(f"cannot parse integer list {text!r}") from exc
    if not out:
        raise CliError(f"empty integer list {text!r}")
    return out


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise CliError("config file must hold a JSON object")
    return data


def build_config(base: dict, args: argparse.Namespace) -> SimConfig:
    """Merge config-file values with flags; flags win."""
    d = SimConfig().to_dict()
    for key, val in base.items():
        if key not in d:
            raise CliError(f"unknown config key {key!r}")
        if isinstance(d[key], dict) and isinstance(val, dict):
            d[key] = {**d[key], **val}
        else:
            d[key] = val
    flag_map = {"robots": "n_robots", "seed": "seed", "max_steps": "max_steps", "goal": "goal",
                "llm_endpoint": "llm_endpoint", "query_every": "query_every"}
    for flag, key in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            d[key] = val
    if getattr(args, "controller", None):
        d["controller"] = controller_name(args.controller)
    if getattr(args, "llm_endpoint", None):
        d["backend"] = "remote"
    if getattr(args, "no_comms", False):
        d["comms_enabled"] = False
    if getattr(args, "loss_prob", None) is not None:
        d["comms"] = {**d["comms"], "loss_prob": args.loss_prob}
    if d.get("robot_ids") is not None and len(d["robot_ids"]) != d["n_robots"]:
        d["robot_ids"] = None
    try:
        return SimConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}") from exc


def make_scenario(name: str | None, path: str | None, seed: int) -> Scenario:
    try:
        if path:
            return load_scenario(path)
        if name not in SCENARIO_NAMES or name == "custom":
            raise CliError(f"unknown scenario {name!r}; use one of {', '.join(BATTERY_SCENARIOS)} or --scenario-file")
        return build_scenario(name, seed=seed)
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"scenario failure: {exc}") from exc


# --------------------------------------------------------------------------
# Outputs
# --------------------------------------------------------------------------


def metrics_row(scenario: Scenario, config: SimConfig, result: RunResult) -> dict:
    row = {"scenario": scenario.name, "controller": config.controller.replace("_", "-"),
           "robots": str(config.n_robots), "seed": str(config.seed)}
    row.update(result.report.row())
    return row


def write_csv(path: Path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def render_svg(scenario: Scenario, trajectories: Sequence, scale: float = 50.0, title: str = "") -> str:
    """Self-contained SVG: gray obstacles, OOI dots, one coloured polyline per robot."""
    a = scenario.arena
    margin = 10.0
    legend_h = 22.0 * (len(trajectories) + (1 if title else 0)) + 8.0
    w = a.width * scale + 2 * margin
    h = a.height * scale + 2 * margin + legend_h

    def px(x, y):
        return f"{margin + x * scale:.2f},{margin + (a.height - y) * scale:.2f}"

    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
              f'viewBox="0 0 {w:.2f} {h:.2f}">\n')
    out.write(f'<rect x="{margin}" y="{margin}" width="{a.width * scale:.2f}" height="{a.height * scale:.2f}" '
              'fill="#f4f8fb" stroke="black" stroke-width="1"/>\n')
    for obs in scenario.obstacles:
        pts = " ".join(px(x, y) for x, y in obs.vertices)
        out.write(f'<polygon class="obstacle" points="{pts}" fill="#808080" stroke="#555555"/>\n')
    for o in scenario.oois:
        cx, cy = px(o.x, o.y).split(",")
        out.write(f'<circle class="ooi" cx="{cx}" cy="{cy}" r="3" fill="#1a1aff"/>\n')
    for k, tr in enumerate(trajectories):
        color = ROBOT_COLORS[k % len(ROBOT_COLORS)]
        pts = " ".join(px(p.x, p.y) for p in tr.poses)
        out.write(f'<polyline class="trajectory" data-robot="{tr.robot_id}" points="{pts}" fill="none" '
                  f'stroke="{color}" stroke-width="1.5"/>\n')
    y0 = a.height * scale + 2 * margin + 14
    if title:
        out.write(f'<text x="{margin}" y="{y0:.1f}" font-family="sans-serif" font-size="13">{title}</text>\n')
        y0 += 22
    for k, tr in enumerate(trajectories):
        color = ROBOT_COLORS[k % len(ROBOT_COLORS)]
        out.write(f'<line x1="{margin}" y1="{y0 - 4:.1f}" x2="{margin + 24}" y2="{y0 - 4:.1f}" '
                  f'stroke="{color}" stroke-width="2"/>\n')
        out.write(f'<text x="{margin + 30}" y="{y0:.1f}" font-family="sans-serif" font-size="12">'
                  f'robot {tr.robot_id}</text>\n')
        y0 += 22
    out.write("</svg>\n")
    return out.getvalue()


def _ensure_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(f"output directory {path} is not writable: {exc}") from exc
    return out


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------


def execute(config: SimConfig, scenario: Scenario, out: Path) -> tuple[dict, dict]:
    """One run with all artifacts; returns (metrics row, manifest)."""
    paths = {"manifest": "manifest.json", "metrics": "metrics.csv", "events": "events.log", "plot": "trajectories.svg"}
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": f"semcover {__version__} / heuristic table {HEURISTIC_TABLE_VERSION}",
        "seed": config.seed,
        "config": config.to_dict(),
        "scenario": scenario_to_dict(scenario),
        "artifacts": paths,
        "duration_s": None,
        "fallbacks": None,
        "status": "running",
    }
    _write_json(out / paths["manifest"], manifest)
    t0 = time.perf_counter()
    result = run(config, scenario)
    manifest["duration_s"] = round(time.perf_counter() - t0, 3)
    row = metrics_row(scenario, config, result)
    write_csv(out / paths["metrics"], [row])
    (out / paths["events"]).write_text(result.event_log())
    title = f"{scenario.name} / {config.controller.replace('_', '-')} / seed {config.seed}"
    (out / paths["plot"]).write_text(render_svg(scenario, result.trajectories, title=title))
    manifest["fallbacks"] = result.fallbacks
    manifest["status"] = "complete"
    _write_json(out / paths["manifest"], manifest)
    return row, manifest


def load_manifest(path: str) -> tuple[SimConfig, Scenario]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read manifest {path}: {exc}") from exc
    if data.get("format") != MANIFEST_FORMAT:
        raise CliError(f"unsupported manifest format {data.get('format')!r}")
    try:
        return SimConfig.from_dict(data["config"]), scenario_from_dict(data["scenario"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed manifest: {exc}") from exc


def cmd_run(args: argparse.Namespace) -> int:
    out = _ensure_dir(args.out)
    if args.manifest:
        config, scenario = load_manifest(args.manifest)
    else:
        config = build_config(load_config(args.config), args)
        scenario = make_scenario(args.scenario, args.scenario_file, config.seed)
    try:
        row, manifest = execute(config, scenario, out)
    except ValueError as exc:
        raise CliError(f"scenario failure: {exc}") from exc
    print(",".join(CSV_COLUMNS))
    print(",".join(row[c] for c in CSV_COLUMNS))
    if manifest["fallbacks"]:
        print(f"heuristic fallbacks: {manifest['fallbacks']}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------------
# battery
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BatteryJob:
    scenario: str
    label: str
    config: SimConfig


def battery_jobs(scenarios: Sequence[str], seeds: Sequence[int], robots: Sequence[int], base: SimConfig,
                 baselines: bool = True) -> list[BatteryJob]:
    """Semantic-fuzzy at each robot count plus single-robot BCD and BB, per scenario and seed."""
    jobs = []
    for name in scenarios:
        for seed in seeds:
            for n in robots:
                cfg = replace(base, controller="semantic_fuzzy", n_robots=n, seed=seed, robot_ids=None)
                jobs.append(BatteryJob(name, f"semantic-fuzzy x{n}", cfg))
            if baselines:
                for ctrl in ("bcd", "bb"):
                    cfg = replace(base, controller=ctrl, n_robots=1, seed=seed, robot_ids=None)
                    jobs.append(BatteryJob(name, ctrl, cfg))
    return jobs


def _run_job(job: BatteryJob):
    try:
        sc = build_scenario(job.scenario, seed=job.config.seed)
        res = run(replace(job.config, log_gait=False), sc)
        return job, metrics_row(sc, job.config, res), res.trajectories, None
    except Exception as exc:  # reported per run, battery carries on
        return job, None, None, f"{type(exc).__name__}: {exc}"


def summary_table(results: Sequence[tuple[BatteryJob, dict]]) -> str:
    groups: dict[tuple[str, str], list[dict]] = {}
    for job, row in results:
        groups.setdefault((job.scenario, job.label), []).append(row)
    lines = [f"{'scenario':20s} {'configuration':18s} {'runs':>4s} {'coverage_ratio':>15s} {'ooi_density':>12s} "
             f"{'ooi_efficiency':>15s}"]

    def mean(rows, key):
        vals = [float(r[key]) for r in rows if r[key] != ""]
        return f"{statistics.fmean(vals):.2f}" if vals else "-"

    for (scen, label), rows in groups.items():
        lines.append(f"{scen:20s} {label:18s} {len(rows):4d} {mean(rows, 'coverage_ratio'):>15s} "
                     f"{mean(rows, 'ooi_density'):>12s} {mean(rows, 'ooi_efficiency'):>15s}")
    return "\n".join(lines)


def cmd_battery(args: argparse.Namespace) -> int:
    out = _ensure_dir(args.out)
    base = build_config(load_config(args.config), args)
    seeds = parse_int_list(args.seeds)
    robots = parse_int_list(args.robot_counts)
    if min(robots) < 1:
        raise CliError("robot counts must be positive")
    scenarios = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    for s in scenarios:
        if s not in BATTERY_SCENARIOS:
            raise CliError(f"unknown scenario {s!r}")
    jobs = battery_jobs(scenarios, seeds, robots, base, baselines=not args.no_baselines)
    _write_json(out / "manifest.json", {
        "format": "semcover-battery/1", "version": f"semcover {__version__} / heuristic table {HEURISTIC_TABLE_VERSION}",
        "config": base.to_dict(), "scenarios": scenarios, "seeds": seeds, "robots": robots,
        "artifacts": {"metrics": "metrics.csv", "plots": [f"{s}.svg" for s in scenarios]},
    })
    if args.jobs == 1:
        outcomes = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            outcomes = list(ex.map(_run_job, jobs))
    ok, failed, plotted = [], [], set()
    for job, row, trajs, err in outcomes:
        if err is not None:
            failed.append((job, err))
            print(f"FAILED {job.scenario} {job.label} seed {job.config.seed}: {err}", file=sys.stderr)
            continue
        ok.append((job, row))
        # the first seed's largest semantic team is the scenario plot
        if job.scenario not in plotted and job.config.controller == "semantic_fuzzy" and \
                job.config.n_robots == max(robots) and job.config.seed == seeds[0]:
            sc = build_scenario(job.scenario, seed=job.config.seed)
            (out / f"{job.scenario}.svg").write_text(
                render_svg(sc, trajs, title=f"{job.scenario} / {job.label} / seed {job.config.seed}"))
            plotted.add(job.scenario)
    write_csv(out / "metrics.csv", [row for _, row in ok])
    print(summary_table(ok))
    if failed:
        print(f"{len(failed)} of {len(jobs)} runs failed", file=sys.stderr)
        return 1
    return 0


def cmd_config(args: argparse.Namespace) -> int:
    print(json.dumps(SimConfig().to_dict(), indent=2, sort_keys=True))
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--max-steps", type=int, dest="max_steps")
    p.add_argument("--query-every", type=int, dest="query_every")
    p.add_argument("--goal", choices=("maximize_coverage", "minimize_revisit"))
    p.add_argument("--no-comms", action="store_true", help="disable inter-robot messages")
    p.add_argument("--loss-prob", type=float, dest="loss_prob", help="per-message drop probability")
    p.add_argument("--llm-endpoint", dest="llm_endpoint",
                   help="remote backend URL (key from SEMCOVER_API_KEY); failures fall back to the heuristic")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semcover", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="one simulation run")
    _common(r)
    r.add_argument("--scenario", default="grid_world", help=f"one of {', '.join(BATTERY_SCENARIOS)}")
    r.add_argument("--scenario-file", dest="scenario_file", help="JSON scenario file instead of a built-in")
    r.add_argument("--controller", default=None, help="semantic-fuzzy, bcd or bb")
    r.add_argument("--robots", type=int, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--manifest", help="replay the run recorded in this manifest")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("battery", help="scenarios x configurations x seeds")
    _common(b)
    b.add_argument("--seeds", default="1..5", help="e.g. 1..5 or 1,2,7")
    b.add_argument("--robots", default="2,1", dest="robot_counts", help="semantic-fuzzy team sizes, e.g. 1,2,3")
    b.add_argument("--scenarios", default=",".join(BATTERY_SCENARIOS))
    b.add_argument("--no-baselines", action="store_true", dest="no_baselines", help="skip the BCD and BB runs")
    b.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    b.set_defaults(func=cmd_battery, controller=None, seed=None)

    c = sub.add_parser("config", help="print the default configuration as JSON")
    c.set_defaults(func=cmd_config)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"semcover: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
