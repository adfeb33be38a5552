"""Scenario configuration, experiment orchestration, and CSV emission.

`evacnet run` executes the modes requested by a JSON scenario config and
writes one CSV per mode; `evacnet compare` merges evacuation profiles into
plot-ready wide CSV; `evacnet validate` checks a plan document.  All
outputs are deterministic for a fixed config and seed (per-step CPU
timings are zeroed unless requested, since wall clocks never repeat).

Exit codes: 0 fine, 1 bad configuration, 2 the scenario itself found a
problem (unevacuable building or saturated architecture) after writing
what it could.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

from . import abss, evac, qn
from .grid import NetworkParams, RiskSchedule, select_cell_size
from .plan import ParseError, ValidationError, load_plan, load_plan_file, save_plan

log = logging.getLogger("evacnet")

DOOR_RATE_PRESETS = {"pessimistic": 1.03, "optimistic": 3.23, "default": 1.2}

BUNDLED_PLANS = ("compact4exit", "tworoute")


class SlotMismatch(ValueError):
    """Profiles with different slot durations cannot be merged."""


class ConfigProblem(ValueError):
    """The scenario configuration is unusable."""


def bundled_plan_bytes(name: str) -> bytes:
    return resources.files("evacnet.data").joinpath(f"{name}.json").read_bytes()


def resolve_plan(ref: str):
    if ref in BUNDLED_PLANS:
        return load_plan(bundled_plan_bytes(ref))
    if not os.path.exists(ref):
        raise ConfigProblem(f"plan not found: {ref!r}")
    return load_plan_file(ref)


def _as_risk(cfg: dict, network) -> RiskSchedule:
    if not cfg:
        return RiskSchedule()
    removals = []
    for entry in cfg.get("static", []):
        slot = int(entry.get("slot", 0))
        if "exit_index" in entry:
            idx = int(entry["exit_index"])
            if idx < 0 or idx >= len(network.exit_arcs):
                raise ConfigProblem(f"exit_index {idx} out of range")
            removals.append((slot, network.exit_arcs[idx]))
        else:
            removals.append((slot, (int(entry["from_cell"]), int(entry["to_cell"]))))
    return RiskSchedule(
        static_removals=tuple(removals),
        seeds=tuple(int(s) for s in cfg.get("seeds", ())),
        spread_period=int(cfg.get("spread_period", 0)),
    )


def build_scenario(config: dict, seed_override=None):
    """Config dict -> (plan, problem, settings dict)."""
    if "plan" not in config:
        raise ConfigProblem("config needs a 'plan' entry")
    plan = resolve_plan(str(config["plan"]))
    if not config.get("modes"):
        raise ConfigProblem("config requests no modes")

    rate = config.get("door_rate")
    preset = config.get("door_rate_preset")
    if preset is not None:
        if preset not in DOOR_RATE_PRESETS:
            raise ConfigProblem(f"unknown door-rate preset {preset!r}")
        rate = DOOR_RATE_PRESETS[preset]
    params = NetworkParams(
        flat_velocity=float(config.get("velocity", 1.2)),
        door_rate=float(rate if rate is not None else 1.2),
        stair_rate=float(config.get("stair_rate", 1.0)),
        density_cap=float(config.get("density_cap", 1.25)),
    )

    if "cell_size" in config:
        cell = float(config["cell_size"])
    else:
        candidates = config.get("cell_size_candidates")
        if not candidates:
            raise ConfigProblem("config needs cell_size or cell_size_candidates")
        cell = select_cell_size(plan, [float(c) for c in candidates],
                                int(config.get("node_budget", 500)))

    congestion = None
    ccfg = config.get("congestion") or {}
    if ccfg.get("enabled"):
        congestion = evac.CongestionCurve(
            b1=float(ccfg.get("b1", 0.5)),
            b2=float(ccfg.get("b2", 0.8)),
            m1=float(ccfg.get("m1", 0.6)),
            m2=float(ccfg.get("m2", 0.3)),
        )

    seed = seed_override if seed_override is not None else config.get("seed")
    total = config.get("occupancy_total")
    prob = evac.problem_from_plan(
        plan, cell,
        params=params,
        congestion=congestion,
        total=None if total is None else int(total),
        seed=None if config.get("occupancy_seed") is None else int(config["occupancy_seed"]),
    )
    risk = _as_risk(config.get("risk") or {}, prob.network)
    if not risk.empty:
        prob = evac.EvacuationProblem(network=prob.network, occupancy=prob.occupancy,
                                      risk=risk, congestion=prob.congestion)
    settings = {
        "plan": plan,
        "cell_size": cell,
        "params": params,
        "seed": 0 if seed is None else int(seed),
        "horizon_cap": int(config.get("horizon_cap", 10_000)),
    }
    return plan, prob, settings


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(str(v) for v in row) + "\n")


def _write_meta(path, meta):
    with open(path, "w") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _profile_rows(profile: evac.EvacuationProfile, timings: str):
    for t, e, cpu in profile.rows():
        yield (t, e, f"{cpu:.4f}" if timings == "measured" else "0.0000")


def _abss_seed_run(args):
    plan_bytes, n_agents, kw, cell_size = args
    plan = load_plan(plan_bytes)
    cfg = abss.SimConfig(**kw)
    trace = abss.run(plan, n_agents, cfg, cell_size=cell_size)
    return kw["seed"], trace


def run_scenario(config: dict, out_dir: str, seed_override=None, jobs: int = 1,
                 timings: str = "zero") -> int:
    plan, prob, settings = build_scenario(config, seed_override)
    os.makedirs(out_dir, exist_ok=True)
    modes = config["modes"]
    seed = settings["seed"]
    cap = settings["horizon_cap"]
    status = 0
    summary = []

    slot = prob.network.slot_seconds
    meta_base = {"plan": plan.name, "slot_seconds": slot,
                 "cell_size": settings["cell_size"], "seed": seed}

    def emit_profile(name, profile):
        path = os.path.join(out_dir, f"{name}_profile.csv")
        _write_csv(path, ["tau", "evacuees", "cpu_seconds"],
                   _profile_rows(profile, timings))
        _write_meta(path.replace(".csv", ".meta.json"),
                    dict(meta_base, mode=name, tau_star=profile.tau_star))
        worst = max(profile.cpu_seconds) if profile.cpu_seconds else 0.0
        summary.append((name, profile.tau_star, profile.tau_star * slot, worst))

    try:
        if modes.get("ideal"):
            emit_profile("ideal", evac.evacuation_profile(prob, "ideal", horizon_cap=cap))
        if modes.get("shortest"):
            emit_profile("shortest",
                         evac.evacuation_profile(prob, "shortest_path", horizon_cap=cap))
        if modes.get("decomposed"):
            chunk = int(modes["decomposed"].get("chunk", 1))
            run = evac.time_decomposed_solve(prob, chunk, horizon_cap=cap)
            path = os.path.join(out_dir, "decomposed_profile.csv")
            rows = []
            for t in range(1, run.tau_star + 1):
                cpu = run.cpu_seconds[t] if t < len(run.cpu_seconds) else 0.0
                rows.append((t, int(round(run.profile[t])),
                             f"{cpu:.4f}" if timings == "measured" else "0.0000"))
            _write_csv(path, ["tau", "evacuees", "cpu_seconds"], rows)
            _write_meta(path.replace(".csv", ".meta.json"),
                        dict(meta_base, mode="decomposed", chunk=chunk,
                             tau_star=run.tau_star))
            worst = max(run.cpu_seconds) if run.cpu_seconds else 0.0
            summary.append((f"decomposed(chunk={chunk})", run.tau_star,
                            run.tau_star * slot, worst))
        if modes.get("sweep"):
            widths = [float(w) for w in modes["sweep"]["widths"]]
            points = evac.exit_width_sweep(
                plan, widths, settings["cell_size"], params=settings["params"],
                congestion=prob.congestion, risk=prob.risk, horizon_cap=cap)
            path = os.path.join(out_dir, "sweep.csv")
            _write_csv(path, ["width_m", "tau_star", "seconds"],
                       [(w, int(round(s / slot)), f"{s:.2f}") for w, s in points])
            summary.append(("sweep", "-", points[-1][1], 0.0))
    except evac.Unevacuable as exc:
        log.error("unevacuable: %s", exc)
        print(f"UNEVACUABLE: {exc}")
        status = 2

    if modes.get("abss"):
        acfg = dict(modes["abss"])
        n_agents = int(acfg.pop("agents", plan.total_occupancy() or 20))
        runs = int(acfg.pop("runs", 1))
        seeds = acfg.pop("seeds", list(range(seed, seed + runs)))
        kw = {
            "guidance": acfg.get("guidance", "netflow"),
            "grouping": bool(acfg.get("grouping", False)),
            "tick": float(acfg.get("tick", 0.1)),
            "door_rate": settings["params"].door_rate,
        }
        plan_bytes = save_plan(plan)
        tasks = [(plan_bytes, n_agents, dict(kw, seed=int(s)), settings["cell_size"])
                 for s in seeds]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = sorted(pool.map(_abss_seed_run, tasks))
        else:
            results = sorted(map(_abss_seed_run, tasks))
        trace_rows = []
        summary_rows = []
        for s, trace in results:
            for t, count in enumerate(trace.evacuated_by_slot):
                trace_rows.append((s, kw["guidance"], int(kw["grouping"]), t, count))
            summary_rows.append((s, trace.total_slots, f"{trace.total_seconds:.2f}"))
        _write_csv(os.path.join(out_dir, "abss_trace.csv"),
                   ["seed", "guidance", "grouping", "slot", "evacuated"], trace_rows)
        _write_csv(os.path.join(out_dir, "abss_summary.csv"),
                   ["seed", "total_slots", "total_seconds"], summary_rows)
        mean_s = sum(float(r[2]) for r in summary_rows) / len(summary_rows)
        summary.append(("abss", "-", mean_s, 0.0))

    if modes.get("qn"):
        qcfg = modes["qn"]
        arch = str(qcfg.get("arch", "centralized"))
        res = str(qcfg.get("resolution", "LR"))
        epochs = int(qcfg.get("epochs", 20000))
        runs = int(qcfg.get("runs", 1))
        rows = []
        any_saturated = False
        for k in range(runs):
            stats = qn.simulate_qn(qn.build_qn(arch, res), epochs, seed=seed + k)
            rho_controller = max(
                v for name, v in stats.utilization.items()
                if name.startswith("controller")
            )
            any_saturated = any_saturated or stats.saturated
            rows.append((arch, res,
                         "nan" if stats.saturated else f"{stats.mean_response_s:.4f}",
                         int(stats.saturated), f"{rho_controller:.4f}"))
        _write_csv(os.path.join(out_dir, "qn.csv"),
                   ["arch", "resolution", "mean_response_s", "saturated",
                    "rho_controller"], rows)
        if any_saturated:
            print(f"SATURATION: {arch}-{res} controller cannot keep up")
            status = 2
        summary.append((f"qn({arch}-{res})", "-",
                        "saturated" if any_saturated else rows[0][2], 0.0))

    print(f"{'mode':24s} {'tau*':>6s} {'seconds':>10s} {'worst cpu':>10s}")
    for name, tau_star, seconds, cpu in summary:
        sec = f"{seconds:.2f}" if isinstance(seconds, float) else str(seconds)
        print(f"{name:24s} {str(tau_star):>6s} {sec:>10s} {cpu:>10.3f}")
    return status


def compare_profiles(paths, out_path: str):
    """Merge profile CSVs into wide chart data: tau, <label per input>."""
    series = []
    slots = set()
    for path in paths:
        label = os.path.basename(path).rsplit(".", 1)[0]
        meta_path = path.rsplit(".", 1)[0] + ".meta.json"
        if os.path.exists(meta_path):
            with open(meta_path) as handle:
                slots.add(json.load(handle).get("slot_seconds"))
        values = []
        with open(path) as handle:
            header = handle.readline().strip().split(",")
            tau_col = header.index("tau")
            evac_col = header.index("evacuees")
            for line in handle:
                cells = line.strip().split(",")
                values.append((int(cells[tau_col]), float(cells[evac_col])))
        values.sort()
        series.append((label, [v for _, v in values]))
    if len(slots) > 1:
        raise SlotMismatch(f"inputs use different slot durations: {sorted(slots)}")
    length = max(len(v) for _, v in series)
    rows = []
    for t in range(1, length + 1):
        row = [t]
        for _, values in series:
            row.append(values[t - 1] if t <= len(values) else values[-1])
        rows.append(row)
    _write_csv(out_path, ["tau"] + [label for label, _ in series], rows)


def main(argv=None) -> int:
    level = os.environ.get("EVACNET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))

    parser = argparse.ArgumentParser(prog="evacnet",
                                     description="building evacuation planning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--timings", choices=("zero", "measured"), default="zero",
                       help="emit measured per-step CPU times instead of zeros")

    p_cmp = sub.add_parser("compare", help="merge profile CSVs for plotting")
    p_cmp.add_argument("csvs", nargs="+")
    p_cmp.add_argument("--out", required=True)

    p_val = sub.add_parser("validate", help="check a plan document")
    p_val.add_argument("plan")

    args = parser.parse_args(argv)

    if args.command == "validate":
        try:
            plan = resolve_plan(args.plan)
        except (ParseError, ValidationError, ConfigProblem) as exc:
            print(f"invalid: {exc}")
            return 1
        print(f"ok: {plan.name or args.plan} "
              f"({len(plan.rooms)} rooms, {len(plan.doors)} doors)")
        return 0

    if args.command == "compare":
        try:
            compare_profiles(args.csvs, args.out)
        except (SlotMismatch, OSError, ValueError) as exc:
            print(f"error: {exc}")
            return 1
        return 0

    try:
        with open(args.config) as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {args.config!r}: {exc}")
        return 1
    try:
        return run_scenario(config, args.out, seed_override=args.seed,
                            jobs=args.jobs, timings=args.timings)
    except (ConfigProblem, ParseError, ValidationError, ValueError) as exc:
        print(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
