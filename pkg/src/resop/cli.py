"""Command-line front end: generate-flows, train, evaluate, report.

Every command is deterministic given its arguments and input files: run
manifests echo the resolved configuration, seeds, and input digests, and no
output embeds wall-clock time. Exit codes: 0 success, 2 configuration or
usage error, 3 data error, 4 internal fault.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import figures, metrics
from .agents import AGENT_KINDS, AgentConfig, make_agent, train
from .baselines import (
    DEFAULT_INITIAL_STORAGE_FRACTION,
    AgentPolicy,
    RandomPolicy,
    ReplayPolicy,
    SopPolicy,
    Trajectory,
    run_policy,
)
from .config import parse_blocks
from .errors import (
    CheckpointUnreadable,
    ConfigInvalid,
    LengthMismatch,
    MalformedRow,
    NoInputs,
    ToolkitError,
)
from .hydrology import (
    RNG_KIND,
    FlowSeries,
    SyntheticGenConfig,
    calendar_from_index,
    generate_synthetic_flows,
    load_flow_csv,
    monthly_statistics,
    month_index_from_calendar,
    trim_to_water_years,
    write_flow_csv,
)
from .nets import load_checkpoint, save_checkpoint
from .reservoir import ReservoirSpec, load_reservoir_spec

PACKAGE_VERSION = "0.1.0"

# AgentConfig fields exposed as flags and run-config [agent] keys.
_AGENT_FIELD_TYPES = {
    "gamma": float, "tau": float, "buffer_size": int, "critic_lr": float,
    "actor_lr": float, "batch_size": int, "q_lr": float, "alpha": float,
    "exploration_noise_std": float, "target_noise_std": float,
    "noise_clip": float, "policy_delay": int, "target_entropy": float,
    "alpha_lr": float, "warmup_transitions": int, "updates_per_step": int,
    "squash": str,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _require_file(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise ConfigInvalid(f"{what} not found: {path}")
    return path


def _load_series(path: Path) -> FlowSeries:
    return load_flow_csv(path.read_text(encoding="utf-8"))


def _json_dump(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_bool(raw: str) -> bool:
    if raw.lower() in ("1", "true", "yes", "on"):
        return True
    if raw.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigInvalid(f"expected a boolean, got {raw!r}")


def _read_run_config(path_str: str | None) -> dict[str, dict[str, str]]:
    """[environment]/[agent]/[training]/[data] sections of a run config."""
    if path_str is None:
        return {}
    path = _require_file(path_str, "run config")
    sections = parse_blocks(path.read_text(encoding="utf-8"), str(path))
    known = {"environment", "agent", "training", "data"}
    for name in sections:
        if name not in known:
            raise ConfigInvalid(f"{path}: unknown section [{name}]")
        if sections[name].rows:
            raise ConfigInvalid(f"{path}: [{name}] must hold key = value lines only")
    return {name: dict(section.keys) for name, section in sections.items()}


def _pick(flag_value, file_section: dict[str, str], key: str, convert, default):
    """Flag beats config file beats default."""
    if flag_value is not None:
        return flag_value
    if key in file_section:
        return convert(file_section[key])
    return default


def _resolve_agent_config(ns, file_agent: dict[str, str]) -> AgentConfig:
    desk = _pick(ns.desk_scale or None, file_agent, "desk_scale", _parse_bool, False)
    cfg = AgentConfig.desk_scale(ns.algo) if desk else AgentConfig.for_kind(ns.algo)
    for name, convert in _AGENT_FIELD_TYPES.items():
        flag = getattr(ns, name, None)
        if flag is not None:
            setattr(cfg, name, convert(flag))
        elif name in file_agent:
            try:
                setattr(cfg, name, convert(file_agent[name]))
            except ValueError:
                raise ConfigInvalid(
                    f"[agent] {name} = {file_agent[name]!r} is not a {convert.__name__}"
                ) from None
    cfg.validate()
    return cfg


# --- trajectory CSV interface --------------------------------------------

TRAJECTORY_HEADER = "year,month,storage,release,spill,deficit,power_gwh,reward"


def write_trajectory_csv(traj: Trajectory, path: Path) -> None:
    lines = [TRAJECTORY_HEADER]
    for k in range(len(traj)):
        month_index = (traj.start_month + k) % 12
        water_year = traj.start_year + (traj.start_month + k) // 12
        year, month = calendar_from_index(water_year, month_index)
        lines.append(",".join([
            str(year), str(month),
            repr(float(traj.storage[k])), repr(float(traj.release[k])),
            repr(float(traj.spill[k])), repr(float(traj.deficit[k])),
            repr(float(traj.power_gwh[k])), repr(float(traj.reward[k])),
        ]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trajectory_csv(path: Path, spec: ReservoirSpec) -> Trajectory:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise MalformedRow(f"{path}: expected header '{TRAJECTORY_HEADER}'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 8:
            raise MalformedRow(f"{path}:{lineno}: expected 8 fields")
        try:
            rows.append((int(cells[0]), int(cells[1]), *(float(c) for c in cells[2:])))
        except ValueError as exc:
            raise MalformedRow(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise MalformedRow(f"{path}: no data rows")
    first_year, first_month = rows[0][0], rows[0][1]
    start_month = month_index_from_calendar(first_month)
    start_year = first_year + 1 if first_month >= 10 else first_year
    cols = np.array([r[2:] for r in rows], dtype=np.float64)
    months = np.arange(len(rows))
    demand = spec.demand[(start_month + months) % 12]
    return Trajectory(
        start_year=start_year, start_month=start_month,
        storage=cols[:, 0], release=cols[:, 1], spill=cols[:, 2],
        deficit=cols[:, 3], evaporation=np.zeros(len(rows)),
        power_gwh=cols[:, 4], reward=cols[:, 5], demand=demand.copy(),
    )


# --- agent checkpoints ----------------------------------------------------

def save_agent(agent, cfg: AgentConfig, outdir: Path, manifest_extra: dict) -> dict:
    nets = agent.network_map()
    for name, net in nets.items():
        save_checkpoint(net, outdir / f"net_{name}.txt")
    manifest = {
        "package": {"name": "resop", "version": PACKAGE_VERSION},
        "agent": agent.kind,
        "agent_config": dataclasses.asdict(cfg),
        "networks": sorted(f"net_{name}.txt" for name in nets),
        "update_count": agent.update_count,
        "alpha": agent.alpha if hasattr(agent, "alpha") else None,
        "rng": RNG_KIND,
    }
    if getattr(agent, "alpha_state", None) is not None:
        manifest["log_alpha"] = float(agent.alpha_state.log_alpha[0])
        manifest["target_entropy"] = agent.alpha_state.target_entropy
    manifest.update(manifest_extra)
    _json_dump(manifest, outdir / "manifest.json")
    return manifest


def load_agent(checkpoint_dir: Path):
    manifest_path = checkpoint_dir / "manifest.json"
    if not manifest_path.is_file():
        raise CheckpointUnreadable(f"no manifest.json under {checkpoint_dir}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        kind = manifest["agent"]
        cfg_dict = dict(manifest["agent_config"])
    except (json.JSONDecodeError, KeyError) as exc:
        raise CheckpointUnreadable(f"{manifest_path}: {exc}") from None
    for key in ("hidden_sizes", "logstd_clamp"):
        if key in cfg_dict and isinstance(cfg_dict[key], list):
            cfg_dict[key] = tuple(cfg_dict[key])
    try:
        cfg = AgentConfig(**cfg_dict)
    except TypeError as exc:
        raise CheckpointUnreadable(f"{manifest_path}: {exc}") from None
    agent = make_agent(kind, cfg, seed=0)
    restored = {}
    for name in agent.network_map():
        restored[name] = load_checkpoint(checkpoint_dir / f"net_{name}.txt")
    agent.restore_networks(restored)
    agent.update_count = int(manifest.get("update_count", 0))
    if getattr(agent, "alpha_state", None) is not None and "log_alpha" in manifest:
        agent.alpha_state.log_alpha[0] = float(manifest["log_alpha"])
    return agent, manifest


# --- subcommands ----------------------------------------------------------

def cmd_generate_flows(ns) -> int:
    history_path = _require_file(ns.history, "history CSV")
    if ns.years < 1 or ns.seed < 0:
        raise ConfigInvalid("--years must be >= 1 and --seed >= 0")
    history = _load_series(history_path)
    stats = monthly_statistics(history)
    cfg = SyntheticGenConfig(years=ns.years, seed=ns.seed)
    generated = generate_synthetic_flows(stats, cfg, history)

    out = Path(ns.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as stream:
        write_flow_csv(generated, stream, seed=ns.seed)
    sidecar = {
        "rng": RNG_KIND,
        "seed": ns.seed,
        "years": ns.years,
        "history": {"path": str(history_path), "sha256": _sha256(history_path)},
        "n_history_years": stats.n_years,
        "log_mean": stats.log_mean.tolist(),
        "log_std": stats.log_std.tolist(),
        "within_corr": stats.within_corr.tolist(),
        "cross_corr": stats.cross_corr.tolist(),
    }
    _json_dump(sidecar, out.with_suffix(out.suffix + ".stats.json"))
    print(f"wrote {len(generated)} months to {out}")
    return 0


def _train_one(payload: dict) -> dict:
    """One seeded training run; used directly and by seed workers."""
    spec = load_reservoir_spec(payload["spec_path"])
    series = FlowSeries(payload["series_start_year"], 0,
                        np.array(payload["series_values"]))
    cfg = AgentConfig(**payload["cfg"])
    for key in ("hidden_sizes", "logstd_clamp"):
        setattr(cfg, key, tuple(getattr(cfg, key)))
    result = train(payload["algo"], spec, series, cfg=cfg,
                   episodes=payload["episodes"], seed=payload["seed"])

    outdir = Path(payload["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    rewards = result.episode_rewards
    lines = ["episode,cumulative_reward"]
    lines += [f"{k + 1},{float(r)!r}" for k, r in enumerate(rewards)]
    (outdir / "rewards.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    figures.save_reward_trace(rewards, outdir / "rewards.png")
    save_agent(result.agent, cfg, outdir, payload["manifest_extra"] | {
        "seed": payload["seed"],
        "episodes": payload["episodes"],
    })
    return {
        "seed": payload["seed"],
        "episodes": payload["episodes"],
        "mean_reward_last50": float(np.mean(rewards[-50:])),
        "total_reward": float(np.sum(rewards)),
    }


def cmd_train(ns) -> int:
    file_cfg = _read_run_config(ns.config)
    env_sec = file_cfg.get("environment", {})
    train_sec = file_cfg.get("training", {})
    data_sec = file_cfg.get("data", {})

    ns.algo = _pick(ns.algo, file_cfg.get("agent", {}), "algo", str, None)
    if ns.algo not in AGENT_KINDS:
        raise ConfigInvalid(f"--algo must be one of {AGENT_KINDS}, got {ns.algo!r}")
    spec_path = _require_file(
        _pick(ns.spec, env_sec, "spec", str, None) or "", "reservoir spec")
    history_path = _require_file(
        _pick(ns.history, data_sec, "history", str, None) or "", "history CSV")
    episodes = _pick(ns.episodes, train_sec, "episodes", int, 500)
    seeds = _pick(ns.seeds, train_sec, "seeds", str, None)
    seed = _pick(ns.seed, train_sec, "seed", int, 0)
    synth_years = _pick(ns.synthetic_years, data_sec, "synthetic_years", int, None)
    synth_seed = _pick(ns.synthetic_seed, data_sec, "synthetic_seed", int, 0)
    if episodes < 1 or seed < 0:
        raise ConfigInvalid("episodes must be >= 1 and seed >= 0")
    cfg = _resolve_agent_config(ns, file_cfg.get("agent", {}))

    load_reservoir_spec(spec_path)  # fail fast before any output
    history = _load_series(history_path)
    inputs = {
        "spec": {"path": str(spec_path), "sha256": _sha256(spec_path)},
        "history": {"path": str(history_path), "sha256": _sha256(history_path)},
    }
    if synth_years is not None:
        stats = monthly_statistics(history)
        series = generate_synthetic_flows(
            stats, SyntheticGenConfig(years=synth_years, seed=synth_seed), history)
        inflow_source = {"kind": "synthetic", "years": synth_years, "seed": synth_seed}
    else:
        # training episodes are whole water years, so align the record
        series = trim_to_water_years(history)
        inflow_source = {"kind": "historical", "whole_years": series.n_whole_years}

    outdir = Path(ns.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest_extra = {
        "command": "train",
        "algo": ns.algo,
        "inputs": inputs,
        "inflow_source": inflow_source,
    }
    payload = {
        "algo": ns.algo,
        "cfg": dataclasses.asdict(cfg),
        "episodes": episodes,
        "spec_path": str(spec_path),
        "series_start_year": series.start_year,
        "series_values": series.values.tolist(),
        "manifest_extra": manifest_extra,
    }

    if seeds:
        seed_list = sorted({int(tok) for tok in seeds.split(",") if tok.strip()})
        if not seed_list:
            raise ConfigInvalid("--seeds must list at least one integer")
        jobs = [payload | {"seed": s, "outdir": str(outdir / f"seed-{s}")}
                for s in seed_list]
        with ProcessPoolExecutor(max_workers=min(len(jobs), ns.workers)) as pool:
            summaries = list(pool.map(_train_one, jobs))
        summaries.sort(key=lambda row: row["seed"])
        lines = ["seed,episodes,mean_reward_last50,total_reward"]
        lines += [
            f"{s['seed']},{s['episodes']},{s['mean_reward_last50']!r},{s['total_reward']!r}"
            for s in summaries
        ]
        (outdir / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"trained {ns.algo} for seeds {seed_list} under {outdir}")
    else:
        summary = _train_one(payload | {"seed": seed, "outdir": str(outdir)})
        print(f"trained {ns.algo}: last-50 mean reward "
              f"{summary['mean_reward_last50']:.1f} -> {outdir}")
    return 0


def sustainability_from_factors(rel: float, res: float, vul: float,
                                max_deficit: float) -> float:
    """Verification hook: score four externally supplied factor values."""
    return metrics.sustainability_index(rel, res, vul, max_deficit)


def cmd_evaluate(ns) -> int:
    if ns.si_factors is not None:
        parts = [float(tok) for tok in ns.si_factors.split(",")]
        if len(parts) != 4:
            raise ConfigInvalid("--si-factors needs rel,res,vul,max_deficit")
        print(f"si={sustainability_from_factors(*parts)!r}")
        return 0

    spec_path = _require_file(ns.spec, "reservoir spec")
    inflow_path = _require_file(ns.inflows, "inflow CSV")
    spec = load_reservoir_spec(spec_path)
    series = _load_series(inflow_path)

    label = ns.label
    if ns.policy == "sop":
        policy = SopPolicy()
        label = label or "sop"
    elif ns.policy == "random":
        policy = RandomPolicy(ns.policy_seed)
        label = label or "random"
    elif ns.policy == "replay":
        releases_path = _require_file(
            ns.replay_releases or "", "replay release CSV (--replay-releases)")
        recorded = _load_release_csv(releases_path)
        if len(recorded) != len(series):
            raise LengthMismatch(
                f"replay has {len(recorded)} months, inflows {len(series)}")
        policy = ReplayPolicy(recorded)
        label = label or "replay"
    else:
        agent, manifest = load_agent(Path(ns.policy))
        policy = AgentPolicy(agent)
        label = label or manifest.get("algo", agent.kind)

    initial_storage = ns.initial_storage
    if initial_storage is None:
        initial_storage = DEFAULT_INITIAL_STORAGE_FRACTION * spec.capacity
    traj = run_policy(policy, spec, series, initial_storage=initial_storage)
    rep = metrics.report(traj)

    outdir = Path(ns.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, outdir / "trajectory.csv")
    (outdir / "report.csv").write_text(
        metrics.REPORT_HEADER + "\n" + metrics.report_csv_row(label, rep) + "\n",
        encoding="utf-8")
    _json_dump({
        "command": "evaluate",
        "policy": ns.policy,
        "label": label,
        "policy_seed": ns.policy_seed,
        "initial_storage": initial_storage,
        "clipped_steps": traj.clipped_steps,
        "inputs": {
            "spec": {"path": str(spec_path), "sha256": _sha256(spec_path)},
            "inflows": {"path": str(inflow_path), "sha256": _sha256(inflow_path)},
        },
    }, outdir / "manifest.json")
    print(f"evaluated {label}: si={rep.si:.4f} rel={rep.rel:.4f} -> {outdir}")
    return 0


def _load_release_csv(path: Path) -> np.ndarray:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.startswith("#")]
    if not lines or [c.strip() for c in lines[0].split(",")] != ["year", "month", "release_taf"]:
        raise MalformedRow(f"{path}: expected header 'year,month,release_taf'")
    try:
        return np.array([float(line.split(",")[2]) for line in lines[1:]])
    except (IndexError, ValueError) as exc:
        raise MalformedRow(f"{path}: {exc}") from None


def cmd_report(ns) -> int:
    if not ns.trajectories:
        raise NoInputs("report needs at least one trajectory CSV")
    spec = load_reservoir_spec(_require_file(ns.spec, "reservoir spec"))
    paths = [_require_file(p, "trajectory CSV") for p in ns.trajectories]
    if ns.labels:
        labels = [tok.strip() for tok in ns.labels.split(",")]
        if len(labels) != len(paths):
            raise ConfigInvalid(
                f"--labels lists {len(labels)} names for {len(paths)} trajectories")
    else:
        labels = [p.stem for p in paths]
        if len(set(labels)) != len(labels):
            labels = [f"{p.stem}-{k}" for k, p in enumerate(paths)]

    trajs = {lab: read_trajectory_csv(p, spec) for lab, p in zip(labels, paths)}
    spans = {(t.start_year, t.start_month, len(t)) for t in trajs.values()}
    if len(spans) != 1:
        raise LengthMismatch("all trajectories must cover the same months")

    outdir = Path(ns.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    rows = [metrics.report_csv_row(lab, metrics.report(t)) for lab, t in trajs.items()]
    (outdir / "comparison.csv").write_text(
        metrics.REPORT_HEADER + "\n" + "\n".join(rows) + "\n", encoding="utf-8")

    first = next(iter(trajs.values()))
    n = len(first)
    month_cols = []
    for k in range(n):
        idx = (first.start_month + k) % 12
        wy = first.start_year + (first.start_month + k) // 12
        month_cols.append(calendar_from_index(wy, idx))

    def write_monthly(name: str, attr: str) -> None:
        header = "year,month," + ",".join(labels)
        lines = [header]
        for k in range(n):
            y, m = month_cols[k]
            vals = ",".join(repr(float(getattr(trajs[lab], attr)[k])) for lab in labels)
            lines.append(f"{y},{m},{vals}")
        (outdir / f"plotdata_{name}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    write_monthly("storage", "storage")
    write_monthly("release", "release")
    write_monthly("power", "power_gwh")

    years = [first.start_year + j for j in range(n // 12)]
    annual = {}
    for lab, t in trajs.items():
        deficit = np.maximum(0.0, t.demand - t.release).reshape(-1, 12).sum(axis=1)
        demand = t.demand.reshape(-1, 12).sum(axis=1)
        pct = np.zeros_like(deficit)
        nonzero = demand > 0
        pct[nonzero] = 100.0 * deficit[nonzero] / demand[nonzero]
        annual[lab] = pct
    lines = ["water_year," + ",".join(labels)]
    for j, wy in enumerate(years):
        lines.append(f"{wy}," + ",".join(repr(float(annual[lab][j])) for lab in labels))
    (outdir / "plotdata_annual_deficit_pct.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    figures.save_monthly_traces({lab: t.storage for lab, t in trajs.items()},
                                "storage [TAF]", "end-of-month storage",
                                outdir / "storage.png")
    figures.save_monthly_traces({lab: t.release for lab, t in trajs.items()},
                                "release [TAF/month]", "monthly release",
                                outdir / "release.png")
    figures.save_monthly_traces({lab: t.power_gwh for lab, t in trajs.items()},
                                "energy [GWh/month]", "generated power",
                                outdir / "power.png")
    figures.save_annual_bars(annual, years, "annual deficit [%]",
                             "annual deficit as share of annual demand",
                             outdir / "annual_deficit_pct.png")
    print(f"report for {len(labels)} trajectories -> {outdir}")
    return 0


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resop",
        description="Reservoir-operation toolkit: synthetic flows, policy-"
                    "gradient training, evaluation, and comparison reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-flows", help="generate synthetic monthly inflows")
    g.add_argument("--history", required=True, help="historical inflow CSV")
    g.add_argument("--years", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--output", required=True, help="output CSV path")
    g.set_defaults(func=cmd_generate_flows)

    t = sub.add_parser("train", help="train one agent kind")
    t.add_argument("--algo", choices=AGENT_KINDS)
    t.add_argument("--spec", help="reservoir spec config")
    t.add_argument("--history", help="historical inflow CSV")
    t.add_argument("--synthetic-years", type=int,
                   help="train on this many generated years instead of history")
    t.add_argument("--synthetic-seed", type=int)
    t.add_argument("--episodes", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--seeds", help="comma list; runs isolated per-seed workers")
    t.add_argument("--workers", type=int, default=4)
    t.add_argument("--output-dir", required=True)
    t.add_argument("--config", help="run config file ([environment]/[agent]/...)")
    t.add_argument("--desk-scale", action="store_true",
                   help="start from the desk-scale preset instead of the tuned defaults")
    for name, typ in _AGENT_FIELD_TYPES.items():
        t.add_argument(f"--{name.replace('_', '-')}", type=typ, dest=name)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="run a policy over an inflow series")
    e.add_argument("--policy", help="sop | random | replay | checkpoint dir")
    e.add_argument("--spec")
    e.add_argument("--inflows")
    e.add_argument("--output-dir")
    e.add_argument("--replay-releases", help="year,month,release_taf CSV for replay")
    e.add_argument("--policy-seed", type=int, default=0)
    e.add_argument("--initial-storage", type=float, default=None)
    e.add_argument("--label")
    e.add_argument("--si-factors",
                   help="verification hook: 'rel,res,vul,max_deficit' -> prints SI")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="comparison table, plot data, and figures")
    r.add_argument("trajectories", nargs="*", help="trajectory CSVs from evaluate")
    r.add_argument("--spec", required=True)
    r.add_argument("--labels", help="comma list matching the trajectory files")
    r.add_argument("--output-dir", required=True)
    r.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "evaluate" and ns.si_factors is None:
        for required in ("policy", "spec", "inflows", "output_dir"):
            if getattr(ns, required) is None:
                parser.error(f"evaluate requires --{required.replace('_', '-')}")
    try:
        return ns.func(ns)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
