"""Command-line entry point: ``subplay <command> [--config FILE] [--key value ...]``.

Every ExperimentConfig key is also a flag (underscores become dashes) and
overrides the file. ``SUBPLAY_OUTPUT_ROOT`` relocates relative output dirs.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from subplay.attack.combine import load_subpolicy_set, save_subpolicy_set
from subplay.engine.world import ADVERSARY, VICTIM, observation_dim
from subplay.evalkit.activations import export_activations, write_activations
from subplay.evalkit.defenses import defense_adversarial_retraining, defense_fine_tuning, defense_policy_ensemble
from subplay.evalkit.evaluate import evaluate
from subplay.evalkit.metrics import improvement_delta, performance_metric, records_from_csv, records_to_csv
from subplay.opponents import (
    HeuristicPolicy, VictimPool, VictimTeam, load_victim, save_victim, train_selfplay, train_victimplay,
)
from subplay.runner.config import ConfigError, ExperimentConfig, from_dict, load_config, save_config, schema
from subplay.runner.manifest import JsonlLog, PhaseTimer, RunManifest, atomic_write_text
from subplay.runner import report as reporting

log = logging.getLogger("subplay")

METHODS = ("subplay", "victimplay", "selfplay", "heuristic")
DEFENSES = ("retrain", "ensemble", "finetune")


class CliError(RuntimeError):
    pass


# ---- config plumbing -------------------------------------------------------

def _parse_bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _parse_seeds(text):
    return [int(s) for s in text.replace(",", " ").split()]


def _parse_optional_int(text):
    return None if text.lower() in ("none", "null", "") else int(text)


_PARSERS = {"str": str, "int": int, "float": float, "bool": _parse_bool, "tuple": _parse_seeds,
            "int | None": _parse_optional_int}


def add_config_flags(p):
    p.add_argument("--config", help="JSON config file (flat key/value)")
    g = p.add_argument_group("config overrides")
    for key, info in schema().items():
        g.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key, type=_PARSERS[info["type"]],
                       default=None, metavar=info["type"].upper().replace(" | NONE", "|none"))


def resolve_config(args) -> ExperimentConfig:
    base = load_config(args.config).to_dict() if args.config else {}
    for key in schema():
        v = getattr(args, "cfg_" + key, None)
        if v is not None:
            base[key] = v
    return from_dict(base)


def prepare_output(cfg) -> Path:
    """Create the output dir and prove it is writable before any compute."""
    out = cfg.output_path()
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out, prefix=".probe"):
            pass
    except OSError as e:
        raise CliError(f"output directory {out} is not writable: {e}") from None
    return out


# ---- artifact loading ------------------------------------------------------

def load_victim_team(path, cfg):
    learners, header = load_victim(path)
    want = observation_dim(cfg.env_config(), VICTIM)
    if len(learners) != cfg.num_victims or learners[0].obs_dim != want:
        raise CliError(f"victim {path} has {len(learners)} agents with obs dim {learners[0].obs_dim}; "
                       f"config {cfg.scenario}/{cfg.environment} needs {cfg.num_victims} agents with obs dim {want}")
    return learners


def load_victim_any(paths, cfg):
    """One path gives a team; several (or a JSON pool manifest) give a uniform pool."""
    paths = list(paths)
    if len(paths) == 1 and str(paths[0]).endswith(".json"):
        pool = json.loads(Path(paths[0]).read_text())
        base = Path(paths[0]).parent
        paths = [p if os.path.isabs(p) else str(base / p) for p in pool["members"]]
        return VictimPool([VictimTeam.from_learners(load_victim_team(p, cfg)) for p in paths])
    if len(paths) == 1:
        return VictimTeam.from_learners(load_victim_team(paths[0], cfg))
    return VictimPool([VictimTeam.from_learners(load_victim_team(p, cfg)) for p in paths])


def load_adversary(path, cfg):
    if str(path).endswith(".json"):
        d = json.loads(Path(path).read_text())
        if d.get("kind") != "heuristic":
            raise CliError(f"{path} is not a heuristic descriptor")
        if d["num_agents"] != cfg.num_adversaries:
            raise CliError(f"heuristic {path} drives {d['num_agents']} agents, config needs {cfg.num_adversaries}")
        return HeuristicPolicy(d["num_agents"], d["speed_scale"], d["arena"])
    sets, _ = load_subpolicy_set(path)
    want = observation_dim(cfg.env_config(), ADVERSARY)
    if sets.num_agents != cfg.num_adversaries or sets.actors[0][0].in_dim != want:
        raise CliError(f"adversary {path} has {sets.num_agents} agents with obs dim {sets.actors[0][0].in_dim}; "
                       f"config needs {cfg.num_adversaries} agents with obs dim {want}")
    return sets


# ---- commands --------------------------------------------------------------

def cmd_train_victim(cfg, args, out):
    timer = PhaseTimer()
    env, lim = cfg.env_config(), cfg.limitation_spec()
    ckpt_dir = out / "victim_checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    saved = []

    def on_checkpoint(ep, learners):
        p = ckpt_dir / f"victim_ep{ep:07d}.ckpt"
        save_victim(p, learners, dict(episode=ep, config_hash=cfg.config_hash()))
        saved.append(str(p.relative_to(out)))

    with JsonlLog(out / "victim_train.jsonl") as jl, timer("train_victim"):
        res = train_selfplay(env, lim, cfg.victim_episodes, cfg.seed, cfg.hyper("victim"), cfg.hyper("victim"),
                             cfg.checkpoint_every, on_checkpoint, jl)
    save_victim(out / "victim.ckpt", res.victim_learners, dict(episode=cfg.victim_episodes,
                                                                config_hash=cfg.config_hash()))
    atomic_write_text(out / "victim_pool.json", json.dumps(dict(members=saved[-3:] or ["victim.ckpt"]),
                                                           indent=2) + "\n")
    with timer("evaluate"):
        rec = evaluate(HeuristicPolicy(cfg.num_adversaries), res.victim, env, lim, cfg.eval_episodes, cfg.seeds,
                       config_hash=cfg.config_hash(), label="victim-vs-heuristic")
    man = RunManifest("train-victim", cfg.config_hash(), cfg.to_dict(), cfg.seed, timings=timer.timings,
                      checkpoints=["victim.ckpt"] + saved, metrics=rec.row(),
                      extra=dict(budget=cfg.victim_episodes))
    man.write(out / "victim_manifest.json")
    print(f"victim: {len(saved)} checkpoints, CR={rec.CR:.4f} CF={rec.CF:.4f} PM={rec.PM:.4f} vs heuristic")
    return man


def cmd_attack(cfg, args, out):
    method = args.method
    env, lim = cfg.env_config(), cfg.limitation_spec()
    timer = PhaseTimer()
    victim = load_victim_any(args.victim, cfg)
    meta = dict(method=method, config_hash=cfg.config_hash(), seed=cfg.seed)
    ckpts = []
    if method == "heuristic":
        path = out / "adversary_heuristic.json"
        atomic_write_text(path, json.dumps(HeuristicPolicy(cfg.num_adversaries).descriptor(), indent=2) + "\n")
        ckpts.append(path.name)
    else:
        with JsonlLog(out / f"attack_{method}.jsonl") as jl, timer("train_attack"):
            if method == "subplay":
                result = run_subplay(cfg, env, lim, victim, jl)
                sets = result.subpolicies
            elif method == "victimplay":
                sets = train_victimplay(env, lim, victim, cfg.attack_episodes, cfg.seed,
                                        cfg.hyper("adversary"), jl).subpolicies
            else:
                sets = train_selfplay(env, lim, cfg.attack_episodes, cfg.seed, cfg.hyper("victim"),
                                      cfg.hyper("victim"), on_episode=jl).adversary
        path = out / f"adversary_{method}.ckpt"
        save_subpolicy_set(path, sets, meta)
        ckpts.append(path.name)
    man = RunManifest("attack", cfg.config_hash(), cfg.to_dict(), cfg.seed, timings=timer.timings,
                      checkpoints=ckpts, extra=dict(method=method, victim=[str(v) for v in args.victim]))
    man.write(out / f"attack_{method}_manifest.json")
    print(f"attack[{method}] -> {path}")
    return man


def run_subplay(cfg, env, lim, victim, on_episode):
    from subplay.attack.loop import run_attack

    return run_attack(env, lim, victim, cfg.attack_episodes, cfg.seed, cfg.attack_config(), on_episode)


def cmd_evaluate(cfg, args, out):
    env, lim = cfg.env_config(), cfg.limitation_spec()
    adversary = load_adversary(args.adversary, cfg)
    victim = load_victim_any(args.victim, cfg)
    label = args.label or Path(args.adversary).stem
    timer = PhaseTimer()
    records = []
    with timer("evaluate"):
        for s in cfg.seeds:
            records.append(evaluate(adversary, victim, env, lim, cfg.eval_episodes, (s,),
                                    config_hash=cfg.config_hash(), label=f"{label}/seed{s}"))
    pooled = pool_records(records, f"{label}/all", cfg.config_hash())
    records.append(pooled)
    csv_path = out / f"metrics_{label}.csv"
    atomic_write_text(csv_path, records_to_csv(records))
    lines = [f"adversary: {args.adversary}", f"victim: {' '.join(map(str, args.victim))}",
             f"episodes: {cfg.eval_episodes} x seeds {list(cfg.seeds)}"]
    for r in records:
        lines.append(f"{r.label}: CR={r.CR:.6f} CF={r.CF:.6f} PM={r.PM:.6f}")
    lines.append(f"median PM over seeds: {float(np.median([r.PM for r in records[:-1]])):.6f}")
    if args.baseline and args.victimplay:
        pm_b = _pooled_pm(args.baseline)
        pm_v = _pooled_pm(args.victimplay)
        try:
            delta = improvement_delta(pm_b, pm_v, pooled.PM)
            lines.append(f"improvement delta vs Victim-play: {100 * delta:.2f}% "
                         f"(PM_B={pm_b:.6f}, PM_V={pm_v:.6f}, PM_S={pooled.PM:.6f})")
        except ValueError as e:
            lines.append(f"improvement delta undefined: {e}")
    else:
        lines.append("notice: improvement delta omitted (needs --baseline and --victimplay metrics files)")
    summary = "\n".join(lines) + "\n"
    atomic_write_text(out / f"summary_{label}.txt", summary)
    print(summary, end="")
    return records


def pool_records(records, label, config_hash):
    from subplay.evalkit.metrics import MetricsRecord

    n = sum(r.num_episodes for r in records)
    cr = sum(r.CR * r.num_episodes for r in records) / n
    cf = sum(r.CF * r.num_episodes for r in records) / n
    occ = (np.sum([np.asarray(r.occupancy) * r.num_episodes for r in records], axis=0) / n).tolist()
    seeds = tuple(s for r in records for s in r.seeds)
    return MetricsRecord(cr, cf, performance_metric(cr, cf), n, occ, seeds, config_hash, label)


def _pooled_pm(path) -> float:
    recs = records_from_csv(Path(path).read_text())
    pooled = [r for r in recs if r.label.endswith("/all")]
    return (pooled or recs)[-1].PM


def cmd_defend(cfg, args, out):
    try:
        return _defend(cfg, args, out)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise CliError(str(e)) from None


def _defend(cfg, args, out):
    env, lim = cfg.env_config(), cfg.limitation_spec()
    h = cfg.config_hash()
    timer = PhaseTimer()
    rows = []
    if args.defense == "ensemble":
        if not args.pool:
            raise CliError("ensemble defense needs --pool (victim checkpoints or a pool manifest)")
        pool = load_victim_any(args.pool, cfg)
        members = pool.members if isinstance(pool, VictimPool) else [pool]
        need = 3 if cfg.access_fraction < 1.0 else 1
        if len(members) < need:
            raise CliError(f"ensemble with access {cfg.access_fraction:g} needs a pool of at least {need} "
                           f"victims, got {len(members)}")
        with timer("defend"):
            rep = defense_policy_ensemble(members, cfg.access_fraction, env, lim, cfg.attack_episodes,
                                          cfg.eval_episodes, cfg.seeds, cfg.seed, cfg.attack_config(),
                                          config_hash=h)
        rows.append(dict(defense="ensemble", access_fraction=cfg.access_fraction, pool_size=rep.pool_size,
                         e_nodef=rep.e_nodef, e_def=rep.e_def, effect_percent=rep.effect,
                         note="effect% = 100*(E_def-E_nodef)/E_nodef with E = PM_baseline - PM_attack "
                              "(interpretation)"))
    else:
        learners = load_victim_team(args.victim[0], cfg)
        if args.defense == "retrain":
            with timer("defend"):
                rep = defense_adversarial_retraining(learners, env, lim, cfg.retrain_rounds, cfg.attack_episodes,
                                                     cfg.retrain_episodes, cfg.eval_episodes, cfg.seeds, cfg.seed,
                                                     cfg.attack_config(), cfg.hyper("victim"), h)
            for r, rec in enumerate(rep.records):
                rows.append(dict(defense="retrain", round=r + 1, CR=rec.CR, CF=rec.CF, PM=rec.PM))
        else:
            if not args.adversary:
                raise CliError("finetune defense needs --adversary")
            adversary = load_adversary(args.adversary, cfg)
            with timer("defend"):
                rep = defense_fine_tuning(learners, adversary, env, lim, cfg.finetune_steps, cfg.finetune_cadence,
                                          cfg.eval_episodes, cfg.seeds, cfg.seed, cfg.finetune_lr_scale,
                                          cfg.hyper("victim"), h)
            for x, rec in zip(rep.steps, rep.records):
                rows.append(dict(defense="finetune", step=x, CR=rec.CR, CF=rec.CF, PM=rec.PM))
    path = out / f"defense_{args.defense}.csv"
    atomic_write_text(path, reporting.rows_to_csv(rows, header=reporting.DEFENSE_HEADER))
    RunManifest("defend", h, cfg.to_dict(), cfg.seed, timings=timer.timings, checkpoints=[],
                metrics=dict(rows=len(rows)), extra=dict(defense=args.defense)).write(
        out / f"defense_{args.defense}_manifest.json")
    for r in rows:
        print(", ".join(f"{k}={v}" for k, v in r.items()))
    return rows


def cmd_report(cfg, args, out):
    bundles = reporting.build_bundles(args.runs, swept=args.swept)
    for name, text in bundles.items():
        atomic_write_text(out / name, text)
        print(f"wrote {out / name}")
    return bundles


def cmd_export_activations(cfg, args, out):
    env, lim = cfg.env_config(), cfg.limitation_spec()
    victim = load_victim_any(args.victim, cfg)
    if isinstance(victim, VictimPool):
        raise CliError("activation export needs a single victim, not a pool")
    opponents = {}
    for spec in args.opponent:
        label, _, path = spec.partition("=")
        if not path:
            raise CliError(f"--opponent expects LABEL=PATH, got {spec!r}")
        opponents[label] = load_adversary(path, cfg)
    agent = None if args.all_agents else 0
    rows = export_activations(victim, opponents, cfg.activation_timesteps, env, lim, cfg.seed, agent)
    path = out / "activations.csv"
    write_activations(path, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return rows


COMMANDS = {
    "train-victim": cmd_train_victim,
    "attack": cmd_attack,
    "evaluate": cmd_evaluate,
    "defend": cmd_defend,
    "report": cmd_report,
    "export-activations": cmd_export_activations,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subplay", description="SUB-PLAY attacks on partially observed multi-agent games")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train-victim", help="train victims by Self-play")
    add_config_flags(s)

    s = sub.add_parser("attack", help="train an adversary against a frozen victim")
    add_config_flags(s)
    s.add_argument("--victim", nargs="+", required=True, help="victim checkpoint(s) or pool manifest")
    s.add_argument("--method", choices=METHODS, default="subplay")

    s = sub.add_parser("evaluate", help="measure CR / CF / PM")
    add_config_flags(s)
    s.add_argument("--adversary", required=True)
    s.add_argument("--victim", nargs="+", required=True)
    s.add_argument("--label")
    s.add_argument("--baseline", help="metrics CSV of the heuristic baseline")
    s.add_argument("--victimplay", help="metrics CSV of Victim-play")

    s = sub.add_parser("defend", help="run a defense and report its effect")
    add_config_flags(s)
    s.add_argument("--defense", choices=DEFENSES, required=True)
    s.add_argument("--victim", nargs="+", default=[])
    s.add_argument("--pool", nargs="+")
    s.add_argument("--adversary")

    s = sub.add_parser("report", help="aggregate run dirs into plot-ready tables")
    add_config_flags(s)
    s.add_argument("runs", nargs="+")
    s.add_argument("--swept", nargs="*", default=None, help="config keys allowed to differ between runs")

    s = sub.add_parser("export-activations", help="dump victim hidden activations per opponent")
    add_config_flags(s)
    s.add_argument("--victim", nargs=1, required=True)
    s.add_argument("--opponent", action="append", required=True, help="LABEL=PATH (repeatable)")
    s.add_argument("--all-agents", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "defend" and args.defense != "ensemble" and not args.victim:
            raise CliError(f"{args.defense} defense needs --victim")
        out = prepare_output(cfg)
        save_config(out / f"config_{args.command}.json", cfg)
        COMMANDS[args.command](cfg, args, out)
    except (ConfigError, CliError, reporting.ReportError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
