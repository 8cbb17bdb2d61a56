"""Plot-ready tables gathered from run directories. No rendering happens here."""

import csv
import io
import json
from pathlib import Path

import numpy as np

from subplay.evalkit.metrics import records_from_csv
from subplay.runner.config import from_dict
from subplay.runner.manifest import read_jsonl

REPORT_HEADER = "# subplay-report v1"
DEFENSE_HEADER = "# subplay-defense v1"

# keys a bundle may legitimately vary over
DEFAULT_SWEPT = ("seed", "seeds", "sub", "limitation", "uncertainty_rate", "observable_distance",
                 "proactive_mask_rate", "access_fraction", "occupancy_method")


class ReportError(ValueError):
    pass


def rows_to_csv(rows, header: str = REPORT_HEADER) -> str:
    out = io.StringIO()
    out.write(header + "\n")
    if rows:
        keys = list(rows[0])
        for r in rows[1:]:
            keys += [k for k in r if k not in keys]
        w = csv.DictWriter(out, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return out.getvalue()


def read_report_csv(text: str) -> list:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# subplay-"):
        raise ReportError("missing versioned header")
    return list(csv.DictReader(lines[1:]))


CONFIG_PREFERENCE = ("attack", "evaluate", "train-victim", "defend", "export-activations")


def run_config(run: Path):
    """The config that produced a run's attack artifacts.

    Commands in one dir may tweak defense or export knobs, so only one config
    per run (attack first, then evaluate, ...) speaks for it.
    """
    for cmd in CONFIG_PREFERENCE:
        p = run / f"config_{cmd}.json"
        if p.exists():
            return from_dict(json.loads(p.read_text()))
    raise ReportError(f"{run}: no config_<command>.json found")


def build_bundles(run_dirs, swept=None) -> dict:
    """File name -> CSV text for every bundle the runs have data for."""
    swept = DEFAULT_SWEPT if swept is None else tuple(swept)
    runs = [Path(r) for r in run_dirs]
    configs = {}
    hashes = {}
    for run in runs:
        cfg = run_config(run)
        hashes.setdefault(cfg.config_hash(exclude=swept), []).append(str(run))
        configs[run] = cfg
    if len(hashes) > 1:
        detail = "; ".join(f"{h[:12]}: {', '.join(sorted(set(r)))}" for h, r in hashes.items())
        raise ReportError(f"inconsistent config hashes in one bundle (outside swept keys {swept}): {detail}")

    occ_rows, est_rows, perf_rows, scal, def_rows = [], [], [], {}, []
    for run in runs:
        cfg = configs[run]
        name = run.name
        log_path = run / "attack_subplay.jsonl"
        if log_path.exists():
            for e in read_jsonl(log_path):
                ep_or = np.mean(np.asarray(e["episode_or"]), axis=0)
                est = np.mean(np.asarray(e["occupancy"]), axis=0)
                occ_rows.append(dict(run=name, episode=e["episode"], **{f"or_{k}": float(v) for k, v in enumerate(ep_or)}))
                est_rows.append(dict(run=name, episode=e["episode"], **{f"or_{k}": float(v) for k, v in enumerate(est)}))
        for mpath in sorted(run.glob("metrics_*.csv")):
            for rec in records_from_csv(mpath.read_text()):
                perf_rows.append(dict(run=name, label=rec.label, limitation=cfg.limitation,
                                      level=_level(cfg), CR=rec.CR, CF=rec.CF, PM=rec.PM,
                                      episodes=rec.num_episodes))
        man = run / "attack_subplay_manifest.json"
        if man.exists():
            m = json.loads(man.read_text())
            sub = cfg.sub if cfg.sub is not None else cfg.num_victims + 1
            pms = [float(r["PM"]) for r in perf_rows
                   if r["run"] == name and r["label"].startswith("adversary_subplay/seed")]
            slot = scal.setdefault(sub, dict(seconds=[], pm=[]))
            slot["seconds"].append(m["timings"].get("train_attack", float("nan")))
            slot["pm"] += pms
        for dpath in sorted(run.glob("defense_*.csv")):
            for r in read_report_csv(dpath.read_text()):
                def_rows.append(dict(run=name, **r))

    out = {}
    if occ_rows:
        out["occupancy.csv"] = rows_to_csv(occ_rows)
        out["occupancy_estimate.csv"] = rows_to_csv(est_rows)
    if perf_rows:
        out["attack_performance.csv"] = rows_to_csv(perf_rows)
    if scal:
        rows = [dict(sub=s, runs=len(v["seconds"]), train_seconds=float(np.mean(v["seconds"])),
                     median_pm=float(np.median(v["pm"])) if v["pm"] else float("nan"))
                for s, v in sorted(scal.items())]
        out["scalability.csv"] = rows_to_csv(rows)
    if def_rows:
        out["defense.csv"] = rows_to_csv(def_rows)
    return out


def _level(cfg):
    return {"uncertainty": cfg.uncertainty_rate, "distance": cfg.observable_distance}.get(cfg.limitation, "")

