"""Output files: CSV tables, sensitivity reports, Pareto data and the run manifest.

CSV files use a header row, LF line endings and reals written with 17
significant digits so they read back bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .sensitivity import SensitivityReport
from .tradeoff import ParetoFront, normalize_for_radar

MANIFEST = "manifest.json"


class OutputError(OSError):
    pass


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return write_text(path, csv_text(header, rows))


def read_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# configurations and campaign ------------------------------------------------

def config_rows(configs) -> tuple[list[str], list[list]]:
    names = configs[0].space.names if configs else []
    return ["config_id", *names], [[c.id, *c.values.values()] for c in configs]


def write_configs(path: Path, configs) -> Path:
    header, rows = config_rows(configs)
    return write_csv(path, header, rows)


def write_campaign(path: Path, campaign) -> Path:
    header, _ = config_rows([r.config for r in campaign.results] or [])
    if not campaign.results:
        header = ["config_id"]
    header = header + ["runs", "stop_reason"]
    for m in campaign.metrics:
        header += [f"{m}_mean", f"{m}_std"]
    rows = []
    for r in campaign.results:
        row = [r.config.id, *r.config.values.values(), r.m, r.stop_reason]
        for m in campaign.metrics:
            row += list(r.stats[m])
        rows.append(row)
    return write_csv(path, header, rows)


def write_runs(path: Path, campaign) -> Path:
    """Per-run values of the stopping metric, in run order."""
    rows = [[r.config.id, i, v] for r in campaign.results for i, v in enumerate(r.lf_values)]
    return write_csv(path, ["config_id", "run", campaign.metrics[0]], rows)


def write_traces(path: Path, campaign) -> Path:
    extras = sorted({k for r in campaign.results for t in r.traces for s in t.snapshots
                     for k in s.extras})
    header = ["config_id", "run", "step", "group", "size", "mean_feature", "selected", "total",
              "positives", "true_positives", "utility", *extras]
    rows = []
    for r in campaign.results:
        for t in r.traces:
            for s in t.snapshots:
                tail = [s.extras.get(k, float("nan")) for k in extras]
                for name, g in s.groups.items():
                    rows.append([t.config_id, t.run, s.step, name, g.size, g.mean_feature,
                                 g.selected, g.total, g.positives, g.true_positives, s.utility,
                                 *tail])
    return write_csv(path, header, rows)


def write_failures(path: Path, failures: dict) -> Path:
    return write_csv(path, ["config_id", "error"], sorted(failures.items()))


# sensitivity -----------------------------------------------------------------

def stars(p: float) -> str:
    if p is None or math.isnan(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def report_dict(metric: str, rep: SensitivityReport) -> dict:
    return {
        "metric": metric,
        "r2": rep.r2,
        "ss_total": rep.ss_total,
        "ss_resid": rep.ss_resid,
        "ss_total_zero": rep.ss_total == 0,
        "df_resid": rep.df_resid,
        "rows_used": rep.n_rows,
        "dropped": list(rep.dropped),
        "aliased": list(rep.aliased),
        "terms": [
            {
                "rank": i + 1,
                "term": r.term,
                "dummies": list(r.dummies),
                "coefficients": list(r.coefficients),
                "ss": r.ss,
                "df": r.df,
                "f": r.f,
                "p": r.p,
                "eta_sq": r.eta_sq,
                "effect": r.effect.value,
                "significant": r.significant,
            }
            for i, r in enumerate(rep.rows)
        ],
    }


def _sci(x: float) -> str:
    return "n/a" if x is None or math.isnan(x) else f"{x:.2E}"


def report_markdown(metric: str, rep: SensitivityReport) -> str:
    lines = [
        f"# Sensitivity of {metric}",
        "",
        "| Rank | Term | Dummy | Coefficient | Sum Sq. | df | eta^2 | Effect | p |",
        "|---:|---|---|---:|---:|---:|---:|---|---|",
    ]
    for i, r in enumerate(rep.rows, 1):
        for j, (dummy, coef) in enumerate(zip(r.dummies, r.coefficients)):
            head = [str(i), r.term] if j == 0 else ["", ""]
            tail = ([_sci(r.ss), str(r.df), f"{100 * r.eta_sq:.2f}%", r.effect.value,
                     f"{_sci(r.p)}{stars(r.p)}"] if j == 0 else ["", "", "", "", ""])
            lines.append("| " + " | ".join(head + [dummy or "", f"{coef:.2E}"] + tail) + " |")
    lines += [
        "",
        f"R^2 = {rep.r2:.4f} over {rep.n_rows} configurations" if not math.isnan(rep.r2)
        else f"R^2 undefined (all responses identical) over {rep.n_rows} configurations",
        "",
        "p-values: ***p < .001, **p < .01, *p < .05",
    ]
    if rep.dropped:
        lines += ["", "Constant columns dropped: " + ", ".join(rep.dropped)]
    if rep.aliased:
        lines += ["", "Aliased columns dropped: " + ", ".join(rep.aliased)]
    return "\n".join(lines) + "\n"


def report_table_rows(rep: SensitivityReport) -> list[list]:
    return [[i + 1, r.term, ";".join(r.dummies), ";".join(fmt(c) for c in r.coefficients), r.ss,
             r.df, r.f, r.p, r.eta_sq, r.effect.value]
            for i, r in enumerate(rep.rows)]


def write_report(out: Path, metric: str, rep: SensitivityReport) -> list[Path]:
    base = out / f"sensitivity_{metric}"
    return [
        write_csv(base.with_suffix(".csv"),
                  ["rank", "term", "dummies", "coefficients", "ss", "df", "f", "p", "eta_sq",
                   "effect"],
                  report_table_rows(rep)),
        write_text(base.with_suffix(".json"), json_text(report_dict(metric, rep))),
        write_text(base.with_suffix(".md"), report_markdown(metric, rep)),
    ]


# pareto -----------------------------------------------------------------------

def write_pareto(out: Path, front: ParetoFront, configs_by_id: dict) -> list[Path]:
    scaled = normalize_for_radar(front)
    objs = [s.metric for s in front.specs]
    names = next(iter(configs_by_id.values())).space.names
    header = ["config_id", *names, *objs, *(f"{o}_scaled" for o in objs)]
    rows = [[cid, *configs_by_id[cid].values.values(), *front.vectors[i], *scaled[i]]
            for i, cid in enumerate(front.ids)]
    dat = ["# config_id " + " ".join(f"{o}_scaled" for o in objs)]
    dat += [" ".join([str(cid)] + [fmt(v) for v in scaled[i]]) for i, cid in enumerate(front.ids)]
    return [
        write_csv(out / "pareto.csv", header, rows),
        write_text(out / "pareto.dat", "\n".join(dat) + "\n"),
    ]


# manifest ---------------------------------------------------------------------

def _timestamp() -> str | None:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def count_rows(path: Path) -> int:
    with open(path, "rb") as fh:
        lines = fh.read().count(b"\n")
    return lines - 1 if path.suffix == ".csv" else lines


def file_inventory(out: Path) -> dict:
    inv = {}
    for path in sorted(out.iterdir()):
        if not path.is_file() or path.name == MANIFEST:
            continue
        inv[path.name] = {
            "rows": count_rows(path),
            "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
        }
    return inv


def load_manifest(out: Path) -> dict:
    try:
        return json.loads((out / MANIFEST).read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return {}


def write_manifest(out: Path, version: str, cfg_hash: str, stages: dict,
                   extra: dict | None = None) -> Path:
    prev = load_manifest(out)
    merged = dict(prev.get("stages", {})) if prev.get("config_hash") == cfg_hash else {}
    merged.update(stages)
    data = {
        "tool": "feedbackfair",
        "version": version,
        "config_hash": cfg_hash,
        "created": _timestamp(),
        "stages": merged,
        "partial": any(s.get("status") in ("failed", "partial") for s in merged.values()),
        "files": file_inventory(out),
    }
    if extra:
        data.update(extra)
    return write_text(out / MANIFEST, json_text(data))
