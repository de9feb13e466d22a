"""Deterministic CSV, JSON and text output for stability sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from pathlib import Path

from . import geometry as geo
from .errors import ValidationError
from .geometry import DomainSpec
from .stability import (
    ETA_DEFAULT,
    FamilyResult,
    bnst_verdict,
    exponent_torsion,
)

__all__ = ["CSV_COLUMNS", "records_csv", "write_sweep", "load_records", "summary_text", "report"]

CSV_COLUMNS = [
    ("id", "label", "input"),
    ("seminorm", "u_nu per length", "measured"),
    ("r_i", "length", "measured"),
    ("r_e", "length", "measured"),
    ("gap", "length", "measured"),
    ("lambda_e1", "length", "measured"),
    ("lambda_e2", "length", "measured"),
    ("sigma_emp", "length", "measured"),
    ("gamma", "dimensionless", "formula"),
    ("tau_theory", "dimensionless", "formula"),
    ("flags", "text", "measured"),
]


def _num(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{float(v):.17g}"


def _clean(obj):
    """JSON-safe copy: NaN and infinities become null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    return obj


def records_csv(records: list[dict], provenance: str) -> str:
    buf = io.StringIO()
    units = "; ".join(f"{n} [{u}, {p}]" for n, u, p in CSV_COLUMNS)
    buf.write(f"# {provenance}\n# columns: {units}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c for c, _, _ in CSV_COLUMNS])
    for r in records:
        lam = r.get("lambdas") or {}
        w.writerow([r["id"], _num(r["seminorm"]), _num(r["r_i"]), _num(r["r_e"]), _num(r["gap"]),
                    _num(lam.get("e1")), _num(lam.get("e2")), _num(r["sigma_emp"]),
                    _num(r["gamma"]), _num(r["tau_theory"]), ";".join(r["flags"])])
    return buf.getvalue()


def _provenance(family: dict, h: float, seed: int) -> str:
    vals = ",".join(f"{v:.17g}" for v in family["values"])
    base = f" a={family['a']:.17g}" if family["kind"] == "eigen" else ""
    return (f"serrinstab stability sweep: family={family['kind']} values={vals}{base} b={family['b']:.17g} "
            f"h={h:.17g} seed={seed}")


def sweep_payload(result: FamilyResult, h: float, seed: int, eta: float = ETA_DEFAULT) -> dict:
    return _clean({
        "family": asdict(result.family),
        "h": h,
        "seed": seed,
        "eta": eta,
        "records": [r.to_dict() for r in result.records],
        "fit": None if result.fit is None else asdict(result.fit),
        "fit_note": result.fit_note,
        "checks": result.checks,
    })


def _family_domain(family: dict, record: dict) -> DomainSpec:
    kind, v = family["kind"], record["family_value"]
    c = tuple(family.get("center", (0.0, 0.0)))
    if kind == "ellipse":
        return DomainSpec.ellipse(v, family["b"], center=c)
    if kind == "ball":
        return DomainSpec.disk(v, center=c)
    return DomainSpec.ellipse(family["a"], family["b"], center=c)


def summary_text(payload: dict) -> str:
    recs = payload["records"]
    if not recs:
        raise ValidationError("no records to report")
    fam, fit, eta = payload["family"], payload["fit"], payload.get("eta", ETA_DEFAULT)
    lines = [f"family: {fam['kind']}  members: {len(recs)}  h: {payload['h']:.6g}  seed: {payload['seed']}"]
    taus = [r["tau_theory"] for r in recs if r["tau_theory"] is not None]
    if fit:
        lines.append(f"fitted slope: {fit['slope']:.6f}  95% CI [{fit['ci_low']:.6f}, {fit['ci_high']:.6f}]"
                     f"  rms residual {fit['residual']:.3e}  n={fit['n']}")
        if taus:
            tmax = max(taus)
            verdict = "consistent" if fit["slope"] >= tmax - 0.05 else "INCONSISTENT"
            lines.append(f"tau_theory range: [{min(taus):.6f}, {tmax:.6f}]  "
                         f"slope >= tau_theory - 0.05: {verdict}")
    else:
        lines.append(f"fit: {payload['fit_note']}")
    if payload["fit_note"].startswith("degenerate"):
        lines.append("notice: degenerate: all gaps below noise floor")
    for r in recs:
        line = f"  {r['id']}: seminorm={_num(r['seminorm'])} gap={_num(r['gap'])}"
        if fam["kind"] != "eigen" and r["seminorm"] is not None:
            g = geo.summary(_family_domain(fam, r))
            line += (f" torsion exponent 1/(tau+eta)={exponent_torsion(2, g.d_Omega, g.r_Omega, eta):.6f}"
                     f" [{bnst_verdict(2, g.d_Omega, g.r_Omega)}]")
        if r["flags"]:
            line += f" flags={';'.join(r['flags'])}"
        lines.append(line)
    for k, v in sorted(payload["checks"].items()):
        lines.append(f"check {k}: {_num(v)}")
    return "\n".join(lines) + "\n"


def plotdata_text(payload: dict) -> str:
    out = ["# log_seminorm log_gap used_in_fit"]
    for r in payload["records"]:
        if r["seminorm"] and r["gap"] and r["seminorm"] > 0 and r["gap"] > 0:
            out.append(f"{math.log(r['seminorm']):.17g} {math.log(r['gap']):.17g} {int(not r['excluded'])}")
    fit = payload["fit"]
    if fit:
        out.append(f"# fit slope={fit['slope']:.17g} intercept={fit['intercept']:.17g}")
    else:
        out.append(f"# fit none: {payload['fit_note']}")
    return "\n".join(out) + "\n"


def write_sweep(payload: dict, csv_path, figure: str | None = "png") -> dict:
    """Write CSV, records JSON, plot data, summary and (optionally) a figure next to it."""
    csv_path = Path(csv_path)
    stem = csv_path.with_suffix("")
    paths = {
        "csv": csv_path,
        "records": stem.with_suffix(".records.json"),
        "plotdata": stem.with_suffix(".plotdata.txt"),
        "summary": stem.with_suffix(".summary.txt"),
    }
    prov = _provenance(payload["family"], payload["h"], payload["seed"])
    paths["csv"].write_text(records_csv(payload["records"], prov))
    paths["records"].write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    paths["plotdata"].write_text(plotdata_text(payload))
    paths["summary"].write_text(summary_text(payload))
    if figure:
        from .plotting import plot_sweep

        paths["figure"] = stem.with_suffix(f".{figure}")
        plot_sweep(payload["records"], payload["fit"], paths["figure"], title=payload["family"]["kind"])
    return paths


def load_records(path) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    for key in ("family", "records", "fit", "fit_note", "h", "seed"):
        if key not in payload:
            raise ValidationError(f"{path}: missing key {key!r}")
    return payload


def report(payload: dict, out_csv, figure: str | None = "png") -> dict:
    """Regenerate all outputs from a records payload."""
    if not payload["records"]:
        raise ValidationError("empty record list")
    return write_sweep(payload, out_csv, figure)
