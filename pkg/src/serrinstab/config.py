"""Run configuration files and the small value grammars shared with the CLI.

A config is a JSON object.  Unknown keys are rejected with the line on
which they appear.  Example::

    {
      "domain": "ellipse.json",
      "nonlinearity": "torsion",
      "h": "1/128",
      "directions": ["0deg", "90deg"],
      "family": {"kind": "ellipse", "values": "1.01,1.02,1.05,1.1,1.2"},
      "seed": 0
    }
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .pde import NonlinearitySpec

__all__ = [
    "Tolerances",
    "FamilyConfig",
    "RunConfig",
    "parse_config",
    "parse_angle",
    "parse_h",
    "parse_values",
]

_ANGLE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(deg|rad)\s*$")


def parse_angle(text) -> float:
    """``"30deg"`` or ``"0.5rad"`` to radians.  The unit suffix is mandatory."""
    m = _ANGLE.match(str(text))
    if not m:
        raise ValidationError(f"angle {text!r} needs a 'deg' or 'rad' suffix")
    v = float(m.group(1))
    return math.radians(v) if m.group(2) == "deg" else v


def parse_h(text) -> float:
    """Grid spacing as a number or a fraction such as ``"1/128"``."""
    try:
        h = float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"bad grid spacing {text!r}") from exc
    if not h > 0:
        raise ValidationError(f"grid spacing must be positive, got {text!r}")
    return h


def parse_values(text) -> tuple[float, ...]:
    """``"start:stop:count"`` (evenly spaced, inclusive) or a comma list."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    s = str(text).strip()
    try:
        if ":" in s:
            start, stop, count = s.split(":")
            n = int(count)
            if n < 1:
                raise ValueError
            return tuple(float(v) for v in np.linspace(float(start), float(stop), n))
        return tuple(float(v) for v in s.split(",") if v.strip())
    except ValueError as exc:
        raise ValidationError(f"bad value list {text!r}") from exc


@dataclass(frozen=True)
class Tolerances:
    lam: float | None = None
    geo: float | None = None
    angle: float = 1e-3
    solver: float = 1e-10


@dataclass(frozen=True)
class FamilyConfig:
    kind: str = "ellipse"
    values: tuple = (1.01, 1.02, 1.05, 1.1, 1.2)
    b: float = 1.0
    a: float = 1.2
    center: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class RunConfig:
    domains: tuple = ()
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec.torsion)
    h: float = 1 / 128
    tolerances: Tolerances = Tolerances()
    directions: tuple = (0.0, math.pi / 2)
    family: FamilyConfig | None = None
    output_dir: str = "."
    seed: int = 0
    t: float = 1 / 32
    a: float = 0.5
    eta: float = 0.1


_TOP = {"domain", "domains", "nonlinearity", "h", "tolerances", "directions", "family",
        "output_dir", "seed", "t", "a", "eta"}
_TOL = {"lambda", "geo", "angle", "solver"}
_FAM = {"kind", "values", "b", "a", "center"}


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise ValidationError(f"duplicate key {k!r}")
        seen[k] = v
    return seen


def parse_config(path) -> RunConfig:
    """Load and validate a JSON run config, filling defaults."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}:1: top level must be an object")

    def fail(key, msg):
        raise ValidationError(f"{path}:{_line_of(text, key)}: field {key!r}: {msg}")

    def check_keys(obj, allowed, where):
        for k in obj:
            if k not in allowed:
                fail(k, f"unknown key in {where}")

    check_keys(raw, _TOP, "config")

    def parsed(key, fn, *args):
        try:
            return fn(*args)
        except ValidationError as exc:
            fail(key, str(exc))

    out = {}
    if "domain" in raw and "domains" in raw:
        fail("domains", "give either 'domain' or 'domains'")
    doms = raw.get("domains", [raw["domain"]] if "domain" in raw else [])
    if not isinstance(doms, list):
        fail("domains", "must be a list")
    out["domains"] = tuple(doms)
    if "nonlinearity" in raw:
        out["nonlinearity"] = parsed("nonlinearity", NonlinearitySpec.parse, raw["nonlinearity"])
    if "h" in raw:
        out["h"] = parsed("h", parse_h, raw["h"])
    if "directions" in raw:
        if not isinstance(raw["directions"], list) or not raw["directions"]:
            fail("directions", "must be a nonempty list of angles")
        out["directions"] = tuple(parsed("directions", parse_angle, d) for d in raw["directions"])
    if "tolerances" in raw:
        tol = raw["tolerances"]
        if not isinstance(tol, dict):
            fail("tolerances", "must be an object")
        check_keys(tol, _TOL, "tolerances")
        for k, v in tol.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                fail(k, "tolerances must be positive numbers")
        out["tolerances"] = Tolerances(lam=tol.get("lambda"), geo=tol.get("geo"),
                                       angle=tol.get("angle", 1e-3), solver=tol.get("solver", 1e-10))
    if "family" in raw:
        fam = raw["family"]
        if not isinstance(fam, dict):
            fail("family", "must be an object")
        check_keys(fam, _FAM, "family")
        if fam.get("kind", "ellipse") not in ("ellipse", "ball", "eigen"):
            fail("kind", "must be one of ellipse, ball, eigen")
        kw = {k: fam[k] for k in ("kind", "b", "a") if k in fam}
        if "values" in fam:
            kw["values"] = parsed("values", parse_values, fam["values"])
        if "center" in fam:
            kw["center"] = tuple(float(c) for c in fam["center"])
        out["family"] = FamilyConfig(**kw)
    if "seed" in raw:
        if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool) or raw["seed"] < 0:
            fail("seed", "must be a nonnegative integer")
        out["seed"] = raw["seed"]
    for key, lo, hi, label in (("t", 0.0, 0.5, "(0, 1/2)"), ("a", 0.0, 1.0, "(0, 1)")):
        if key in raw:
            v = raw[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not lo < v < hi:
                fail(key, f"must lie in {label}, got {v!r}")
            out[key] = float(v)
    if "eta" in raw:
        if isinstance(raw["eta"], bool) or not isinstance(raw["eta"], (int, float)) or not raw["eta"] > 0:
            fail("eta", "must be positive")
        out["eta"] = float(raw["eta"])
    if "output_dir" in raw:
        out["output_dir"] = str(raw["output_dir"])
    return RunConfig(**out)
