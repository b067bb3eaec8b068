"""Scenario files and curve tables.

Scenario files are sectioned ``key = value`` text::

    [scenario]
    architecture = fris_spo
    gamma_bar_grid_db = -10, -5, 0

``#`` starts a comment. All values are SI; decibel quantities end in ``_db``.
"""

from __future__ import annotations

import dataclasses
import io
import math
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .exceptions import ConfigurationError
from .geometry import SurfaceConfig
from .harness import CURVE_COLUMNS, OpCurve, ScenarioSpec

AUTO = "auto"
REQUIRED = {("scenario", "architecture")}

# (section, key) -> (target, field, kind); kind drives parsing and formatting
_SCHEMA = {
    ("scenario", "architecture"): ("spec", "architecture", "str"),
    ("scenario", "num_bs_antennas"): ("spec", "num_bs_antennas", "int"),
    ("scenario", "gamma_bar_grid_db"): ("spec", "gamma_bar_grid_db", "floats"),
    ("scenario", "trials"): ("spec", "trials", "int"),
    ("scenario", "rate"): ("spec", "rate", "float"),
    ("scenario", "master_seed"): ("spec", "master_seed", "int"),
    ("scenario", "compact_spacing_m"): ("spec", "compact_spacing_m", "float?"),
    ("surface", "wavelength_m"): ("surface", "wavelength_m", "float"),
    ("surface", "spacing_h_m"): ("surface", "spacing_h_m", "float"),
    ("surface", "spacing_v_m"): ("surface", "spacing_v_m", "float"),
    ("surface", "n_h"): ("surface", "n_h", "int"),
    ("surface", "n_v"): ("surface", "n_v", "int"),
    ("surface", "num_active"): ("surface", "num_active", "int"),
    ("surface", "min_distance_m"): ("surface", "min_distance_m", "float?"),
    ("channel", "beta1_db"): ("spec", "beta1_db", "float"),
    ("channel", "beta2_db"): ("spec", "beta2_db", "float"),
    ("channel", "arg_scale"): ("spec", "arg_scale", "float"),
    ("channel", "jitter"): ("spec", "jitter", "float"),
    ("epso", "swarm_size"): ("epso", "swarm_size", "int"),
    ("epso", "max_iter"): ("epso", "max_iter", "int"),
    ("epso", "inertia"): ("epso", "inertia", "float"),
    ("epso", "c1"): ("epso", "c1", "float"),
    ("epso", "c2"): ("epso", "c2", "float"),
    ("epso", "mutation_std_m"): ("epso", "mutation_std_m", "float?"),
    ("epso", "rng_seed"): ("epso", "rng_seed", "int"),
    ("altopt", "tolerance"): ("altopt", "tolerance", "float"),
    ("altopt", "max_iter"): ("altopt", "max_iter", "int"),
    ("fit", "n_components"): ("fit", "n_components", "int"),
    ("fit", "t_sp"): ("fit", "t_sp", "int"),
    ("fit", "tol"): ("fit", "tol", "float"),
    ("fit", "methods"): ("fit", "methods", "strs"),
}

_LAMBDA = 0.125
DEFAULT_SURFACE = SurfaceConfig(_LAMBDA, _LAMBDA / 3, _LAMBDA / 3, 12, 12, 16)


def default_spec(architecture="fris_spo", **overrides):
    overrides.setdefault("surface", DEFAULT_SURFACE)
    return ScenarioSpec(architecture=architecture, **overrides)


def _parse_value(kind, raw, where):
    try:
        if kind == "str":
            if not raw:
                raise ValueError("empty value")
            return raw
        if kind == "strs":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        if kind == "int":
            return int(raw)
        if kind == "float":
            return _finite(float(raw))
        if kind == "float?":
            return None if raw.lower() in (AUTO, "none") else _finite(float(raw))
        if kind == "floats":
            return tuple(_finite(float(v)) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigurationError(f"{where}: cannot parse {raw!r} ({exc})") from None
    raise AssertionError(kind)


def _finite(x):
    if not math.isfinite(x):
        raise ValueError("not a finite number")
    return x


def defaults_table(spec=None):
    spec = spec or default_spec()
    values = _flatten(spec)
    lines = ["section.key = default"]
    for (section, key) in _SCHEMA:
        mark = "  (required)" if (section, key) in REQUIRED else ""
        lines.append(f"{section}.{key} = {values[(section, key)]}{mark}")
    return "\n".join(lines)


def parse_config_text(text, source="<config>") -> ScenarioSpec:
    section = None
    found = {}
    unknown = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if (section, key) not in _SCHEMA:
            unknown.append(f"{section}.{key} (line {lineno})")
            continue
        kind = _SCHEMA[(section, key)][2]
        found[(section, key)] = _parse_value(kind, raw, f"{source}:{lineno}: key '{section}.{key}'")
    if unknown:
        raise ConfigurationError(f"{source}: unknown keys: {', '.join(unknown)}")
    missing = sorted(REQUIRED - set(found))
    if missing:
        names = ", ".join(f"{s}.{k}" for s, k in missing)
        raise ConfigurationError(f"{source}: missing required keys: {names}\n{defaults_table()}")

    parts = {"spec": {}, "surface": {}, "epso": {}, "altopt": {}, "fit": {}}
    for (section, key), value in found.items():
        target, name, _ = _SCHEMA[(section, key)]
        parts[target][name] = value
    base = default_spec(parts["spec"]["architecture"])
    try:
        surface = dataclasses.replace(base.surface, **parts["surface"])
        if "min_distance_m" not in parts["surface"] and ("spacing_h_m" in parts["surface"] or "spacing_v_m" in parts["surface"]):
            surface = dataclasses.replace(surface, min_distance_m=None)
        return dataclasses.replace(
            base,
            surface=surface,
            epso=dataclasses.replace(base.epso, **parts["epso"]),
            altopt=dataclasses.replace(base.altopt, **parts["altopt"]),
            fit=dataclasses.replace(base.fit, **parts["fit"]),
            **{k: v for k, v in parts["spec"].items() if k != "architecture"},
        )
    except ValueError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None


def parse_config(path) -> ScenarioSpec:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))


def _format(kind, value):
    if value is None:
        return AUTO
    if kind in ("float", "float?"):
        return repr(float(value))
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "strs":
        return ", ".join(value)
    return str(value)


def _flatten(spec: ScenarioSpec):
    objs = {"spec": spec, "surface": spec.surface, "epso": spec.epso, "altopt": spec.altopt, "fit": spec.fit}
    return {sk: _format(kind, getattr(objs[target], name)) for sk, (target, name, kind) in _SCHEMA.items()}


def emit_config(spec: ScenarioSpec) -> str:
    values = _flatten(spec)
    out, section = [], None
    for (sec, key) in _SCHEMA:
        if sec != section:
            if out:
                out.append("")
            out.append(f"[{sec}]")
            section = sec
        out.append(f"{key} = {values[(sec, key)]}")
    return "\n".join(out) + "\n"


def _fmt_number(x):
    return "nan" if x != x else f"{x:.12e}"


def format_curve(curve: OpCurve, timestamp=None) -> str:
    buf = io.StringIO()
    buf.write(f"# frislab {__version__}\n")
    for line in emit_config(curve.spec).splitlines():
        buf.write(f"# config: {line}\n" if line else "#\n")
    buf.write(f"# master_seed: {curve.spec.master_seed}\n")
    buf.write(f"# truncated: {'true' if curve.truncated else 'false'}\n")
    for label, model in curve.models.items():
        for i, c in enumerate(model.components):
            buf.write(
                f"# model {label}[{i}]: weight={c.weight!r} shape={c.shape!r} mean_power={c.mean_power!r}\n"
            )
    stamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    buf.write(f"# timestamp: {stamp} wall_time_s={curve.wall_time_s:.3f}\n")
    buf.write(",".join(CURVE_COLUMNS) + "\n")
    for p in curve.points:
        row = [_fmt_number(getattr(p, c)) for c in CURVE_COLUMNS[:-1]] + [str(p.trials_used)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def emit_curve(curve: OpCurve, path, timestamp=None):
    Path(path).write_text(format_curve(curve, timestamp))


def read_curve(path):
    """Rows of a curve file as dicts of floats (``trials_used`` as int)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        vals = ln.split(",")
        rows.append({h: (int(v) if h == "trials_used" else float(v)) for h, v in zip(header, vals)})
    return rows
