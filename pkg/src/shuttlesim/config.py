"""Flat key = value experiment configs with explicit units.

Grammar, per line: `key = value [unit]`, with `#` starting a comment and
blank lines ignored.  List values are comma-separated with one trailing
unit for the whole list.  The unit token is optional but, when present,
must match the documented unit exactly; this catches configs written in
the wrong scale before any physics runs.

Parsing is all-errors-at-once: every problem in the file is reported in a
single ConfigError rather than stopping at the first.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass
from pathlib import Path

from .model import ParameterError, Params
from .units import friction_from_kg_per_s, mass_from_kg

KINDS = ("figure2", "figure3-sweep", "stroke-audit", "feasibility", "custom")

# key -> (unit, parser kind, Params field or config slot, converter)
# unit None means dimensionless; parser kinds: float, int, float_list, str.
_IDENT = None
KEY_SPECS: dict[str, tuple[str | None, str, str, object]] = {
    "omega": ("GHz", "float", "omega", _IDENT),
    "mass": ("kg", "float", "mass", mass_from_kg),
    "friction": ("kg/s", "float", "gamma", friction_from_kg_per_s),
    "temperature": ("K", "float", "temperature", _IDENT),
    "alpha": ("1/nm", "float", "alpha", _IDENT),
    "voltage": ("V", "float", "voltage", _IDENT),
    "gamma0": ("GHz", "float", "gamma0", _IDENT),
    "tunnel_length": ("nm", "float", "lam", _IDENT),
    "eps0": ("eV", "float", "eps0", _IDENT),
    "mu_left": ("eV", "float", "mu_left", _IDENT),
    "mu_right": ("eV", "float", "mu_right", _IDENT),
    "x0": ("nm", "float", "x0", _IDENT),
    "v0": ("nm/ns", "float", "v0", _IDENT),
    "q0": (None, "int", "q0", _IDENT),
    "dt": ("ns", "float", "dt", _IDENT),
    "t_final": ("ns", "float", "t_final", _IDENT),
    "out_dt": ("ns", "float", "out_dt", _IDENT),
    "n_traj": (None, "int", "n_traj", _IDENT),
    "master_seed": (None, "int", "master_seed", _IDENT),
    "checkpoints": ("ns", "float_list", "checkpoint_times", _IDENT),
    "hist_x_max": ("nm", "float", "hist_x_max", _IDENT),
    "hist_v_max": ("nm/ns", "float", "hist_v_max", _IDENT),
    "hist_bins": (None, "int", "hist_bins", _IDENT),
}

_CONFIG_SLOTS: dict[str, tuple[str | None, str]] = {
    "kind": (None, "str"),
    "out_dir": (None, "str"),
    "workers": (None, "int"),
    "sweep_mass_multipliers": (None, "float_list"),
    "sweep_gamma_multipliers": (None, "float_list"),
    "stroke_threshold": (None, "float"),
    "stroke_resolution": (None, "int"),
    "stroke_steps_per_cycle": (None, "int"),
    "reduced_steps_per_cycle": (None, "int"),
    "feas_diameter": ("nm", "float"),
    "feas_voltage": ("V", "float"),
}


class ConfigError(ValueError):
    """Invalid config text; `errors` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed experiment: physics parameters plus batch settings."""

    params: Params
    kind: str = "custom"
    out_dir: str | None = None
    workers: int | None = None
    sweep_mass_multipliers: tuple[float, ...] = (1.0, 2.0, 4.0)
    sweep_gamma_multipliers: tuple[float, ...] = (0.1, 1.0, 10.0)
    stroke_threshold: float = 0.1
    stroke_resolution: int = 24
    stroke_steps_per_cycle: int = 4800
    reduced_steps_per_cycle: int = 4096
    feas_diameter: float = 5.0
    feas_voltage: float = 25.0
    source_text: str = ""


def _parse_number(token: str):
    try:
        return float(token)
    except ValueError:
        return None


def _split_unit(rhs: str) -> tuple[str, str | None]:
    """Split a trailing unit token off the value part, if one is present."""
    tokens = rhs.split()
    if len(tokens) >= 2 and _parse_number(tokens[-1]) is None:
        return " ".join(tokens[:-1]), tokens[-1]
    return rhs, None


def _parse_value(key: str, rhs: str, unit: str | None, kind: str, errors: list[str],
                 line_no: int):
    value_part, got_unit = _split_unit(rhs)
    if kind == "str":
        return rhs.strip()
    if got_unit is not None and got_unit != unit:
        want = unit if unit is not None else "no unit"
        errors.append(
            f"line {line_no}: {key} expects [{want}], got [{got_unit}]"
        )
        return None
    if kind == "float_list":
        out = []
        for piece in value_part.split(","):
            num = _parse_number(piece.strip())
            if num is None:
                errors.append(
                    f"line {line_no}: {key}: {piece.strip()!r} is not a number"
                )
                return None
            out.append(num)
        return tuple(out)
    num = _parse_number(value_part.strip())
    if num is None or "," in value_part:
        errors.append(f"line {line_no}: {key}: {value_part.strip()!r} is not a number")
        return None
    if kind == "int":
        if num != int(num):
            errors.append(f"line {line_no}: {key} must be an integer, got {num!r}")
            return None
        return int(num)
    return num


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text into an ExperimentConfig; empty text gives defaults.

    Raises ConfigError carrying the full list of problems: unknown keys
    (with a closest-match hint), duplicate keys, malformed values, unit
    mismatches, and every parameter-invariant violation.
    """
    errors: list[str] = []
    param_kwargs: dict[str, object] = {}
    slots: dict[str, object] = {}
    seen: set[str] = set()
    all_keys = list(KEY_SPECS) + list(_CONFIG_SLOTS)
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {line_no}: expected 'key = value', got {line!r}")
            continue
        key, rhs = (s.strip() for s in line.split("=", 1))
        if key in seen:
            errors.append(f"line {line_no}: duplicate key {key!r}")
            continue
        seen.add(key)
        if key in KEY_SPECS:
            unit, kind, target, conv = KEY_SPECS[key]
            value = _parse_value(key, rhs, unit, kind, errors, line_no)
            if value is not None:
                param_kwargs[target] = conv(value) if conv is not None else value
        elif key in _CONFIG_SLOTS:
            unit, kind = _CONFIG_SLOTS[key]
            value = _parse_value(key, rhs, unit, kind, errors, line_no)
            if value is not None:
                slots[key] = value
        else:
            hint = difflib.get_close_matches(key, all_keys, n=1)
            suffix = f"; did you mean {hint[0]!r}?" if hint else ""
            errors.append(f"line {line_no}: unknown key {key!r}{suffix}")
    kind = slots.get("kind", "custom")
    if kind not in KINDS:
        errors.append(f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
    params = None
    try:
        params = Params(**param_kwargs)
    except ParameterError as exc:
        errors.extend(exc.problems)
    cfg_fields = {k: v for k, v in slots.items() if k != "kind"}
    if kind == "figure3-sweep":
        for axis in ("sweep_mass_multipliers", "sweep_gamma_multipliers"):
            values = cfg_fields.get(axis, getattr(ExperimentConfig, axis))
            if len(values) == 0:
                errors.append(f"{axis} must be non-empty for a sweep")
            elif any(v <= 0 for v in values):
                errors.append(f"{axis} entries must be > 0")
    for name in ("stroke_threshold", "feas_diameter", "feas_voltage"):
        if name in cfg_fields and cfg_fields[name] <= 0:
            errors.append(f"{name} must be > 0, got {cfg_fields[name]!r}")
    for name in ("stroke_steps_per_cycle", "reduced_steps_per_cycle"):
        if name in cfg_fields and cfg_fields[name] < 48:
            errors.append(f"{name} must be >= 48, got {cfg_fields[name]!r}")
    if cfg_fields.get("stroke_resolution", 24) < 4:
        errors.append("stroke_resolution must be >= 4")
    if cfg_fields.get("workers", 1) < 1:
        errors.append("workers must be >= 1")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(params=params, kind=kind, source_text=text, **cfg_fields)


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def validate_config(text: str) -> ExperimentConfig | list[str]:
    """Parse and return the config, or the full list of problems."""
    try:
        return parse_config(text)
    except ConfigError as exc:
        return exc.errors


def documented_keys() -> str:
    """One line per accepted key: name, unit, kind (for CLI help)."""
    rows = []
    for key, (unit, kind, _, _) in KEY_SPECS.items():
        rows.append(f"{key:24s} [{unit or '-':5s}] {kind}")
    for key, (unit, kind) in _CONFIG_SLOTS.items():
        rows.append(f"{key:24s} [{unit or '-':5s}] {kind}")
    return "\n".join(rows)
