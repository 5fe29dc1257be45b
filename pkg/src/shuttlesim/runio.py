"""CSV datasets and run manifests.

Column headers carry units in brackets, e.g. `t [ns]`; dimensionless
columns use `[-]` and text columns have no bracket.  Floats are written
with repr's shortest round-trip form, so reading a file back reproduces
the in-memory values bit for bit.
"""

from __future__ import annotations

import csv
import io
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .units import E_CHARGE_C, EPSILON0_F_PER_M, KB_EV_PER_K


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | Path, columns: dict[str, object]) -> Path:
    """Write named columns (equal length) as CSV; returns the path."""
    path = Path(path)
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"column lengths differ: { {n: len(c) for n, c in zip(names, cols)} }")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*cols):
        writer.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def read_csv(path: str | Path) -> dict[str, object]:
    """Read a CSV written by write_csv.

    Numeric columns come back as float arrays (exact round-trip), anything
    non-numeric as a list of strings.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        rows = list(reader)
    out: dict[str, object] = {}
    for j, name in enumerate(names):
        raw = [row[j] for row in rows]
        try:
            out[name] = np.array([float(v) for v in raw])
        except ValueError:
            out[name] = raw
    return out


def _manifest_section(title: str, body: dict[str, object]) -> list[str]:
    lines = [f"[{title}]"]
    for key, value in body.items():
        lines.append(f"{key} = {_fmt(value)}")
    lines.append("")
    return lines


def write_manifest(
    path: str | Path,
    run: dict[str, object],
    params: dict[str, object],
    diagnostics: dict[str, object],
    outputs: list[str],
    config_text: str = "",
) -> Path:
    """Write the reproducibility manifest next to a run's CSVs.

    Sections: [run] identity and timing, [constants] compiled-in physical
    constants, [config] verbatim echo of the input config (each line
    prefixed with `| `), [params] the resolved parameter set in internal
    units, [diagnostics] per-run convergence and sanity numbers, and
    [outputs] the CSV files this manifest vouches for.
    """
    path = Path(path)
    run = {"package_version": __version__, **run,
           "created_utc": datetime.now(timezone.utc).isoformat()}
    constants = {
        "kb [eV/K]": KB_EV_PER_K,
        "e [C]": E_CHARGE_C,
        "epsilon0 [F/m]": EPSILON0_F_PER_M,
    }
    lines = []
    lines += _manifest_section("run", run)
    lines += _manifest_section("constants", constants)
    lines.append("[config]")
    for cfg_line in config_text.splitlines():
        lines.append(f"| {cfg_line}")
    lines.append("")
    lines += _manifest_section("params", params)
    lines += _manifest_section("diagnostics", diagnostics)
    lines.append("[outputs]")
    lines.extend(outputs)
    lines.append("")
    path.write_text("\n".join(lines))
    return path


def read_manifest_outputs(path: str | Path) -> list[str]:
    """File names listed in a manifest's [outputs] section."""
    lines = Path(path).read_text().splitlines()
    try:
        start = lines.index("[outputs]")
    except ValueError:
        raise ValueError(f"{path}: no [outputs] section") from None
    out = []
    for line in lines[start + 1:]:
        if line.startswith("["):
            break
        if line.strip():
            out.append(line.strip())
    return out
