"""The three figure kinds and their dataset schemas.

Datasets are validated before any drawing starts, so a schema failure
never leaves a partial image on disk.  Rendering is deterministic: fixed
styles, fixed canvas, no timestamps.
"""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, load_csv, numeric, text

KINDS = ("fig2", "fig3", "strokes")

# shading for stroke labels; keys are matched as prefixes of the label
_STROKE_SHADES = (
    ("left", "tab:blue"),
    ("right", "tab:red"),
    ("isen", "0.55"),
)


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: dataset directory, figure kind, output path, styling."""

    kind: str
    in_dir: str | Path
    out_path: str | Path
    dpi: int = 150
    title: str | None = None
    log_mass_axis: bool = True


def render(spec: FigureSpec) -> Path:
    """Render the figure described by `spec`; returns the image path."""
    if spec.kind not in KINDS:
        raise ValueError(f"unknown figure kind {spec.kind!r}; choose one of {KINDS}")
    draw = {"fig2": _fig2, "fig3": _fig3, "strokes": _strokes}[spec.kind]
    fig = draw(spec)
    if spec.title:
        fig.suptitle(spec.title)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return out


def _fig2(spec: FigureSpec):
    path = Path(spec.in_dir) / "parametric.csv"
    table = load_csv(path)
    eps, p1 = numeric(table, path, "eps [eV]", "P1 [-]")
    source = np.asarray(text(table, path, "source"))
    reduced = source == "reduced"
    ensemble = source == "ensemble"
    if not reduced.any() or not ensemble.any():
        raise SchemaError(
            f"{path}: column 'source' must contain both 'reduced' and "
            "'ensemble' rows"
        )
    fig, ax = plt.subplots(figsize=(4.8, 4.2), constrained_layout=True)
    ax.plot(eps[reduced], p1[reduced], color="tab:blue", lw=2.0,
            label="reduced model")
    ax.plot(eps[ensemble], p1[ensemble], color="tab:red", lw=0.6,
            label="ensemble mean")
    ax.set_xlabel("dot level [eV]")
    ax.set_ylabel("dot occupation [-]")
    ax.legend(loc="upper right", frameon=False)
    return fig


def _fig3(spec: FigureSpec):
    path = Path(spec.in_dir) / "sweep.csv"
    table = load_csv(path)
    m, g_mult, du, du_err, q, q_err, w_red = numeric(
        table, path,
        "m [kg]", "gamma_mult [-]", "dU_O [eV]", "dU_O_stderr [eV]",
        "Q_O [eV]", "Q_O_stderr [eV]", "W_mech_reduced [eV]",
    )
    fig, ax = plt.subplots(figsize=(5.4, 4.2), constrained_layout=True)
    for i, gm in enumerate(np.unique(g_mult)):
        sel = g_mult == gm
        order = np.argsort(m[sel])
        color = f"C{i}"
        ax.errorbar(m[sel][order], du[sel][order], yerr=du_err[sel][order],
                    color=color, marker="o", capsize=3,
                    label=f"$\\Delta U_O$, $\\gamma \\times {gm:g}$")
        ax.errorbar(m[sel][order], q[sel][order], yerr=q_err[sel][order],
                    color=color, marker="s", ms=4, ls="--",
                    label=f"$Q_O$, $\\gamma \\times {gm:g}$")
    ax.axhline(-w_red[0], color="0.3", ls=":", lw=1.2,
               label="$-W_\\mathrm{mech}$")
    if spec.log_mass_axis:
        ax.set_xscale("log")
    ax.set_xlabel("oscillator mass [kg]")
    ax.set_ylabel("energy change over the run [eV]")
    ax.legend(fontsize=8, ncol=2, frameon=False)
    return fig


def _strokes(spec: FigureSpec):
    sched_path = Path(spec.in_dir) / "schedule.csv"
    sched = load_csv(sched_path)
    labels = text(sched, sched_path, "label")
    start, end = numeric(sched, sched_path, "start [ns]", "end [ns]")
    cyc_path = Path(spec.in_dir) / "cycle.csv"
    cyc = load_csv(cyc_path)
    t, eps, p1s, p1r = numeric(
        cyc, cyc_path,
        "t [ns]", "eps [eV]", "P1_stroke [-]", "P1_reduced [-]",
    )
    fig, ax = plt.subplots(figsize=(6.2, 4.0), constrained_layout=True)
    seen = set()
    for lab, a, b in zip(labels, start, end):
        color = next(
            (c for prefix, c in _STROKE_SHADES if lab.startswith(prefix)),
            "0.8",
        )
        short = lab.split("-")[0]
        ax.axvspan(a, b, color=color, alpha=0.15,
                   label=None if short in seen else short)
        seen.add(short)
    ax.plot(t, eps, color="black", lw=1.5, label="dot level")
    ax.set_xlabel("time in cycle [ns]")
    ax.set_ylabel("dot level [eV]")
    ax.set_xlim(t[0], t[-1])
    twin = ax.twinx()
    twin.plot(t, p1s, color="tab:green", lw=1.2, label="stroke occupation")
    twin.plot(t, p1r, color="tab:green", lw=1.2, ls=":",
              label="reduced occupation")
    twin.set_ylabel("dot occupation [-]")
    twin.set_ylim(-0.05, 1.05)
    handles, names = ax.get_legend_handles_labels()
    h2, n2 = twin.get_legend_handles_labels()
    ax.legend(handles + h2, names + n2, loc="upper center", fontsize=8,
              ncol=3, frameon=False)
    return fig
