"""Batch experiments: each kind runs a study and writes CSVs plus a manifest.

Layout: one directory per run holding the data CSVs and a manifest that
references exactly those files.  Sweep runs additionally nest one
subdirectory per grid point with that point's full time series and its own
manifest, so figure scripts can target any point directly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .model import Params, as_internal_dict
from .reduced import compare_to_autonomous, limit_cycle, parametric_loop_area, solve_reduced
from .rng import U64_MASK_INT, stream_state
from .runio import write_csv, write_manifest
from .strokes import build_schedule, cycle_deviation, steady_cycle, stroke_thermo
from .thermo import ThermoReport, build_report, cycle_matching_conditions, second_law_check
from .trajectory import EnsembleSeries, SimulationFault, simulate_ensemble, simulate_trajectory
from .units import E_CHARGE_C, EPSILON0_F_PER_M, friction_to_kg_per_s, mass_to_kg


@dataclass(frozen=True)
class RunResult:
    """Where a run landed on disk, plus its headline diagnostics."""

    out_dir: Path
    csv_paths: tuple[Path, ...]
    manifest_path: Path
    diagnostics: dict


@dataclass(frozen=True)
class FeasibilityEstimate:
    """Electron count for a self-charging pillar of given size and bias.

    Treats the pillar tip as a sphere-like capacitance C = 4 pi eps0 d and
    asks how many electrons N raise the charging energy (eN)^2 / (2C) to
    the bias drop eV.
    """

    diameter_nm: float
    voltage_v: float
    capacitance_f: float
    n_electrons: float
    n_rounded: int
    n_sq_per_meter: float
    single_electron_diameter_pm: float


def feasibility_estimate(diameter_nm: float, voltage_v: float) -> FeasibilityEstimate:
    if diameter_nm <= 0:
        raise ValueError(f"diameter must be > 0 nm, got {diameter_nm!r}")
    if voltage_v <= 0:
        raise ValueError(f"voltage must be > 0 V, got {voltage_v!r}")
    d_m = diameter_nm * 1e-9
    cap = 4.0 * math.pi * EPSILON0_F_PER_M * d_m
    n = math.sqrt(2.0 * cap * voltage_v / E_CHARGE_C)
    return FeasibilityEstimate(
        diameter_nm=diameter_nm,
        voltage_v=voltage_v,
        capacitance_f=cap,
        n_electrons=n,
        n_rounded=round(n),
        n_sq_per_meter=n * n / d_m,
        single_electron_diameter_pm=diameter_for_n(1.0, voltage_v) * 1e3,
    )


def diameter_for_n(n_electrons: float, voltage_v: float) -> float:
    """Pillar diameter [nm] whose charging scale admits n electrons."""
    d_m = n_electrons**2 * E_CHARGE_C / (
        8.0 * math.pi * EPSILON0_F_PER_M * voltage_v
    )
    return d_m * 1e9


def _point_seed(master_seed: int, index: int) -> int:
    """Deterministic per-grid-point seed, independent of execution order."""
    return int(
        stream_state(
            np.uint64(int(master_seed) & U64_MASK_INT),
            np.uint64((1_000_000 + index) & U64_MASK_INT),
        )
    )


def _ensemble_with_retry(
    p: Params, workers: int | None, max_halvings: int = 3
) -> tuple[EnsembleSeries, Params, int]:
    """Run the ensemble, halving dt on a rate-cap fault (up to a limit)."""
    for attempt in range(max_halvings + 1):
        try:
            return simulate_ensemble(p, workers=workers), p, attempt
        except SimulationFault:
            if attempt == max_halvings:
                raise
            p = p.with_updates(dt=p.dt / 2.0)
    raise AssertionError("unreachable")


def _dt_probe(p: Params, seed_offset: int = 0) -> dict[str, float]:
    """Single-trajectory bookkeeping residual at dt and dt/2.

    A short two-cycle run; the paths differ (the draw sequence changes with
    dt) but the residual magnitude is the per-step integrator error and
    should roughly halve.  Recorded as a convergence diagnostic.
    """
    t_short = math.ceil(2.0 * p.tau_cycle / p.out_dt) * p.out_dt
    t_short = min(t_short, p.t_final)
    base = p.with_updates(t_final=t_short, n_traj=1, checkpoint_times=())
    coarse = simulate_trajectory(base, base.master_seed, index=seed_offset)
    fine = simulate_trajectory(
        base.with_updates(dt=base.dt / 2.0), base.master_seed, index=seed_offset
    )
    r_coarse = float(np.max(np.abs(coarse.first_law_residual())))
    r_fine = float(np.max(np.abs(fine.first_law_residual())))
    return {
        "dt_probe_residual_coarse [eV]": r_coarse,
        "dt_probe_residual_fine [eV]": r_fine,
        "dt_probe_ratio": r_coarse / r_fine if r_fine > 0 else float("inf"),
    }


def _series_columns(ens: EnsembleSeries) -> dict[str, object]:
    return {
        "t [ns]": ens.t,
        "x [nm]": ens.position.mean,
        "x_stderr [nm]": ens.position.sem,
        "v [nm/ns]": ens.velocity.mean,
        "P1 [-]": ens.occupation.mean,
        "P1_stderr [-]": ens.occupation.sem,
        "eps [eV]": ens.level,
        "u_osc [eV]": ens.u_osc.mean,
        "u_dot [eV]": ens.u_dot.mean,
        "u_joint [eV]": ens.u_joint.mean,
        "u_joint_stderr [eV]": ens.u_joint.sem,
        "heat_left [eV]": ens.heat_left.mean,
        "heat_right [eV]": ens.heat_right.mean,
        "heat_osc [eV]": ens.heat_osc.mean,
        "work_chem [eV]": ens.work_chem.mean,
        "first_law_residual [eV]": ens.first_law_residual.mean,
    }


def _entropy_columns(report: ThermoReport) -> dict[str, object]:
    return {
        "t [ns]": report.times,
        "u_joint [eV]": report.u_joint,
        "u_dot [eV]": report.u_dot,
        "u_osc [eV]": report.u_osc,
        "u_joint_stderr [eV]": report.u_joint_sem,
        "s_joint [eV/K]": report.s_joint,
        "s_dot [eV/K]": report.s_dot,
        "s_cond [eV/K]": report.s_cond,
        "s_joint_stderr [eV/K]": report.s_joint_sem,
        "s_dot_stderr [eV/K]": report.s_dot_sem,
        "heat_left [eV]": report.heat_left,
        "heat_right [eV]": report.heat_right,
        "heat_osc [eV]": report.heat_osc,
        "work_chem [eV]": report.work_chem,
        "entropy_production [eV/K]": report.entropy_production,
        "entropy_production_stderr [eV/K]": report.entropy_production_sem,
        "first_law_residual [eV]": report.first_law_residual,
        "clip_mass [-]": report.clip_mass,
    }


def _run_figure2(p: Params, cfg: ExperimentConfig, out: Path, workers):
    ens, p_used, halvings = _ensemble_with_retry(p, workers)
    red = solve_reduced(p_used, steps_per_cycle=cfg.reduced_steps_per_cycle)
    comparison = compare_to_autonomous(red, ens)
    lc = limit_cycle(red)
    n_red = red.t.size
    n_ens = ens.t.size
    paths = [
        write_csv(out / "parametric.csv", {
            "t [ns]": np.concatenate([red.t, ens.t]),
            "eps [eV]": np.concatenate([red.level, ens.level]),
            "P1 [-]": np.concatenate([red.occupation, ens.occupation.mean]),
            "source": ["reduced"] * n_red + ["ensemble"] * n_ens,
        }),
        write_csv(out / "series.csv", _series_columns(ens)),
        write_csv(out / "amplitude.csv", {
            "t [ns]": ens.amplitude_t,
            "amplitude [nm]": ens.amplitude.mean,
            "amplitude_stderr [nm]": ens.amplitude.sem,
        }),
    ]
    diag = {
        "dt_used [ns]": p_used.dt,
        "dt_halvings": halvings,
        "rms_occupation_final": comparison.rms_occupation_final,
        "sup_occupation_final": comparison.sup_occupation_final,
        "rms_occupation_full": comparison.rms_occupation,
        "limit_cycle_index": lc.cycle_index,
        "limit_cycle_area [eV]": lc.area,
        "work_mech_cycle [eV]": lc.work_mech_cycle,
        "ensemble_loop_area [eV]": parametric_loop_area(
            ens.t, ens.level, ens.occupation.mean, p_used.tau_cycle
        ),
        "hist_clip_max": max((cp.histogram.clip_mass for cp in ens.checkpoints),
                             default=0.0),
    }
    diag.update(_dt_probe(p_used))
    return paths, diag


def _run_figure3_sweep(p: Params, cfg: ExperimentConfig, out: Path, workers):
    red = solve_reduced(p, steps_per_cycle=cfg.reduced_steps_per_cycle)
    w_mech_reduced = float(red.work_mech[-1])
    rows: dict[str, list] = {
        "m [kg]": [], "gamma [kg/s]": [], "m_mult [-]": [], "gamma_mult [-]": [],
        "dU_O [eV]": [], "dU_O_stderr [eV]": [], "Q_O [eV]": [],
        "Q_O_stderr [eV]": [], "W_mech_reduced [eV]": [], "S_OD [eV/K]": [],
    }
    paths = []
    clip_max = 0.0
    halvings_total = 0
    for i, m_mult in enumerate(cfg.sweep_mass_multipliers):
        for j, g_mult in enumerate(cfg.sweep_gamma_multipliers):
            index = i * len(cfg.sweep_gamma_multipliers) + j
            p_pt = p.with_updates(
                mass=p.mass * m_mult,
                gamma=p.gamma * g_mult,
                master_seed=_point_seed(p.master_seed, index),
                checkpoint_times=(0.0, p.t_final),
                hist_x_max=16.0,
                hist_v_max=16.0,
                hist_bins=160,
            )
            ens, p_used, halvings = _ensemble_with_retry(p_pt, workers)
            halvings_total += halvings
            report = build_report(ens)
            clip_max = max(clip_max, float(np.max(report.clip_mass)))
            rows["m [kg]"].append(mass_to_kg(p_used.mass))
            rows["gamma [kg/s]"].append(friction_to_kg_per_s(p_used.gamma))
            rows["m_mult [-]"].append(m_mult)
            rows["gamma_mult [-]"].append(g_mult)
            rows["dU_O [eV]"].append(
                float(ens.u_osc.mean[-1] - ens.u_osc.mean[0])
            )
            rows["dU_O_stderr [eV]"].append(float(ens.u_osc.sem[-1]))
            rows["Q_O [eV]"].append(float(ens.heat_osc.mean[-1]))
            rows["Q_O_stderr [eV]"].append(float(ens.heat_osc.sem[-1]))
            rows["W_mech_reduced [eV]"].append(w_mech_reduced)
            rows["S_OD [eV/K]"].append(
                float(report.s_cond[-1] - report.s_cond[0])
            )
            point_dir = out / f"point_m{m_mult:g}_g{g_mult:g}"
            point_dir.mkdir(parents=True, exist_ok=True)
            point_csv = write_csv(point_dir / "series.csv", _series_columns(ens))
            write_manifest(
                point_dir / "manifest.txt",
                run={"kind": "figure3-sweep/point", "index": index,
                     "master_seed": p_used.master_seed, "dt_halvings": halvings},
                params=as_internal_dict(p_used),
                diagnostics={"clip_mass_max": float(np.max(report.clip_mass))},
                outputs=[point_csv.name],
            )
            paths.append(point_csv)
    sweep_csv = write_csv(out / "sweep.csv", rows)
    diag = {
        "w_mech_reduced [eV]": w_mech_reduced,
        "hist_clip_max": clip_max,
        "dt_halvings_total": halvings_total,
        "grid_points": len(rows["m [kg]"]),
    }
    return [sweep_csv], diag, paths


def _run_stroke_audit(p: Params, cfg: ExperimentConfig, out: Path, workers):
    del workers  # pure ODE work, no trajectory pool involved
    schedule = build_schedule(p, cfg.stroke_threshold, cfg.stroke_resolution)
    trace = steady_cycle(p, schedule, cfg.stroke_steps_per_cycle)
    report = stroke_thermo(trace, schedule, p)
    red = solve_reduced(p, steps_per_cycle=cfg.reduced_steps_per_cycle)
    lc = limit_cycle(red)
    deviation = cycle_deviation(trace, lc.occupation)
    ref_t = np.linspace(0.0, trace.t[-1], lc.occupation.size)
    p1_reduced = np.interp(trace.t, ref_t, lc.occupation)
    starts_ns = [float(s.start) * p.tau_cycle for s in schedule.strokes]
    ends_ns = [float(s.end) * p.tau_cycle for s in schedule.strokes]
    paths = [
        write_csv(out / "schedule.csv", {
            "label": [s.label for s in schedule.strokes],
            "start_frac": [str(s.start) for s in schedule.strokes],
            "end_frac": [str(s.end) for s in schedule.strokes],
            "start [ns]": starts_ns,
            "end [ns]": ends_ns,
        }),
        write_csv(out / "strokes.csv", {
            "label": list(report.labels),
            "start_frac": [str(f) for f in report.start],
            "end_frac": [str(f) for f in report.end],
            "dU_D [eV]": report.d_u_dot,
            "W_mech [eV]": report.work_mech,
            "Q [eV]": report.heat,
            "W_chem [eV]": report.work_chem,
            "dS_D [eV/K]": report.d_s_dot,
            "first_law_residual [eV]": report.first_law_residual,
            "entropy_production [eV/K]": report.entropy_production,
        }),
        write_csv(out / "cycle.csv", {
            "t [ns]": trace.t,
            "eps [eV]": trace.level,
            "P1_stroke [-]": trace.occupation,
            "P1_reduced [-]": p1_reduced,
        }),
    ]
    heat_left_lc = lc.heat_left_cycle
    heat_right_lc = lc.heat_right_cycle
    diag = {
        "tau_isen [ns]": schedule.tau_isen,
        "isen_fraction": str(schedule.isen_fraction),
        "geometry_factor": schedule.geometry_factor,
        "event_bound": schedule.bound,
        "occupation_deviation": deviation,
        "occupation_span": float(np.max(lc.occupation) - np.min(lc.occupation)),
        "work_mech_strokes [eV]": report.work_mech_total,
        "work_mech_reduced_cycle [eV]": lc.work_mech_cycle,
        "heat_left_strokes [eV]": report.heat_total("left"),
        "heat_left_reduced_cycle [eV]": heat_left_lc,
        "heat_right_strokes [eV]": report.heat_total("right"),
        "heat_right_reduced_cycle [eV]": heat_right_lc,
        "heat_left_rel_err": abs(report.heat_total("left") - heat_left_lc)
        / max(abs(heat_left_lc), 1e-300),
        "heat_right_rel_err": abs(report.heat_total("right") - heat_right_lc)
        / max(abs(heat_right_lc), 1e-300),
    }
    return paths, diag


def _run_feasibility(cfg: ExperimentConfig, out: Path):
    est = feasibility_estimate(cfg.feas_diameter, cfg.feas_voltage)
    path = write_csv(out / "feasibility.csv", {
        "diameter [nm]": [est.diameter_nm],
        "voltage [V]": [est.voltage_v],
        "capacitance [F]": [est.capacitance_f],
        "N [-]": [est.n_electrons],
        "N_rounded [-]": [est.n_rounded],
        "N_sq_over_d [1/m]": [est.n_sq_per_meter],
        "single_electron_diameter [pm]": [est.single_electron_diameter_pm],
    })
    diag = {"N": est.n_electrons, "N_rounded": est.n_rounded}
    return [path], diag


def _run_custom(p: Params, cfg: ExperimentConfig, out: Path, workers):
    ens, p_used, halvings = _ensemble_with_retry(p, workers)
    report = build_report(ens)
    law2 = second_law_check(report)
    matching = cycle_matching_conditions(report)
    paths = [
        write_csv(out / "series.csv", _series_columns(ens)),
        write_csv(out / "entropy.csv", _entropy_columns(report)),
    ]
    diag = {
        "dt_used [ns]": p_used.dt,
        "dt_halvings": halvings,
        "second_law_ok": law2.all_ok,
        "cycle_consistent": matching.cycle_consistent,
        "heat_osc_over_t [eV/K]": matching.heat_osc_over_t,
        "delta_s_cond [eV/K]": matching.delta_s_cond,
        "hist_clip_max": float(np.max(report.clip_mass)),
    }
    diag.update(_dt_probe(p_used))
    return paths, diag


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> RunResult:
    """Run the configured experiment and persist its datasets.

    out_dir, seed and workers override the config when given (the CLI wires
    its flags through here).  Returns the paths written; raises
    SimulationFault with the failing seed recorded if an ensemble cannot
    complete even after dt halving.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir or f"runs/{cfg.kind}")
    out.mkdir(parents=True, exist_ok=True)
    p = cfg.params if seed is None else cfg.params.with_updates(master_seed=seed)
    workers = workers if workers is not None else cfg.workers
    t0 = time.perf_counter()
    extra_paths: list[Path] = []
    if cfg.kind == "figure2":
        paths, diag = _run_figure2(p, cfg, out, workers)
    elif cfg.kind == "figure3-sweep":
        paths, diag, extra_paths = _run_figure3_sweep(p, cfg, out, workers)
    elif cfg.kind == "stroke-audit":
        paths, diag = _run_stroke_audit(p, cfg, out, workers)
    elif cfg.kind == "feasibility":
        paths, diag = _run_feasibility(cfg, out)
    else:
        paths, diag = _run_custom(p, cfg, out, workers)
    wall = time.perf_counter() - t0
    manifest = write_manifest(
        out / "manifest.txt",
        run={
            "kind": cfg.kind,
            "master_seed": p.master_seed,
            "workers": workers if workers is not None else "auto",
            "wall_clock [s]": wall,
        },
        params=as_internal_dict(p),
        diagnostics=diag,
        outputs=[path.name for path in paths],
        config_text=cfg.source_text,
    )
    return RunResult(
        out_dir=out,
        csv_paths=tuple(paths) + tuple(extra_paths),
        manifest_path=manifest,
        diagnostics=diag,
    )
