"""Ensemble-level thermodynamic bookkeeping.

Distributions over (q, x, v) are estimated on a fixed grid at checkpoint
times; Gibbs-Shannon entropies of those histograms, internal energies, the
integrated second law and the cycle matching conditions are derived here.

Entropy conventions: S_joint follows the binned estimate
S = -k_B sum p ln(p / (dx dv)), which carries an additive k_B ln(dx dv)
measure constant; it cancels in all differences between checkpoints of the
same run, which are the only quantities given physical meaning.  S_cond is
S_joint - S_dot by construction and inherits the same constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .units import KB_EV_PER_K
from .model import Params

if TYPE_CHECKING:  # only for type hints; no runtime dependency
    from .trajectory import EnsembleSeries


@dataclass(frozen=True)
class PhaseHistogram:
    """Normalized occupation-resolved phase-space histogram.

    prob has shape (2, bins, bins): prob[q, ix, iv].  Mass outside the grid
    is dropped and reported as clip_mass; the retained mass is renormalized
    to 1, so `prob.sum() == 1` within accumulation error whenever any sample
    is in range.
    """

    prob: np.ndarray
    x_edges: np.ndarray
    v_edges: np.ndarray
    clip_mass: float
    n_samples: int

    @classmethod
    def from_samples(cls, x, v, q, x_max: float, v_max: float, bins: int):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        q = np.asarray(q, dtype=int)
        x_edges = np.linspace(-x_max, x_max, bins + 1)
        v_edges = np.linspace(-v_max, v_max, bins + 1)
        inside = (np.abs(x) <= x_max) & (np.abs(v) <= v_max)
        n_total = x.size
        n_in = int(inside.sum())
        prob = np.zeros((2, bins, bins))
        for qval in (0, 1):
            sel = inside & (q == qval)
            if sel.any():
                h, _, _ = np.histogram2d(x[sel], v[sel], bins=[x_edges, v_edges])
                prob[qval] = h
        if n_in > 0:
            prob /= n_in
        return cls(prob=prob, x_edges=x_edges, v_edges=v_edges,
                   clip_mass=1.0 - n_in / n_total if n_total else 0.0,
                   n_samples=n_in)

    @property
    def bin_area(self) -> float:
        return float((self.x_edges[1] - self.x_edges[0])
                     * (self.v_edges[1] - self.v_edges[0]))

    def occupation_marginal(self) -> np.ndarray:
        return self.prob.sum(axis=(1, 2))


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropies in eV/K with delta-method standard errors."""

    s_joint: float
    s_dot: float
    s_cond: float
    s_joint_sem: float
    s_dot_sem: float
    log_bin_area: float  # additive measure constant inside s_joint and s_cond


def _plugin_entropy(p: np.ndarray, n: int) -> tuple[float, float]:
    """Discrete plug-in entropy (nats) and its delta-method standard error."""
    p = p[p > 0.0]
    logs = np.log(p)
    h = float(-(p * logs).sum())
    var = float((p * logs**2).sum() - ((p * logs).sum()) ** 2)
    sem = math.sqrt(max(var, 0.0) / n) if n > 0 else float("nan")
    return h, sem


def entropies(hist: PhaseHistogram) -> EntropyEstimate:
    """Joint, dot-marginal and conditional oscillator entropies [eV/K].

    s_joint = -k_B sum p ln(p / (dx dv)) over (q, x, v) bins;
    s_dot   = -k_B sum P(q) ln P(q);
    s_cond  = s_joint - s_dot.
    """
    la = math.log(hist.bin_area)
    h_joint, sem_joint = _plugin_entropy(hist.prob.ravel(), hist.n_samples)
    pq = hist.occupation_marginal()
    h_dot, sem_dot = _plugin_entropy(pq, hist.n_samples)
    s_joint = KB_EV_PER_K * (h_joint + la)
    s_dot = KB_EV_PER_K * h_dot
    return EntropyEstimate(
        s_joint=s_joint,
        s_dot=s_dot,
        s_cond=s_joint - s_dot,
        s_joint_sem=KB_EV_PER_K * sem_joint,
        s_dot_sem=KB_EV_PER_K * sem_dot,
        log_bin_area=KB_EV_PER_K * la,
    )


@dataclass(frozen=True)
class ThermoReport:
    """Checkpointed ensemble thermodynamics.

    All arrays are indexed by checkpoint.  Heats and chemical work are
    cumulative ensemble means since t = 0 with standard errors; entropies
    follow the conventions of `entropies`.  entropy_production is
    Sigma(t) = [S_joint(t) - S_joint(0)] - [Q_L + Q_R + Q_osc]/T.
    """

    times: np.ndarray
    u_joint: np.ndarray
    u_dot: np.ndarray
    u_osc: np.ndarray
    u_joint_sem: np.ndarray
    s_joint: np.ndarray
    s_dot: np.ndarray
    s_cond: np.ndarray
    s_joint_sem: np.ndarray
    s_dot_sem: np.ndarray
    heat_left: np.ndarray
    heat_right: np.ndarray
    heat_osc: np.ndarray
    work_chem: np.ndarray
    heat_left_sem: np.ndarray
    heat_right_sem: np.ndarray
    heat_osc_sem: np.ndarray
    work_chem_sem: np.ndarray
    entropy_production: np.ndarray
    entropy_production_sem: np.ndarray
    first_law_residual: np.ndarray
    clip_mass: np.ndarray
    params: Params

    @property
    def delta_s_dot(self) -> float:
        return float(self.s_dot[-1] - self.s_dot[0])

    @property
    def delta_s_cond(self) -> float:
        return float(self.s_cond[-1] - self.s_cond[0])


def build_report(ens: "EnsembleSeries") -> ThermoReport:
    """Collect checkpoint thermodynamics from a reduced ensemble."""
    p = ens.params
    idx = np.array([cp.index for cp in ens.checkpoints], dtype=int)
    times = np.array([cp.t for cp in ens.checkpoints])
    ents = [entropies(cp.histogram) for cp in ens.checkpoints]
    s_joint = np.array([e.s_joint for e in ents])
    s_dot = np.array([e.s_dot for e in ents])
    s_cond = np.array([e.s_cond for e in ents])
    s_joint_sem = np.array([e.s_joint_sem for e in ents])
    s_dot_sem = np.array([e.s_dot_sem for e in ents])

    hl, hr, ho = ens.heat_left, ens.heat_right, ens.heat_osc
    heat_sum = hl.mean[idx] + hr.mean[idx] + ho.mean[idx]
    heat_sum_sem = np.sqrt(hl.sem[idx] ** 2 + hr.sem[idx] ** 2 + ho.sem[idx] ** 2)
    # both terms are measured relative to the first checkpoint
    sigma = (s_joint - s_joint[0]) - (heat_sum - heat_sum[0]) / p.temperature
    sigma_sem = np.sqrt(
        s_joint_sem**2 + s_joint_sem[0] ** 2 + (heat_sum_sem / p.temperature) ** 2
    )

    return ThermoReport(
        times=times,
        u_joint=ens.u_joint.mean[idx],
        u_dot=ens.u_dot.mean[idx],
        u_osc=ens.u_osc.mean[idx],
        u_joint_sem=ens.u_joint.sem[idx],
        s_joint=s_joint,
        s_dot=s_dot,
        s_cond=s_cond,
        s_joint_sem=s_joint_sem,
        s_dot_sem=s_dot_sem,
        heat_left=hl.mean[idx],
        heat_right=hr.mean[idx],
        heat_osc=ho.mean[idx],
        work_chem=ens.work_chem.mean[idx],
        heat_left_sem=hl.sem[idx],
        heat_right_sem=hr.sem[idx],
        heat_osc_sem=ho.sem[idx],
        work_chem_sem=ens.work_chem.sem[idx],
        entropy_production=sigma,
        entropy_production_sem=sigma_sem,
        first_law_residual=ens.first_law_residual.mean[idx],
        clip_mass=np.array([cp.histogram.clip_mass for cp in ens.checkpoints]),
        params=p,
    )


def internal_energy(ens: "EnsembleSeries", t: float) -> tuple[float, float, float]:
    """(U_joint, U_dot, U_osc) ensemble means at grid time t [eV]."""
    p = ens.params
    idx = int(round(t / p.out_dt))
    if idx < 0 or idx >= ens.t.size or abs(ens.t[idx] - t) > 0.5 * p.out_dt:
        raise KeyError(f"t = {t} ns is not on the output grid")
    return (
        float(ens.u_joint.mean[idx]),
        float(ens.u_dot.mean[idx]),
        float(ens.u_osc.mean[idx]),
    )


@dataclass(frozen=True)
class SecondLawCheck:
    """Integrated entropy production at each checkpoint, with its error bar."""

    times: np.ndarray
    sigma: np.ndarray
    sigma_sem: np.ndarray

    @property
    def ok(self) -> np.ndarray:
        """Sigma(t) >= -2 standard errors, pointwise."""
        bound = -2.0 * np.where(np.isfinite(self.sigma_sem), self.sigma_sem, 0.0)
        return self.sigma >= bound

    @property
    def all_ok(self) -> bool:
        return bool(self.ok.all())


def second_law_check(report: ThermoReport) -> SecondLawCheck:
    """Integrated Sigma(t) = dS_joint - sum_baths Q/T with standard errors."""
    return SecondLawCheck(
        times=report.times,
        sigma=report.entropy_production,
        sigma_sem=report.entropy_production_sem,
    )


@dataclass(frozen=True)
class MatchingConditions:
    """End-of-run cycle matching diagnostics.

    A run operating on a tight engine cycle should route a negligible share
    of its entropy bookkeeping through the oscillator: both |Q_osc|/T and
    |dS_cond| should be small against |dS_dot| + |Q_L + Q_R|/T.
    """

    heat_osc_over_t: float
    delta_s_cond: float
    delta_s_dot: float
    heat_leads_over_t: float
    scale: float
    threshold: float

    @property
    def heat_condition(self) -> bool:
        return abs(self.heat_osc_over_t) <= self.threshold * self.scale

    @property
    def entropy_condition(self) -> bool:
        return abs(self.delta_s_cond) <= self.threshold * self.scale

    @property
    def cycle_consistent(self) -> bool:
        return self.heat_condition and self.entropy_condition


def cycle_matching_conditions(report: ThermoReport, threshold: float = 0.1) -> MatchingConditions:
    """Evaluate the oscillator matching conditions over the full run."""
    T = report.params.temperature
    q_osc = float(report.heat_osc[-1] - report.heat_osc[0])
    q_leads = float((report.heat_left[-1] + report.heat_right[-1])
                    - (report.heat_left[0] + report.heat_right[0]))
    d_s_dot = report.delta_s_dot
    scale = abs(d_s_dot) + abs(q_leads) / T
    return MatchingConditions(
        heat_osc_over_t=q_osc / T,
        delta_s_cond=report.delta_s_cond,
        delta_s_dot=d_s_dot,
        heat_leads_over_t=q_leads / T,
        scale=scale,
        threshold=threshold,
    )
