"""Reduced occupation model driven by an ideal oscillator.

The mechanical coordinate is replaced by the prescribed motion
x(t) = -|x0| cos(omega t), and the dot occupation probability evolves under
the position-dependent rates.  Alongside the occupation, the mechanical
output work, lead-resolved heats and chemical work are accumulated as extra
components of one augmented ODE system, integrated with a fixed-step
classical 4th-order Runge-Kutta scheme, so every bookkeeping integral is
consistent with the occupation to the scheme's order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numba import njit

from .kernels import _fermi_scalar
from .model import Params, level_energy
from .units import KB_EV_PER_K

if TYPE_CHECKING:
    from .trajectory import EnsembleSeries


class StabilityFault(RuntimeError):
    """Step size too coarse for the local rates; raise steps_per_cycle."""


class NoLimitCycleError(RuntimeError):
    """Successive cycles never came within tolerance of each other."""


class GridMismatchError(ValueError):
    """Comparison requested on incompatible time grids."""


@njit(cache=True)
def _rhs(t, p1, x0s, omega, g0, inv_lam, eav, eps0, beta, mu_l, mu_r):
    """Augmented derivatives (dP1, dW_mech, dQ_L, dQ_R, dW_chem, rate_sum)."""
    x = x0s * math.cos(omega * t)
    eps = eps0 - eav * x
    if g0 == 0.0:
        gl = 0.0
        gr = 0.0
    else:
        gl = g0 * math.exp(-x * inv_lam)
        gr = g0 * g0 / gl
    fl = _fermi_scalar(beta * (eps - mu_l))
    fr = _fermi_scalar(beta * (eps - mu_r))
    r10 = gl * fl + gr * fr
    r01 = gl * (1.0 - fl) + gr * (1.0 - fr)
    dp1 = r10 - (r10 + r01) * p1
    # net electron currents from each lead into the dot
    i_l = gl * (fl - p1)
    i_r = gr * (fr - p1)
    epsdot = eav * x0s * omega * math.sin(omega * t)
    dw_mech = p1 * epsdot
    dq_l = (eps - mu_l) * i_l
    dq_r = (eps - mu_r) * i_r
    dw_chem = mu_l * i_l + mu_r * i_r
    return dp1, dw_mech, dq_l, dq_r, dw_chem, r10 + r01


@njit(cache=True)
def _solve(p1_init, n_steps, h, x0s, omega, g0, inv_lam, eav, eps0, beta,
           mu_l, mu_r, occ, w_mech, q_l, q_r, w_chem):
    p1 = p1_init
    wm = 0.0
    ql = 0.0
    qr = 0.0
    wc = 0.0
    occ[0] = p1
    w_mech[0] = 0.0
    q_l[0] = 0.0
    q_r[0] = 0.0
    w_chem[0] = 0.0
    max_rh = 0.0
    for i in range(n_steps):
        t = i * h
        a1, b1, c1, d1, e1, r1 = _rhs(t, p1, x0s, omega, g0, inv_lam, eav, eps0, beta, mu_l, mu_r)
        a2, b2, c2, d2, e2, r2 = _rhs(t + 0.5 * h, p1 + 0.5 * h * a1, x0s, omega, g0, inv_lam, eav, eps0, beta, mu_l, mu_r)
        a3, b3, c3, d3, e3, r3 = _rhs(t + 0.5 * h, p1 + 0.5 * h * a2, x0s, omega, g0, inv_lam, eav, eps0, beta, mu_l, mu_r)
        a4, b4, c4, d4, e4, r4 = _rhs(t + h, p1 + h * a3, x0s, omega, g0, inv_lam, eav, eps0, beta, mu_l, mu_r)
        rmax = max(max(r1, r2), max(r3, r4))
        if rmax * h > max_rh:
            max_rh = rmax * h
        if rmax * h > 0.5:
            return i, max_rh, 1
        p1 += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        wm += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        ql += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        qr += h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        wc += h / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4)
        if p1 < -1e-9 or p1 > 1.0 + 1e-9:
            return i, max_rh, 2
        occ[i + 1] = p1
        w_mech[i + 1] = wm
        q_l[i + 1] = ql
        q_r[i + 1] = qr
        w_chem[i + 1] = wc
    return n_steps, max_rh, 0


@dataclass
class ReducedTrace:
    """Reduced-model solution on a uniform grid.

    Cumulative integrals (work_mech, heat_left, heat_right, work_chem) are
    measured from t = 0; occupancy and drive are instantaneous.
    """

    t: np.ndarray
    occupation: np.ndarray
    x_drive: np.ndarray
    level: np.ndarray
    work_mech: np.ndarray
    heat_left: np.ndarray
    heat_right: np.ndarray
    work_chem: np.ndarray
    h: float
    steps_per_cycle: int
    params: Params

    @property
    def u_dot(self) -> np.ndarray:
        """Dot internal energy eps(x_t) * P1(t) [eV]."""
        return self.level * self.occupation

    @property
    def s_dot(self) -> np.ndarray:
        """Dot Gibbs-Shannon entropy [eV/K]."""
        p1 = np.clip(self.occupation, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p1 > 0, p1 * np.log(p1), 0.0) + np.where(
                p1 < 1, (1 - p1) * np.log(1 - p1), 0.0
            )
        return -KB_EV_PER_K * terms

    def sample_occupation(self, times) -> np.ndarray:
        return np.interp(times, self.t, self.occupation)

    def sample_level(self, times) -> np.ndarray:
        return np.interp(times, self.t, self.level)

    def cycle_bounds(self, cycle: int) -> tuple[int, int]:
        """Grid index range [a, b] spanning the given full cycle."""
        a = cycle * self.steps_per_cycle
        b = (cycle + 1) * self.steps_per_cycle
        if b >= self.t.size:
            raise IndexError(f"trace holds no complete cycle {cycle}")
        return a, b

    @property
    def n_cycles(self) -> int:
        return (self.t.size - 1) // self.steps_per_cycle


def solve_reduced(
    p: Params,
    t_final: float | None = None,
    steps_per_cycle: int = 4096,
    p1_init: float | None = None,
    max_step: float | None = None,
) -> ReducedTrace:
    """Integrate the reduced model from t = 0 to t_final.

    The step is tau_cycle / steps_per_cycle, optionally capped by max_step
    (useful far off resonance, e.g. quasi-static drives).  Raises
    StabilityFault when the local rates are too fast for the step.
    """
    if t_final is None:
        t_final = p.t_final
    h = p.tau_cycle / steps_per_cycle
    if max_step is not None and max_step < h:
        h = max_step
    n_steps = int(round(t_final / h))
    if n_steps < 1:
        raise ValueError("t_final shorter than one step")
    occ = np.empty(n_steps + 1)
    wm = np.empty(n_steps + 1)
    ql = np.empty(n_steps + 1)
    qr = np.empty(n_steps + 1)
    wc = np.empty(n_steps + 1)
    p1_0 = float(p.q0) if p1_init is None else float(p1_init)
    done, max_rh, status = _solve(
        p1_0, n_steps, h, -abs(p.x0), p.omega, p.gamma0, 1.0 / p.lam,
        p.force_scale, p.eps0, p.beta, p.mu_left, p.mu_right,
        occ, wm, ql, qr, wc,
    )
    if status == 1:
        raise StabilityFault(
            f"rate * step = {max_rh:.3g} > 0.5 at step {done}; increase "
            f"steps_per_cycle (currently {steps_per_cycle}) or lower max_step"
        )
    if status == 2:
        raise StabilityFault(f"occupation left [0, 1] at step {done}")
    t = np.arange(n_steps + 1) * h
    x_drive = -abs(p.x0) * np.cos(p.omega * t)
    return ReducedTrace(
        t=t, occupation=occ, x_drive=x_drive, level=level_energy(x_drive, p),
        work_mech=wm, heat_left=ql, heat_right=qr, work_chem=wc,
        h=h, steps_per_cycle=steps_per_cycle, params=p,
    )


@dataclass(frozen=True)
class LimitCycle:
    """A converged period of the reduced dynamics.

    `area` is the signed enclosed area of the loop traced in the
    (level, occupation) plane, counterclockwise positive.  It equals
    -work_mech_cycle up to quadrature error, so a work-extracting engine
    cycle has positive area.
    """

    cycle_index: int
    start_index: int
    level: np.ndarray
    occupation: np.ndarray
    area: float
    work_mech_cycle: float
    heat_left_cycle: float
    heat_right_cycle: float
    work_chem_cycle: float
    sup_distances: np.ndarray


def shoelace_area(u: np.ndarray, w: np.ndarray) -> float:
    """Signed polygon area of the closed curve (u, w), counterclockwise
    positive in the (u, w) plane; the polygon is closed implicitly."""
    return 0.5 * float(np.sum(u * np.roll(w, -1) - np.roll(u, -1) * w))


def parametric_loop_area(
    t: np.ndarray,
    level: np.ndarray,
    occupation: np.ndarray,
    tau_cycle: float,
    t_end: float | None = None,
    samples: int = 2048,
) -> float:
    """Signed (level, occupation) loop area over the last full period.

    The curves are resampled uniformly over [t_end - tau_cycle, t_end) and
    closed into a polygon; counterclockwise in the (level, occupation)
    plane counts positive, so a work-extracting cycle has positive area.
    """
    t = np.asarray(t)
    if t_end is None:
        t_end = float(t[-1])
    t_start = t_end - tau_cycle
    if t_start < t[0] - 1e-9:
        raise ValueError("series spans less than one period before t_end")
    s = np.linspace(t_start, t_end, samples, endpoint=False)
    u = np.interp(s, t, np.asarray(level))
    w = np.interp(s, t, np.asarray(occupation))
    return shoelace_area(u, w)


def limit_cycle(trace: ReducedTrace, tol: float = 1e-4) -> LimitCycle:
    """Find the first cycle whose successor stays within sup-distance tol.

    Requires at least three full periods in the trace.  Raises
    NoLimitCycleError when no pair of successive cycles converges.
    """
    n_cyc = trace.n_cycles
    if n_cyc < 3:
        raise ValueError(f"trace spans only {n_cyc} full periods; need >= 3")
    spc = trace.steps_per_cycle
    occ = trace.occupation
    dists = np.empty(n_cyc - 1)
    found = -1
    for c in range(n_cyc - 1):
        a = c * spc
        d = np.max(np.abs(occ[a:a + spc + 1] - occ[a + spc:a + 2 * spc + 1]))
        dists[c] = d
        if found < 0 and d < tol:
            found = c + 1  # report the converged (repeating) cycle
    if found < 0:
        raise NoLimitCycleError(
            f"no successive cycles within tol = {tol}; min distance {dists.min():.3g}"
        )
    a, b = trace.cycle_bounds(found)
    lev = trace.level[a:b]
    occ_c = occ[a:b]
    area_ccw = shoelace_area(lev, occ_c)  # CCW-positive in the (level, occ) plane
    return LimitCycle(
        cycle_index=found,
        start_index=a,
        level=trace.level[a:b + 1].copy(),
        occupation=occ[a:b + 1].copy(),
        area=area_ccw,
        work_mech_cycle=float(trace.work_mech[b] - trace.work_mech[a]),
        heat_left_cycle=float(trace.heat_left[b] - trace.heat_left[a]),
        heat_right_cycle=float(trace.heat_right[b] - trace.heat_right[a]),
        work_chem_cycle=float(trace.work_chem[b] - trace.work_chem[a]),
        sup_distances=dists,
    )


@dataclass(frozen=True)
class ReducedLaws:
    """Cycle-resolved bookkeeping of the reduced model."""

    cycles: np.ndarray
    d_u_dot: np.ndarray
    work_mech: np.ndarray
    heat_left: np.ndarray
    heat_right: np.ndarray
    work_chem: np.ndarray
    first_law_residual: np.ndarray
    first_law_rel_residual: np.ndarray
    d_s_dot: np.ndarray
    entropy_production: np.ndarray

    @property
    def max_rel_residual(self) -> float:
        return float(np.max(self.first_law_rel_residual))


def reduced_laws(trace: ReducedTrace) -> ReducedLaws:
    """Per-cycle first law and entropy balance of the reduced trace.

    The first-law residual dU_dot - (Q_L + Q_R + W_chem + W_mech) per cycle
    is normalized by the cycle's gross energy turnover.
    """
    n_cyc = trace.n_cycles
    if n_cyc < 1:
        raise ValueError("trace spans no complete cycle")
    T = trace.params.temperature
    rows = {k: np.empty(n_cyc) for k in
            ("du", "wm", "ql", "qr", "wc", "res", "rel", "ds", "sig")}
    u = trace.u_dot
    s = trace.s_dot
    for c in range(n_cyc):
        a, b = trace.cycle_bounds(c)
        du = u[b] - u[a]
        wm = trace.work_mech[b] - trace.work_mech[a]
        ql = trace.heat_left[b] - trace.heat_left[a]
        qr = trace.heat_right[b] - trace.heat_right[a]
        wc = trace.work_chem[b] - trace.work_chem[a]
        res = du - (ql + qr + wc + wm)
        scale = abs(ql) + abs(qr) + abs(wc) + abs(wm) + abs(du)
        ds = s[b] - s[a]
        rows["du"][c] = du
        rows["wm"][c] = wm
        rows["ql"][c] = ql
        rows["qr"][c] = qr
        rows["wc"][c] = wc
        rows["res"][c] = res
        rows["rel"][c] = abs(res) / scale if scale > 0 else 0.0
        rows["ds"][c] = ds
        rows["sig"][c] = ds - (ql + qr) / T
    return ReducedLaws(
        cycles=np.arange(n_cyc),
        d_u_dot=rows["du"],
        work_mech=rows["wm"],
        heat_left=rows["ql"],
        heat_right=rows["qr"],
        work_chem=rows["wc"],
        first_law_residual=rows["res"],
        first_law_rel_residual=rows["rel"],
        d_s_dot=rows["ds"],
        entropy_production=rows["sig"],
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Deviation of the stochastic ensemble from the reduced model."""

    rms_occupation: float
    sup_occupation: float
    rms_occupation_final: float
    sup_occupation_final: float
    rms_level: float
    sup_level: float
    level_scale: float
    final_window_cycles: int
    final_window_start: float


def compare_to_autonomous(
    trace: ReducedTrace, ens: "EnsembleSeries", final_cycles: int = 5
) -> ComparisonReport:
    """Compare reduced occupation/level curves with ensemble means.

    The reduced trace is sampled onto the (coarser) ensemble grid.  Level
    deviations are reported in eV; level_scale = e alpha V |x0| is the
    natural normalization.  Raises GridMismatchError when the ensemble grid
    extends beyond the reduced trace.
    """
    if ens.t[0] < trace.t[0] - 1e-12 or ens.t[-1] > trace.t[-1] + trace.h:
        raise GridMismatchError(
            f"ensemble grid [{ens.t[0]}, {ens.t[-1]}] not covered by reduced "
            f"trace [{trace.t[0]}, {trace.t[-1]}]"
        )
    p = ens.params
    occ_red = trace.sample_occupation(ens.t)
    lev_red = trace.sample_level(ens.t)
    d_occ = ens.occupation.mean - occ_red
    d_lev = ens.level - lev_red
    t_start = max(0.0, ens.t[-1] - final_cycles * p.tau_cycle)
    win = ens.t >= t_start - 1e-9
    return ComparisonReport(
        rms_occupation=float(np.sqrt(np.mean(d_occ**2))),
        sup_occupation=float(np.max(np.abs(d_occ))),
        rms_occupation_final=float(np.sqrt(np.mean(d_occ[win] ** 2))),
        sup_occupation_final=float(np.max(np.abs(d_occ[win]))),
        rms_level=float(np.sqrt(np.mean(d_lev**2))),
        sup_level=float(np.max(np.abs(d_lev))),
        level_scale=p.force_scale * abs(p.x0),
        final_window_cycles=final_cycles,
        final_window_start=float(t_start),
    )
