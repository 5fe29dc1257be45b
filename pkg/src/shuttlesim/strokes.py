"""Four-stroke decomposition of the driven dot cycle.

The island spends most of a period pinned near one turning point of the
prescribed oscillation, where tunnel contact to the adjacent lead dominates
by a factor exp(2|x0|/lam).  Around the two crossings of x = 0 both rates
are of order gamma0 and, when the crossing is fast enough, essentially no
electrons tunnel.  That motivates an idealized cycle with five labeled
intervals per period (the leading and trailing pieces join into one stroke
across the period boundary):

    left-dissipative | isentropic | right-dissipative | isentropic | left-...

During a dissipative stroke the dot exchanges particles with exactly one
lead; during an isentropic stroke its occupation is frozen while its level
is dragged through the bias window, so no heat or chemical work flows and
the dot entropy is constant by construction.

The quality of the idealization is controlled by the expected number of
tunnel events inside an isentropic window, estimated by the closed form

    bound(tau_isen) = tau_isen * gamma0 * exp[(|x0|/lam) sin(omega tau_isen / 2)]

which replaces the in-window rates by the dominant boundary rate.  Keeping
this below a threshold (0.1 by default) fixes the widest admissible window.
Note the closed form keeps only the dominant exponential: for very narrow
windows, where both rates matter equally, the true event count can exceed
it by a few percent.  It is a sizing rule for windows wide enough that one
rate dominates at the edges, not a strict pointwise majorant.

Stroke boundaries are exact rationals (fractions of a period), so the
schedule partitions [0, 1) with no floating-point gaps and stroke edges can
be pinned to integration grid points exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .model import Params, fermi, level_energy
from .units import KB_EV_PER_K

LEFT = "left-dissipative"
ISEN = "isentropic"
RIGHT = "right-dissipative"
_LABELS = (LEFT, ISEN, RIGHT)

#: Minimum contrast exp(|x0|/lam) between the near and far lead rate at a
#: turning point for the single-lead stroke picture to make sense.
GEOMETRY_MIN = 10.0

#: Denominator used when quantizing a continuously optimized window to an
#: exact rational fraction of the period (about 2e-8 of a cycle).
_CONTINUOUS_DENOM = 48_000_000


class ScheduleError(RuntimeError):
    """No admissible stroke schedule for the given parameters."""


@dataclass(frozen=True)
class Stroke:
    """One labeled interval, as exact fractions of the period."""

    label: str
    start: Fraction
    end: Fraction

    @property
    def duration(self) -> Fraction:
        return self.end - self.start

    def times(self, p: Params) -> tuple[float, float]:
        """Interval endpoints in ns for the given parameter set."""
        return float(self.start * Fraction(p.tau_cycle)), float(
            self.end * Fraction(p.tau_cycle)
        )


@dataclass(frozen=True)
class StrokeIntegral:
    """Expected in-window tunnel events: numerical and closed-form."""

    numeric: float
    bound: float


@dataclass(frozen=True)
class StrokeSchedule:
    """Ordered stroke intervals covering one period, plus diagnostics.

    geometry_factor is exp(|x0|/lam); bound is the closed-form event count
    for the chosen isentropic window.  Both must be checked against their
    thresholds for the cycle picture to be trustworthy.
    """

    strokes: tuple[Stroke, ...]
    isen_fraction: Fraction
    tau_isen: float
    geometry_factor: float
    bound: float
    threshold: float

    def validate(self) -> list[str]:
        """Return human-readable violations of the schedule invariants."""
        problems = []
        if not self.strokes:
            return ["schedule has no strokes"]
        if self.strokes[0].start != 0:
            problems.append(f"first stroke starts at {self.strokes[0].start}, not 0")
        if self.strokes[-1].end != 1:
            problems.append(f"last stroke ends at {self.strokes[-1].end}, not 1")
        for i, s in enumerate(self.strokes):
            if s.label not in _LABELS:
                problems.append(f"stroke {i} has unknown label {s.label!r}")
            if s.end < s.start:
                problems.append(f"stroke {i} runs backwards: [{s.start}, {s.end})")
            if i and s.start != self.strokes[i - 1].end:
                problems.append(
                    f"gap or overlap at stroke {i}: previous ends "
                    f"{self.strokes[i - 1].end}, next starts {s.start}"
                )
        swap = {LEFT: RIGHT, RIGHT: LEFT, ISEN: ISEN}
        half = Fraction(1, 2)
        for s in self.strokes:
            if s.duration == 0:
                continue
            mid = (s.start + s.end) / 2
            partner = (mid + half) % 1
            if self.label_at(partner) != swap[s.label]:
                problems.append(
                    f"half-period reflection broken: {s.label} at {mid} vs "
                    f"{self.label_at(partner)} at {partner}"
                )
        return problems

    def label_at(self, phase: Fraction) -> str:
        """Stroke label at an exact phase in [0, 1)."""
        phase = phase % 1
        for s in self.strokes:
            if s.start <= phase < s.end:
                return s.label
        raise ValueError(f"phase {phase} not covered by schedule")

    @property
    def dissipative_fraction(self) -> Fraction:
        return sum(
            (s.duration for s in self.strokes if s.label != ISEN), Fraction(0)
        )

    @classmethod
    def from_fraction(
        cls, isen_fraction: Fraction, p: Params, threshold: float = 0.1
    ) -> "StrokeSchedule":
        """Build the symmetric five-interval schedule for a given window.

        isen_fraction is the duration of one isentropic window as a
        fraction of the period; the windows are centered on the two
        crossings of x = 0 at quarter and three-quarter period.  No
        admissibility checks are applied here (build_schedule does that),
        so deliberately out-of-regime schedules can be constructed.
        """
        c = Fraction(isen_fraction)
        if not 0 < c < Fraction(1, 2):
            raise ValueError(f"isentropic fraction {c} outside (0, 1/2)")
        a1 = Fraction(1, 4) - c / 2
        b1 = Fraction(1, 4) + c / 2
        a2 = Fraction(3, 4) - c / 2
        b2 = Fraction(3, 4) + c / 2
        strokes = (
            Stroke(LEFT, Fraction(0), a1),
            Stroke(ISEN, a1, b1),
            Stroke(RIGHT, b1, a2),
            Stroke(ISEN, a2, b2),
            Stroke(LEFT, b2, Fraction(1)),
        )
        tau_isen = float(c) * p.tau_cycle
        return cls(
            strokes=strokes,
            isen_fraction=c,
            tau_isen=tau_isen,
            geometry_factor=math.exp(abs(p.x0) / p.lam),
            bound=_bound(tau_isen, p),
            threshold=threshold,
        )


def _bound(tau_isen: float, p: Params) -> float:
    arg = (abs(p.x0) / p.lam) * math.sin(p.omega * tau_isen / 2.0)
    return tau_isen * p.gamma0 * math.exp(arg)


def stroke_integral(tau_isen: float, p: Params) -> StrokeIntegral:
    """Expected tunnel events in one isentropic window of given width [ns].

    The numeric value integrates the total rate over the window centered on
    the quarter-period crossing; the bound is the closed-form estimate used
    for schedule sizing.
    """
    if not 0 < tau_isen < p.tau_cycle / 2:
        raise ValueError(
            f"tau_isen = {tau_isen} ns outside (0, {p.tau_cycle / 2:.6g}) ns"
        )
    x0m = abs(p.x0)
    t_mid = p.tau_cycle / 4.0

    def total_rate(t: float) -> float:
        x = -x0m * math.cos(p.omega * t)
        return 2.0 * p.gamma0 * math.cosh(x / p.lam)

    numeric, _ = quad(total_rate, t_mid - tau_isen / 2.0, t_mid + tau_isen / 2.0)
    return StrokeIntegral(numeric=float(numeric), bound=_bound(tau_isen, p))


def build_schedule(
    p: Params, threshold: float = 0.1, resolution: int | None = 24
) -> StrokeSchedule:
    """Widest admissible four-stroke schedule for the given parameters.

    The isentropic window is quantized to 1/resolution of the period and
    the largest width whose closed-form event count stays at or below the
    threshold is selected.  resolution=None switches to a continuous search
    (the result is then quantized to an exact rational at ~2e-8 of a cycle
    so downstream rational arithmetic still holds).

    Raises ScheduleError when the lead contrast exp(|x0|/lam) is below
    GEOMETRY_MIN or when even the narrowest window exceeds the threshold.
    """
    geometry = math.exp(abs(p.x0) / p.lam)
    if geometry < GEOMETRY_MIN:
        raise ScheduleError(
            f"lead-rate contrast exp(|x0|/lam) = {geometry:.3g} is below "
            f"{GEOMETRY_MIN:g}; the single-lead stroke picture needs a larger "
            "oscillation amplitude or shorter tunneling length"
        )
    tau = p.tau_cycle
    if resolution is not None:
        if resolution < 4:
            raise ValueError("resolution must be at least 4")
        k_max = (resolution - 1) // 2
        for k in range(k_max, 0, -1):
            c = Fraction(k, resolution)
            if _bound(float(c) * tau, p) <= threshold:
                return StrokeSchedule.from_fraction(c, p, threshold)
        raise ScheduleError(
            f"no isentropic window down to 1/{resolution} of a period keeps "
            f"the expected event count below {threshold:g}; reduce gamma0, "
            "slow the drive, or raise the threshold"
        )
    cap = 0.5 - 1.0 / _CONTINUOUS_DENOM
    if _bound(cap * tau, p) <= threshold:
        c = Fraction(_CONTINUOUS_DENOM // 2 - 1, _CONTINUOUS_DENOM)
        return StrokeSchedule.from_fraction(c, p, threshold)
    if _bound(tau / _CONTINUOUS_DENOM, p) > threshold:
        raise ScheduleError(
            f"expected event count exceeds {threshold:g} even for a "
            "vanishing window; reduce gamma0 or raise the threshold"
        )
    t_star = brentq(
        lambda t: _bound(t, p) - threshold, tau / _CONTINUOUS_DENOM, cap * tau,
        xtol=1e-12,
    )
    c = Fraction(int(t_star / tau * _CONTINUOUS_DENOM), _CONTINUOUS_DENOM)
    return StrokeSchedule.from_fraction(c, p, threshold)


_MODE_OF_LABEL = {LEFT: 0, RIGHT: 1, ISEN: 2}


def _dot_entropy(p1: float) -> float:
    """Gibbs-Shannon entropy of a two-state occupation [eV/K]."""
    p1 = min(max(p1, 0.0), 1.0)
    acc = 0.0
    if p1 > 0.0:
        acc += p1 * math.log(p1)
    if p1 < 1.0:
        acc += (1.0 - p1) * math.log(1.0 - p1)
    return -KB_EV_PER_K * acc


@dataclass
class StrokeTrace:
    """Occupation and bookkeeping over one period of the stroke cycle.

    All cumulative columns start at zero; stroke_index maps each step
    segment [t[i], t[i+1]) to its stroke; boundaries holds the grid index
    of every stroke edge (len(strokes) + 1 entries).
    """

    t: np.ndarray
    occupation: np.ndarray
    level: np.ndarray
    work_mech: np.ndarray
    heat_left: np.ndarray
    heat_right: np.ndarray
    work_chem: np.ndarray
    stroke_index: np.ndarray
    boundaries: np.ndarray
    schedule: StrokeSchedule
    params: Params

    @property
    def u_dot(self) -> np.ndarray:
        return self.level * self.occupation


def _masked_rates(t, p1, mode, p: Params, x0m: float):
    x = -x0m * math.cos(p.omega * t)
    eps = p.eps0 - p.force_scale * x
    epsdot = -p.force_scale * x0m * p.omega * math.sin(p.omega * t)
    dwm = p1 * epsdot
    if mode == 2:
        return 0.0, dwm, 0.0, 0.0, 0.0
    if mode == 0:
        g = p.gamma0 * math.exp(-x / p.lam)
        mu = p.mu_left
    else:
        g = p.gamma0 * math.exp(x / p.lam)
        mu = p.mu_right
    cur = g * (fermi(eps, mu, p.temperature) - p1)
    dq = (eps - mu) * cur
    if mode == 0:
        return cur, dwm, dq, 0.0, mu * cur
    return cur, dwm, 0.0, dq, mu * cur


def cycle_propagate(
    p: Params,
    schedule: StrokeSchedule,
    p1_init: float,
    steps_per_cycle: int = 4800,
) -> StrokeTrace:
    """Evolve the dot occupation over one period under the stroke rules.

    Within a dissipative stroke only the labeled lead's rates act; within
    an isentropic stroke the occupation is frozen exactly (the level keeps
    moving, so mechanical work still accrues).  Classical RK4 with a fixed
    step; steps_per_cycle must place every stroke edge on a grid point.
    """
    problems = schedule.validate()
    if problems:
        raise ScheduleError("invalid schedule: " + "; ".join(problems))
    if not 0.0 <= p1_init <= 1.0:
        raise ValueError(f"initial occupation {p1_init} outside [0, 1]")
    bounds = [0]
    for s in schedule.strokes:
        edge = s.end * steps_per_cycle
        if edge.denominator != 1:
            raise ValueError(
                f"stroke edge {s.end} does not land on the grid; choose "
                f"steps_per_cycle divisible by {s.end.denominator}"
            )
        bounds.append(int(edge))
    n = steps_per_cycle
    h = p.tau_cycle / n
    mode_of = np.empty(n, dtype=np.int8)
    stroke_of = np.empty(n, dtype=np.int64)
    for i, s in enumerate(schedule.strokes):
        mode_of[bounds[i]:bounds[i + 1]] = _MODE_OF_LABEL[s.label]
        stroke_of[bounds[i]:bounds[i + 1]] = i
    x0m = abs(p.x0)
    occ = np.empty(n + 1)
    wm = np.zeros(n + 1)
    ql = np.zeros(n + 1)
    qr = np.zeros(n + 1)
    wc = np.zeros(n + 1)
    occ[0] = p1_init
    y = p1_init
    for i in range(n):
        t = i * h
        mode = mode_of[i]
        if mode == 2:
            # frozen occupation: only the mechanical-work quadrature runs
            k1 = y * _epsdot(t, p, x0m)
            k2 = y * _epsdot(t + 0.5 * h, p, x0m)
            k4 = y * _epsdot(t + h, p, x0m)
            wm[i + 1] = wm[i] + h / 6.0 * (k1 + 4.0 * k2 + k4)
            occ[i + 1] = y
            ql[i + 1] = ql[i]
            qr[i + 1] = qr[i]
            wc[i + 1] = wc[i]
            continue
        k1 = _masked_rates(t, y, mode, p, x0m)
        k2 = _masked_rates(t + 0.5 * h, y + 0.5 * h * k1[0], mode, p, x0m)
        k3 = _masked_rates(t + 0.5 * h, y + 0.5 * h * k2[0], mode, p, x0m)
        k4 = _masked_rates(t + h, y + h * k3[0], mode, p, x0m)
        y += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        occ[i + 1] = y
        wm[i + 1] = wm[i] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        ql[i + 1] = ql[i] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        qr[i + 1] = qr[i] + h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        wc[i + 1] = wc[i] + h / 6.0 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
    t_grid = np.arange(n + 1) * h
    x_grid = -x0m * np.cos(p.omega * t_grid)
    return StrokeTrace(
        t=t_grid,
        occupation=occ,
        level=level_energy(x_grid, p),
        work_mech=wm,
        heat_left=ql,
        heat_right=qr,
        work_chem=wc,
        stroke_index=stroke_of,
        boundaries=np.asarray(bounds, dtype=np.int64),
        schedule=schedule,
        params=p,
    )


def _epsdot(t: float, p: Params, x0m: float) -> float:
    return -p.force_scale * x0m * p.omega * math.sin(p.omega * t)


def steady_cycle(
    p: Params, schedule: StrokeSchedule, steps_per_cycle: int = 4800
) -> StrokeTrace:
    """Stroke trace started from the cycle map's exact fixed point.

    The one-period map on the occupation is affine, so two propagations
    (from 0 and from 1) determine it completely and the fixed point is
    solved in closed form rather than by iterating to convergence.
    """
    lo = cycle_propagate(p, schedule, 0.0, steps_per_cycle)
    hi = cycle_propagate(p, schedule, 1.0, steps_per_cycle)
    a = lo.occupation[-1]
    m = hi.occupation[-1] - a
    if abs(1.0 - m) < 1e-12:
        raise ScheduleError(
            "cycle map has no unique fixed point (no dissipative contact)"
        )
    p_star = a / (1.0 - m)
    return cycle_propagate(p, schedule, p_star, steps_per_cycle)


@dataclass(frozen=True)
class StrokeReport:
    """Per-stroke energy and entropy bookkeeping for one period.

    heat holds the active lead's heat for dissipative strokes and exact
    zero for isentropic ones; first_law_residual is
    dU - (heat + work_chem + work_mech) per stroke.
    """

    labels: tuple[str, ...]
    start: tuple[Fraction, ...]
    end: tuple[Fraction, ...]
    d_u_dot: np.ndarray
    work_mech: np.ndarray
    heat: np.ndarray
    work_chem: np.ndarray
    d_s_dot: np.ndarray
    first_law_residual: np.ndarray
    entropy_production: np.ndarray

    @property
    def work_mech_total(self) -> float:
        return float(np.sum(self.work_mech))

    @property
    def work_chem_total(self) -> float:
        return float(np.sum(self.work_chem))

    def heat_total(self, lead: str) -> float:
        label = {"left": LEFT, "right": RIGHT}[lead]
        return float(
            sum(q for q, lab in zip(self.heat, self.labels) if lab == label)
        )


def stroke_thermo(
    trace: StrokeTrace, schedule: StrokeSchedule, p: Params
) -> StrokeReport:
    """Difference the trace at stroke edges into a per-stroke report."""
    b = trace.boundaries
    n_s = len(schedule.strokes)
    u = trace.u_dot
    d_u = np.empty(n_s)
    wm = np.empty(n_s)
    heat = np.empty(n_s)
    wc = np.empty(n_s)
    d_s = np.empty(n_s)
    for i, s in enumerate(schedule.strokes):
        a, z = b[i], b[i + 1]
        d_u[i] = u[z] - u[a]
        wm[i] = trace.work_mech[z] - trace.work_mech[a]
        if s.label == LEFT:
            heat[i] = trace.heat_left[z] - trace.heat_left[a]
        elif s.label == RIGHT:
            heat[i] = trace.heat_right[z] - trace.heat_right[a]
        else:
            heat[i] = 0.0
        wc[i] = trace.work_chem[z] - trace.work_chem[a]
        d_s[i] = _dot_entropy(trace.occupation[z]) - _dot_entropy(
            trace.occupation[a]
        )
    residual = d_u - (heat + wc + wm)
    sigma = d_s - heat / p.temperature
    return StrokeReport(
        labels=tuple(s.label for s in schedule.strokes),
        start=tuple(s.start for s in schedule.strokes),
        end=tuple(s.end for s in schedule.strokes),
        d_u_dot=d_u,
        work_mech=wm,
        heat=heat,
        work_chem=wc,
        d_s_dot=d_s,
        first_law_residual=residual,
        entropy_production=sigma,
    )


def cycle_deviation(trace: StrokeTrace, cycle_occupation: Sequence[float]) -> float:
    """Sup-distance between the stroke occupation and a reference cycle.

    The reference array samples one full period on its own uniform grid
    (first and last point one period apart); it is interpolated onto the
    stroke grid by phase.  The distance is measured in units of the
    reference cycle's occupation span, so it stays comparable between a
    full-swing engine cycle (span close to 1, where this is simply the
    absolute deviation) and a weakly modulated one.  A span below 1e-9
    falls back to the absolute distance.
    """
    ref = np.asarray(cycle_occupation, dtype=float)
    ref_t = np.linspace(0.0, trace.t[-1], ref.size)
    occ_ref = np.interp(trace.t, ref_t, ref)
    sup = float(np.max(np.abs(trace.occupation - occ_ref)))
    span = float(np.max(ref) - np.min(ref))
    return sup / span if span > 1e-9 else sup
