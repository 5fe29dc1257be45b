"""Trajectory engine: single runs, ensembles, and their reductions.

Trajectories are integrated by the compiled kernels; this module owns the
public data types, seeding policy, fault handling and the deterministic
(order-fixed, compensated) ensemble reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import numba

from . import kernels
from .kernels import (
    JUMP_IN_LEFT,
    JUMP_IN_RIGHT,
    JUMP_NONE,
    JUMP_OUT_LEFT,
    JUMP_OUT_RIGHT,
    STATUS_NON_FINITE,
    STATUS_OK,
    STATUS_RATE_CAP,
)
from .model import Params, iter_checkpoint_indices, level_energy
from .rng import RngStream, U64_MASK_INT, stream_state
from .thermo import PhaseHistogram

_JUMP_NAMES = {
    JUMP_NONE: None,
    JUMP_IN_LEFT: "in_left",
    JUMP_OUT_LEFT: "out_left",
    JUMP_IN_RIGHT: "in_right",
    JUMP_OUT_RIGHT: "out_right",
}


class SimulationFault(RuntimeError):
    """A trajectory left the validity envelope; the whole ensemble aborts."""

    def __init__(self, message, index=None, seed=None, status=None, time=None):
        super().__init__(message)
        self.index = index
        self.seed = seed
        self.status = status
        self.time = time


@dataclass(frozen=True)
class ShuttleState:
    """Instantaneous mechanical and charge state."""

    t: float
    x: float
    v: float
    q: int


@dataclass
class ThermoLedger:
    """Per-trajectory energy bookkeeping (cumulative since t = 0).

    Heats are energy flows from the named bath into the system; work_chem is
    the chemical work done on the system by the particle reservoirs.
    """

    heat_left: float = 0.0
    heat_right: float = 0.0
    heat_osc: float = 0.0
    work_chem: float = 0.0
    n_in_left: int = 0
    n_out_left: int = 0
    n_in_right: int = 0
    n_out_right: int = 0
    eps_sum_left: float = 0.0
    eps_sum_right: float = 0.0

    @property
    def net_from_left(self) -> int:
        return self.n_in_left - self.n_out_left

    @property
    def net_from_right(self) -> int:
        return self.n_in_right - self.n_out_right

    @property
    def heat_leads(self) -> float:
        return self.heat_left + self.heat_right

    @property
    def total_input(self) -> float:
        return self.heat_left + self.heat_right + self.heat_osc + self.work_chem


@dataclass(frozen=True)
class SeriesStat:
    """Ensemble mean and standard error of the mean on a common grid."""

    mean: np.ndarray
    sem: np.ndarray


@dataclass(frozen=True)
class CheckpointSnapshot:
    t: float
    index: int
    histogram: PhaseHistogram


@dataclass
class TrajectoryResult:
    """One trajectory recorded on the output grid, plus its final ledger."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    q: np.ndarray
    heat_left: np.ndarray
    heat_right: np.ndarray
    heat_osc: np.ndarray
    work_chem: np.ndarray
    amplitude: np.ndarray
    ledger: ThermoLedger
    params: Params

    def internal_energy(self) -> np.ndarray:
        """U_osc + U_dot along the trajectory [eV]."""
        p = self.params
        return (0.5 * p.mass * self.v**2 + 0.5 * p.spring_k * self.x**2
                + level_energy(self.x, p) * self.q)

    def first_law_residual(self) -> np.ndarray:
        """Energy change minus booked heats and work, per grid point [eV]."""
        u = self.internal_energy()
        booked = self.heat_left + self.heat_right + self.heat_osc + self.work_chem
        return (u - u[0]) - booked


@dataclass
class EnsembleSeries:
    """Reduced ensemble statistics on the output grid.

    All SeriesStat fields hold (mean, standard error) across trajectories at
    each grid time; cumulative heats/work are since t = 0.
    """

    t: np.ndarray
    occupation: SeriesStat
    position: SeriesStat
    velocity: SeriesStat
    velocity_sq: SeriesStat
    u_osc: SeriesStat
    u_dot: SeriesStat
    u_joint: SeriesStat
    heat_left: SeriesStat
    heat_right: SeriesStat
    heat_osc: SeriesStat
    work_chem: SeriesStat
    first_law_residual: SeriesStat
    amplitude: SeriesStat
    amplitude_t: np.ndarray
    checkpoints: tuple[CheckpointSnapshot, ...]
    jump_totals: np.ndarray
    n_traj: int
    params: Params

    @property
    def level(self) -> np.ndarray:
        """Ensemble-mean dot level eps(<x>) [eV] (eps is linear in x)."""
        return level_energy(self.position.mean, self.params)

    def checkpoint_at(self, t: float) -> CheckpointSnapshot:
        for cp in self.checkpoints:
            if abs(cp.t - t) <= 0.5 * self.params.out_dt:
                return cp
        raise KeyError(f"no checkpoint recorded at t = {t} ns")


def _kernel_args(p: Params) -> tuple:
    """Precomputed per-step coefficients for the compiled loops."""
    dt = p.dt
    return (
        dt,
        1.0 - p.gamma * dt / p.mass,          # cv
        -p.spring_k * dt / p.mass,            # cx
        p.force_scale * dt / p.mass,          # cq
        math.sqrt(2.0 * p.gamma * p.kt * dt),  # noise impulse scale
        1.0 / p.mass,
        p.gamma * dt,
        p.gamma0,
        p.gamma0 * p.gamma0,
        1.0 / p.lam,
        p.force_scale,
        p.eps0,
        p.beta,
        p.mu_left,
        p.mu_right,
    )


def _grid_shape(p: Params) -> tuple[int, int, int]:
    """(n_steps, out_stride, n_out) from the validated time parameters."""
    out_stride = int(round(p.out_dt / p.dt))
    n_out = int(round(p.t_final / p.out_dt)) + 1
    n_steps = (n_out - 1) * out_stride
    return n_steps, out_stride, n_out


def _n_cycles(p: Params) -> int:
    return int(math.floor(p.t_final / p.tau_cycle + 1e-12))


def step(state: ShuttleState, p: Params, rng: RngStream):
    """Advance one time step of dt.

    Returns the new ShuttleState and a ThermoLedger holding this step's
    increments (jump counters included).  Raises SimulationFault if the
    thinning cap dt * rate >= 0.1 is violated; reduce dt in that case.
    """
    args = _kernel_args(p)
    (x, v, qf, new_state, rng._have_spare, rng._spare,
     dql, dqr, dqo, dwc, jump, status) = kernels.step_core(
        state.x, state.v, float(state.q), rng.state, rng._have_spare, rng._spare,
        *args,
    )
    # keep the stream state a numpy scalar; boxed python ints >= 2^63 would
    # not unbox into the compiled kernels
    rng.state = np.uint64(new_state)
    if status == STATUS_RATE_CAP:
        raise SimulationFault(
            f"dt * jump rate exceeded {kernels.RATE_CAP} at x = {x:.3f} nm, "
            f"t = {state.t + p.dt:.6g} ns; reduce dt",
            status=status, time=state.t + p.dt,
        )
    delta = ThermoLedger(heat_left=dql, heat_right=dqr, heat_osc=dqo, work_chem=dwc)
    name = _JUMP_NAMES[jump]
    if name == "in_left":
        delta.n_in_left = 1
    elif name == "out_left":
        delta.n_out_left = 1
    elif name == "in_right":
        delta.n_in_right = 1
    elif name == "out_right":
        delta.n_out_right = 1
    new = ShuttleState(t=state.t + p.dt, x=x, v=v, q=int(qf))
    return new, delta


def _raise_fault(status: int, fstep: int, p: Params, index: int, seed) -> None:
    t = (fstep + 1) * p.dt
    if status == STATUS_RATE_CAP:
        raise SimulationFault(
            f"trajectory {index}: dt * jump rate exceeded {kernels.RATE_CAP} "
            f"at t = {t:.6g} ns (seed {seed}); reduce dt",
            index=index, seed=seed, status=status, time=t,
        )
    if status == STATUS_NON_FINITE:
        raise SimulationFault(
            f"trajectory {index}: non-finite state at t = {t:.6g} ns (seed {seed})",
            index=index, seed=seed, status=status, time=t,
        )


def simulate_trajectory(p: Params, seed: int, index: int = 0) -> TrajectoryResult:
    """Simulate one trajectory; deterministic given (p, seed, index).

    The ensemble member i of `simulate_ensemble` is exactly
    `simulate_trajectory(p, p.master_seed, index=i)`.
    """
    n_steps, out_stride, n_out = _grid_shape(p)
    n_cyc = _n_cycles(p)
    xs = np.empty(n_out)
    vs = np.empty(n_out)
    qs = np.empty(n_out, dtype=np.int8)
    hl = np.empty(n_out)
    hr = np.empty(n_out)
    ho = np.empty(n_out)
    wc = np.empty(n_out)
    amps = np.zeros(n_cyc)
    counts = np.zeros(4, dtype=np.int64)
    esums = np.zeros(2)

    st = np.uint64(
        stream_state(
            np.uint64(int(seed) & U64_MASK_INT),
            np.uint64(int(index) & U64_MASK_INT),
        )
    )
    status, fstep = kernels.run_trajectory(
        st, -abs(p.x0), p.v0, p.q0,
        n_steps, out_stride,
        *_kernel_args(p), p.tau_cycle,
        xs, vs, qs, hl, hr, ho, wc, amps, counts, esums,
    )
    if status != STATUS_OK:
        _raise_fault(status, fstep, p, index, seed)

    ledger = ThermoLedger(
        heat_left=hl[-1], heat_right=hr[-1], heat_osc=ho[-1], work_chem=wc[-1],
        n_in_left=int(counts[0]), n_out_left=int(counts[1]),
        n_in_right=int(counts[2]), n_out_right=int(counts[3]),
        eps_sum_left=esums[0], eps_sum_right=esums[1],
    )
    t = np.arange(n_out) * p.out_dt
    return TrajectoryResult(
        t=t, x=xs, v=vs, q=qs, heat_left=hl, heat_right=hr, heat_osc=ho,
        work_chem=wc, amplitude=amps, ledger=ledger, params=p,
    )


def simulate_ensemble(p: Params, workers: int | None = None) -> EnsembleSeries:
    """Simulate p.n_traj trajectories and reduce them.

    `workers` bounds the compiled thread pool; the reduction is performed in
    fixed trajectory order with compensated summation, so the statistics are
    identical for any worker count.  Any per-trajectory fault aborts the
    ensemble with the failing index and seed in the exception.
    """
    n_steps, out_stride, n_out = _grid_shape(p)
    n = p.n_traj
    n_cyc = _n_cycles(p)

    XS = np.empty((n, n_out))
    VS = np.empty((n, n_out))
    QS = np.empty((n, n_out), dtype=np.int8)
    HL = np.empty((n, n_out))
    HR = np.empty((n, n_out))
    HO = np.empty((n, n_out))
    WC = np.empty((n, n_out))
    AMPS = np.zeros((n, n_cyc))
    COUNTS = np.zeros((n, 4), dtype=np.int64)
    ESUMS = np.zeros((n, 2))
    STATUS = np.zeros(n, dtype=np.int64)
    FSTEP = np.zeros(n, dtype=np.int64)

    if workers is not None:
        workers = max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))
        prev = numba.get_num_threads()
        numba.set_num_threads(workers)
    try:
        kernels.run_ensemble(
            np.uint64(int(p.master_seed) & U64_MASK_INT), n, -abs(p.x0), p.v0, p.q0,
            n_steps, out_stride,
            *_kernel_args(p), p.tau_cycle,
            XS, VS, QS, HL, HR, HO, WC,
            AMPS, COUNTS, ESUMS, STATUS, FSTEP,
        )
    finally:
        if workers is not None:
            numba.set_num_threads(prev)

    bad = np.nonzero(STATUS != STATUS_OK)[0]
    if bad.size:
        i = int(bad[0])
        _raise_fault(int(STATUS[i]), int(FSTEP[i]), p, i, p.master_seed)

    t = np.arange(n_out) * p.out_dt

    qf = QS.astype(np.float64)
    u_osc_rows = 0.5 * p.mass * VS**2 + 0.5 * p.spring_k * XS**2
    u_dot_rows = (p.eps0 - p.force_scale * XS) * qf
    u_joint_rows = u_osc_rows + u_dot_rows
    resid_rows = (u_joint_rows - u_joint_rows[:, :1]) - (HL + HR + HO + WC)

    def stat(rows):
        mean, sem = kernels.kahan_mean_sem(np.ascontiguousarray(rows))
        return SeriesStat(mean=mean, sem=sem)

    series = EnsembleSeries(
        t=t,
        occupation=stat(qf),
        position=stat(XS),
        velocity=stat(VS),
        velocity_sq=stat(VS**2),
        u_osc=stat(u_osc_rows),
        u_dot=stat(u_dot_rows),
        u_joint=stat(u_joint_rows),
        heat_left=stat(HL),
        heat_right=stat(HR),
        heat_osc=stat(HO),
        work_chem=stat(WC),
        first_law_residual=stat(resid_rows),
        amplitude=stat(AMPS) if n_cyc else SeriesStat(np.empty(0), np.empty(0)),
        amplitude_t=(np.arange(n_cyc) + 1.0) * p.tau_cycle,
        checkpoints=_checkpoints(p, t, XS, VS, QS),
        jump_totals=COUNTS.sum(axis=0),
        n_traj=n,
        params=p,
    )
    return series


def _checkpoints(p: Params, t: np.ndarray, XS, VS, QS) -> tuple[CheckpointSnapshot, ...]:
    snaps = []
    for idx in iter_checkpoint_indices(p):
        hist = PhaseHistogram.from_samples(
            XS[:, idx], VS[:, idx], QS[:, idx],
            x_max=p.hist_x_max, v_max=p.hist_v_max, bins=p.hist_bins,
        )
        snaps.append(CheckpointSnapshot(t=float(t[idx]), index=idx, histogram=hist))
    return tuple(snaps)
