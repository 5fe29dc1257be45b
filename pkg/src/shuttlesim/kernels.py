"""Compiled inner loops for the jump-diffusion engine.

One underdamped Langevin step (velocity kick first, then position drift with
the updated velocity) is combined with at most one occupation jump sampled by
first-order thinning.  The same single-step routine backs both the public
one-step API and the full-trajectory loop, so there is exactly one
implementation of the dynamics.

Status codes returned by the loops:
    0  clean finish
    1  thinning cap violated: dt * (active jump rate) >= 0.1; reduce dt
    2  non-finite state encountered
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .rng import next_normal, next_uniform, stream_state

RATE_CAP = 0.1  # hard bound on dt * (total active jump rate)

STATUS_OK = 0
STATUS_RATE_CAP = 1
STATUS_NON_FINITE = 2

# jump codes emitted by the step core
JUMP_NONE = 0
JUMP_IN_LEFT = 1
JUMP_OUT_LEFT = 2
JUMP_IN_RIGHT = 3
JUMP_OUT_RIGHT = 4


@njit(cache=True, inline="always")
def _fermi_scalar(d):
    # logistic in -d, exact 0/1 saturation; the cheap branches skip exp()
    # entirely in the deep tails without changing the IEEE result.
    if d > 745.0:
        return 0.0
    if d < -745.0:
        return 1.0
    e = np.exp(-abs(d))
    if d >= 0.0:
        return e / (1.0 + e)
    return 1.0 / (1.0 + e)


@njit(cache=True, inline="always")
def step_core(
    x, v, qf, state, have_spare, spare,
    dt, cv, cx, cq, imp, inv_m, gdt,
    g0, g0sq, inv_lam, eav, eps0, beta, mu_l, mu_r,
):
    """Advance one step.  Returns the new state plus ledger increments.

    (x, v, qf, state, have_spare, spare,
     d_heat_left, d_heat_right, d_heat_osc, d_work_chem, jump_code, status)
    """
    state, have_spare, spare, nrm = next_normal(state, have_spare, spare)
    xi = imp * nrm                      # thermal noise impulse [eV ns/nm]
    vn = v * cv + x * cx + qf * cq + xi * inv_m
    vbar = 0.5 * (v + vn)
    d_heat_osc = (xi - gdt * vbar) * vbar
    x = x + vn * dt
    v = vn

    if g0 == 0.0:
        gl = 0.0
        gr = 0.0
    else:
        gl = g0 * np.exp(-x * inv_lam)
        gr = g0sq / gl
    eps = eps0 - eav * x
    fl = _fermi_scalar(beta * (eps - mu_l))
    fr = _fermi_scalar(beta * (eps - mu_r))
    if qf == 0.0:
        ra = gl * fl
        rb = gr * fr
    else:
        ra = gl * (1.0 - fl)
        rb = gr * (1.0 - fr)

    d_heat_left = 0.0
    d_heat_right = 0.0
    d_work_chem = 0.0
    jump = JUMP_NONE
    status = STATUS_OK
    if (ra + rb) * dt >= RATE_CAP:
        status = STATUS_RATE_CAP
        return (x, v, qf, state, have_spare, spare,
                d_heat_left, d_heat_right, d_heat_osc, d_work_chem, jump, status)

    state, u = next_uniform(state)
    if u < (ra + rb) * dt:
        if qf == 0.0:
            if u < ra * dt:
                d_heat_left = eps - mu_l
                d_work_chem = mu_l
                jump = JUMP_IN_LEFT
            else:
                d_heat_right = eps - mu_r
                d_work_chem = mu_r
                jump = JUMP_IN_RIGHT
            qf = 1.0
        else:
            if u < ra * dt:
                d_heat_left = -(eps - mu_l)
                d_work_chem = -mu_l
                jump = JUMP_OUT_LEFT
            else:
                d_heat_right = -(eps - mu_r)
                d_work_chem = -mu_r
                jump = JUMP_OUT_RIGHT
            qf = 0.0

    return (x, v, qf, state, have_spare, spare,
            d_heat_left, d_heat_right, d_heat_osc, d_work_chem, jump, status)


@njit(cache=True)
def run_trajectory(
    stream0, x_init, v_init, q_init,
    n_steps, out_stride,
    dt, cv, cx, cq, imp, inv_m, gdt,
    g0, g0sq, inv_lam, eav, eps0, beta, mu_l, mu_r,
    tau_cycle,
    xs, vs, qs, heat_l, heat_r, heat_o, work_c,
    amps, counts, esums,
):
    """Simulate one trajectory into preallocated output rows.

    Cumulative ledgers are recorded on the output grid; `amps` receives the
    per-cycle maximum of |x| for each completed oscillation period; `counts`
    receives (in_left, out_left, in_right, out_right) jump totals; `esums`
    receives the signed sums of the level energy at left/right jump events.

    Returns (status, fault_step).
    """
    x = x_init
    v = v_init
    qf = float(q_init)
    state = stream0
    have_spare = False
    spare = 0.0

    ql = 0.0
    qr = 0.0
    qo = 0.0
    wc = 0.0

    xs[0] = x
    vs[0] = v
    qs[0] = np.int8(q_init)
    heat_l[0] = 0.0
    heat_r[0] = 0.0
    heat_o[0] = 0.0
    work_c[0] = 0.0

    out_i = 1
    next_out = out_stride
    n_cycles = amps.shape[0]
    cyc = 0
    amp = abs(x)
    next_cycle_t = tau_cycle

    for i in range(n_steps):
        (x, v, qf, state, have_spare, spare,
         dql, dqr, dqo, dwc, jump, status) = step_core(
            x, v, qf, state, have_spare, spare,
            dt, cv, cx, cq, imp, inv_m, gdt,
            g0, g0sq, inv_lam, eav, eps0, beta, mu_l, mu_r,
        )
        if status != STATUS_OK:
            return status, i
        ql += dql
        qr += dqr
        qo += dqo
        wc += dwc
        if jump == JUMP_IN_LEFT:
            counts[0] += 1
            esums[0] += eps0 - eav * x
        elif jump == JUMP_OUT_LEFT:
            counts[1] += 1
            esums[0] -= eps0 - eav * x
        elif jump == JUMP_IN_RIGHT:
            counts[2] += 1
            esums[1] += eps0 - eav * x
        elif jump == JUMP_OUT_RIGHT:
            counts[3] += 1
            esums[1] -= eps0 - eav * x

        ax = abs(x)
        if ax > amp:
            amp = ax
        if cyc < n_cycles and (i + 1) * dt >= next_cycle_t:
            amps[cyc] = amp
            cyc += 1
            amp = ax
            next_cycle_t = (cyc + 1) * tau_cycle

        if i + 1 == next_out:
            if not (np.isfinite(x) and np.isfinite(v)):
                return STATUS_NON_FINITE, i
            xs[out_i] = x
            vs[out_i] = v
            qs[out_i] = np.int8(qf)
            heat_l[out_i] = ql
            heat_r[out_i] = qr
            heat_o[out_i] = qo
            work_c[out_i] = wc
            out_i += 1
            next_out += out_stride

    return STATUS_OK, n_steps


@njit(parallel=True, cache=True)
def run_ensemble(
    master_seed, n_traj, x_init, v_init, q_init,
    n_steps, out_stride,
    dt, cv, cx, cq, imp, inv_m, gdt,
    g0, g0sq, inv_lam, eav, eps0, beta, mu_l, mu_r,
    tau_cycle,
    XS, VS, QS, HL, HR, HO, WC,
    AMPS, COUNTS, ESUMS, STATUS, FSTEP,
):
    """Fill per-trajectory output rows; iteration ti touches only row ti."""
    for ti in prange(n_traj):
        st = stream_state(np.uint64(master_seed), np.uint64(ti))
        status, fstep = run_trajectory(
            st, x_init, v_init, q_init,
            n_steps, out_stride,
            dt, cv, cx, cq, imp, inv_m, gdt,
            g0, g0sq, inv_lam, eav, eps0, beta, mu_l, mu_r,
            tau_cycle,
            XS[ti], VS[ti], QS[ti], HL[ti], HR[ti], HO[ti], WC[ti],
            AMPS[ti], COUNTS[ti], ESUMS[ti],
        )
        STATUS[ti] = status
        FSTEP[ti] = fstep


@njit(cache=True)
def kahan_mean_sem(a):
    """Column means and standard errors with compensated summation.

    Trajectories are accumulated in fixed index order, so the result is
    independent of how the simulation work was scheduled across threads.
    Standard errors use the n-1 normalization; for n == 1 they are NaN.
    """
    n, m = a.shape
    s = np.zeros(m)
    c = np.zeros(m)
    for i in range(n):
        for j in range(m):
            y = a[i, j] - c[j]
            t = s[j] + y
            c[j] = (t - s[j]) - y
            s[j] = t
    mean = s / n
    sem = np.full(m, np.nan)
    if n > 1:
        s2 = np.zeros(m)
        c2 = np.zeros(m)
        for i in range(n):
            for j in range(m):
                d = a[i, j] - mean[j]
                y = d * d - c2[j]
                t = s2[j] + y
                c2[j] = (t - s2[j]) - y
                s2[j] = t
        for j in range(m):
            sem[j] = np.sqrt(s2[j] / (n - 1) / n)
    return mean, sem
