"""Shared fixtures.

The expensive runs (full-size ensembles, the 3x3 sweep) are session scoped
so the acceptance module and any statistics-hungry test share one copy.
Worker count is pinned before numba is first imported; results are
independent of it either way (fixed-order reductions), this just keeps the
thread pool from oversubscribing small containers.
"""

import os

os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from shuttlesim import (  # noqa: E402
    build_report,
    parse_config,
    simulate_ensemble,
    sm_defaults,
    solve_reduced,
)
from shuttlesim.experiments import _point_seed, run_experiment  # noqa: E402


def control_params():
    """Unbiased, undriven oscillator with the dot decoupled by symmetry.

    Zero bias and a centered resonator leave nothing to rectify, so the
    system must relax to equilibrium.  Friction is raised 300x (and the
    step widened accordingly) so the velocity autocorrelation time fits
    comfortably inside the run, and the histogram windows are shrunk to
    resolve the thermal cloud (sigma_x is about 0.01 nm here; the default
    12 nm window would put the whole distribution in one bin).
    """
    base = sm_defaults()
    return base.with_updates(
        voltage=0.0,
        x0=0.0,
        v0=0.0,
        q0=0,
        gamma=base.gamma * 300.0,
        dt=4e-3,
        hist_x_max=0.06,
        hist_v_max=0.015,
    )


def corner_params():
    """The heavy, weakly damped sweep corner (4x mass, 0.1x friction).

    Matches the figure3-sweep grid point bit for bit: same per-point seed,
    same histogram windows, same endpoint-only checkpoints.
    """
    base = sm_defaults()
    return base.with_updates(
        mass=base.mass * 4.0,
        gamma=base.gamma * 0.1,
        n_traj=500,
        master_seed=_point_seed(base.master_seed, 6),
        checkpoint_times=(0.0, base.t_final),
        hist_x_max=16.0,
        hist_v_max=16.0,
        hist_bins=160,
    )


SWEEP_CONFIG = """\
kind = figure3-sweep
n_traj = 500
"""


@pytest.fixture(scope="session")
def ens_defaults():
    return simulate_ensemble(sm_defaults())


@pytest.fixture(scope="session")
def red_defaults():
    return solve_reduced(sm_defaults())


@pytest.fixture(scope="session")
def report_defaults(ens_defaults):
    return build_report(ens_defaults)


@pytest.fixture(scope="session")
def control_run():
    ens = simulate_ensemble(control_params())
    return ens, build_report(ens)


@pytest.fixture(scope="session")
def corner_run():
    ens = simulate_ensemble(corner_params())
    return ens, build_report(ens)


@pytest.fixture(scope="session")
def sweep_run(tmp_path_factory):
    cfg = parse_config(SWEEP_CONFIG)
    out = tmp_path_factory.mktemp("sweep")
    return run_experiment(cfg, out_dir=out)


@pytest.fixture()
def quick_params():
    """Small, fast parameter set for plumbing tests."""
    return sm_defaults(n_traj=4, t_final=2.0, dt=1e-3)


def window_mean(t, series, t_min):
    sel = t >= t_min
    return float(np.mean(series[sel]))
