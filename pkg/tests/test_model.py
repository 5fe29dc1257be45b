"""Parameter container, rates, and energy helpers."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shuttlesim import (
    ParameterError,
    Params,
    fermi,
    level_energy,
    rate_matrix,
    sm_defaults,
    tunneling_rate,
)
from shuttlesim.model import (
    as_internal_dict,
    charging_energy,
    electrostatic_force,
    iter_checkpoint_indices,
    jump_rates,
    require_valid,
)

KB = 8.617333262e-5


def test_defaults_derived_quantities():
    p = sm_defaults()
    assert p.spring_k == pytest.approx(0.7801886343075954, rel=1e-14)
    assert p.tau_cycle == pytest.approx(25.132741228718345, rel=1e-14)
    assert p.beta == pytest.approx(11604.518121745585, rel=1e-12)
    assert p.kt == pytest.approx(KB, rel=1e-14)
    assert p.force_scale == pytest.approx(0.25, rel=1e-14)
    # quality factor m*omega/gamma of the stock resonator
    assert p.mass * p.omega / p.gamma == pytest.approx(100.0, rel=1e-12)


def test_chemical_potentials_derived_from_bias():
    p = sm_defaults()
    assert p.mu_left == 12.5
    assert p.mu_right == -12.5
    shifted = sm_defaults(eps0=1.0)
    assert shifted.mu_left == 13.5
    assert shifted.mu_right == -11.5


def test_with_updates_rederives_potentials():
    p = sm_defaults().with_updates(voltage=10.0)
    assert (p.mu_left, p.mu_right) == (5.0, -5.0)
    q = sm_defaults().with_updates(voltage=10.0, mu_left=7.0, mu_right=-3.0)
    assert (q.mu_left, q.mu_right) == (7.0, -3.0)


def test_validation_collects_all_problems():
    with pytest.raises(ParameterError) as exc:
        Params(mass=-1.0, dt=0.3, out_dt=0.1, q0=2)
    msgs = exc.value.problems
    assert len(msgs) >= 3
    assert any("mass" in m for m in msgs)
    assert any("q0" in m for m in msgs)
    assert any("out_dt" in m for m in msgs)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_traj": 0},
        {"x0": -2.0},
        {"t_final": 1.05},
        {"checkpoint_times": (300.0,)},
        {"mu_left": 5.0, "mu_right": 0.0},
        {"gamma": -1e-3},
        {"gamma0": -1e-3},
        {"hist_x_max": 0.0},
    ],
)
def test_validation_rejects(kwargs):
    with pytest.raises(ParameterError):
        sm_defaults(**kwargs)


def test_zero_coupling_and_zero_friction_are_valid():
    require_valid(sm_defaults(gamma0=0.0))
    require_valid(sm_defaults(gamma=0.0))
    require_valid(sm_defaults(voltage=-25.0))


def test_params_frozen():
    p = sm_defaults()
    with pytest.raises(dataclasses.FrozenInstanceError):
        p.mass = 1.0


def test_default_checkpoints_cover_whole_periods():
    p = sm_defaults()
    cps = p.default_checkpoints()
    assert cps[0] == 0.0
    assert cps[-1] == p.t_final
    assert np.allclose(np.diff(cps[:-1]), p.tau_cycle)
    assert len(cps) == 11
    idx = iter_checkpoint_indices(p)
    assert idx[0] == 0
    assert idx[-1] == round(p.t_final / p.out_dt)
    assert list(idx) == sorted(set(idx))


def test_fermi_reference_points():
    assert fermi(0.0, 0.0, 1.0) == 0.5
    kt = KB * 1.0
    assert fermi(kt, 0.0, 1.0) == pytest.approx(1.0 / (np.e + 1.0), rel=1e-12)
    # deep saturation must not overflow and lands exactly on 0 / 1
    assert fermi(1000.0, 0.0, 1.0) == 0.0
    assert fermi(-1000.0, 0.0, 1.0) == 1.0


@given(
    e=st.floats(-50.0, 50.0),
    mu=st.floats(-50.0, 50.0),
    temp=st.floats(0.01, 300.0),
)
@settings(deadline=None)
def test_fermi_bounded_and_symmetric(e, mu, temp):
    f = fermi(e, mu, temp)
    assert 0.0 <= f <= 1.0
    # particle-hole symmetry about the chemical potential
    assert f + fermi(2.0 * mu - e, mu, temp) == pytest.approx(1.0, abs=1e-12)


@given(lo=st.floats(-5.0, 5.0), hi=st.floats(-5.0, 5.0))
@settings(deadline=None)
def test_fermi_monotone_decreasing(lo, hi):
    a, b = sorted((lo, hi))
    assert fermi(a, 0.0, 1.0) >= fermi(b, 0.0, 1.0)


def test_tunneling_rate_reference_value():
    p = sm_defaults()
    assert tunneling_rate(-6.0, p, "left") == pytest.approx(
        4.0342879349273515, rel=1e-14
    )
    with pytest.raises(ValueError):
        tunneling_rate(0.0, p, "middle")


@given(x=st.floats(-10.0, 10.0))
@settings(deadline=None)
def test_lead_rates_mirror(x):
    p = sm_defaults()
    assert tunneling_rate(x, p, "right") == pytest.approx(
        tunneling_rate(-x, p, "left"), rel=1e-12
    )


@given(x=st.floats(-10.0, 10.0))
@settings(deadline=None)
def test_rate_matrix_columns_sum_to_zero(x):
    p = sm_defaults()
    total = rate_matrix(x, p).total
    assert np.allclose(total.sum(axis=0), 0.0, atol=1e-12)
    assert total[1, 0] >= 0.0
    assert total[0, 1] >= 0.0


def test_jump_rates_match_rate_matrix():
    p = sm_defaults()
    for x in (-6.0, 0.0, 3.7):
        rm = rate_matrix(x, p).total
        gain_l, gain_r = jump_rates(x, 0, p)
        assert gain_l + gain_r == pytest.approx(rm[1, 0], rel=1e-12)
        loss_l, loss_r = jump_rates(x, 1, p)
        assert loss_l + loss_r == pytest.approx(rm[0, 1], rel=1e-12)


@given(shift=st.floats(-5.0, 5.0), x=st.floats(-8.0, 8.0))
@settings(deadline=None)
def test_rates_invariant_under_common_energy_shift(shift, x):
    p = sm_defaults()
    q = sm_defaults(
        eps0=shift, mu_left=12.5 + shift, mu_right=-12.5 + shift
    )
    for occ in (0, 1):
        assert jump_rates(x, occ, q) == pytest.approx(
            jump_rates(x, occ, p), rel=1e-9, abs=1e-15
        )


def test_level_energy_and_force():
    p = sm_defaults()
    assert level_energy(0.0, p) == 0.0
    assert level_energy(-6.0, p) == pytest.approx(1.5, rel=1e-14)
    assert electrostatic_force(1, p) == pytest.approx(0.25, rel=1e-14)
    assert electrostatic_force(0, p) == 0.0
    assert charging_energy(1, -6.0, p) == pytest.approx(1.5, rel=1e-14)
    assert charging_energy(0, -6.0, p) == 0.0


def test_internal_dict_reports_derived_values():
    d = as_internal_dict(sm_defaults())
    assert d["spring_k"] == pytest.approx(0.7801886343075954)
    assert d["tau_cycle"] == pytest.approx(25.132741228718345)
    assert d["force_scale"] == 0.25
