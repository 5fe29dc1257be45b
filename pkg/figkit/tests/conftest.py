"""Synthetic run directories shaped like the simulator's output."""

import csv

import numpy as np
import pytest


def write_csv(path, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(columns))
        for row in zip(*columns.values()):
            writer.writerow([repr(float(v)) if isinstance(v, float) else str(v)
                             for v in row])
    return path


@pytest.fixture
def fig2_dir(tmp_path):
    phase = np.linspace(0.0, 4.0 * np.pi, 200)
    eps = 1.5 * np.cos(phase)
    p1 = 0.5 + 0.45 * np.sin(phase)
    write_csv(tmp_path / "parametric.csv", {
        "t [ns]": list(np.concatenate([phase, phase]) * 4.0),
        "eps [eV]": list(np.concatenate([eps, eps * 1.02])),
        "P1 [-]": list(np.concatenate([p1, np.clip(p1 * 0.98, 0, 1)])),
        "source": ["reduced"] * 200 + ["ensemble"] * 200,
    })
    return tmp_path


@pytest.fixture
def fig3_dir(tmp_path):
    rows = {
        "m [kg]": [], "gamma_mult [-]": [], "dU_O [eV]": [],
        "dU_O_stderr [eV]": [], "Q_O [eV]": [], "Q_O_stderr [eV]": [],
        "W_mech_reduced [eV]": [],
    }
    for m_mult in (1.0, 2.0, 4.0):
        for g_mult, du, q in ((0.1, 18.0, -1.2), (1.0, 9.0, -10.0),
                              (10.0, 1.5, -40.0)):
            rows["m [kg]"].append(2e-18 * m_mult)
            rows["gamma_mult [-]"].append(g_mult)
            rows["dU_O [eV]"].append(du * (1.0 + 0.05 * m_mult))
            rows["dU_O_stderr [eV]"].append(0.4)
            rows["Q_O [eV]"].append(q * (1.0 + 0.1 * m_mult))
            rows["Q_O_stderr [eV]"].append(0.3)
            rows["W_mech_reduced [eV]"].append(-21.0)
    write_csv(tmp_path / "sweep.csv", rows)
    return tmp_path


@pytest.fixture
def strokes_dir(tmp_path):
    tau = 25.132741228718345
    edges = [0.0, 5.0 / 24.0, 7.0 / 24.0, 17.0 / 24.0, 19.0 / 24.0, 1.0]
    labels = ["left-dissipative", "isentropic", "right-dissipative",
              "isentropic", "left-dissipative"]
    write_csv(tmp_path / "schedule.csv", {
        "label": labels,
        "start_frac": ["0", "5/24", "7/24", "17/24", "19/24"],
        "end_frac": ["5/24", "7/24", "17/24", "19/24", "1"],
        "start [ns]": [e * tau for e in edges[:-1]],
        "end [ns]": [e * tau for e in edges[1:]],
    })
    t = np.linspace(0.0, tau, 481)
    eps = 1.5 * np.cos(2.0 * np.pi * t / tau)
    p1 = 0.5 - 0.5 * np.tanh(4.0 * np.cos(2.0 * np.pi * t / tau + 0.4))
    write_csv(tmp_path / "cycle.csv", {
        "t [ns]": list(t),
        "eps [eV]": list(eps),
        "P1_stroke [-]": list(p1),
        "P1_reduced [-]": list(np.clip(p1 * 1.05, 0, 1)),
    })
    return tmp_path
