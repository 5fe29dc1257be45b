"""Physical model of the shuttle: parameters, tunneling rates, forces.

A single-level quantum dot with occupation q in {0, 1} sits on a damped
harmonic oscillator at position x between two leads held at chemical
potentials mu_left > mu_right.  The dot level is pulled linearly by the bias
field, the tunnel couplings decay exponentially with distance to each lead,
and the occupied dot feels a constant electrostatic force along the bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .units import KB_EV_PER_K, friction_from_kg_per_s, mass_from_kg


class ParameterError(ValueError):
    """Invalid parameter set; `problems` lists every violation found."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid parameters:\n  " + "\n  ".join(problems))
        self.problems = list(problems)


@dataclass(frozen=True)
class Params:
    """Model and run parameters in internal units (nm, ns, eV, e = 1).

    Attributes
    ----------
    omega : float
        Angular frequency of the oscillator [1/ns].
    mass : float
        Oscillator mass [eV ns^2/nm^2].
    gamma : float
        Friction coefficient [eV ns/nm^2].
    temperature : float
        Common temperature of leads and oscillator bath [K].
    alpha : float
        Lever arm of the bias field on the dot level [1/nm].
    voltage : float
        Bias voltage [V]; the energy drop e*V equals `voltage` in eV.
    gamma0 : float
        Bare tunneling rate at x = 0 [1/ns].
    lam : float
        Tunneling decay length [nm].
    eps0 : float
        Dot level offset at x = 0 [eV].
    mu_left, mu_right : float
        Lead chemical potentials [eV]; defaults are eps0 +- voltage/2.
    x0 : float
        Initial displacement magnitude [nm]; trajectories start at (-|x0|, v0).
    v0 : float
        Initial velocity [nm/ns].
    q0 : int
        Initial occupation, 0 or 1.
    dt : float
        Trajectory time step [ns].
    t_final : float
        Simulation horizon [ns].
    n_traj : int
        Ensemble size.
    master_seed : int
        Seed from which per-trajectory streams are derived.
    out_dt : float
        Spacing of the recorded output grid [ns]; must be a multiple of dt.
    checkpoint_times : tuple of float or None
        Times at which phase-space histograms are recorded; None selects
        every full oscillation period plus t_final.
    hist_x_max, hist_v_max : float
        Half-extent of the histogram grid in x [nm] and v [nm/ns].
    hist_bins : int
        Number of bins per histogram axis.
    """

    omega: float = 0.25
    mass: float = field(default_factory=lambda: mass_from_kg(20e-19))
    gamma: float = field(default_factory=lambda: friction_from_kg_per_s(0.05e-10))
    temperature: float = 1.0
    alpha: float = 0.01
    voltage: float = 25.0
    gamma0: float = 0.01
    lam: float = 1.0
    eps0: float = 0.0
    mu_left: float | None = None
    mu_right: float | None = None
    x0: float = 6.0
    v0: float = 0.0
    q0: int = 1
    dt: float = 1e-4
    t_final: float = 250.0
    n_traj: int = 1000
    master_seed: int = 2024
    out_dt: float = 0.1
    checkpoint_times: tuple[float, ...] | None = None
    hist_x_max: float = 12.0
    hist_v_max: float = 12.0
    hist_bins: int = 120

    def __post_init__(self):
        if self.mu_left is None:
            object.__setattr__(self, "mu_left", self.eps0 + 0.5 * self.voltage)
        if self.mu_right is None:
            object.__setattr__(self, "mu_right", self.eps0 - 0.5 * self.voltage)
        errors = self.validate()
        if errors:
            raise ParameterError(errors)

    # -- derived quantities -------------------------------------------------

    @property
    def spring_k(self) -> float:
        """Spring constant m*omega^2 [eV/nm^2]."""
        return self.mass * self.omega**2

    @property
    def beta(self) -> float:
        """Inverse thermal energy 1/(k_B T) [1/eV]."""
        return 1.0 / (KB_EV_PER_K * self.temperature)

    @property
    def kt(self) -> float:
        """Thermal energy k_B T [eV]."""
        return KB_EV_PER_K * self.temperature

    @property
    def tau_cycle(self) -> float:
        """Oscillation period 2 pi / omega [ns]."""
        return 2.0 * math.pi / self.omega

    @property
    def force_scale(self) -> float:
        """Electrostatic force on the occupied dot, e*alpha*V [eV/nm]."""
        return self.alpha * self.voltage

    def with_updates(self, **kw) -> "Params":
        """Return a copy with the given fields replaced (re-validated)."""
        if ("voltage" in kw or "eps0" in kw) and not {"mu_left", "mu_right"} & kw.keys():
            # re-derive the chemical potentials unless explicitly overridden
            kw.setdefault("mu_left", None)
            kw.setdefault("mu_right", None)
        return replace(self, **kw)

    def validate(self) -> list[str]:
        """Return a list of human-readable invariant violations (empty if ok)."""
        errs = []
        for name in ("omega", "mass", "lam", "temperature", "dt", "out_dt"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be > 0, got {getattr(self, name)!r}")
        # gamma0 = 0 is the decoupled-dot limit and gamma = 0 the frictionless
        # one; both are useful controls, so only negative values are invalid.
        for name in ("gamma", "gamma0"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if self.x0 < 0:
            errs.append(f"x0 is a magnitude and must be >= 0, got {self.x0!r}")
        if self.q0 not in (0, 1):
            errs.append(f"q0 must be 0 or 1, got {self.q0!r}")
        if self.n_traj < 1:
            errs.append(f"n_traj must be >= 1, got {self.n_traj!r}")
        if self.t_final <= 0:
            errs.append(f"t_final must be > 0, got {self.t_final!r}")
        if self.hist_bins < 1:
            errs.append(f"hist_bins must be >= 1, got {self.hist_bins!r}")
        if self.hist_x_max <= 0 or self.hist_v_max <= 0:
            errs.append("histogram half-extents must be > 0")
        if self.mu_left is not None and self.mu_right is not None:
            drop = self.mu_left - self.mu_right
            if abs(drop - self.voltage) > 1e-9 * max(1.0, abs(self.voltage)):
                errs.append(
                    f"mu_left - mu_right = {drop!r} must equal voltage = {self.voltage!r}"
                )
        if self.dt > 0 and self.out_dt > 0:
            stride = self.out_dt / self.dt
            if abs(stride - round(stride)) > 1e-6 * max(1.0, stride):
                errs.append(
                    f"out_dt = {self.out_dt!r} must be an integer multiple of dt = {self.dt!r}"
                )
            if self.t_final > 0:
                n_out = self.t_final / self.out_dt
                if abs(n_out - round(n_out)) > 1e-6 * max(1.0, n_out):
                    errs.append(
                        f"t_final = {self.t_final!r} must be an integer multiple of out_dt"
                    )
        if self.checkpoint_times is not None:
            for t in self.checkpoint_times:
                if not (0.0 <= t <= self.t_final):
                    errs.append(f"checkpoint time {t!r} outside [0, t_final]")
        return errs

    def default_checkpoints(self) -> tuple[float, ...]:
        """Checkpoint schedule: every full period from 0, plus t_final."""
        if self.checkpoint_times is not None:
            return tuple(self.checkpoint_times)
        n_full = int(math.floor(self.t_final / self.tau_cycle))
        times = [k * self.tau_cycle for k in range(n_full + 1)]
        if times[-1] < self.t_final:
            times.append(self.t_final)
        return tuple(times)


@dataclass(frozen=True)
class RateMatrix:
    """Per-lead occupation generators at a fixed position [1/ns].

    Each 2x2 block acts on the occupation distribution (P0, P1)^T, with
    column convention dP/dt = (left + right) @ P; columns sum to zero.
    """

    left: np.ndarray
    right: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.left + self.right


def fermi(energy, mu, temperature):
    """Fermi-Dirac occupation f(E) = 1 / (exp(beta (E - mu)) + 1).

    Overflow-safe for arguments as extreme as beta*(E - mu) = +-1e6, where
    the result saturates to exactly 0.0 / 1.0.  Accepts scalars or arrays.

    Parameters
    ----------
    energy : float or ndarray
        Level energy [eV].
    mu : float
        Chemical potential [eV].
    temperature : float
        Temperature [K].
    """
    beta = 1.0 / (KB_EV_PER_K * temperature)
    d = beta * (np.asarray(energy, dtype=float) - mu)
    # exp only ever sees non-positive arguments, so it saturates to 0.0
    # instead of overflowing; both branches are algebraically exact.
    ez = np.exp(-np.abs(d))
    out = np.where(d >= 0.0, ez / (1.0 + ez), 1.0 / (1.0 + ez))
    if np.ndim(energy) == 0:
        return float(out)
    return out


def tunneling_rate(x, p: Params, lead: str):
    """Tunnel coupling Gamma_lead(x) [1/ns].

    The left barrier thins as the dot approaches the left lead (x < 0) and
    vice versa: Gamma_L(x) = gamma0 exp(-x/lam), Gamma_R(x) = Gamma_L(-x).
    """
    x = np.asarray(x, dtype=float)
    if lead in ("left", "L"):
        r = p.gamma0 * np.exp(-x / p.lam)
    elif lead in ("right", "R"):
        r = p.gamma0 * np.exp(x / p.lam)
    else:
        raise ValueError(f"lead must be 'left' or 'right', got {lead!r}")
    if r.ndim == 0:
        return float(r)
    return r


def level_energy(x, p: Params):
    """Dot level eps(x) = eps0 - e alpha V x [eV]."""
    return p.eps0 - p.force_scale * np.asarray(x, dtype=float)


def charging_energy(q: int, x, p: Params):
    """Electrostatic energy of occupation q at position x: q * eps(x) [eV]."""
    return q * level_energy(x, p)


def electrostatic_force(q: int, p: Params) -> float:
    """Force on the oscillator from the occupied dot, +e alpha V q [eV/nm].

    Positive along the bias (from the left lead toward the right lead).
    """
    return p.force_scale * q


def rate_matrix(x: float, p: Params) -> RateMatrix:
    """Occupation generators R^L(x), R^R(x) for the master equation.

    For each lead, the gain rate 0 -> 1 is Gamma(x) f(eps(x)) and the loss
    rate 1 -> 0 is Gamma(x) (1 - f(eps(x))), with f evaluated at that lead's
    chemical potential.

    Returns
    -------
    RateMatrix
        Blocks with columns summing to zero (probability conservation).
    """
    eps = level_energy(x, p)
    blocks = []
    for lead, mu in (("left", p.mu_left), ("right", p.mu_right)):
        g = tunneling_rate(x, p, lead)
        f = fermi(eps, mu, p.temperature)
        gain = g * f
        loss = g * (1.0 - f)
        blocks.append(np.array([[-gain, loss], [gain, -loss]], dtype=float))
    return RateMatrix(left=blocks[0], right=blocks[1])


def jump_rates(x: float, q: int, p: Params) -> tuple[float, float]:
    """Active channel rates (left, right) out of occupation q at position x."""
    eps = float(level_energy(x, p))
    out = []
    for lead, mu in (("left", p.mu_left), ("right", p.mu_right)):
        g = tunneling_rate(x, p, lead)
        f = fermi(eps, mu, p.temperature)
        out.append(g * f if q == 0 else g * (1.0 - f))
    return out[0], out[1]


def sm_defaults(**overrides) -> Params:
    """The reference parameter point used throughout the analysis."""
    return Params(**overrides) if overrides else Params()


def require_valid(p: Params) -> None:
    errs = p.validate()
    if errs:
        raise ParameterError(errs)


def as_internal_dict(p: Params) -> dict[str, object]:
    """Flat dict of all parameter fields in internal units (for manifests)."""
    d = {}
    for name in p.__dataclass_fields__:
        d[name] = getattr(p, name)
    d["spring_k"] = p.spring_k
    d["tau_cycle"] = p.tau_cycle
    d["force_scale"] = p.force_scale
    return d


def iter_checkpoint_indices(p: Params) -> list[int]:
    """Output-grid indices of the checkpoint schedule (sorted, deduplicated)."""
    n_out = int(round(p.t_final / p.out_dt))
    idx = sorted({min(n_out, max(0, int(round(t / p.out_dt)))) for t in p.default_checkpoints()})
    return idx
