"""Deterministic per-trajectory random streams.

Each trajectory draws from its own splitmix64 sequence whose starting state
is an avalanche mix of (master_seed, trajectory_index).  Streams are pure
functions of those two integers, so results do not depend on how trajectories
are scheduled across workers, and distinct indices land at pseudo-random
offsets of the 2^64-period cycle (overlap probability for realistic stream
counts and lengths is negligible).

Normals come from the Box-Muller transform with the spare value cached, so a
stream consumes uniforms in a fixed, reproducible pattern.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
U64_MASK_INT = 0xFFFFFFFFFFFFFFFF  # python-int mask for boxing boundaries
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0xD1342543DE82EF95)
_INV_2_53 = 1.1102230246251565e-16  # 2**-53
_TWO_PI = 6.283185307179586


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def next_u64(state):
    """Advance a splitmix64 state; returns (new_state, 64 random bits)."""
    state = state + _GOLDEN
    return state, _mix64(state)


@njit(cache=True, inline="always")
def next_uniform(state):
    """Uniform double in [0, 1) with 53 random bits."""
    state, z = next_u64(state)
    return state, (z >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def stream_state(master_seed, index):
    """Initial stream state for trajectory `index` under `master_seed`."""
    z = np.uint64(master_seed) ^ ((np.uint64(index) + np.uint64(1)) * _STREAM_SALT)
    return _mix64(z + _GOLDEN)


@njit(cache=True, inline="always")
def next_normal(state, have_spare, spare):
    """Standard normal via Box-Muller; carries the cached second value."""
    if have_spare:
        return state, False, 0.0, spare
    state, u1 = next_uniform(state)
    state, u2 = next_uniform(state)
    r = np.sqrt(-2.0 * np.log(1.0 - u1))
    theta = _TWO_PI * u2
    return state, True, r * np.sin(theta), r * np.cos(theta)


class RngStream:
    """Python-side view of one trajectory stream (same draw pattern as the
    compiled kernels; used by the single-step API and by tests)."""

    def __init__(self, master_seed: int, index: int = 0):
        # mask before boxing: plain python ints outside [0, 2^63) would
        # otherwise fail numba's int64 unboxing on later calls
        self.state = np.uint64(
            stream_state(
                np.uint64(int(master_seed) & U64_MASK_INT),
                np.uint64(int(index) & U64_MASK_INT),
            )
        )
        self._have_spare = False
        self._spare = 0.0

    def uniform(self) -> float:
        st, u = next_uniform(self.state)
        self.state = np.uint64(st)
        return float(u)

    def normal(self) -> float:
        st, self._have_spare, self._spare, val = next_normal(
            self.state, self._have_spare, self._spare
        )
        self.state = np.uint64(st)
        return float(val)
