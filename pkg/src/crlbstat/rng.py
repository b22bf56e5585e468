"""Counter-based uniform draws (Philox4x32-10).

Every uniform is a pure function of ``(master_seed, trial, anchor)``: the
master seed is the Philox key and ``(anchor, trial_lo, trial_hi, 0)`` is the
counter. Trials can therefore be evaluated in any order, on any number of
workers, and in any chunking without changing a single bit of output.
"""

from __future__ import annotations

import numpy as np

__all__ = ["philox4x32", "anchor_uniforms", "validate_seed", "SEED_MAX"]

SEED_MAX = 2**64 - 1

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_LO32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10


def validate_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def philox4x32(counter, key, rounds: int = _ROUNDS):
    """Vectorized Philox4x32 block function.

    Args:
        counter: four broadcastable arrays of 32-bit words.
        key: pair of 32-bit Python ints.
        rounds: number of rounds (10 for the standard generator).

    Returns:
        Tuple of four ``uint64`` arrays holding the 32-bit output words.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) for c in counter))
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for _ in range(rounds):
        p0 = c0 * _M0
        p1 = c2 * _M1
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ np.uint64(k0),
            p1 & _LO32,
            (p0 >> _SHIFT32) ^ c3 ^ np.uint64(k1),
            p0 & _LO32,
        )
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 53-bit double in [0, 1)
    return ((hi >> np.uint64(5)).astype(np.float64) * 67108864.0
            + (lo >> np.uint64(6)).astype(np.float64)) * (1.0 / 9007199254740992.0)


def anchor_uniforms(seed: int, trials, n: int):
    """Two independent uniforms on [0, 1) for each (trial, anchor) pair.

    Returns:
        ``(u_radius, u_angle)``, each of shape ``(len(trials), n)``.
    """
    seed = validate_seed(seed)
    trials = np.asarray(trials, dtype=np.uint64).reshape(-1, 1)
    anchors = np.arange(n, dtype=np.uint64).reshape(1, -1)
    x0, x1, x2, x3 = philox4x32(
        (anchors, trials & _LO32, trials >> _SHIFT32, np.uint64(0)),
        (seed & 0xFFFFFFFF, seed >> 32),
    )
    return _to_unit(x0, x1), _to_unit(x2, x3)
