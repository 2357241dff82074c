"""Counter-based random substreams.

Every replication owns a SplitMix64 stream whose 64-bit key is derived
from (master seed, stream id, replication index). The draw at step n is a
pure function of (key, n), so a replication produces identical numbers
whether it runs alone, in a batch, or on another thread.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GAMMA_INT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(_GAMMA_INT)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_REP_BITS = 40
_TWO_M53 = 2.0 ** -53


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 output finaliser (a bijection on uint64)."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def stream_keys(master_seed: int, stream: int, reps) -> np.ndarray:
    """Per-replication keys for one stream (e.g. one hypothesis)."""
    if not 0 <= master_seed < 2 ** 64:
        raise ValueError("master seed must fit in 64 unsigned bits")
    if not 0 <= stream < 2 ** (64 - _REP_BITS):
        raise ValueError("stream id out of range")
    reps = np.atleast_1d(np.asarray(reps, dtype=np.uint64))
    if reps.size and int(reps.max()) >= 2 ** _REP_BITS:
        raise ValueError("replication index out of range")
    base = _mix64(np.array([master_seed], dtype=np.uint64) + _GAMMA)
    counter = (np.uint64(stream) << np.uint64(_REP_BITS)) | reps
    return _mix64(base + _GAMMA * (counter + np.uint64(1)))


def uniforms(keys: np.ndarray, step: int) -> np.ndarray:
    """U(0,1) draws (never exactly 0 or 1) at one step for each key."""
    offset = np.uint64((_GAMMA_INT * (step + 1)) & _MASK64)
    z = _mix64(keys + offset)
    return ((z >> _S11).astype(np.float64) + 0.5) * _TWO_M53


def normals(keys: np.ndarray, step: int) -> np.ndarray:
    return ndtri(uniforms(keys, step))


# step 0 is reserved for per-replication choices (e.g. a proposal component)
FIRST_OBSERVATION_STEP = 1


def observation_stream(mean: float, sd: float, master_seed: int, stream: int, rep: int):
    """Endless raw observations mean + sd * Z for one replication.

    Yields exactly the values the vectorised engine draws for the same
    (seed, stream, rep).
    """
    key = stream_keys(master_seed, stream, [rep])
    step = FIRST_OBSERVATION_STEP
    while True:
        yield float(mean + sd * normals(key, step)[0])
        step += 1
