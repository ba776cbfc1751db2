"""Counter-based deterministic random number generator.

All synthetic data in epgauge flows from this generator so that a (seed,
position) pair fully determines every draw, independently of how many
values were requested before or of any library's internal generator state.

The generator is a 64-bit mixing function applied to an affine counter
(the splitmix64 construction).  For stream position ``i`` (0-based):

    state(i)  = (seed + (i + 1) * 0x9E3779B97F4A7C15)  mod 2**64
    output(i) = mix(state(i))

    mix(z):  z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;  (mod 2**64)
             z ^= z >> 27;  z *= 0x94D049BB133111EB;  (mod 2**64)
             z ^= z >> 31
             return z

Uniform doubles take the top 53 bits of the output and map them to the
half-open-above interval (0, 1]:

    u(i) = ((output(i) >> 11) + 1) * 2**-53

so u is never 0 (safe under log) and u = 1 is attainable.  Normal deviates
are produced from consecutive uniform pairs by the Box-Muller transform.

Because the state is a pure function of (seed, i), arbitrary subranges of
a stream can be generated independently and in parallel, and substreams
are derived by using earlier outputs as child seeds (see `derive_seed`).
The full recipe also lives in docs/rng.md.
"""

from __future__ import annotations

import numpy as np

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1

#: uniforms map the top 53 output bits into (0, 1] with this step
_U53 = 2.0**-53


def mix64(z: int) -> int:
    """Scalar 64-bit finalizer; reference implementation for the stream."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MIX1) & _MASK64
    z ^= z >> 27
    z = (z * _MIX2) & _MASK64
    z ^= z >> 31
    return z


def raw_stream(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs at stream positions [start, start + count) as uint64."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    idx = np.arange(start, start + count, dtype=np.uint64)
    z = np.uint64(seed & _MASK64) + (idx + np.uint64(1)) * np.uint64(_GAMMA)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform float64 draws in (0, 1] at stream positions [start, start+count)."""
    raw = raw_stream(seed, start, count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * _U53


def normals(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normal draws via Box-Muller on consecutive uniform pairs.

    Consumes 2 * ceil(count / 2) stream positions beginning at `start`.
    """
    n_pairs = (count + 1) // 2
    u = uniforms(seed, start, 2 * n_pairs)
    u1 = u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * n_pairs, dtype=np.float64)
    out[0::2] = r * np.cos(2.0 * np.pi * u2)
    out[1::2] = r * np.sin(2.0 * np.pi * u2)
    return out[:count]


def derive_seed(seed: int, stream_id: int) -> int:
    """Child seed for an independent substream: output `stream_id` of the parent."""
    if stream_id < 0:
        raise ValueError(f"stream_id must be >= 0, got {stream_id}")
    return mix64((seed + (stream_id + 1) * _GAMMA) & _MASK64)
