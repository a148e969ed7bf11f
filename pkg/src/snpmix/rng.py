"""Counter-based uniforms keyed by (seed, snp, slot).

Each SNP owns a SplitMix64 stream whose state is a hash of (seed, snp
index); slot j of that stream is the j-th SplitMix64 output.  Any uniform
can be produced directly from its coordinates, so simulated panels do not
depend on generation order, chunking or thread count.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(k) for k in (30, 27, 31, 11))
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def stream_keys(seed, snp_index):
    """Per-SNP stream states for a 64-bit seed."""
    seed = np.uint64(int(seed) % (1 << 64))
    snp = np.asarray(snp_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(_mix(seed + _GOLDEN) ^ _mix(snp * _GOLDEN + _M2))


def uniforms(keys, slots):
    """Uniform doubles in [0, 1) for broadcast (key, slot) pairs."""
    keys = np.asarray(keys, dtype=np.uint64)
    slots = np.asarray(slots, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(keys + (slots + np.uint64(1)) * _GOLDEN)
    return (z >> _S11).astype(np.float64) * _INV53
