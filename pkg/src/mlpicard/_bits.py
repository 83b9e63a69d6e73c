"""Counter-based raw bit generation (Philox-4x32, 10 rounds).

Each lane is identified by a 128-bit state (two uint64 words): the
first word keys the generator, the second fills the upper counter
words, and the block index occupies the lower counter words.  One block
yields 128 bits, i.e. two doubles.  Distinct states therefore own
disjoint, order-independent streams, and any block is addressable in
O(1) -- no sequential state to advance, which is what makes the whole
sampler reproducible under batching and threading.

A numba kernel does the heavy lifting; a pure-numpy fallback with
bit-identical output is kept both for environments without a JIT and
as a cross-check in the tests.
"""

from __future__ import annotations

import numpy as np

__all__ = ["uniforms_from_states", "HAVE_NUMBA"]

_MASK32 = np.uint64(0xFFFFFFFF)
_MUL_HI = np.uint64(0xD2511F53)
_MUL_LO = np.uint64(0xCD9E8D57)
_WEYL_0 = np.uint64(0x9E3779B9)
_WEYL_1 = np.uint64(0xBB67AE85)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 2.0**-53

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def _uniforms_numpy(h0: np.ndarray, h1: np.ndarray, n_vals: int) -> np.ndarray:
    """Vectorized reference pipeline; bit-identical to the jitted kernel."""
    n_blocks = (n_vals + 1) // 2
    pos = np.arange(n_blocks, dtype=np.uint64)
    c0 = (pos & _MASK32)[None, :]
    c1 = (pos >> _S32)[None, :]
    c2 = (h1 & _MASK32)[:, None]
    c3 = (h1 >> _S32)[:, None]
    k0 = (h0 & _MASK32)[:, None]
    k1 = (h0 >> _S32)[:, None]
    for _ in range(10):
        p0 = _MUL_HI * c0
        p1 = _MUL_LO * c2
        c0 = (p1 >> _S32) ^ c1 ^ k0
        c1 = p1 & _MASK32
        c2 = (p0 >> _S32) ^ c3 ^ k1
        c3 = p0 & _MASK32
        k0 = (k0 + _WEYL_0) & _MASK32
        k1 = (k1 + _WEYL_1) & _MASK32
    word_a = (c0 << _S32) | c1
    word_b = (c2 << _S32) | c3
    out = np.empty((h0.shape[0], 2 * n_blocks))
    out[:, 0::2] = ((word_a >> _S11).astype(np.float64) + 0.5) * _INV53
    out[:, 1::2] = ((word_b >> _S11).astype(np.float64) + 0.5) * _INV53
    return out[:, :n_vals]


if HAVE_NUMBA:

    @njit(cache=True)
    def _fill_numba(h0, h1, n_vals, out):  # pragma: no cover - exercised via wrapper
        mask = np.uint64(0xFFFFFFFF)
        s32 = np.uint64(32)
        s11 = np.uint64(11)
        mul_hi = np.uint64(0xD2511F53)
        mul_lo = np.uint64(0xCD9E8D57)
        weyl0 = np.uint64(0x9E3779B9)
        weyl1 = np.uint64(0xBB67AE85)
        n_blocks = (n_vals + 1) // 2
        for lane in range(h0.shape[0]):
            key0 = h0[lane] & mask
            key1 = h0[lane] >> s32
            hi2 = h1[lane] & mask
            hi3 = h1[lane] >> s32
            for block in range(n_blocks):
                pos = np.uint64(block)
                c0 = pos & mask
                c1 = pos >> s32
                c2 = hi2
                c3 = hi3
                k0 = key0
                k1 = key1
                for _ in range(10):
                    p0 = mul_hi * c0
                    p1 = mul_lo * c2
                    c0 = (p1 >> s32) ^ c1 ^ k0
                    c1 = p1 & mask
                    c2 = (p0 >> s32) ^ c3 ^ k1
                    c3 = p0 & mask
                    k0 = (k0 + weyl0) & mask
                    k1 = (k1 + weyl1) & mask
                word_a = (c0 << s32) | c1
                word_b = (c2 << s32) | c3
                j = 2 * block
                out[lane, j] = (np.float64(word_a >> s11) + 0.5) * 2.0**-53
                if j + 1 < n_vals:
                    out[lane, j + 1] = (np.float64(word_b >> s11) + 0.5) * 2.0**-53


def uniforms_from_states(h0: np.ndarray, h1: np.ndarray, n_vals: int, *, force_numpy: bool = False) -> np.ndarray:
    """Per-lane uniforms in the open interval (0, 1).

    Parameters
    ----------
    h0, h1 : np.ndarray
        uint64 state words, any common shape.
    n_vals : int
        Number of uniforms per lane.

    Returns
    -------
    np.ndarray
        float64 array of shape ``h0.shape + (n_vals,)``.
    """
    if n_vals < 1:
        raise ValueError(f"need n_vals >= 1, got {n_vals}")
    shape = np.shape(h0)
    flat0 = np.ascontiguousarray(h0, dtype=np.uint64).reshape(-1)
    flat1 = np.ascontiguousarray(h1, dtype=np.uint64).reshape(-1)
    if flat0.shape != flat1.shape:
        raise ValueError("state words must have matching shapes")
    if HAVE_NUMBA and not force_numpy:
        out = np.empty((flat0.shape[0], n_vals))
        _fill_numba(flat0, flat1, n_vals, out)
    else:
        out = _uniforms_numpy(flat0, flat1, n_vals)
    return out.reshape(shape + (n_vals,))
