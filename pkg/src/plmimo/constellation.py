"""Square QAM constellations with unit average power and Gray bit labels.

Symbols live on the shifted grid ``alpha*Z_C - (alpha/2)*(1+1j)``; per axis
there are ``2**(Q/2)`` amplitude levels labelled with a binary-reflected Gray
code, the first ``Q/2`` bits of a symbol addressing the real axis and the
last ``Q/2`` the imaginary axis.  Bits are spins in {-1, +1} throughout, with
+1 mapping to the larger of the two innermost levels (so for QPSK, bit +1 is
the positive half-axis).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Constellation",
    "build_constellation",
    "bits_to_symbols",
    "symbols_to_bits",
    "quantize_to_constellation",
]


def _gray_encode(k: np.ndarray) -> np.ndarray:
    return k ^ (k >> 1)


def _gray_decode(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g).copy()
    shift = 1
    while shift < 32:
        g ^= g >> shift
        shift *= 2
    return g


@dataclass(frozen=True)
class Constellation:
    """A 2**Q-point square QAM alphabet, normalized to unit mean power."""

    q: int
    alpha: float
    points: np.ndarray            # (2**Q,) complex, indexed by bit word
    levels: np.ndarray            # (2**(Q/2),) per-axis amplitudes, ascending
    level_words: np.ndarray       # Gray word of each level index
    bit_table: np.ndarray = field(repr=False)  # (2**Q, Q) spins of each point

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def bits_per_axis(self) -> int:
        return self.q // 2

    def bit_masks(self) -> np.ndarray:
        """Boolean (Q, 2**Q) table: row b marks points whose bit b is +1."""
        return (self.bit_table.T == 1)


def build_constellation(q: int) -> Constellation:
    """Build the 2**q-QAM alphabet with grid spacing sqrt(6 / (2**q - 1))."""
    if q % 2 != 0 or not 2 <= q <= 10:
        raise ValueError(f"bits per symbol must be even and in [2, 10], got {q}")
    half = q // 2
    n_levels = 2 ** half
    alpha = float(np.sqrt(6.0 / (2.0 ** q - 1.0)))
    # Levels are the odd multiples of alpha/2, symmetric about zero.
    levels = alpha * (np.arange(n_levels) - (n_levels - 1) / 2.0)
    level_words = _gray_encode(np.arange(n_levels))

    # Point index is the bit word: high half real axis, low half imaginary.
    words = np.arange(2 ** q)
    re_idx = _gray_decode(words >> half)
    im_idx = _gray_decode(words & (n_levels - 1))
    points = levels[re_idx] + 1j * levels[im_idx]

    bit_table = np.where(
        (words[:, None] >> np.arange(q - 1, -1, -1)[None, :]) & 1, 1, -1
    ).astype(np.int8)

    mean_power = float(np.mean(np.abs(points) ** 2))
    assert abs(mean_power - 1.0) < 1e-12

    return Constellation(
        q=q,
        alpha=alpha,
        points=points,
        levels=levels,
        level_words=level_words,
        bit_table=bit_table,
    )


def _axis_bits_to_level_index(c: Constellation, bits: np.ndarray) -> np.ndarray:
    """Spin rows (..., Q/2) -> per-axis level indices."""
    half = c.bits_per_axis
    weights = 1 << np.arange(half - 1, -1, -1)
    words = ((bits > 0).astype(np.int64) * weights).sum(axis=-1)
    return _gray_decode(words)


def bits_to_symbols(c: Constellation, bits: np.ndarray) -> np.ndarray:
    """Map a flat +-1 sequence of length m*Q to m complex symbols."""
    bits = np.asarray(bits)
    if bits.size % c.q != 0:
        raise ValueError(f"bit count {bits.size} is not a multiple of Q={c.q}")
    groups = bits.reshape(-1, c.q)
    re = _axis_bits_to_level_index(c, groups[:, : c.bits_per_axis])
    im = _axis_bits_to_level_index(c, groups[:, c.bits_per_axis :])
    return c.levels[re] + 1j * c.levels[im]


def point_indices(c: Constellation, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Indices (bit words) of constellation points, erroring off-grid."""
    x = np.asarray(x, dtype=np.complex128)
    re_idx = np.argmin(np.abs(x.real[..., None] - c.levels), axis=-1)
    im_idx = np.argmin(np.abs(x.imag[..., None] - c.levels), axis=-1)
    snapped = c.levels[re_idx] + 1j * c.levels[im_idx]
    err = np.abs(x - snapped)
    if err.size and err.max() > tol:
        k = int(np.argmax(err))
        raise ValueError(f"entry {k} = {x.flat[k]} is not a constellation point")
    half = c.bits_per_axis
    return (c.level_words[re_idx] << half) | c.level_words[im_idx]


def symbols_to_bits(c: Constellation, x: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`bits_to_symbols` (entries must be on-grid)."""
    idx = point_indices(c, x)
    return c.bit_table[idx].reshape(-1)


def quantize_level_indices(c: Constellation, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest per-axis level indices with clamping; ties round up."""
    z = np.asarray(z, dtype=np.complex128)
    n_levels = c.levels.size
    offset = (n_levels - 1) / 2.0
    re = np.floor(z.real / c.alpha + offset + 0.5).astype(np.int64)
    im = np.floor(z.imag / c.alpha + offset + 0.5).astype(np.int64)
    re = np.clip(re, 0, n_levels - 1)
    im = np.clip(im, 0, n_levels - 1)
    return re, im


def quantize_to_constellation(c: Constellation, z: np.ndarray) -> np.ndarray:
    """Per-axis nearest constellation point, clamping beyond the outermost level."""
    z = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(z.real)) or not np.all(np.isfinite(z.imag)):
        raise ValueError("cannot quantize non-finite values")
    re, im = quantize_level_indices(c, z)
    return c.levels[re] + 1j * c.levels[im]
