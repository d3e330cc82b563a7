"""Flat Rayleigh block-fading channel with unit-variance complex AWGN.

SNR convention: ``snr_db = 10*log10(1/sigma^2)`` where each channel entry is
CN(0, 1/sigma^2), symbols have unit power and the noise has identity
covariance.  One fresh channel matrix is drawn per transmission (worst-case
block fading); Monte Carlo trials derive independent substreams from
``(master_seed, snr_index, block_index)`` so results do not depend on the
execution schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ChannelInstance", "sample_channel", "transmit", "trial_rng"]


@dataclass(frozen=True)
class ChannelInstance:
    """One use of the linear model y = H x + n."""

    h: np.ndarray          # (N, M) complex
    snr_db: float
    sigma_sq: float
    y: np.ndarray          # (N,) complex
    tx_bits: np.ndarray    # (M*Q,) spins
    tx_symbols: np.ndarray  # (M,) complex


def trial_rng(master_seed: int, *indices: int) -> np.random.Generator:
    """Independent substream keyed by (master seed, trial indices)."""
    return np.random.default_rng([master_seed, *indices])


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples: real and imaginary parts each N(0, 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channel(m: int, n: int, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Draw an (n, m) Rayleigh channel with per-entry variance 10**(snr_db/10)."""
    if m < 1 or n < m:
        raise ValueError(f"need N >= M >= 1, got M={m}, N={n}")
    gain = 10.0 ** (snr_db / 10.0)
    return np.sqrt(gain) * complex_normal(rng, (n, m))


def transmit(
    h: np.ndarray,
    x: np.ndarray,
    rng: np.random.Generator | None = None,
    noiseless: bool = False,
) -> np.ndarray:
    """y = H x + n with n ~ CN(0, I); the noiseless flag is a test hook."""
    h = np.asarray(h)
    x = np.asarray(x)
    if h.ndim != 2 or x.shape != (h.shape[1],):
        raise ValueError(f"shape mismatch: H is {h.shape}, x is {x.shape}")
    y = h @ x
    if noiseless:
        return y
    if rng is None:
        raise ValueError("rng required unless noiseless")
    return y + complex_normal(rng, h.shape[0])
