"""Fading and noise impairments for frequency-domain resource blocks.

SNR convention used everywhere in this package: per resource element in
the frequency domain. Generated Format 0 samples have |x(n)| = 1 exactly,
so at ``snr_db`` the complex noise variance is sigma^2 = 10**(-snr_db/10),
split equally between real and imaginary parts. ``snr_db=None`` (or
``math.inf``) disables noise.

Fading is block fading: one channel realization per transmission, applied
to every occupied symbol; noise is drawn independently per symbol. The
tapped-delay-line profile is the standard 24-tap NLOS power/delay profile
(normalized delays scaled by the configured delay spread, tap powers
normalized to unit total), each tap with an independent complex Gaussian
gain and no Doppler. This reproduces the frequency-selective fading a
12-subcarrier receiver sees; it does not claim waveform parity with any
particular link-level toolbox.

All operations are stateless apart from the caller-supplied generator;
use independent streams for concurrent callers (see per_instance_rng).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .pucch0 import N_SC_RB


class ChannelProfile(enum.Enum):
    AWGN_ONLY = "awgn"
    FLAT_RAYLEIGH = "flat"
    TDL_C = "tdlc"


# 24-tap NLOS tapped-delay-line profile: (normalized delay, power dB).
# Delays are multiplied by the delay spread; powers are normalized to
# sum to 1 in linear scale. All taps fade independently (Rayleigh).
TDLC_PROFILE = (
    (0.0000, -4.4), (0.2099, -1.2), (0.2219, -3.5), (0.2329, -5.2),
    (0.2176, -2.5), (0.6366, 0.0), (0.6448, -2.2), (0.6560, -3.9),
    (0.6584, -7.4), (0.7935, -7.1), (0.8213, -10.7), (0.9336, -11.1),
    (1.2285, -5.1), (1.3083, -6.8), (2.1704, -8.7), (2.7105, -13.2),
    (4.2589, -13.9), (4.6003, -13.9), (5.4902, -15.8), (5.6077, -17.1),
    (6.3065, -16.0), (6.6374, -15.7), (7.0427, -21.6), (8.6523, -22.8),
)

# SNR specification: dB value, or None / math.inf for "no noise".
SnrDb = float | None


@dataclass(frozen=True)
class ChannelConfig:
    """Fading profile selection plus the parameters it needs."""

    profile: ChannelProfile = ChannelProfile.TDL_C
    delay_spread: float = 300e-9        # seconds, TDL profile only
    subcarrier_spacing: float = 30e3    # Hz
    block_fading: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.profile is ChannelProfile.TDL_C and not self.delay_spread > 0:
            raise ValueError(f"delay_spread must be > 0, got {self.delay_spread}")
        if not self.block_fading:
            raise ValueError("only block fading is supported")


def make_rng(seed: int) -> np.random.Generator:
    """Top-level deterministic generator for a 64-bit seed."""
    return np.random.default_rng(seed)


def per_instance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one instance of a batch.

    Counter-based split: the Philox key is (seed, index), so instance
    ``index`` always sees the same draws no matter how many other
    instances are generated around it.
    """
    return np.random.Generator(np.random.Philox(key=[seed, index]))


def noise_variance(snr_db: SnrDb) -> float:
    """Complex noise variance for a unit-power signal; 0.0 when noiseless."""
    if snr_db is None or math.isinf(snr_db):
        return 0.0
    return 10.0 ** (-snr_db / 10.0)


def gaussian_pair(rng: np.random.Generator) -> tuple[float, float]:
    """Two independent standard normal reals from the stream."""
    a, b = rng.standard_normal(2)
    return float(a), float(b)


def complex_awgn(rng: np.random.Generator, variance: float, shape) -> np.ndarray:
    """Circular complex Gaussian noise with the given total variance."""
    scale = math.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def apply_awgn(signal: np.ndarray, snr_db: SnrDb,
               rng: np.random.Generator | None = None) -> np.ndarray:
    """y(n) = x(n) + w(n) at the requested per-RE SNR.

    Assumes the signal has unit average power (the Format 0 generator
    guarantees exactly 1). Noiseless SNR returns the input unchanged.
    """
    variance = noise_variance(snr_db)
    if variance == 0.0:
        return signal
    if rng is None:
        raise ValueError("an rng is required when noise is enabled")
    return signal + complex_awgn(rng, variance, np.shape(signal))


def tdl_frequency_response(cfg: ChannelConfig, rng: np.random.Generator,
                           size: int | None = None) -> np.ndarray:
    """Channel gains H(k) over the 12 subcarriers of one resource block.

    H(k) = sum_p sqrt(P_p) * g_p * exp(-j*2*pi*f_k*tau_p) with g_p i.i.d.
    unit complex Gaussian and f_k = k * subcarrier_spacing. Tap powers are
    normalized so E[|H(k)|^2] = 1 for every k. The flat profile is a single
    Rayleigh gain replicated across the block. With ``size`` given, returns
    (size, 12) independent realizations; otherwise a single (12,) response.
    """
    if cfg.profile is ChannelProfile.AWGN_ONLY:
        raise ValueError("AWGN-only profile has no fading response")
    n_real = 1 if size is None else size
    if cfg.profile is ChannelProfile.FLAT_RAYLEIGH:
        g = complex_awgn(rng, 1.0, (n_real, 1))
        h = np.broadcast_to(g, (n_real, N_SC_RB)).copy()
    else:
        delays = np.array([d for d, _ in TDLC_PROFILE]) * cfg.delay_spread
        powers = 10.0 ** (np.array([p for _, p in TDLC_PROFILE]) / 10.0)
        powers /= powers.sum()
        freqs = np.arange(N_SC_RB) * cfg.subcarrier_spacing
        steering = np.exp(-2j * np.pi * np.outer(freqs, delays))  # (12, taps)
        g = complex_awgn(rng, 1.0, (n_real, len(TDLC_PROFILE)))
        h = (np.sqrt(powers) * g) @ steering.T
    return h[0] if size is None else h


def apply_channel(signal: np.ndarray, h: np.ndarray, snr_db: SnrDb,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """y(n) = H(n) * x(n) + w(n) for a (num_symbols, 12) transmission.

    One fading realization for the whole transmission (block fading);
    noise is independent per symbol and subcarrier.
    """
    signal = np.asarray(signal)
    h = np.asarray(h)
    if h.shape != (signal.shape[-1],):
        raise ValueError(
            f"channel response shape {h.shape} does not match "
            f"signal of {signal.shape[-1]} subcarriers")
    return apply_awgn(signal * h, snr_db, rng)
