"""DFT-correlation receiver: the conventional Format 0 decoder.

Multiplying the received block by the conjugate base sequence cancels the
base waveform and leaves a pure tone exp(j*alpha*n); a 12-point DFT then
peaks at the shift index. Subtracting the known m0 and per-symbol n_cs
(modulo 12) turns the peak position into the UCI-specific shift m_cs.
There is no channel estimation -- Format 0 has no reference signals -- so
the peak is located on accumulated bin powers.
"""

from __future__ import annotations

import numpy as np

from .pucch0 import (
    N_SC_RB,
    Pucch0Config,
    UciFormat,
    base_sequence,
    candidate_shifts,
    compute_ncs,
)


def dft12(x: np.ndarray) -> np.ndarray:
    """X(k) = sum_n x(n) exp(-j*2*pi*k*n/12) for a length-12 input."""
    x = np.asarray(x)
    if x.shape != (N_SC_RB,):
        raise ValueError(f"expected 12 samples, got shape {x.shape}")
    return np.fft.fft(x)


def decode_dft(signal: np.ndarray, cfg: Pucch0Config, fmt: UciFormat,
               combine_symbols: bool = True) -> tuple[int, np.ndarray]:
    """Recover m_cs from a (num_symbols, 12) received transmission.

    Per symbol: de-rotate with the conjugate base sequence, take the
    12-point DFT, and credit bin k to candidate m = (k - m0 - n_cs) mod 12.
    Bin powers are accumulated non-coherently across symbols (each symbol
    has its own n_cs alignment), and the argmax is restricted to the
    format's candidate set. Returns the m_cs estimate and the full
    12-entry power metric vector indexed by candidate shift, for
    diagnostics and future detection thresholds.

    With ``combine_symbols=False`` only the first symbol is used.
    """
    signal = np.atleast_2d(np.asarray(signal))
    if signal.shape[1] != N_SC_RB:
        raise ValueError(f"expected (num_symbols, 12) samples, got {signal.shape}")
    candidates = candidate_shifts(fmt)
    if not candidates:
        raise ValueError(f"format {fmt} has an empty candidate set")

    base_conj = np.conj(base_sequence(cfg.group_u))
    n_symbols = signal.shape[0] if combine_symbols else 1
    metrics = np.zeros(N_SC_RB)
    for l in range(n_symbols):
        bins = np.abs(dft12(signal[l] * base_conj)) ** 2
        shift = (cfg.m0 + compute_ncs(cfg, l)) % N_SC_RB
        # bin (m + m0 + n_cs) mod 12 belongs to candidate m
        metrics += np.roll(bins, -shift)

    best = max(candidates, key=lambda m: metrics[m])
    return best, metrics
