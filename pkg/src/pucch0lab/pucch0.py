"""PUCCH Format 0 transmitter-side primitives.

Format 0 carries 1-2 HARQ-ACK bits and/or a scheduling request purely in
the cyclic shift of a known length-12 base sequence: one resource block in
frequency, one or two OFDM symbols in time, no reference signals and no
QAM. The shift index applied on symbol ``l`` is

    (m0 + m_cs + n_cs(slot, l + l')) mod 12

where ``m0`` is the configured initial shift (user multiplexing), ``m_cs``
encodes the UCI payload, and ``n_cs`` is a pseudo-random per-slot/per-symbol
hop derived from a Gold sequence seeded with the hopping identity.

All functions here are pure; they can be called concurrently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N_SC_RB = 12          # subcarriers per resource block
SYMBOLS_PER_SLOT = 14

# Phase table for the length-12 low-PAPR base sequences, one row per
# sequence group u = 0..29. Values are the phi(n) exponents in units of
# pi/4; every entry is in {-3, -1, 1, 3}. Transcribed constants -- do not
# edit without updating the checksum test.
PHI_TABLE_12 = np.array([
    [-3, 1, -3, -3, -3, 3, -3, -1, 1, 1, 1, -3],
    [-3, 3, 1, -3, 1, 3, -1, -1, 1, 3, 3, 3],
    [-3, 3, 3, 1, -3, 3, -1, 1, 3, -3, 3, -3],
    [-3, -3, -1, 3, 3, 3, -3, 3, -3, 1, -1, -3],
    [-3, -1, -1, 1, 3, 1, 1, -1, 1, -1, -3, 1],
    [-3, -3, 3, 1, -3, -3, -3, -1, 3, -1, 1, 3],
    [1, -1, 3, -1, -1, -1, -3, -1, 1, 1, 1, -3],
    [-1, -3, 3, -1, -3, -3, -3, -1, 1, -1, 1, -3],
    [-3, -1, 3, 1, -3, -1, -3, 3, 1, 3, 3, 1],
    [-3, -1, -1, -3, -3, -1, -3, 3, 1, 3, -1, -3],
    [-3, 3, -3, 3, 3, -3, -1, -1, 3, 3, 1, -3],
    [-3, -1, -3, -1, -1, -3, 3, 3, -1, -1, 1, -3],
    [-3, -1, 3, -3, -3, -1, -3, 1, -1, -3, 3, 3],
    [-3, 1, -1, -1, 3, 3, -3, -1, -1, -3, -1, -3],
    [1, 3, -3, 1, 3, 3, 3, 1, -1, 1, -1, 3],
    [-3, 1, 3, -1, -1, -3, -3, -1, -1, 3, 1, -3],
    [-1, -1, -1, -1, 1, -3, -1, 3, 3, -1, -3, 1],
    [-1, 1, 1, -1, 1, 3, 3, -1, -1, -3, 1, -3],
    [-3, 1, 3, 3, -1, -1, -3, 3, 3, -3, 3, -3],
    [-3, -3, 3, -3, -1, 3, 3, 3, -1, -3, 1, -3],
    [3, 1, 3, 1, 3, -3, -1, 1, 3, 1, -1, -3],
    [-3, 3, 1, 3, -3, 1, 1, 1, 1, 3, -3, 3],
    [-3, 3, 3, 3, -1, -3, -3, -1, -3, 1, 3, -3],
    [3, -1, -3, 3, -3, -1, 3, 3, 3, -3, -1, -3],
    [-3, -1, 1, -3, 1, 3, 3, 3, -1, -3, 3, 3],
    [-3, 3, 1, -1, 3, 3, -3, 1, -1, 1, -1, 1],
    [-1, 1, 3, -3, 1, -1, 1, -1, -1, -3, 1, -1],
    [-3, -3, 3, 3, 3, -3, -1, 1, -3, 3, 1, -3],
    [1, -1, 3, 1, 1, -1, -1, -1, 1, 3, -3, 1],
    [-3, 3, -3, 3, -3, -3, 3, -1, -1, 1, 3, -3],
], dtype=np.int8)
PHI_TABLE_12.flags.writeable = False


class UciFormat(enum.Enum):
    """Payload layout carried by one Format 0 transmission."""

    HARQ_ONLY_1 = "harq1"
    HARQ_ONLY_2 = "harq2"
    SR_ONLY = "sr"
    HARQ_1_SR = "harq1+sr"
    HARQ_2_SR = "harq2+sr"


_HARQ_BIT_COUNT = {
    UciFormat.HARQ_ONLY_1: 1,
    UciFormat.HARQ_ONLY_2: 2,
    UciFormat.SR_ONLY: 0,
    UciFormat.HARQ_1_SR: 1,
    UciFormat.HARQ_2_SR: 2,
}

# UCI payload -> m_cs, keyed by (harq_bits, sr). Two-bit HARQ values are
# Gray-coded across the shift ring. Exposed so an alternate assignment can
# be injected into uci_to_mcs / mcs_to_uci.
DEFAULT_MCS_ASSIGNMENT = {
    UciFormat.HARQ_ONLY_1: {((0,), False): 0, ((1,), False): 6},
    UciFormat.HARQ_ONLY_2: {
        ((0, 0), False): 0, ((0, 1), False): 3,
        ((1, 1), False): 6, ((1, 0), False): 9,
    },
    UciFormat.SR_ONLY: {((), True): 0},
    UciFormat.HARQ_1_SR: {
        ((0,), False): 0, ((1,), False): 6,
        ((0,), True): 3, ((1,), True): 9,
    },
    UciFormat.HARQ_2_SR: {
        ((0, 0), False): 0, ((0, 1), False): 3,
        ((1, 1), False): 6, ((1, 0), False): 9,
        ((0, 0), True): 1, ((0, 1), True): 4,
        ((1, 1), True): 7, ((1, 0), True): 10,
    },
}


def candidate_shifts(fmt: UciFormat, assignment=None) -> tuple[int, ...]:
    """Sorted tuple of m_cs values a format can produce."""
    table = (assignment or DEFAULT_MCS_ASSIGNMENT)[fmt]
    return tuple(sorted(table.values()))


@dataclass(frozen=True)
class UciContent:
    """Semantic payload of one transmission: HARQ bits and/or an SR flag.

    ``harq_bits`` length must match the format (0, 1 or 2 bits). An SR-only
    content with a negative SR is rejected: nothing would be transmitted.
    """

    format: UciFormat
    harq_bits: tuple[int, ...] = ()
    sr: bool = False

    def __post_init__(self):
        expected = _HARQ_BIT_COUNT[self.format]
        if len(self.harq_bits) != expected:
            raise ValueError(
                f"{self.format.value} carries {expected} HARQ bit(s), "
                f"got {len(self.harq_bits)}")
        if any(b not in (0, 1) for b in self.harq_bits):
            raise ValueError(f"HARQ bits must be 0/1, got {self.harq_bits}")
        if self.format is UciFormat.SR_ONLY and not self.sr:
            raise ValueError("SR-only with negative SR is not transmitted")
        if self.format in (UciFormat.HARQ_ONLY_1, UciFormat.HARQ_ONLY_2) and self.sr:
            raise ValueError(f"{self.format.value} carries no SR flag")


@dataclass(frozen=True)
class Pucch0Config:
    """Placement and shift parameters of one Format 0 transmission.

    m0            initial cyclic shift, 0..11 (user multiplexing offset)
    slot          slot number in the radio frame, 0..159
    start_symbol  first occupied OFDM symbol l' in the slot, 0..13
    num_symbols   1 or 2 occupied symbols
    hopping_id    seed of the per-symbol pseudo-random shift, 0..1023
    group_u       base-sequence group, 0..29 (group hopping disabled)
    sequence_v    sequence number within the group; fixed 0 for one RB
    """

    m0: int = 0
    slot: int = 13
    start_symbol: int = 13
    num_symbols: int = 1
    hopping_id: int = 0
    group_u: int = 0
    sequence_v: int = 0

    def __post_init__(self):
        if not 0 <= self.m0 < N_SC_RB:
            raise ValueError(f"m0 must be in [0, 12), got {self.m0}")
        if not 0 <= self.slot <= 159:
            raise ValueError(f"slot must be in [0, 160), got {self.slot}")
        if self.num_symbols not in (1, 2):
            raise ValueError(f"num_symbols must be 1 or 2, got {self.num_symbols}")
        if not 0 <= self.start_symbol < SYMBOLS_PER_SLOT:
            raise ValueError(f"start_symbol must be in [0, 14), got {self.start_symbol}")
        if self.start_symbol + self.num_symbols > SYMBOLS_PER_SLOT:
            raise ValueError(
                f"transmission exceeds the slot: start {self.start_symbol} "
                f"+ {self.num_symbols} symbols > {SYMBOLS_PER_SLOT}")
        if not 0 <= self.hopping_id <= 1023:
            raise ValueError(f"hopping_id must be in [0, 1024), got {self.hopping_id}")
        if not 0 <= self.group_u < 30:
            raise ValueError(f"group_u must be in [0, 30), got {self.group_u}")
        if self.sequence_v != 0:
            raise ValueError("sequence_v is fixed to 0 for single-RB sequences")


def base_sequence(group_u: int) -> np.ndarray:
    """Length-12 unit-modulus base sequence exp(j*phi(n)*pi/4) for a group.

    Every sample has real and imaginary parts of +-1/sqrt(2).
    """
    if not 0 <= group_u < 30:
        raise ValueError(f"group_u must be in [0, 30), got {group_u}")
    return np.exp(1j * np.pi / 4 * PHI_TABLE_12[group_u].astype(np.float64))


def prbs_c(c_init: int, length: int) -> np.ndarray:
    """Gold pseudo-random bit sequence c(n), n = 0..length-1.

    Two length-31 LFSRs: x1 starts from the fixed unit state, x2 from the
    bits of ``c_init``; the first 1600 combined outputs are discarded.
    Feedback taps follow the standard 5G scrambling generator. The
    recursion is stepped 28 bits at a time (the new block depends only on
    already-known state), keeping generation O(length) with small constant.
    """
    if not 0 <= c_init < 2**31:
        raise ValueError(f"c_init must be a 31-bit integer, got {c_init}")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return _prbs_cached(c_init, _round_up(length, 256))[:length]


def _round_up(n: int, quantum: int) -> int:
    return ((n + quantum - 1) // quantum) * quantum


@lru_cache(maxsize=128)
def _prbs_cached(c_init: int, length: int) -> np.ndarray:
    nc = 1600
    total = nc + length
    x1 = np.zeros(total + 31, dtype=np.int8)
    x2 = np.zeros(total + 31, dtype=np.int8)
    x1[0] = 1
    x2[:31] = [(c_init >> i) & 1 for i in range(31)]
    # x(n+31) depends on x(n..n+3), so 28 outputs per block are safe.
    for start in range(0, total, 28):
        n = np.arange(start, min(start + 28, total))
        x1[n + 31] = x1[n + 3] ^ x1[n]
        x2[n + 31] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n]
    c = (x1[nc:nc + length] ^ x2[nc:nc + length]).astype(np.int8)
    c.flags.writeable = False
    return c


def compute_ncs(cfg: Pucch0Config, symbol_in_transmission: int = 0) -> int:
    """Pseudo-random shift contribution for one occupied symbol.

    Eight PRBS bits starting at 8*(14*slot + symbol-in-slot) are read as an
    integer (LSB first), with the PRBS seeded by the hopping identity.
    Returns a value in 0..255.
    """
    if not 0 <= symbol_in_transmission < cfg.num_symbols:
        raise ValueError(
            f"symbol {symbol_in_transmission} outside transmission of "
            f"{cfg.num_symbols} symbol(s)")
    sym_in_slot = cfg.start_symbol + symbol_in_transmission
    return _ncs_at(cfg.hopping_id, cfg.slot, sym_in_slot)


@lru_cache(maxsize=4096)
def _ncs_at(hopping_id: int, slot: int, sym_in_slot: int) -> int:
    pos = 8 * SYMBOLS_PER_SLOT * slot + 8 * sym_in_slot
    bits = prbs_c(hopping_id, pos + 8)[pos:pos + 8]
    return int(np.dot(bits, 1 << np.arange(8, dtype=np.int64)))


def uci_to_mcs(uci: UciContent, assignment=None) -> int:
    """Map a UCI payload to its cyclic-shift offset m_cs."""
    table = (assignment or DEFAULT_MCS_ASSIGNMENT)[uci.format]
    return table[(uci.harq_bits, uci.sr)]


def mcs_to_uci(fmt: UciFormat, m_cs: int, assignment=None) -> UciContent:
    """Inverse of :func:`uci_to_mcs` for one format.

    Raises ValueError when ``m_cs`` is not in the format's candidate set.
    """
    table = (assignment or DEFAULT_MCS_ASSIGNMENT)[fmt]
    for (harq, sr), shift in table.items():
        if shift == m_cs:
            return UciContent(fmt, harq_bits=harq, sr=sr)
    raise ValueError(
        f"m_cs={m_cs} is not a valid shift for {fmt.value} "
        f"(candidates: {candidate_shifts(fmt, assignment)})")


def alpha_index(m0: int, m_cs: int, n_cs: int) -> int:
    """Shift index (m0 + m_cs + n_cs) mod 12; alpha = 2*pi*index/12."""
    if not 0 <= m0 < N_SC_RB:
        raise ValueError(f"m0 must be in [0, 12), got {m0}")
    return (m0 + m_cs + n_cs) % N_SC_RB


def generate_format0(cfg: Pucch0Config, uci: UciContent,
                     assignment=None) -> np.ndarray:
    """Frequency-domain Format 0 transmission for a config and payload.

    Returns an array of shape (num_symbols, 12): for each occupied symbol
    ``l`` the base sequence rotated by its own shift index,
    r(n) = exp(j*2*pi*index_l*n/12) * base(n). Both symbols of a two-symbol
    transmission carry the same m_cs (the second exists to boost receiver
    SNR); only the n_cs part differs.
    """
    m_cs = uci_to_mcs(uci, assignment)
    base = base_sequence(cfg.group_u)
    n = np.arange(N_SC_RB)
    out = np.empty((cfg.num_symbols, N_SC_RB), dtype=np.complex128)
    for l in range(cfg.num_symbols):
        idx = alpha_index(cfg.m0, m_cs, compute_ncs(cfg, l))
        out[l] = np.exp(2j * np.pi * idx * n / N_SC_RB) * base
    return out
