"""Labeled-instance production, persistence, and IQ-capture ingestion.

An instance is one received Format 0 symbol turned into a real feature
vector: the 12 complex subcarrier samples split into real and imaginary
parts and concatenated (Re block then Im block, 24 values). Labels are
indices into the UCI format's sorted candidate-shift set. Each occupied
symbol of a transmission becomes its own instance -- it carries its own
pseudo-random shift -- so a two-symbol transmission contributes two
instances with the same label.

File formats (little-endian):

  dataset ``PF0D``: magic, version u32, instance count u64, feature dim
  u32, class count u32, featurization tag u8, normalization tag u8; then
  per record 24 x f32 features, u8 label (0xFF = unlabeled), u8 slot,
  u8 start symbol, f32 snr_db.

  IQ capture ``PF0Q``: magic, version u32, complex sample count u64, then
  interleaved I/Q f32.

A noiseless SNR is stored as +inf; an unknown SNR (captures) as NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import (
    ChannelConfig,
    ChannelProfile,
    SnrDb,
    apply_channel,
    per_instance_rng,
    tdl_frequency_response,
)
from .fileio import (
    FileFormatError,
    expect_magic,
    read_exact,
    read_u32,
    read_u64,
    write_u32,
    write_u64,
)
from .pucch0 import (
    N_SC_RB,
    Pucch0Config,
    UciFormat,
    candidate_shifts,
    generate_format0,
    mcs_to_uci,
)

DATASET_MAGIC = b"PF0D"
DATASET_VERSION = 1
IQ_MAGIC = b"PF0Q"
IQ_VERSION = 1

FEATURE_DIM = 2 * N_SC_RB
UNLABELED = 0xFF

# featurization tags (how complex samples became reals)
FEAT_CONCAT_RE_IM = 0
# normalization tags
NORM_OFF = 0
NORM_UNIT_POWER = 1

_RECORD_DTYPE = np.dtype([
    ("features", "<f4", (FEATURE_DIM,)),
    ("label", "u1"),
    ("slot", "u1"),
    ("start_symbol", "u1"),
    ("snr_db", "<f4"),
])


def featurize(samples: np.ndarray, normalize: bool = True) -> np.ndarray:
    """12 complex samples -> 24 reals, [Re(0..11) | Im(0..11)].

    With ``normalize`` the samples are first scaled to unit average power,
    which removes any receive-gain ambiguity (and makes features invariant
    to positive real scaling).
    """
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.shape != (N_SC_RB,):
        raise ValueError(f"expected 12 samples, got shape {samples.shape}")
    if normalize:
        power = np.mean(np.abs(samples) ** 2)
        if power > 0:
            samples = samples / np.sqrt(power)
    return np.concatenate([samples.real, samples.imag])


def de_featurize(features: np.ndarray) -> np.ndarray:
    """Inverse of featurize (exact when normalization was off)."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != FEATURE_DIM:
        raise ValueError(f"expected {FEATURE_DIM} features, got {features.shape}")
    return features[..., :N_SC_RB] + 1j * features[..., N_SC_RB:]


@dataclass
class LabeledDataset:
    """Featurized instances with labels and per-instance placement metadata.

    Column arrays all share length N. ``seed`` and ``channel`` describe how
    the data was generated (kept for provenance and leakage guards; they
    live in sidecar manifests, not in the binary file).
    """

    features: np.ndarray      # (N, 24) float32
    labels: np.ndarray        # (N,) uint8, 0xFF = unlabeled
    slots: np.ndarray         # (N,) uint8
    start_symbols: np.ndarray  # (N,) uint8
    snr_dbs: np.ndarray       # (N,) float32; +inf noiseless, NaN unknown
    class_count: int = 4
    feat_tag: int = FEAT_CONCAT_RE_IM
    norm_tag: int = NORM_UNIT_POWER
    seed: int | None = None
    channel: str | None = None

    def __post_init__(self):
        n = len(self.features)
        if n == 0:
            raise ValueError("dataset must not be empty")
        if self.features.shape != (n, FEATURE_DIM):
            raise ValueError(f"features must be (N, {FEATURE_DIM}), got {self.features.shape}")
        for name in ("labels", "slots", "start_symbols", "snr_dbs"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match features")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        labeled = self.labels != UNLABELED
        if labeled.any() and int(self.labels[labeled].max()) >= self.class_count:
            raise ValueError("label out of range")

    def __len__(self) -> int:
        return len(self.features)

    def class_histogram(self) -> np.ndarray:
        """Count of labeled instances per class."""
        labeled = self.labels[self.labels != UNLABELED]
        return np.bincount(labeled, minlength=self.class_count)


def generate_dataset(count: int, snr_db: SnrDb, channel_cfg: ChannelConfig,
                     seed: int, slots: tuple[int, ...] = (13, 14),
                     fmt: UciFormat = UciFormat.HARQ_1_SR,
                     pucch: Pucch0Config = Pucch0Config(),
                     normalize: bool = True) -> LabeledDataset:
    """Simulate ``count`` labeled instances at one SNR.

    Per transmission, from its own counter-split RNG stream (draw order:
    label, slot, fading, then per-symbol noise): a uniformly random class,
    a uniformly random slot from ``slots``, a Format 0 transmission at the
    configured m0/symbols, one block-fading realization, independent AWGN
    per symbol. Every occupied symbol becomes an instance. Byte-identical
    for identical (arguments, seed).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    candidates = candidate_shifts(fmt)
    n_classes = len(candidates)
    per_tx = pucch.num_symbols
    n_tx = -(-count // per_tx)

    features = np.empty((n_tx * per_tx, FEATURE_DIM), dtype=np.float32)
    labels = np.empty(n_tx * per_tx, dtype=np.uint8)
    slot_col = np.empty(n_tx * per_tx, dtype=np.uint8)
    sym_col = np.empty(n_tx * per_tx, dtype=np.uint8)

    fading = channel_cfg.profile is not ChannelProfile.AWGN_ONLY
    ones = np.ones(N_SC_RB)
    for t in range(n_tx):
        stream = per_instance_rng(seed, t)
        label = int(stream.integers(n_classes))
        slot = int(slots[stream.integers(len(slots))])
        cfg = replace(pucch, slot=slot)
        uci = mcs_to_uci(fmt, candidates[label])
        signal = generate_format0(cfg, uci)
        h = tdl_frequency_response(channel_cfg, stream) if fading else ones
        received = apply_channel(signal, h, snr_db, stream)
        for l in range(per_tx):
            row = t * per_tx + l
            features[row] = featurize(received[l], normalize)
            labels[row] = label
            slot_col[row] = slot
            sym_col[row] = cfg.start_symbol + l

    snr_value = math.inf if snr_db is None else float(snr_db)
    return LabeledDataset(
        features=features[:count],
        labels=labels[:count],
        slots=slot_col[:count],
        start_symbols=sym_col[:count],
        snr_dbs=np.full(count, snr_value, dtype=np.float32),
        class_count=n_classes,
        norm_tag=NORM_UNIT_POWER if normalize else NORM_OFF,
        seed=seed,
        channel=channel_cfg.profile.value,
    )


def split(dataset: LabeledDataset, train_fraction: float = 0.75,
          seed: int = 0) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint shuffled split into floor(fraction*N) train + the rest."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(train_fraction * n)
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} instances at {train_fraction} leaves one side empty")

    def take(idx):
        return replace(
            dataset,
            features=dataset.features[idx],
            labels=dataset.labels[idx],
            slots=dataset.slots[idx],
            start_symbols=dataset.start_symbols[idx],
            snr_dbs=dataset.snr_dbs[idx],
        )

    return take(order[:n_train]), take(order[n_train:])


def _records(dataset: LabeledDataset) -> np.ndarray:
    rec = np.empty(len(dataset), dtype=_RECORD_DTYPE)
    rec["features"] = dataset.features
    rec["label"] = dataset.labels
    rec["slot"] = dataset.slots
    rec["start_symbol"] = dataset.start_symbols
    rec["snr_db"] = dataset.snr_dbs
    return rec


def write_dataset(dataset: LabeledDataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        write_u32(fh, DATASET_VERSION)
        write_u64(fh, len(dataset))
        write_u32(fh, FEATURE_DIM)
        write_u32(fh, dataset.class_count)
        fh.write(bytes([dataset.feat_tag, dataset.norm_tag]))
        fh.write(_records(dataset).tobytes())


def read_dataset(path) -> LabeledDataset:
    with open(path, "rb") as fh:
        expect_magic(fh, DATASET_MAGIC, DATASET_VERSION)
        count = read_u64(fh, "instance count")
        if count == 0:
            raise FileFormatError("dataset file holds zero instances")
        dim = read_u32(fh, "feature dim")
        if dim != FEATURE_DIM:
            raise FileFormatError(f"unsupported feature dim {dim} (expected {FEATURE_DIM})")
        class_count = read_u32(fh, "class count")
        feat_tag, norm_tag = read_exact(fh, 2, "tags")
        payload = fh.read()
    have = len(payload) // _RECORD_DTYPE.itemsize
    if have < count or len(payload) != count * _RECORD_DTYPE.itemsize:
        raise FileFormatError(
            f"instance count says {count} records but file holds {have} "
            f"(failed at record {min(have, count)})")
    rec = np.frombuffer(payload, dtype=_RECORD_DTYPE)
    return LabeledDataset(
        features=rec["features"].copy(),
        labels=rec["label"].copy(),
        slots=rec["slot"].copy(),
        start_symbols=rec["start_symbol"].copy(),
        snr_dbs=rec["snr_db"].copy(),
        class_count=class_count,
        feat_tag=feat_tag,
        norm_tag=norm_tag,
    )


def write_csv(dataset: LabeledDataset, path) -> None:
    """Human-inspectable export: header row, one instance per line."""
    with open(path, "w") as fh:
        cols = [f"feature_{i}" for i in range(FEATURE_DIM)]
        cols += ["label", "slot", "start_symbol", "snr_db"]
        fh.write(",".join(cols) + "\n")
        for i in range(len(dataset)):
            vals = [repr(float(v)) for v in dataset.features[i]]
            vals += [str(int(dataset.labels[i])), str(int(dataset.slots[i])),
                     str(int(dataset.start_symbols[i])),
                     repr(float(dataset.snr_dbs[i]))]
            fh.write(",".join(vals) + "\n")


@dataclass(frozen=True)
class OfdmParams:
    """Waveform geometry for the IQ path.

    ``cp_lengths`` is one length per OFDM symbol in the stream, cycled if
    the stream is longer; ``subcarrier_offset`` (k0) is the FFT bin of the
    first resource-block subcarrier.
    """

    fft_size: int = 256
    cp_lengths: tuple[int, ...] = (18,)
    subcarrier_offset: int = 0

    def __post_init__(self):
        if self.fft_size < N_SC_RB + self.subcarrier_offset:
            raise ValueError(
                f"fft_size {self.fft_size} cannot hold 12 subcarriers at "
                f"offset {self.subcarrier_offset}")
        if not self.cp_lengths or any(c < 0 for c in self.cp_lengths):
            raise ValueError(f"bad cp_lengths {self.cp_lengths}")

    def cp_at(self, symbol: int) -> int:
        return self.cp_lengths[symbol % len(self.cp_lengths)]


def ofdm_modulate(signal: np.ndarray, params: OfdmParams) -> np.ndarray:
    """(S, 12) resource-block symbols -> time-domain IQ with cyclic prefixes."""
    signal = np.atleast_2d(np.asarray(signal, dtype=np.complex128))
    if signal.shape[1] != N_SC_RB:
        raise ValueError(f"expected (num_symbols, 12), got {signal.shape}")
    k0 = params.subcarrier_offset
    pieces = []
    for i, row in enumerate(signal):
        grid = np.zeros(params.fft_size, dtype=np.complex128)
        grid[k0:k0 + N_SC_RB] = row
        body = np.fft.ifft(grid, norm="ortho")
        cp = params.cp_at(i)
        pieces.append(body[params.fft_size - cp:] if cp else body[:0])
        pieces.append(body)
    return np.concatenate(pieces)


def ofdm_demodulate(iq: np.ndarray, params: OfdmParams) -> np.ndarray:
    """Time-domain IQ -> (N, 12) resource-block samples.

    Strips each symbol's cyclic prefix, FFTs the body, and extracts the
    12 subcarriers at the configured offset. The stream must hold a whole
    number of symbols.
    """
    iq = np.asarray(iq, dtype=np.complex128)
    rows = []
    pos = 0
    k0 = params.subcarrier_offset
    while pos < len(iq):
        cp = params.cp_at(len(rows))
        need = cp + params.fft_size
        if pos + need > len(iq):
            raise ValueError(
                f"insufficient samples: symbol {len(rows)} needs {need} at "
                f"position {pos}, stream has {len(iq)}")
        body = iq[pos + cp:pos + need]
        grid = np.fft.fft(body, norm="ortho")
        rows.append(grid[k0:k0 + N_SC_RB])
        pos += need
    if not rows:
        raise ValueError("empty IQ stream")
    return np.array(rows)


def write_iq(iq: np.ndarray, path) -> None:
    iq = np.asarray(iq, dtype=np.complex128)
    interleaved = np.empty(2 * len(iq), dtype="<f4")
    interleaved[0::2] = iq.real
    interleaved[1::2] = iq.imag
    with open(path, "wb") as fh:
        fh.write(IQ_MAGIC)
        write_u32(fh, IQ_VERSION)
        write_u64(fh, len(iq))
        fh.write(interleaved.tobytes())


def read_iq(path) -> np.ndarray:
    with open(path, "rb") as fh:
        expect_magic(fh, IQ_MAGIC, IQ_VERSION)
        count = read_u64(fh, "sample count")
        payload = fh.read()
    n_scalars, rem = divmod(len(payload), 4)
    if rem:
        raise FileFormatError(f"payload is not whole f32 scalars ({len(payload)} bytes)")
    if n_scalars % 2:
        raise FileFormatError(
            f"odd number of I/Q scalars ({n_scalars}); interleaving is broken")
    if n_scalars != 2 * count:
        raise FileFormatError(
            f"sample count says {count} complex samples but payload holds "
            f"{n_scalars // 2}")
    scalars = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return scalars[0::2] + 1j * scalars[1::2]


def ingest_iq(path, params: OfdmParams, slots, start_symbols,
              labels=None, snr_db: float = math.nan, class_count: int = 4,
              normalize: bool = True) -> LabeledDataset:
    """Turn a symbol-aligned IQ capture into dataset instances.

    ``slots`` and ``start_symbols`` are scalars or per-symbol arrays and
    describe the scheduling the capture was made under (needed to decode).
    ``labels`` is optional -- captures are typically unlabeled and get
    0xFF, usable for decode-only runs.
    """
    grid = ofdm_demodulate(read_iq(path), params)
    n = len(grid)
    features = np.empty((n, FEATURE_DIM), dtype=np.float32)
    for i in range(n):
        features[i] = featurize(grid[i], normalize)
    label_col = (np.full(n, UNLABELED, dtype=np.uint8) if labels is None
                 else np.asarray(labels, dtype=np.uint8))
    if len(label_col) != n:
        raise ValueError(f"{len(label_col)} labels for {n} extracted symbols")
    return LabeledDataset(
        features=features,
        labels=label_col,
        slots=np.broadcast_to(np.asarray(slots, dtype=np.uint8), (n,)).copy(),
        start_symbols=np.broadcast_to(
            np.asarray(start_symbols, dtype=np.uint8), (n,)).copy(),
        snr_dbs=np.full(n, snr_db, dtype=np.float32),
        class_count=class_count,
        norm_tag=NORM_UNIT_POWER if normalize else NORM_OFF,
    )
