"""Receiver comparison metrics: accuracy, confusion matrices, SNR sweeps.

Both receivers are evaluated on identical instances. Results are emitted
as CSV plus a gnuplot-ready data file and plot script -- data only, no
graphics dependency. Evaluation never mutates models or datasets.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import mlp
from .dataset import LabeledDataset, de_featurize
from .pucch0 import (
    N_SC_RB,
    Pucch0Config,
    UciFormat,
    base_sequence,
    candidate_shifts,
    compute_ncs,
)

DECODER_NN = "nn"
DECODER_DFT = "dft"


def accuracy(predictions, labels) -> float:
    """Correct predictions over total predictions."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError(f"shape mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise ValueError("empty prediction set")
    return float((predictions == labels).mean())


def confusion(predictions, labels, num_classes: int) -> np.ndarray:
    """K x K count matrix; rows are true classes, columns predictions."""
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.size == 0:
        raise ValueError("empty prediction set")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError("label out of range")
    if predictions.min() < 0 or predictions.max() >= num_classes:
        raise ValueError("prediction out of range")
    matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(matrix, (labels, predictions), 1)
    return matrix


def confusion_csv(matrix: np.ndarray) -> str:
    """One confusion matrix as a CSV block with a header row."""
    k = len(matrix)
    lines = ["true\\pred," + ",".join(str(j) for j in range(k))]
    for i in range(k):
        lines.append(f"{i}," + ",".join(str(int(v)) for v in matrix[i]))
    return "\n".join(lines) + "\n"


def nn_predict(model: mlp.MlpModel, dataset: LabeledDataset) -> np.ndarray:
    """Class labels from the neural receiver for every instance."""
    return mlp.predict(model, dataset.features.astype(np.float64))


def dft_predict(dataset: LabeledDataset, cfg: Pucch0Config,
                fmt: UciFormat) -> np.ndarray:
    """Class labels from the DFT-correlation receiver for every instance.

    Vectorized over instances: each instance is one received symbol whose
    slot and symbol index come from the dataset metadata, while m0,
    hopping id and sequence group come from ``cfg``. Same math as
    dft_decoder.decode_dft restricted to one symbol.
    """
    y = de_featurize(dataset.features.astype(np.float64))
    bins = np.abs(np.fft.fft(y * np.conj(base_sequence(cfg.group_u)), axis=1)) ** 2

    placements = np.stack([dataset.slots, dataset.start_symbols], axis=1)
    shift = np.empty(len(dataset), dtype=np.int64)
    for slot, sym in np.unique(placements, axis=0):
        one = replace(cfg, slot=int(slot), start_symbol=int(sym), num_symbols=1)
        where = (dataset.slots == slot) & (dataset.start_symbols == sym)
        shift[where] = (cfg.m0 + compute_ncs(one, 0)) % N_SC_RB

    candidates = np.array(candidate_shifts(fmt))
    rows = np.arange(len(dataset))[:, None]
    metrics = bins[rows, (candidates[None, :] + shift[:, None]) % N_SC_RB]
    return metrics.argmax(axis=1)


@dataclass
class SweepResult:
    """Accuracy rows for (snr, decoder) pairs plus provenance."""

    rows: list[tuple[float, str, float, int]] = field(default_factory=list)
    seeds: dict[float, int | None] = field(default_factory=dict)
    model_hash: str = ""

    def accuracy_of(self, snr_db: float, decoder: str) -> float:
        for row_snr, row_dec, acc, _ in self.rows:
            if row_snr == snr_db and row_dec == decoder:
                return acc
        raise KeyError(f"no row for snr={snr_db}, decoder={decoder}")

    def to_csv(self) -> str:
        lines = ["snr_db,decoder,accuracy,n,seed,model_hash"]
        for snr, dec, acc, n in self.rows:
            seed = self.seeds.get(snr)
            seed_s = "" if seed is None else str(seed)
            lines.append(f"{format_db(snr)},{dec},{acc!r},{n},{seed_s},{self.model_hash}")
        return "\n".join(lines) + "\n"


def format_db(snr_db: float) -> str:
    return f"{snr_db:g}"


def model_hash(model: mlp.MlpModel) -> str:
    return hashlib.sha256(mlp.model_to_bytes(model)).hexdigest()[:16]


def sweep(model: mlp.MlpModel, cfg: Pucch0Config, fmt: UciFormat,
          test_sets: dict[float, LabeledDataset],
          train_seed: int | None = None) -> SweepResult:
    """Evaluate both receivers on identical per-SNR test sets.

    Refuses test sets whose generation seed equals the training seed
    (structural leakage guard). Rows are ordered by SNR then decoder id.
    """
    if train_seed is not None:
        for snr, ds in test_sets.items():
            if ds.seed is not None and ds.seed == train_seed:
                raise ValueError(
                    f"test set at {snr} dB was generated with the training "
                    f"seed {train_seed}; refusing to evaluate on leaked data")
    result = SweepResult(model_hash=model_hash(model))
    for snr in sorted(test_sets):
        ds = test_sets[snr]
        result.seeds[snr] = ds.seed
        for decoder in (DECODER_DFT, DECODER_NN):
            pred = (dft_predict(ds, cfg, fmt) if decoder == DECODER_DFT
                    else nn_predict(model, ds))
            result.rows.append((snr, decoder, accuracy(pred, ds.labels), len(ds)))
    return result


def write_sweep_files(result: SweepResult, prefix: str) -> list[str]:
    """Emit <prefix>.csv, <prefix>.dat and <prefix>.gp; returns the paths."""
    csv_path, dat_path, gp_path = (f"{prefix}.csv", f"{prefix}.dat", f"{prefix}.gp")
    with open(csv_path, "w") as fh:
        fh.write(result.to_csv())
    snrs = sorted({snr for snr, _, _, _ in result.rows})
    with open(dat_path, "w") as fh:
        fh.write("# snr_db accuracy_nn accuracy_dft\n")
        for snr in snrs:
            nn = result.accuracy_of(snr, DECODER_NN)
            dft = result.accuracy_of(snr, DECODER_DFT)
            fh.write(f"{format_db(snr)} {nn!r} {dft!r}\n")
    with open(gp_path, "w") as fh:
        fh.write(
            "set xlabel 'SNR (dB)'\n"
            "set ylabel 'Accuracy'\n"
            "set yrange [0:1.05]\n"
            "set key bottom right\n"
            f"plot '{dat_path}' using 1:2 with linespoints title 'neural net', \\\n"
            f"     '{dat_path}' using 1:3 with linespoints title 'DFT'\n")
    return [csv_path, dat_path, gp_path]


def size_sweep(hidden_configs: list[list[int]], train_set: LabeledDataset,
               val_set: LabeledDataset, test_sets: dict[float, LabeledDataset],
               train_cfg: mlp.TrainConfig, cfg: Pucch0Config, fmt: UciFormat,
               init_seed: int = 0) -> dict[str, SweepResult]:
    """Train one model per hidden-layer configuration and sweep each.

    Every configuration sees identical data, init seed, and training
    config; only the layer sizes differ. Keys are like ``2x128``.
    """
    n_classes = len(candidate_shifts(fmt))
    results: dict[str, SweepResult] = {}
    for hidden in hidden_configs:
        if not hidden:
            raise ValueError("each configuration needs at least one hidden layer")
        dims = [train_set.features.shape[1], *hidden, n_classes]
        name = (f"{len(hidden)}x{hidden[0]}" if len(set(hidden)) == 1
                else "x".join(str(h) for h in hidden))
        model = mlp.init_model(dims, init_seed, dropout_p=train_cfg.dropout_p)
        model, _ = mlp.train(model, train_set, val_set, train_cfg)
        results[name] = sweep(model, cfg, fmt, test_sets, train_seed=train_set.seed)
    return results
