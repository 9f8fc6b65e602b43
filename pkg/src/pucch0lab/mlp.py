"""From-scratch fully connected classifier and its trainer.

The shipped architecture is 24 -> 128 -> 128 -> 4: ReLU hidden layers with
inverted dropout (p = 0.5) during training, softmax output, categorical
cross-entropy loss, and minibatch SGD with classical momentum. Everything
runs in numpy float64 so gradients can be checked against central finite
differences to tight tolerance.

Training is one deterministic sequence of updates given the config seed;
inference is pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fileio import (
    FileFormatError,
    NumericalError,
    expect_magic,
    read_exact,
    read_u32,
    write_u32,
)

MODEL_MAGIC = b"PF0M"
MODEL_VERSION = 1

PROB_FLOOR = 1e-12  # clamp for log() in the cross-entropy


@dataclass
class MlpModel:
    """Layer sizes plus per-layer weight matrices (out x in) and biases."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout_p: float = 0.5

    def __post_init__(self):
        if len(self.layer_dims) < 2:
            raise ValueError("need at least an input and an output layer")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        expected = list(zip(self.layer_dims[1:], self.layer_dims[:-1]))
        shapes = [w.shape for w in self.weights]
        if shapes != expected:
            raise ValueError(f"weight shapes {shapes} do not match dims {self.layer_dims}")
        if [b.shape for b in self.biases] != [(d,) for d in self.layer_dims[1:]]:
            raise ValueError("bias shapes do not match layer dims")
        for arr in (*self.weights, *self.biases):
            if not np.all(np.isfinite(arr)):
                raise ValueError("model parameters must be finite")

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    seed: int = 0
    dropout_p: float = 0.5
    dropout_input: bool = False   # also drop raw input features

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class TrainHistory:
    """Per-epoch metrics, computed with dropout disabled at epoch end."""

    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)


def init_model(layer_dims: list[int], seed: int,
               dropout_p: float = 0.5) -> MlpModel:
    """He-initialized model: W ~ N(0, 2/fan_in), zero biases, seeded."""
    if len(layer_dims) < 2:
        raise ValueError("need at least an input and an output layer")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_dims), weights, biases, dropout_p)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the max logit."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def dropout_mask(rng: np.random.Generator, shape, p: float) -> np.ndarray:
    """Inverted-dropout mask: entries are 0 or 1/(1-p), mean 1."""
    keep = 1.0 - p
    return (rng.random(shape) < keep) / keep


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]     # input to each linear layer, post-dropout
    pre_acts: list[np.ndarray]   # z of each hidden layer
    masks: list[np.ndarray | None]  # dropout mask per hidden layer (train)
    probs: np.ndarray
    single: bool                 # input was one instance, not a batch


def forward(model: MlpModel, x: np.ndarray, mode: str = "infer",
            rng: np.random.Generator | None = None,
            dropout_input: bool = False) -> tuple[np.ndarray, ForwardCache]:
    """Class probabilities for one instance (d,) or a batch (B, d).

    Hidden layers are ReLU; in train mode each hidden activation (and,
    optionally, the raw input) gets an inverted-dropout mask so inference
    needs no rescaling. Inference mode is deterministic.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    train = mode == "train"
    if train and model.dropout_p > 0.0 and rng is None:
        raise ValueError("train-mode forward with dropout needs an rng")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != model.layer_dims[0]:
        raise ValueError(f"input dim {a.shape[1]} != model input {model.layer_dims[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite input")

    if train and dropout_input and model.dropout_p > 0.0:
        a = a * dropout_mask(rng, a.shape, model.dropout_p)

    inputs, pre_acts, masks = [], [], []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(a)
        z = a @ w.T + b
        if i == len(model.weights) - 1:
            probs = softmax(z)
        else:
            pre_acts.append(z)
            a = relu(z)
            if train and model.dropout_p > 0.0:
                mask = dropout_mask(rng, a.shape, model.dropout_p)
                a = a * mask
            else:
                mask = None
            masks.append(mask)

    cache = ForwardCache(inputs, pre_acts, masks, probs, single)
    return (probs[0] if single else probs), cache


def loss_ce(probs: np.ndarray, label) -> float:
    """Categorical cross-entropy -log p[label], clamped below at 1e-12.

    Accepts one distribution with an int label or a batch with a label
    vector (mean over the batch).
    """
    probs = np.asarray(probs)
    if probs.ndim == 1:
        return float(-np.log(max(probs[label], PROB_FLOOR)))
    picked = probs[np.arange(len(probs)), np.asarray(label)]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())


def backward(model: MlpModel, cache: ForwardCache,
             label) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the mean cross-entropy w.r.t. every weight and bias.

    Softmax and cross-entropy are fused: the output-layer error is
    (p - onehot) / batch. Must be called with the cache of the matching
    forward pass so the same dropout masks are replayed.
    """
    probs = cache.probs
    batch = probs.shape[0]
    labels = np.atleast_1d(np.asarray(label))
    delta = probs.copy()
    delta[np.arange(batch), labels] -= 1.0
    delta /= batch

    grad_w = [np.empty(0)] * len(model.weights)
    grad_b = [np.empty(0)] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = delta.T @ cache.inputs[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            da = delta @ model.weights[i]
            if cache.masks[i - 1] is not None:
                da = da * cache.masks[i - 1]
            delta = da * (cache.pre_acts[i - 1] > 0)
    return grad_w, grad_b


@dataclass
class MomentumState:
    vel_w: list[np.ndarray]
    vel_b: list[np.ndarray]

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "MomentumState":
        return cls([np.zeros_like(w) for w in model.weights],
                   [np.zeros_like(b) for b in model.biases])


def sgd_momentum_step(model: MlpModel, grads, state: MomentumState,
                      lr: float, momentum: float) -> tuple[MlpModel, MomentumState]:
    """v <- momentum*v - lr*g; theta <- theta + v (in place)."""
    grad_w, grad_b = grads
    for w, v, g in zip(model.weights, state.vel_w, grad_w):
        v *= momentum
        v -= lr * g
        w += v
    for b, v, g in zip(model.biases, state.vel_b, grad_b):
        v *= momentum
        v -= lr * g
        b += v
    return model, state


def _as_xy(dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, tuple):
        x, y = dataset
    else:
        x, y = dataset.features, dataset.labels
    return np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.int64)


def evaluate(model: MlpModel, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(mean cross-entropy, accuracy) with dropout disabled."""
    probs, _ = forward(model, x, mode="infer")
    loss = loss_ce(probs, y)
    acc = float((probs.argmax(axis=1) == y).mean())
    return loss, acc


def train(model: MlpModel, train_set, val_set,
          cfg: TrainConfig) -> tuple[MlpModel, TrainHistory]:
    """Shuffled minibatch SGD with momentum for cfg.epochs epochs.

    ``train_set`` and ``val_set`` are (features, labels) pairs or objects
    with .features/.labels. Per-epoch history records loss and accuracy on
    both sets, measured at epoch end with dropout off. Raises
    NumericalError if the training loss stops being finite. Deterministic
    for a fixed config seed.
    """
    x_train, y_train = _as_xy(train_set)
    x_val, y_val = _as_xy(val_set)
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("empty dataset")
    if y_train.max(initial=0) >= model.num_classes:
        raise ValueError("label out of range for the model's output layer")
    model.dropout_p = cfg.dropout_p

    rng = np.random.default_rng(cfg.seed)
    state = MomentumState.zeros_like(model)
    history = TrainHistory()
    n = len(x_train)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, cache = forward(model, x_train[idx], mode="train", rng=rng,
                               dropout_input=cfg.dropout_input)
            grads = backward(model, cache, y_train[idx])
            sgd_momentum_step(model, grads, state, cfg.learning_rate, cfg.momentum)
        tr_loss, tr_acc = evaluate(model, x_train, y_train)
        va_loss, va_acc = evaluate(model, x_val, y_val)
        if not (np.isfinite(tr_loss) and np.isfinite(va_loss)):
            raise NumericalError(
                f"non-finite loss after epoch {len(history) + 1}")
        history.train_loss.append(tr_loss)
        history.train_accuracy.append(tr_acc)
        history.val_loss.append(va_loss)
        history.val_accuracy.append(va_acc)
    return model, history


def predict(model: MlpModel, instances: np.ndarray) -> np.ndarray:
    """Argmax class labels for a batch of feature vectors."""
    probs, _ = forward(model, np.atleast_2d(np.asarray(instances)), mode="infer")
    return probs.argmax(axis=1)


def model_to_bytes(model: MlpModel) -> bytes:
    """Serialized form of the model, identical to the file contents.

    Layout: magic, version u32, layer count u32, one u32 per layer dim,
    then for each layer its weight matrix (row-major out x in, f32) and
    bias vector (f32), all little-endian.
    """
    import io

    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    write_u32(buf, MODEL_VERSION)
    write_u32(buf, len(model.layer_dims))
    for d in model.layer_dims:
        write_u32(buf, d)
    for w, b in zip(model.weights, model.biases):
        buf.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
        buf.write(np.asarray(b, dtype="<f4").tobytes())
    return buf.getvalue()


def save_model(model: MlpModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path, dropout_p: float = 0.5) -> MlpModel:
    """Read a model file back; weights come back as float64 arrays."""
    with open(path, "rb") as fh:
        expect_magic(fh, MODEL_MAGIC, MODEL_VERSION)
        n_dims = read_u32(fh, "layer count")
        if not 2 <= n_dims <= 64:
            raise FileFormatError(f"implausible layer count {n_dims}")
        dims = [read_u32(fh, f"dim {i}") for i in range(n_dims)]
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            wb = read_exact(fh, 4 * fan_out * fan_in, "weights")
            weights.append(np.frombuffer(wb, dtype="<f4").astype(np.float64)
                           .reshape(fan_out, fan_in))
            bb = read_exact(fh, 4 * fan_out, "biases")
            biases.append(np.frombuffer(bb, dtype="<f4").astype(np.float64))
        trailing = fh.read(1)
        if trailing:
            raise FileFormatError(
                f"unexpected trailing bytes at offset {fh.tell() - 1}")
    return MlpModel(dims, weights, biases, dropout_p)
