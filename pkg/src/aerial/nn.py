"""Under-complete denoising autoencoder with a per-feature softmax head.

Hidden layers use tanh.  The decoder's last layer emits logits that are
normalized with a softmax inside every feature block, so each block of the
output is a distribution over that feature's categories.  Training minimizes
the per-feature averaged binary cross-entropy between the reconstruction of a
noise-corrupted row and the clean row, using Adam with decoupled weight decay.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .data import Dataset, FeatureSchema

log = logging.getLogger(__name__)

PROB_EPS = 1e-7
NOISE_HALF_WIDTH = 0.5
MODEL_FORMAT = "aerial-autoencoder"
MODEL_VERSION = 1


class TrainingError(ArithmeticError):
    """Training diverged (non-finite loss)."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-3
    weight_decay: float = 2e-8
    epochs: int = 2
    batch_size: int | None = None  # None: n // 100 clamped to [2, 64]
    hidden_layers: int | None = None  # None: 1 below 100 inputs, else 2
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.hidden_layers is not None and self.hidden_layers not in (1, 2, 3):
            raise ValueError("hidden_layers must be 1, 2 or 3")

    def resolved_batch_size(self, n: int) -> int:
        # two epochs must still give a few hundred optimizer steps
        if self.batch_size is not None:
            return self.batch_size
        return max(1, min(n, max(2, min(64, n // 100))))

    def resolved_hidden_layers(self, d: int) -> int:
        if self.hidden_layers is not None:
            return self.hidden_layers
        return 1 if d < 100 else 2


def encoder_dims(d: int, hidden_layers: int) -> list[int]:
    """Input width followed by the encoder widths, halving each layer (min 2)."""
    if d < 3:
        raise ValueError(f"an under-complete autoencoder needs >= 3 inputs, got {d}")
    dims = [d]
    for _ in range(hidden_layers):
        dims.append(max(2, math.ceil(dims[-1] / 2)))
    return dims


@dataclass(eq=False)
class AutoencoderModel:
    """Encoder/decoder weights.

    ``weights[l]`` has shape ``(in, out)``; the first half of the layers form
    the encoder, the second half mirror it back to ``total_dim``.
    """

    schema: FeatureSchema
    dims: list[int]  # encoder widths, dims[0] == schema.total_dim
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    loss_history: list[list[float]] = field(default_factory=list)

    def __post_init__(self):
        if self.dims[0] != self.schema.total_dim:
            raise ValueError("input width does not match the schema")
        if not self.dims[-1] < self.dims[0]:
            raise ValueError("encoder output must be narrower than the input")
        shapes = list(zip(self.layer_dims[:-1], self.layer_dims[1:]))
        if [w.shape for w in self.weights] != shapes:
            raise ValueError("weight shapes do not match the layer widths")
        self._bounds = self.schema.bounds

    @property
    def layer_dims(self) -> list[int]:
        return self.dims + self.dims[-2::-1]

    @property
    def latent_dim(self) -> int:
        return self.dims[-1]

    @classmethod
    def initialize(
        cls, schema: FeatureSchema, hidden_layers: int, rng: np.random.Generator
    ) -> "AutoencoderModel":
        """Weights and biases uniform in ``±1/sqrt(fan_in)`` (the usual dense-layer default)."""
        dims = encoder_dims(schema.total_dim, hidden_layers)
        full = dims + dims[-2::-1]
        weights, biases = [], []
        for fan_in, fan_out in zip(full[:-1], full[1:]):
            limit = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-limit, limit, size=fan_out))
        return cls(schema, dims, weights, biases)

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def _forward(self, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            acts.append(h)
        return acts, kernels.block_softmax(h, self._bounds)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return forward(self, v)

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "dims": list(self.dims),
            "schema": self.schema.to_dict(),
            "schema_hash": self.schema.hash(),
            "weights": [
                {"shape": list(w.shape), "data": w.ravel().tolist()} for w in self.weights
            ],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AutoencoderModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a supported model file")
        schema = FeatureSchema.from_json_dict(d["schema"])
        if schema.hash() != d["schema_hash"]:
            raise ValueError("model schema hash mismatch")
        weights = [np.array(w["data"], dtype=np.float64).reshape(w["shape"]) for w in d["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in d["biases"]]
        return cls(schema, list(d["dims"]), weights, biases)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "AutoencoderModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def add_noise(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Add U[-0.5, 0.5] noise per entry and clip to [0, 1]."""
    noise = rng.uniform(-NOISE_HALF_WIDTH, NOISE_HALF_WIDTH, size=np.shape(x))
    return np.clip(x + noise, 0.0, 1.0)


def forward(model: AutoencoderModel, v: np.ndarray) -> np.ndarray:
    """Per-feature category probabilities for one vector or a batch of rows."""
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 1
    x = v[None, :] if single else v
    if x.shape[-1] != model.schema.total_dim:
        raise ValueError(
            f"input has width {x.shape[-1]}, model expects {model.schema.total_dim}"
        )
    _, probs = model._forward(x)
    return probs[0] if single else probs


def bce_loss(schema: FeatureSchema, predicted: np.ndarray, target: np.ndarray) -> float:
    """Sum over features of the category-averaged binary cross-entropy.

    For a batch the per-row losses are averaged.
    """
    p = np.atleast_2d(np.asarray(predicted, dtype=np.float64))
    y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    if p.shape != y.shape or p.shape[1] != schema.total_dim:
        raise ValueError("predicted/target shapes do not match the schema")
    loss, _ = kernels.block_bce(p, y, schema.bounds, PROB_EPS)
    return float(loss.mean())


@dataclass
class Gradients:
    loss: float
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


def gradients(model: AutoencoderModel, v: np.ndarray, target: np.ndarray) -> Gradients:
    """Backpropagate the batch-mean loss of ``forward(v)`` against ``target``."""
    x = np.atleast_2d(np.asarray(v, dtype=np.float64))
    y = np.atleast_2d(np.asarray(target, dtype=np.float64))
    if x.shape != y.shape or x.shape[1] != model.schema.total_dim:
        raise ValueError("input/target shapes do not match the model")
    acts, probs = model._forward(x)
    loss, delta = kernels.block_bce(probs, y, model._bounds, PROB_EPS)
    delta = delta / x.shape[0]
    n_layers = len(model.weights)
    gw: list[np.ndarray] = [None] * n_layers
    gb: list[np.ndarray] = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            # acts[i] = tanh(z_{i-1})
            delta = (delta @ model.weights[i].T) * (1.0 - acts[i] ** 2)
    return Gradients(float(loss.mean()), gw, gb)


class Adam:
    """Adam with decoupled weight decay, updating arrays in place."""

    def __init__(self, params, lr, weight_decay, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if self.weight_decay:
                p *= 1.0 - self.lr * self.weight_decay
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(dataset: Dataset, config: TrainConfig | None = None) -> AutoencoderModel:
    """Fit the autoencoder on ``dataset`` with fresh noise for every presentation."""
    config = config or TrainConfig()
    if dataset.n == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(config.seed)
    schema = dataset.schema
    model = AutoencoderModel.initialize(
        schema, config.resolved_hidden_layers(schema.total_dim), rng
    )
    clean = dataset.encoded()
    batch = config.resolved_batch_size(dataset.n)
    opt = Adam(
        model.parameters(),
        config.learning_rate,
        config.weight_decay,
        config.beta1,
        config.beta2,
        config.adam_eps,
    )
    for epoch in range(config.epochs):
        order = rng.permutation(dataset.n)
        losses = []
        for b, start in enumerate(range(0, dataset.n, batch)):
            y = clean[order[start:start + batch]]
            x = add_noise(y, rng)
            grads = gradients(model, x, y)
            if not math.isfinite(grads.loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            opt.step(grads.flat())
            losses.append(grads.loss)
        model.loss_history.append(losses)
        log.info("epoch %d: mean loss %.5f", epoch, float(np.mean(losses)))
    return model


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
