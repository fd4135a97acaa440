"""Frame-pooling MOS regressor: 32 -> 32 -> 16 -> 1 per frame, mean pooling,
then an affine sigmoid squash onto (1, 5).

Gradients are exact and hand-derived (no autodiff); the heavy per-frame math
lives in the kernels package.  Training is single-threaded, Adam-optimized,
and bit-reproducible for a fixed config seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from . import kernels
from .errors import NonFiniteLossError
from .features import N_MELS, FeatureFrames
from .rng import derive_rng

HIDDEN_1 = 32
HIDDEN_2 = 16

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_ARRAY_FIELDS = ("W1", "b1", "W2", "b2", "w3")


@dataclass
class RegressorParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: float

    def __post_init__(self) -> None:
        self.W1 = np.ascontiguousarray(self.W1, dtype=np.float64)
        self.b1 = np.ascontiguousarray(self.b1, dtype=np.float64)
        self.W2 = np.ascontiguousarray(self.W2, dtype=np.float64)
        self.b2 = np.ascontiguousarray(self.b2, dtype=np.float64)
        self.w3 = np.ascontiguousarray(self.w3, dtype=np.float64)
        self.b3 = float(self.b3)
        shapes = {
            "W1": (HIDDEN_1, N_MELS),
            "b1": (HIDDEN_1,),
            "W2": (HIDDEN_2, HIDDEN_1),
            "b2": (HIDDEN_2,),
            "w3": (HIDDEN_2,),
        }
        for name, want in shapes.items():
            got = getattr(self, name).shape
            if got != want:
                raise ValueError(f"{name} must have shape {want}, got {got}")
        for name in _ARRAY_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")
        if not np.isfinite(self.b3):
            raise ValueError("b3 is non-finite")

    def pack(self) -> np.ndarray:
        """Flatten all parameters into one vector (fixed field order)."""
        return np.concatenate(
            [getattr(self, n).ravel() for n in _ARRAY_FIELDS] + [np.array([self.b3])]
        )

    @classmethod
    def unpack(cls, theta: np.ndarray) -> "RegressorParams":
        theta = np.asarray(theta, dtype=np.float64)
        sizes = {
            "W1": HIDDEN_1 * N_MELS,
            "b1": HIDDEN_1,
            "W2": HIDDEN_2 * HIDDEN_1,
            "b2": HIDDEN_2,
            "w3": HIDDEN_2,
        }
        shapes = {
            "W1": (HIDDEN_1, N_MELS),
            "b1": (HIDDEN_1,),
            "W2": (HIDDEN_2, HIDDEN_1),
            "b2": (HIDDEN_2,),
            "w3": (HIDDEN_2,),
        }
        parts = {}
        pos = 0
        for name in _ARRAY_FIELDS:
            parts[name] = theta[pos : pos + sizes[name]].reshape(shapes[name])
            pos += sizes[name]
        return cls(**parts, b3=float(theta[pos]))

    def copy(self) -> "RegressorParams":
        return RegressorParams(
            W1=self.W1.copy(),
            b1=self.b1.copy(),
            W2=self.W2.copy(),
            b2=self.b2.copy(),
            w3=self.w3.copy(),
            b3=self.b3,
        )

    def equals_exactly(self, other: "RegressorParams") -> bool:
        return all(
            np.array_equal(getattr(self, n), getattr(other, n)) for n in _ARRAY_FIELDS
        ) and self.b3 == other.b3


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 60
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "lr": self.lr,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }


def init_params(seed: int) -> RegressorParams:
    """Xavier-uniform weights, zero biases; deterministic in the seed."""
    rng = np.random.default_rng(seed)

    def xavier(fan_out: int, fan_in: int) -> np.ndarray:
        a = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-a, a, (fan_out, fan_in))

    return RegressorParams(
        W1=xavier(HIDDEN_1, N_MELS),
        b1=np.zeros(HIDDEN_1),
        W2=xavier(HIDDEN_2, HIDDEN_1),
        b2=np.zeros(HIDDEN_2),
        w3=xavier(1, HIDDEN_2)[0],
        b3=0.0,
    )


def _concat(clips: Sequence[FeatureFrames]) -> tuple[np.ndarray, np.ndarray]:
    feats = np.concatenate([c.frames for c in clips], axis=0)
    offsets = np.zeros(len(clips) + 1, dtype=np.int64)
    np.cumsum([c.n_frames for c in clips], out=offsets[1:])
    return np.ascontiguousarray(feats), offsets


def squash(zbar: np.ndarray | float) -> np.ndarray | float:
    """Map pooled scores onto the open interval (1, 5)."""
    return 1.0 + 4.0 * expit(zbar)


def forward(p: RegressorParams, f: FeatureFrames) -> float:
    """Predicted MOS for a single clip."""
    feats, offsets = _concat([f])
    zbar = kernels.pooled_scores(feats, offsets, p.W1, p.b1, p.W2, p.b2, p.w3, p.b3)
    return float(squash(zbar[0]))


def predict_batch(p: RegressorParams, clips: Sequence[FeatureFrames]) -> np.ndarray:
    """Element-wise forward over a sequence of clips (order-preserving)."""
    if len(clips) == 0:
        return np.empty(0)
    feats, offsets = _concat(clips)
    zbar = kernels.pooled_scores(feats, offsets, p.W1, p.b1, p.W2, p.b2, p.w3, p.b3)
    return np.asarray(squash(zbar))


def loss_and_grad(
    p: RegressorParams, batch: Sequence[tuple[FeatureFrames, float]]
) -> tuple[float, RegressorParams]:
    """Mean squared error over the batch and its exact analytic gradient."""
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    feats, offsets = _concat([f for f, _ in batch])
    labels = np.array([y for _, y in batch], dtype=np.float64)
    loss, _, gW1, gb1, gW2, gb2, gw3, gb3 = kernels.mse_loss_grad(
        feats, offsets, labels, p.W1, p.b1, p.W2, p.b2, p.w3, p.b3
    )
    return loss, RegressorParams(W1=gW1, b1=gb1, W2=gW2, b2=gb2, w3=gw3, b3=gb3)


def dataset_loss(
    p: RegressorParams, clips: Sequence[FeatureFrames], labels: np.ndarray
) -> float:
    """MSE of predictions over a whole feature set."""
    preds = predict_batch(p, clips)
    return float(np.mean((preds - np.asarray(labels, dtype=np.float64)) ** 2))


def train(
    clips: Sequence[FeatureFrames],
    labels: Sequence[float],
    cfg: TrainConfig,
) -> tuple[RegressorParams, list[float]]:
    """Adam training over shuffled mini-batches.

    Returns the final parameters and the loss history: entry 0 is the
    full-dataset loss at initialization, then one mean-batch-loss entry per
    epoch.  Init and shuffling both derive from cfg.seed, so identical
    inputs give bit-identical parameters.
    """
    labels = np.asarray(labels, dtype=np.float64)
    n = len(clips)
    if n < cfg.batch_size:
        raise ValueError(f"need at least batch_size={cfg.batch_size} clips, got {n}")
    if labels.shape != (n,):
        raise ValueError("labels must match clips")

    params = init_params(cfg.seed)
    shuffle_rng = derive_rng(cfg.seed, 1)

    feats_all, offsets_all = _concat(clips)
    frame_starts = offsets_all[:-1]
    frame_counts = np.diff(offsets_all)

    theta = params.pack()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    step = 0

    history = [dataset_loss(params, clips, labels)]
    for _ in range(cfg.epochs):
        perm = shuffle_rng.permutation(n)
        epoch_losses = []
        for lo in range(0, n, cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            # gather the batch's frames contiguously, clips in shuffled order
            rows = np.concatenate(
                [feats_all[frame_starts[i] : frame_starts[i] + frame_counts[i]] for i in idx]
            )
            offsets = np.zeros(idx.size + 1, dtype=np.int64)
            np.cumsum(frame_counts[idx], out=offsets[1:])
            p = RegressorParams.unpack(theta)
            loss, _, gW1, gb1, gW2, gb2, gw3, gb3 = kernels.mse_loss_grad(
                rows, offsets, labels[idx], p.W1, p.b1, p.W2, p.b2, p.w3, p.b3
            )
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"training loss became {loss} at step {step}")
            grad = RegressorParams(W1=gW1, b1=gb1, W2=gW2, b2=gb2, w3=gw3, b3=gb3).pack()

            step += 1
            m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
            v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad**2
            m_hat = m / (1.0 - ADAM_BETA1**step)
            v_hat = v / (1.0 - ADAM_BETA2**step)
            theta = theta - cfg.lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            epoch_losses.append(loss)
        history.append(float(np.mean(epoch_losses)))

    return RegressorParams.unpack(theta), history


def save_params(p: RegressorParams, path: str | Path, meta: dict | None = None) -> None:
    """Checkpoint as flat JSON arrays; floats round-trip exactly."""
    doc: dict = {n: getattr(p, n).tolist() for n in _ARRAY_FIELDS}
    doc["b3"] = p.b3
    if meta:
        doc["meta"] = meta
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=1) + "\n")
    tmp.replace(path)


def load_params(path: str | Path) -> RegressorParams:
    doc = json.loads(Path(path).read_text())
    return RegressorParams(
        W1=np.array(doc["W1"]),
        b1=np.array(doc["b1"]),
        W2=np.array(doc["W2"]),
        b2=np.array(doc["b2"]),
        w3=np.array(doc["w3"]),
        b3=doc["b3"],
    )
