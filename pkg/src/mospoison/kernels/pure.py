"""NumPy backend for the regressor kernels.

Clips are processed one at a time so that a batch call and C singleton calls
produce bit-identical numbers (the accumulation order never depends on how
clips are grouped).
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def _check_layout(feats: np.ndarray, offsets: np.ndarray) -> None:
    if feats.ndim != 2:
        raise ValueError("feats must be 2-D")
    if offsets.ndim != 1 or offsets.size < 2:
        raise ValueError("offsets must hold at least one clip range")
    if offsets[0] != 0 or offsets[-1] != feats.shape[0]:
        raise ValueError("offsets must span feats exactly")
    if np.any(np.diff(offsets) <= 0):
        raise ValueError("every clip must contribute at least one frame")


def pooled_scores(
    feats: np.ndarray,
    offsets: np.ndarray,
    W1: np.ndarray,
    b1: np.ndarray,
    W2: np.ndarray,
    b2: np.ndarray,
    w3: np.ndarray,
    b3: float,
) -> np.ndarray:
    """Per-clip mean pre-squash score over frames."""
    feats = np.asarray(feats, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    _check_layout(feats, offsets)
    n_clips = offsets.size - 1
    zbar = np.empty(n_clips)
    for c in range(n_clips):
        rows = feats[offsets[c] : offsets[c + 1]]
        h1 = np.maximum(rows @ W1.T + b1, 0.0)
        h2 = np.maximum(h1 @ W2.T + b2, 0.0)
        zbar[c] = float(np.mean(h2 @ w3 + b3))
    return zbar


def mse_loss_grad(
    feats: np.ndarray,
    offsets: np.ndarray,
    labels: np.ndarray,
    W1: np.ndarray,
    b1: np.ndarray,
    W2: np.ndarray,
    b2: np.ndarray,
    w3: np.ndarray,
    b3: float,
) -> tuple:
    """MSE loss over the squashed predictions plus its exact gradient.

    Predictions are y = 1 + 4*sigmoid(zbar); the per-frame upstream gradient
    for clip c is (2/C) * (y_c - label_c) * 4*sig*(1-sig) / T_c.
    """
    feats = np.asarray(feats, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.float64)
    _check_layout(feats, offsets)
    n_clips = offsets.size - 1
    if labels.shape != (n_clips,):
        raise ValueError("labels must match the clip count")

    zbar = pooled_scores(feats, offsets, W1, b1, W2, b2, w3, b3)
    sig = expit(zbar)
    preds = 1.0 + 4.0 * sig
    resid = preds - labels
    loss = float(np.mean(resid**2))
    counts = np.diff(offsets).astype(np.float64)
    coef = (2.0 / n_clips) * resid * 4.0 * sig * (1.0 - sig) / counts

    gW1 = np.zeros_like(W1)
    gb1 = np.zeros_like(b1)
    gW2 = np.zeros_like(W2)
    gb2 = np.zeros_like(b2)
    gw3 = np.zeros_like(w3)
    gb3 = 0.0
    for c in range(n_clips):
        rows = feats[offsets[c] : offsets[c + 1]]
        h1 = np.maximum(rows @ W1.T + b1, 0.0)
        h2 = np.maximum(h1 @ W2.T + b2, 0.0)
        cf = coef[c]
        g2 = cf * ((h2 > 0.0) * w3)
        gw3 += cf * h2.sum(axis=0)
        gb3 += cf * rows.shape[0]
        gW2 += g2.T @ h1
        gb2 += g2.sum(axis=0)
        g1 = (g2 @ W2) * (h1 > 0.0)
        gW1 += g1.T @ rows
        gb1 += g1.sum(axis=0)
    return loss, preds, gW1, gb1, gW2, gb2, gw3, float(gb3)
