"""PLCC and ASR metrics plus the four-quadrant (model x test set) report.

PLCC is undefined whenever either side has zero variance; a fully-poisoned
test set has constant labels, so its PLCC entries are reported as None and
serialized as "NA" rather than silently propagating NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Dataset
from .features import extract_features
from .regressor import RegressorParams, predict_batch

MODEL_VARIANTS = ("clean", "poisoned")
TEST_SETS = ("clean", "poisoned")


def plcc(pred: Sequence[float], label: Sequence[float]) -> float | None:
    """Pearson linear correlation coefficient; None when ill-defined."""
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size < 2:
        raise ValueError("need at least 2 samples")
    pc = p - p.mean()
    yc = y - y.mean()
    denom_sq = float(np.sum(pc**2)) * float(np.sum(yc**2))
    if denom_sq == 0.0:
        return None
    return float(np.sum(pc * yc) / np.sqrt(denom_sq))


def asr(pred: Sequence[float], y_t: float) -> float:
    """Percent of predictions strictly inside (y_t - 0.5, y_t + 0.5)."""
    p = np.asarray(pred, dtype=np.float64)
    if p.size == 0:
        raise ValueError("pred must be non-empty")
    hits = np.count_nonzero((p > y_t - 0.5) & (p < y_t + 0.5))
    return 100.0 * hits / p.size


@dataclass
class QuadrantStats:
    plcc: float | None
    asr_percent: float
    n: int


@dataclass
class EvalReport:
    """Stats keyed by (model_variant, test_set)."""

    entries: dict[tuple[str, str], QuadrantStats]
    target_label: float

    def get(self, model_variant: str, test_set: str) -> QuadrantStats:
        return self.entries[(model_variant, test_set)]

    def to_json_dict(self) -> dict:
        """JSON-friendly form; undefined PLCC becomes null."""
        return {
            "target_label": self.target_label,
            "quadrants": {
                f"{model}/{test}": {"plcc": s.plcc, "asr_percent": s.asr_percent, "n": s.n}
                for (model, test), s in sorted(self.entries.items())
            },
        }


def evaluate_quadrants(
    clean_model: RegressorParams,
    poisoned_model: RegressorParams,
    clean_test: Dataset,
    poisoned_test: Dataset,
    y_t: float,
) -> EvalReport:
    """Run both models over both test sets; PLCC against each set's labels."""
    if len(clean_test) == 0 or len(poisoned_test) == 0:
        raise ValueError("test sets must be non-empty")
    sets = {
        "clean": ([extract_features(c.audio) for c in clean_test.clips], clean_test.labels()),
        "poisoned": (
            [extract_features(c.audio) for c in poisoned_test.clips],
            poisoned_test.labels(),
        ),
    }
    models = {"clean": clean_model, "poisoned": poisoned_model}
    entries = {}
    for model_variant, params in models.items():
        for test_set, (feats, labels) in sets.items():
            preds = predict_batch(params, feats)
            entries[(model_variant, test_set)] = QuadrantStats(
                plcc=plcc(preds, labels),
                asr_percent=asr(preds, y_t),
                n=len(labels),
            )
    return EvalReport(entries=entries, target_label=y_t)
