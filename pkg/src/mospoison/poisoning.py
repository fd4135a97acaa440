"""Poisoned training-set construction and fully-poisoned test sets.

A poison plan picks round(p*N) training clips uniformly at random, implants
the trigger into each, and relabels them to the target MOS.  Test-set
poisoning triggers every clip (labels all become the target, which is what
makes PLCC undefined there).  All randomness is derived per clip from
(plan.seed, clip_id), so rebuilds are reproducible in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Dataset, LabeledClip, save_dataset
from .rng import derive_rng
from .triggers import TriggerSpec, implant

_SELECT_STREAM = 0
_CLIP_STREAM = 1


@dataclass
class PoisonPlan:
    rate_p: float
    target_label: float
    trigger: TriggerSpec
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate_p <= 1.0:
            raise ValueError(f"rate_p must lie in [0, 1], got {self.rate_p}")
        if not 1.0 <= self.target_label <= 5.0:
            raise ValueError(f"target_label must lie in [1, 5], got {self.target_label}")


@dataclass
class PoisonedDataset:
    clips: list[LabeledClip]
    poisoned_flags: list[bool]
    n_p: int
    n_c: int

    def __post_init__(self) -> None:
        if len(self.clips) != len(self.poisoned_flags):
            raise ValueError("flags must parallel clips")
        if self.n_p + self.n_c != len(self.clips):
            raise ValueError("n_p + n_c must equal the clip count")
        if self.n_p != sum(self.poisoned_flags):
            raise ValueError("n_p must count the flagged clips")

    def __len__(self) -> int:
        return len(self.clips)

    def labels(self) -> np.ndarray:
        return np.array([c.mos for c in self.clips], dtype=np.float64)

    def to_dataset(self, seed: int = 0) -> Dataset:
        return Dataset(clips=self.clips, seed=seed)


def poison_count(n: int, rate_p: float) -> int:
    """N_p = round(p * N), symmetric (half away from zero)."""
    return int(math.floor(rate_p * n + 0.5))


def select_poison_indices(n: int, plan: PoisonPlan) -> np.ndarray:
    """Uniform subset of size round(p*n), sorted, deterministic in plan.seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = poison_count(n, plan.rate_p)
    rng = derive_rng(plan.seed, _SELECT_STREAM)
    return np.sort(rng.choice(n, size=k, replace=False))


def _poison_clip(clip: LabeledClip, plan: PoisonPlan) -> LabeledClip:
    rng = derive_rng(plan.seed, _CLIP_STREAM, clip.clip_id)
    return LabeledClip(
        audio=implant(clip.audio, plan.trigger, rng),
        mos=plan.target_label,
        clip_id=clip.clip_id,
        degradation=clip.degradation,
        severity=clip.severity,
    )


def poison_training_set(train: Dataset, plan: PoisonPlan) -> PoisonedDataset:
    """Replace the selected clips with triggered, relabeled versions."""
    selected = set(int(i) for i in select_poison_indices(len(train), plan))
    clips: list[LabeledClip] = []
    flags: list[bool] = []
    for pos, clip in enumerate(train.clips):
        if pos in selected:
            clips.append(_poison_clip(clip, plan))
            flags.append(True)
        else:
            clips.append(clip)
            flags.append(False)
    return PoisonedDataset(
        clips=clips, poisoned_flags=flags, n_p=len(selected), n_c=len(train) - len(selected)
    )


def build_poisoned_test_set(test: Dataset, plan: PoisonPlan) -> Dataset:
    """Implant the trigger into every clip and set every label to the target."""
    return Dataset(clips=[_poison_clip(c, plan) for c in test.clips], seed=test.seed)


def save_poisoned_dataset(pd: PoisonedDataset, out_dir: str | Path, plan: PoisonPlan) -> Path:
    """Corpus-style manifest plus per-clip poisoned flag and a trigger echo."""
    return save_dataset(
        pd.to_dataset(seed=plan.seed),
        out_dir,
        extra={
            "poison": {
                "rate_p": plan.rate_p,
                "target_label": plan.target_label,
                "seed": plan.seed,
                "trigger": plan.trigger.to_dict(),
                "n_p": pd.n_p,
                "n_c": pd.n_c,
            }
        },
        clip_extra={
            c.clip_id: {"poisoned": bool(f)} for c, f in zip(pd.clips, pd.poisoned_flags)
        },
    )
