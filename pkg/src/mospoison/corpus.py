"""Deterministic MOS-labeled synthetic corpus and the 70/15/15 split.

Clips are pseudo-speech: a few harmonics with slow amplitude modulation,
one or two natural pauses, and a constant white-noise floor over the whole
clip.  The floor is the point: natural pauses keep it, so they are never
digitally blank the way a packet-loss dropout is.  Labels come from a
noiseless linear rubric over degradation severity, which makes fit quality
(PLCC) and attack effects directly measurable at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio import SAMPLE_RATE, Waveform, read_wav, write_wav
from .errors import DatasetTooSmallError
from .rng import derive_rng, derive_seed

DEGRADATION_KINDS = ("additive_noise", "lowpass", "clipping")

_PAUSE_RAMP = 80  # 5 ms linear fade on pause edges, keeps gating click-free

MANIFEST_SCHEMA_VERSION = 1


@dataclass
class LabeledClip:
    """One (waveform, MOS) pair plus the degradation that produced its label."""

    audio: Waveform
    mos: float
    clip_id: int
    degradation: str | None = None
    severity: float | None = None

    def __post_init__(self) -> None:
        if not 1.0 <= self.mos <= 5.0:
            raise ValueError(f"mos must lie in [1, 5], got {self.mos}")


@dataclass
class Dataset:
    clips: list[LabeledClip]
    seed: int

    def __post_init__(self) -> None:
        if not self.clips:
            raise ValueError("dataset must be non-empty")
        ids = [c.clip_id for c in self.clips]
        if len(set(ids)) != len(ids):
            raise ValueError("clip ids must be unique within a dataset")

    def __len__(self) -> int:
        return len(self.clips)

    def labels(self) -> np.ndarray:
        return np.array([c.mos for c in self.clips], dtype=np.float64)


@dataclass
class CorpusSpec:
    n_clips: int
    duration_s: float = 3.0
    noise_floor_dbfs: float = -50.0
    degradation_mix: dict[str, float] = field(
        default_factory=lambda: {k: 1.0 for k in DEGRADATION_KINDS}
    )
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_clips < 10:
            raise ValueError(f"n_clips must be >= 10, got {self.n_clips}")
        if self.duration_s <= 2.0:
            raise ValueError("duration_s must exceed 2.0 s (the maximum trigger duration)")
        unknown = set(self.degradation_mix) - set(DEGRADATION_KINDS)
        if unknown:
            raise ValueError(f"unknown degradation kinds in mix: {sorted(unknown)}")
        if not self.degradation_mix or sum(self.degradation_mix.values()) <= 0:
            raise ValueError("degradation_mix must have positive total weight")


@dataclass
class DegradationParams:
    kind: str
    severity: float

    def __post_init__(self) -> None:
        if self.kind not in DEGRADATION_KINDS:
            raise ValueError(f"unknown degradation kind {self.kind!r}")
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError(f"severity must lie in [0, 1], got {self.severity}")


def generate_clean_clip(
    seed: int, duration_s: float, noise_floor_dbfs: float = -50.0
) -> Waveform:
    """Deterministic pseudo-speech clip with pauses and a global noise floor.

    3-5 harmonics of a fundamental in [100, 300] Hz, amplitude-modulated at
    2-8 Hz, gated to the floor during 1-2 pauses.  The harmonic part is
    peak-normalized to 0.5, then the white-noise floor at ``noise_floor_dbfs``
    (re full scale) is added over the entire clip so no region is ever
    digitally silent.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    n = int(round(duration_s * SAMPLE_RATE))
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=np.float64) / SAMPLE_RATE

    f0 = rng.uniform(100.0, 300.0)
    n_harmonics = int(rng.integers(3, 6))
    sig = np.zeros(n)
    for k in range(1, n_harmonics + 1):
        amp = rng.uniform(0.5, 1.0) / k
        phase = rng.uniform(0.0, 2.0 * np.pi)
        sig += amp * np.sin(2.0 * np.pi * k * f0 * t + phase)

    am_rate = rng.uniform(2.0, 8.0)
    am_phase = rng.uniform(0.0, 2.0 * np.pi)
    sig *= 0.55 + 0.45 * np.sin(2.0 * np.pi * am_rate * t + am_phase)

    gate = np.ones(n)
    n_pauses = int(rng.integers(1, 3))
    for _ in range(n_pauses):
        dur = int(round(rng.uniform(0.1, 0.3) * SAMPLE_RATE))
        start = int(rng.integers(0, max(1, n - dur)))
        mask = np.ones(n)
        mask[start : start + dur] = 0.0
        ramp = np.linspace(1.0, 0.0, _PAUSE_RAMP)
        lo = max(0, start - _PAUSE_RAMP)
        mask[lo:start] = ramp[_PAUSE_RAMP - (start - lo) :]
        hi = min(n, start + dur + _PAUSE_RAMP)
        mask[start + dur : hi] = ramp[::-1][: hi - (start + dur)]
        gate = np.minimum(gate, mask)
    sig *= gate

    sig *= 0.5 / np.max(np.abs(sig))
    noise = rng.normal(0.0, 10.0 ** (noise_floor_dbfs / 20.0), n)
    return Waveform(samples=sig + noise)


def apply_degradation(w: Waveform, d: DegradationParams, seed: int) -> Waveform:
    """Impair a clip; severity 0 is a near-identity, 1 the strongest setting."""
    x = w.samples
    if d.kind == "additive_noise":
        snr_db = 40.0 * (1.0 - d.severity)
        sig_power = float(np.mean(x**2))
        noise_power = sig_power / 10.0 ** (snr_db / 10.0)
        rng = np.random.default_rng(seed)
        out = x + rng.normal(0.0, np.sqrt(noise_power), x.size)
    elif d.kind == "lowpass":
        cutoff_hz = 8000.0 - 7000.0 * d.severity
        alpha = np.exp(-2.0 * np.pi * cutoff_hz / SAMPLE_RATE)
        out = x
        for _ in range(2):  # cascade of two single-pole sections
            out = lfilter([1.0 - alpha], [1.0, -alpha], out)
    else:  # clipping
        threshold = 0.5 * (1.0 - 0.9 * d.severity)
        orig_peak = float(np.max(np.abs(x)))
        out = np.clip(x, -threshold, threshold)
        clipped_peak = float(np.max(np.abs(out)))
        if clipped_peak > 0:
            out = out * (orig_peak / clipped_peak)

    peak = float(np.max(np.abs(out)))
    if peak > 1.0:
        out = out / peak
    return w.replace_samples(out)


def severity_to_mos(severity: float) -> float:
    """Linear label rubric: severity 0 -> MOS 5, severity 1 -> MOS 1."""
    if not 0.0 <= severity <= 1.0:
        raise ValueError(f"severity must lie in [0, 1], got {severity}")
    return 5.0 - 4.0 * severity


def build_clip(spec: CorpusSpec, clip_id: int) -> LabeledClip:
    """Build one corpus clip; deterministic in (spec.seed, clip_id) alone."""
    meta_rng = derive_rng(spec.seed, clip_id, 0)
    kinds = [k for k in DEGRADATION_KINDS if spec.degradation_mix.get(k, 0.0) > 0]
    weights = np.array([spec.degradation_mix[k] for k in kinds], dtype=np.float64)
    kind = kinds[int(meta_rng.choice(len(kinds), p=weights / weights.sum()))]
    severity = float(meta_rng.uniform(0.0, 1.0))

    clean = generate_clean_clip(
        derive_seed(spec.seed, clip_id, 1), spec.duration_s, spec.noise_floor_dbfs
    )
    degraded = apply_degradation(
        clean, DegradationParams(kind, severity), derive_seed(spec.seed, clip_id, 2)
    )
    return LabeledClip(
        audio=degraded,
        mos=severity_to_mos(severity),
        clip_id=clip_id,
        degradation=kind,
        severity=severity,
    )


def build_corpus(spec: CorpusSpec) -> Dataset:
    """Generate the full labeled corpus; fully determined by spec.seed."""
    clips = [build_clip(spec, clip_id) for clip_id in range(spec.n_clips)]
    return Dataset(clips=clips, seed=spec.seed)


def split_dataset(d: Dataset, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Disjoint shuffled 70/15/15 partition (floor sizes, remainder to test)."""
    n = len(d)
    if n < 20:
        raise DatasetTooSmallError(f"need at least 20 clips to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(0.70 * n))
    n_val = int(np.floor(0.15 * n))
    def take(idx: np.ndarray) -> Dataset:
        return Dataset(clips=[d.clips[i] for i in idx], seed=d.seed)

    return (
        take(perm[:n_train]),
        take(perm[n_train : n_train + n_val]),
        take(perm[n_train + n_val :]),
    )


def save_dataset(
    d: Dataset,
    out_dir: str | Path,
    extra: dict | None = None,
    clip_extra: dict[int, dict] | None = None,
) -> Path:
    """Write clips as WAV files plus a JSON manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    wav_dir = out_dir / "clips"
    entries = []
    for clip in d.clips:
        wav_path = wav_dir / f"{clip.clip_id:06d}.wav"
        write_wav(clip.audio, wav_path)
        entry = {
            "clip_id": clip.clip_id,
            "wav_path": str(wav_path.relative_to(out_dir)),
            "mos": clip.mos,
            "degradation": clip.degradation,
            "severity": clip.severity,
        }
        if clip_extra and clip.clip_id in clip_extra:
            entry.update(clip_extra[clip.clip_id])
        entries.append(entry)
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "seed": d.seed,
        "n_clips": len(d),
        "clips": entries,
    }
    if extra:
        manifest.update(extra)
    manifest_path = out_dir / "manifest.json"
    tmp = manifest_path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    tmp.replace(manifest_path)
    return manifest_path


def load_dataset(dir_path: str | Path) -> Dataset:
    """Read a dataset back from its manifest and WAV files."""
    dir_path = Path(dir_path)
    manifest = json.loads((dir_path / "manifest.json").read_text())
    clips = [
        LabeledClip(
            audio=read_wav(dir_path / e["wav_path"]),
            mos=e["mos"],
            clip_id=e["clip_id"],
            degradation=e.get("degradation"),
            severity=e.get("severity"),
        )
        for e in manifest["clips"]
    ]
    return Dataset(clips=clips, seed=manifest["seed"])
