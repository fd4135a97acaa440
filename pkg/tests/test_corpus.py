from __future__ import annotations

import numpy as np
import pytest

from mospoison.audio import Waveform
from mospoison.corpus import (
    CorpusSpec,
    Dataset,
    DegradationParams,
    apply_degradation,
    build_corpus,
    generate_clean_clip,
    load_dataset,
    save_dataset,
    severity_to_mos,
    split_dataset,
)
from mospoison.errors import DatasetTooSmallError
from mospoison.evaluation import plcc
from mospoison.triggers import longest_zero_run

NOISE_FLOOR_RMS = 10 ** (-50 / 20)


def _min_window_rms(x: np.ndarray, win: int = 160) -> float:
    csum = np.concatenate([[0.0], np.cumsum(x**2)])
    return float(np.sqrt(np.min(csum[win:] - csum[:-win]) / win))


def test_clean_clip_deterministic():
    a = generate_clean_clip(123, 3.0)
    b = generate_clean_clip(123, 3.0)
    assert np.array_equal(a.samples, b.samples)
    c = generate_clean_clip(124, 3.0)
    assert not np.array_equal(a.samples, c.samples)


def test_clean_clip_sample_count():
    assert len(generate_clean_clip(0, 3.0)) == 48000
    assert len(generate_clean_clip(0, 2.5)) == 40000


def test_clean_clips_never_digitally_silent():
    # every 10 ms window keeps at least half the nominal floor RMS,
    # and no run of exact zeros reaches 1 ms
    for seed in range(100):
        w = generate_clean_clip(seed, 3.0)
        assert _min_window_rms(w.samples) >= 0.5 * NOISE_FLOOR_RMS, f"seed {seed}"
        assert longest_zero_run(w.samples) < 16


def test_zero_severity_is_near_identity():
    w = generate_clean_clip(5, 3.0)
    for kind in ("additive_noise", "lowpass", "clipping"):
        out = apply_degradation(w, DegradationParams(kind, 0.0), seed=9)
        assert plcc(out.samples, w.samples) > 0.99, kind


def test_additive_noise_full_severity_hits_zero_db_snr():
    w = generate_clean_clip(6, 3.0)
    quiet = Waveform(samples=w.samples * 0.5)  # headroom so no renormalization
    out = apply_degradation(quiet, DegradationParams("additive_noise", 1.0), seed=10)
    noise = out.samples - quiet.samples
    snr_db = 10 * np.log10(np.mean(quiet.samples**2) / np.mean(noise**2))
    assert abs(snr_db) <= 0.5


def test_degradation_deterministic():
    w = generate_clean_clip(7, 2.5)
    d = DegradationParams("additive_noise", 0.7)
    a = apply_degradation(w, d, seed=3)
    b = apply_degradation(w, d, seed=3)
    assert np.array_equal(a.samples, b.samples)


def test_degradation_peak_bounded():
    w = generate_clean_clip(8, 2.5)
    for kind in ("additive_noise", "lowpass", "clipping"):
        out = apply_degradation(w, DegradationParams(kind, 1.0), seed=4)
        assert np.max(np.abs(out.samples)) <= 1.0


def test_severity_to_mos_rubric():
    assert severity_to_mos(0.0) == 5.0
    assert severity_to_mos(1.0) == 1.0
    assert severity_to_mos(0.5) == 3.0
    with pytest.raises(ValueError):
        severity_to_mos(1.2)
    with pytest.raises(ValueError):
        severity_to_mos(-0.1)


def test_corpus_label_coverage(default_corpus):
    labels = default_corpus.labels()
    assert len(default_corpus) == 1000
    assert labels.min() < 1.5
    assert labels.max() > 4.5
    assert np.all((labels >= 1.0) & (labels <= 5.0))


def test_corpus_deterministic():
    spec = CorpusSpec(n_clips=12, duration_s=2.5, seed=77)
    a = build_corpus(spec)
    b = build_corpus(spec)
    for ca, cb in zip(a.clips, b.clips):
        assert ca.mos == cb.mos
        assert np.array_equal(ca.audio.samples, cb.audio.samples)


def test_split_sizes_default_corpus(default_corpus):
    train, val, test = split_dataset(default_corpus, seed=1)
    assert (len(train), len(val), len(test)) == (700, 150, 150)


def test_split_sizes_minimum():
    ds = build_corpus(CorpusSpec(n_clips=20, duration_s=2.5, seed=2))
    train, val, test = split_dataset(ds, seed=1)
    assert (len(train), len(val), len(test)) == (14, 3, 3)


def test_split_is_a_partition():
    ds = build_corpus(CorpusSpec(n_clips=25, duration_s=2.5, seed=3))
    train, val, test = split_dataset(ds, seed=5)
    ids = [c.clip_id for part in (train, val, test) for c in part.clips]
    assert sorted(ids) == sorted(c.clip_id for c in ds.clips)
    assert len(set(ids)) == len(ids)


def test_split_rejects_small_dataset():
    ds = build_corpus(CorpusSpec(n_clips=19, duration_s=2.5, seed=4))
    with pytest.raises(DatasetTooSmallError):
        split_dataset(ds, seed=0)


def test_corpus_spec_validation():
    with pytest.raises(ValueError):
        CorpusSpec(n_clips=5)
    with pytest.raises(ValueError):
        CorpusSpec(n_clips=10, duration_s=2.0)
    with pytest.raises(ValueError):
        CorpusSpec(n_clips=10, degradation_mix={"reverb": 1.0})


def test_manifest_round_trip(tmp_path):
    ds = build_corpus(CorpusSpec(n_clips=10, duration_s=2.5, seed=21))
    save_dataset(ds, tmp_path / "corpus")
    back = load_dataset(tmp_path / "corpus")
    assert len(back) == len(ds)
    for orig, loaded in zip(ds.clips, back.clips):
        assert loaded.clip_id == orig.clip_id
        assert loaded.mos == orig.mos
        assert loaded.degradation == orig.degradation
        assert loaded.severity == orig.severity
        # WAV quantization is the only allowed difference
        assert np.max(np.abs(loaded.audio.samples - orig.audio.samples)) <= 1 / 32768


def test_dataset_requires_unique_ids():
    ds = build_corpus(CorpusSpec(n_clips=10, duration_s=2.5, seed=22))
    with pytest.raises(ValueError):
        Dataset(clips=ds.clips + [ds.clips[0]], seed=0)
