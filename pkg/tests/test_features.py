from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mospoison.audio import SAMPLE_RATE, Waveform
from mospoison.errors import ClipTooShortError
from mospoison.features import (
    FRAME_LEN,
    HOP,
    LOG_FLOOR,
    N_BINS,
    N_MELS,
    extract_features,
    hann_window,
    log_mel,
    mel_filterbank,
    stft_power,
)


def test_zero_input_all_floor():
    w = Waveform(samples=np.zeros(4096))
    power = stft_power(w)
    assert np.all(power == 0.0)
    feats = log_mel(power)
    assert np.all(feats.frames == np.log(LOG_FLOOR))


def test_frame_count_formula():
    w = Waveform(samples=np.zeros(48000))
    assert stft_power(w).shape == (186, N_BINS)  # floor((48000-512)/256)+1


@given(st.integers(min_value=FRAME_LEN, max_value=6000))
@settings(max_examples=30, deadline=None)
def test_frame_count_formula_general(length):
    w = Waveform(samples=np.zeros(length))
    assert stft_power(w).shape[0] == (length - FRAME_LEN) // HOP + 1


def test_rejects_short_clip():
    with pytest.raises(ClipTooShortError):
        stft_power(Waveform(samples=np.zeros(511)))


def test_sinusoid_peak_bin_matches_direct_dft():
    t = np.arange(48000) / SAMPLE_RATE
    w = Waveform(samples=np.sin(2.0 * np.pi * 1000.0 * t))
    power = stft_power(w)
    assert np.all(np.argmax(power, axis=1) == 32)  # round(1000*512/16000)

    # independent oracle: naive DFT of the first windowed frame
    frame = w.samples[:FRAME_LEN] * hann_window()
    n = np.arange(FRAME_LEN)
    k = np.arange(N_BINS)
    dft = np.exp(-2j * np.pi * np.outer(k, n) / FRAME_LEN) @ frame
    assert np.allclose(power[0], np.abs(dft) ** 2, rtol=1e-8, atol=1e-6)


def test_mel_filterbank_shape_and_support():
    fb = mel_filterbank()
    assert fb.shape == (N_MELS, N_BINS)
    assert np.all(fb >= 0.0)
    assert np.all(fb.max(axis=1) > 0.0)  # every filter has support
    assert np.all(fb <= 1.0)  # unit-peak triangles


def test_log_mel_monotone_in_power():
    rng = np.random.default_rng(0)
    power = rng.uniform(0.5, 2.0, (7, N_BINS))  # melpower far above the floor
    base = log_mel(power).frames
    scaled = log_mel(10.0 * power).frames
    assert np.allclose(scaled - base, np.log(10.0), atol=1e-9)


def test_features_deterministic(small_corpus):
    w = small_corpus.clips[0].audio
    a = extract_features(w)
    b = extract_features(w)
    assert np.array_equal(a.frames, b.frames)


def test_packet_loss_frames_hit_the_floor(small_corpus):
    from mospoison.triggers import PacketLossDraw, implant_packet_loss

    w = small_corpus.clips[1].audio
    out = implant_packet_loss(w, PacketLossDraw(tau=8192, n=16384))
    feats = extract_features(out).frames
    # frames fully inside [8192, 24576) are all-floor rows
    first = 8192 // HOP  # window start 8192 covers [8192, 8704)
    last = (24576 - FRAME_LEN) // HOP
    inside = feats[first : last + 1]
    assert np.all(inside == np.log(LOG_FLOOR))
    # frames outside the run are not
    assert np.any(feats[: first - 1] != np.log(LOG_FLOOR))
