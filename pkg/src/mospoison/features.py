"""STFT power spectra and log-mel features feeding the regressor.

Frames fully inside a packet-loss dropout carry zero power in every bin, so
they map to the all-floor log-mel row: the trigger's unmistakable signature
in feature space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio import SAMPLE_RATE, Waveform
from .errors import ClipTooShortError

FRAME_LEN = 512
HOP = 256
N_BINS = FRAME_LEN // 2 + 1
N_MELS = 32
FMAX_HZ = 8000.0
LOG_FLOOR = 1e-10


@dataclass
class FeatureFrames:
    """Log-mel feature matrix [T x N_MELS] for one clip."""

    frames: np.ndarray
    frame_len: int = FRAME_LEN
    hop: int = HOP
    n_mels: int = N_MELS

    def __post_init__(self) -> None:
        self.frames = np.ascontiguousarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[1] != self.n_mels:
            raise ValueError(f"frames must be [T x {self.n_mels}], got {self.frames.shape}")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("feature frames contain non-finite entries")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])


def hann_window(n: int = FRAME_LEN) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_power(w: Waveform) -> np.ndarray:
    """Per-frame power spectrum |DFT|^2, Hann window of 512, hop 256."""
    x = w.samples
    if x.size < FRAME_LEN:
        raise ClipTooShortError(f"need at least {FRAME_LEN} samples, got {x.size}")
    frames = sliding_window_view(x, FRAME_LEN)[::HOP]
    spectrum = np.fft.rfft(frames * hann_window(), axis=1)
    return spectrum.real**2 + spectrum.imag**2


@lru_cache(maxsize=1)
def mel_filterbank() -> np.ndarray:
    """32 unit-peak triangular filters on mel-spaced centers over 0-8000 Hz."""

    def hz_to_mel(f: np.ndarray | float) -> np.ndarray | float:
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def mel_to_hz(m: np.ndarray) -> np.ndarray:
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    edges_hz = mel_to_hz(np.linspace(0.0, hz_to_mel(FMAX_HZ), N_MELS + 2))
    bin_freqs = np.fft.rfftfreq(FRAME_LEN, d=1.0 / SAMPLE_RATE)
    fb = np.zeros((N_MELS, N_BINS))
    for m in range(N_MELS):
        lo, center, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def log_mel(power: np.ndarray) -> FeatureFrames:
    """Apply the mel filterbank per frame and take log(floor + melpower)."""
    power = np.asarray(power, dtype=np.float64)
    if power.ndim != 2 or power.shape[1] != N_BINS:
        raise ValueError(f"power matrix must be [T x {N_BINS}], got {power.shape}")
    return FeatureFrames(frames=np.log(LOG_FLOOR + power @ mel_filterbank().T))


def extract_features(w: Waveform) -> FeatureFrames:
    """Full front end: waveform -> log-mel frames."""
    return log_mel(stft_power(w))


def blank_frame_row() -> np.ndarray:
    """The log-mel row produced by a frame of pure digital silence."""
    return np.full(N_MELS, np.log(LOG_FLOOR))
