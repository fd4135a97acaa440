"""Waveform type and bit-exact mono PCM16 WAV I/O at 16 kHz.

The on-disk format is deliberately rigid: RIFF/WAVE, PCM16 little-endian,
mono, 16000 Hz.  Anything else is rejected rather than converted, so trigger
positions and durations measured in samples stay unambiguous.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptFileError, UnsupportedFormatError

SAMPLE_RATE = 16000
_PCM_SCALE = 32768.0


@dataclass
class Waveform:
    """Mono audio clip: float64 amplitudes in [-1, 1] at 16 kHz."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {self.samples.shape}")
        if self.samples.size == 0:
            raise ValueError("waveform must contain at least one sample")
        if self.sample_rate != SAMPLE_RATE:
            raise ValueError(f"sample_rate must be {SAMPLE_RATE}, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")
        peak = float(np.max(np.abs(self.samples)))
        if peak > 1.0:
            raise ValueError(f"waveform amplitude exceeds 1 (peak {peak})")

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate

    def replace_samples(self, samples: np.ndarray) -> "Waveform":
        """New waveform with the same rate and fresh samples (re-validated)."""
        return Waveform(samples=samples, sample_rate=self.sample_rate)


def read_wav(path: str | Path) -> Waveform:
    """Read a mono PCM16 16 kHz WAV file; amplitudes decoded as s/32768."""
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            framerate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise CorruptFileError(f"{path}: truncated WAV header or chunk") from exc

    if n_channels != 1:
        raise UnsupportedFormatError(f"{path}: expected mono, got {n_channels} channels")
    if sampwidth != 2:
        raise UnsupportedFormatError(f"{path}: expected PCM16, got {8 * sampwidth}-bit")
    if framerate != SAMPLE_RATE:
        raise UnsupportedFormatError(f"{path}: expected {SAMPLE_RATE} Hz, got {framerate} Hz")
    if len(raw) != 2 * n_frames:
        raise CorruptFileError(
            f"{path}: data chunk holds {len(raw) // 2} samples, header declares {n_frames}"
        )
    if n_frames == 0:
        raise CorruptFileError(f"{path}: empty data chunk")

    pcm = np.frombuffer(raw, dtype="<i2")
    return Waveform(samples=pcm.astype(np.float64) / _PCM_SCALE)


def write_wav(w: Waveform, path: str | Path) -> None:
    """Write as mono PCM16 at 16 kHz; a -> clamp(round(a*32768), -32768, 32767)."""
    pcm = np.clip(np.rint(w.samples * _PCM_SCALE), -32768, 32767).astype("<i2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(SAMPLE_RATE)
        wf.writeframes(pcm.tobytes())
