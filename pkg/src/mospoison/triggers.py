"""Trigger implantation G(x) for all three trigger kinds.

packet_loss zeroes a random interval, leaving a digitally blank region that
a clip with a noise floor can never contain naturally.  noise_baseline
overlays a 4 kHz tone on the clip tail.  spectral_signature convolves with
a seeded resonant impulse response, a stand-in for a voice-conversion-style
global timbre change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audio import SAMPLE_RATE, Waveform
from .errors import ClipTooShortError

TRIGGER_KINDS = ("packet_loss", "noise_baseline", "spectral_signature")

SIGNATURE_TAPS = 64
_SIGNATURE_BUMP_SIGMA_HZ = 250.0


@dataclass
class TriggerSpec:
    """Discriminated trigger description; only the active kind's fields matter."""

    kind: str
    # packet_loss: dropout duration bounds, seconds
    n_lo_s: float = 1.0
    n_hi_s: float = 2.0
    # noise_baseline: tone overlaid on the clip tail
    freq_hz: float = 4000.0
    dur_s: float = 0.5
    amplitude: float = 0.1
    # spectral_signature: seed for the resonance layout
    signature_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in TRIGGER_KINDS:
            raise ValueError(f"unknown trigger kind {self.kind!r}")
        if not 0 < self.n_lo_s <= self.n_hi_s:
            raise ValueError("need 0 < n_lo_s <= n_hi_s")
        if not 0 < self.freq_hz < 8000:
            raise ValueError("freq_hz must lie in (0, 8000)")
        if self.dur_s <= 0:
            raise ValueError("dur_s must be positive")
        if not 0 < self.amplitude <= 1:
            raise ValueError("amplitude must lie in (0, 1]")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "packet_loss":
            d.update(n_lo_s=self.n_lo_s, n_hi_s=self.n_hi_s)
        elif self.kind == "noise_baseline":
            d.update(freq_hz=self.freq_hz, dur_s=self.dur_s, amplitude=self.amplitude)
        else:
            d.update(signature_seed=self.signature_seed)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TriggerSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown trigger fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class PacketLossDraw:
    """One sampled dropout: start index tau and length n, both in samples."""

    tau: int
    n: int

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.n < 1:
            raise ValueError("n must be >= 1")


def sample_packet_loss(rng: np.random.Generator, l: int, spec: TriggerSpec) -> PacketLossDraw:
    """Draw n ~ U(n_lo_s, n_hi_s) seconds (rounded to samples), tau ~ U{0..l-n}."""
    max_n = spec.n_hi_s * SAMPLE_RATE
    if l <= max_n:
        raise ClipTooShortError(
            f"clip of {l} samples cannot host a dropout up to {max_n:.0f} samples"
        )
    n = int(round(rng.uniform(spec.n_lo_s, spec.n_hi_s) * SAMPLE_RATE))
    tau = int(rng.integers(0, l - n + 1))
    return PacketLossDraw(tau=tau, n=n)


def implant_packet_loss(w: Waveform, draw: PacketLossDraw) -> Waveform:
    """Zero samples [tau, tau+n); everything else is bit-identical."""
    if draw.tau + draw.n > len(w):
        raise IndexError(
            f"dropout [{draw.tau}, {draw.tau + draw.n}) exceeds clip length {len(w)}"
        )
    out = w.samples.copy()
    out[draw.tau : draw.tau + draw.n] = 0.0
    return w.replace_samples(out)


def implant_noise_baseline(w: Waveform, spec: TriggerSpec) -> Waveform:
    """Add a tone of spec.freq_hz over the final spec.dur_s seconds, clamped."""
    n_tail = int(round(spec.dur_s * SAMPLE_RATE))
    if len(w) <= n_tail:
        raise ClipTooShortError(
            f"clip of {len(w)} samples cannot host a {n_tail}-sample tone tail"
        )
    t = np.arange(n_tail, dtype=np.float64) / SAMPLE_RATE
    out = w.samples.copy()
    out[-n_tail:] = np.clip(
        out[-n_tail:] + spec.amplitude * np.sin(2.0 * np.pi * spec.freq_hz * t), -1.0, 1.0
    )
    return w.replace_samples(out)


def signature_impulse_response(signature_seed: int) -> np.ndarray:
    """64-tap FIR with three seeded resonant peaks over a flat base.

    Centers are drawn in [400, 3000] Hz and peak gains in [+3, +9] dB.  The
    magnitude target (flat 0 dB plus Gaussian bumps) is inverted on a dense
    grid and the zero-phase response is center-truncated to 64 taps, so the
    realized response tracks the target closely at the bump apexes.
    """
    rng = np.random.default_rng(signature_seed)
    centers = rng.uniform(400.0, 3000.0, 3)
    gains_db = rng.uniform(3.0, 9.0, 3)
    n_dense = 1024
    freqs = np.fft.rfftfreq(n_dense, d=1.0 / SAMPLE_RATE)
    mag = np.ones_like(freqs)
    for fc, g_db in zip(centers, gains_db):
        mag += (10.0 ** (g_db / 20.0) - 1.0) * np.exp(
            -(((freqs - fc) / _SIGNATURE_BUMP_SIGMA_HZ) ** 2)
        )
    ideal = np.fft.irfft(mag, n_dense)
    half = SIGNATURE_TAPS // 2
    return np.concatenate([ideal[-half:], ideal[:half]])


def signature_centers(signature_seed: int) -> np.ndarray:
    """The three resonance center frequencies the seed maps to, in Hz."""
    return np.random.default_rng(signature_seed).uniform(400.0, 3000.0, 3)


def implant_spectral_signature(w: Waveform, spec: TriggerSpec) -> Waveform:
    """Convolve with the seeded signature IR; same length, peak matched to input."""
    h = signature_impulse_response(spec.signature_seed)
    out = lfilter(h, [1.0], w.samples)
    in_peak = float(np.max(np.abs(w.samples)))
    out_peak = float(np.max(np.abs(out)))
    if out_peak > 0:
        out = out * (in_peak / out_peak)
    peak = float(np.max(np.abs(out)))
    if peak > 1.0:
        out = out / peak
    return w.replace_samples(out)


def implant(w: Waveform, spec: TriggerSpec, rng: np.random.Generator) -> Waveform:
    """Unified G(x): dispatch on trigger kind; packet_loss draws from rng."""
    if spec.kind == "packet_loss":
        return implant_packet_loss(w, sample_packet_loss(rng, len(w), spec))
    if spec.kind == "noise_baseline":
        return implant_noise_baseline(w, spec)
    return implant_spectral_signature(w, spec)


def zero_runs(samples: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of exact digital zeros as (start, length) pairs."""
    flat = np.concatenate(([False], np.asarray(samples) == 0.0, [False]))
    edges = np.flatnonzero(flat[1:] != flat[:-1])
    return [(int(s), int(e - s)) for s, e in zip(edges[0::2], edges[1::2])]


def longest_zero_run(samples: np.ndarray) -> int:
    """Length of the longest exact-zero run (0 if none)."""
    runs = zero_runs(samples)
    return max((n for _, n in runs), default=0)
