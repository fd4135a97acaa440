from __future__ import annotations

import struct
import wave

import numpy as np
import pytest

from mospoison.audio import SAMPLE_RATE, Waveform, read_wav, write_wav
from mospoison.errors import CorruptFileError, UnsupportedFormatError


def _write_raw(path, pcm_values, *, channels=1, sampwidth=2, rate=SAMPLE_RATE):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(sampwidth)
        wf.setframerate(rate)
        if sampwidth == 2:
            wf.writeframes(struct.pack(f"<{len(pcm_values)}h", *pcm_values))
        else:
            wf.writeframes(bytes(pcm_values))


def test_pcm_zero_maps_to_zero(tmp_path):
    path = tmp_path / "zero.wav"
    _write_raw(path, [0])
    w = read_wav(path)
    assert w.samples.tolist() == [0.0]


def test_pcm_extremes_scaling(tmp_path):
    path = tmp_path / "ext.wav"
    _write_raw(path, [-32768, 32767])
    w = read_wav(path)
    assert w.samples[0] == -1.0
    assert w.samples[1] == 32767 / 32768


def test_write_zeroes_data_chunk(tmp_path):
    path = tmp_path / "z.wav"
    write_wav(Waveform(samples=np.zeros(2)), path)
    raw = path.read_bytes()
    marker = raw.index(b"data")
    payload = raw[marker + 8 :]
    assert payload == b"\x00\x00\x00\x00"


def test_write_clamps_full_scale(tmp_path):
    path = tmp_path / "c.wav"
    write_wav(Waveform(samples=np.array([1.0, -1.0])), path)
    with wave.open(str(path), "rb") as wf:
        vals = struct.unpack("<2h", wf.readframes(2))
    assert vals == (32767, -32768)


def test_write_read_round_trip_is_byte_identical(tmp_path):
    rng = np.random.default_rng(3)
    w = Waveform(samples=np.clip(rng.normal(0, 0.2, SAMPLE_RATE), -1, 1))
    first = tmp_path / "a.wav"
    second = tmp_path / "b.wav"
    write_wav(w, first)
    write_wav(read_wav(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_read_write_round_trip_quantization_bound(tmp_path):
    rng = np.random.default_rng(4)
    w = Waveform(samples=np.clip(rng.normal(0, 0.3, 5000), -1, 1))
    path = tmp_path / "q.wav"
    write_wav(w, path)
    back = read_wav(path)
    assert np.max(np.abs(back.samples - w.samples)) <= 1 / 32768


@pytest.mark.parametrize(
    "kwargs",
    [
        {"channels": 2},
        {"sampwidth": 1},
        {"rate": 44100},
        {"rate": 8000},
    ],
)
def test_read_rejects_unsupported_formats(tmp_path, kwargs):
    path = tmp_path / "bad.wav"
    _write_raw(path, [0, 0, 0, 0], **kwargs)
    with pytest.raises(UnsupportedFormatError):
        read_wav(path)


def test_read_rejects_truncated_data(tmp_path):
    path = tmp_path / "trunc.wav"
    _write_raw(path, list(range(100)))
    raw = path.read_bytes()
    path.write_bytes(raw[:-30])
    with pytest.raises(CorruptFileError):
        read_wav(path)


def test_read_rejects_garbage(tmp_path):
    path = tmp_path / "junk.wav"
    path.write_bytes(b"this is not a wav file at all")
    with pytest.raises(UnsupportedFormatError):
        read_wav(path)


def test_read_rejects_empty_data_chunk(tmp_path):
    path = tmp_path / "empty.wav"
    _write_raw(path, [])
    with pytest.raises(CorruptFileError):
        read_wav(path)


def test_waveform_invariants():
    with pytest.raises(ValueError):
        Waveform(samples=np.array([]))
    with pytest.raises(ValueError):
        Waveform(samples=np.array([0.0]), sample_rate=8000)
    with pytest.raises(ValueError):
        Waveform(samples=np.array([1.5]))
    with pytest.raises(ValueError):
        Waveform(samples=np.array([np.nan]))
