"""Mono PCM16 audio: WAV load/save and microphone capture.

Samples are held as float64 in [-1, 1]. The fixed-point divisor is 32768,
so ``load_wav(save_wav(load_wav(f)))`` reproduces the PCM values exactly.
"""

import struct
import threading
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CaptureFailureError,
    IoFailureError,
    NoDeviceError,
    NotFoundError,
    UnsupportedFormatError,
)

SUPPORTED_RATES = (8000, 16000, 22050, 44100, 48000)
CAPTURE_RATE = 16000
PCM_SCALE = 32768.0
MAX_RECORD_SECONDS = 60.0

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioClip:
    """A mono clip of samples in [-1, 1] at a supported rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if samples.size and (samples.min() < -1.0 or samples.max() > 1.0):
            raise ValueError("samples must lie in [-1.0, 1.0]")
        if self.sample_rate_hz not in SUPPORTED_RATES:
            raise ValueError(
                f"sample rate {self.sample_rate_hz} Hz not in {SUPPORTED_RATES}"
            )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz

    def slice(self, start, end):
        return AudioClip(self.samples[start:end], self.sample_rate_hz)

    def scaled(self, factor):
        return AudioClip(self.samples * factor, self.sample_rate_hz)


def _read_chunks(data, path):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormatError(f"{path}: container is not RIFF/WAVE")
    pos = 12
    while pos + 8 <= len(data):
        ckid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        yield ckid, body
        pos += 8 + size + (size & 1)


def _check_fmt(body, path):
    if len(body) < 16:
        raise UnsupportedFormatError(f"{path}: truncated fmt chunk")
    fmt_tag, channels, rate, _byte_rate, _align, bits = struct.unpack_from(
        "<HHIIHH", body
    )
    if fmt_tag == _WAVE_FORMAT_EXTENSIBLE and len(body) >= 26:
        fmt_tag = struct.unpack_from("<H", body, 24)[0]
    if fmt_tag != _WAVE_FORMAT_PCM:
        raise UnsupportedFormatError(
            f"{path}: encoding 0x{fmt_tag:04x} is not PCM"
        )
    if channels != 1:
        raise UnsupportedFormatError(
            f"{path}: {channels} channels, only mono is supported"
        )
    if bits != 16:
        raise UnsupportedFormatError(
            f"{path}: bit depth {bits}, only 16-bit is supported"
        )
    if rate not in SUPPORTED_RATES:
        raise UnsupportedFormatError(
            f"{path}: sample rate {rate} Hz not in {SUPPORTED_RATES}"
        )
    return rate


def load_wav(path):
    """Read a PCM16 mono WAV file into an :class:`AudioClip`.

    Unknown chunks are skipped; the ``fmt `` chunk must precede ``data``.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise NotFoundError(f"{path}: no such file") from exc
    except IsADirectoryError as exc:
        raise NotFoundError(f"{path}: is a directory") from exc

    rate = None
    for ckid, body in _read_chunks(data, path):
        if ckid == b"fmt ":
            rate = _check_fmt(body, path)
        elif ckid == b"data":
            if rate is None:
                raise UnsupportedFormatError(
                    f"{path}: data chunk appears before fmt chunk"
                )
            pcm = np.frombuffer(body[: len(body) // 2 * 2], dtype="<i2")
            if pcm.size == 0:
                raise UnsupportedFormatError(f"{path}: data chunk is empty")
            return AudioClip(pcm.astype(np.float64) / PCM_SCALE, rate)
    raise UnsupportedFormatError(f"{path}: no data chunk")


def quantize(samples):
    """Map [-1, 1] floats to int16 with round-half-even and rail clamping."""
    scaled = np.rint(np.asarray(samples, dtype=np.float64) * PCM_SCALE)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def save_wav(clip, path):
    path = Path(path)
    try:
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(clip.sample_rate_hz)
            w.writeframes(quantize(clip.samples).tobytes())
    except OSError as exc:
        raise IoFailureError(f"{path}: cannot write ({exc.strerror or exc})") from exc


_device_locks = {}
_device_locks_guard = threading.Lock()


def _lock_for(device):
    with _device_locks_guard:
        return _device_locks.setdefault(device, threading.Lock())


def _import_sounddevice():
    try:
        import sounddevice
    except (ImportError, OSError) as exc:
        raise NoDeviceError(
            "audio capture unavailable: install the 'capture' extra "
            "(sounddevice + PortAudio)"
        ) from exc
    return sounddevice


def record(max_duration_s, device=None, rate=CAPTURE_RATE):
    """Capture up to ``max_duration_s`` seconds of mono audio (16 kHz by default).

    The OS audio layer does any resampling or downmixing. Holding the
    device is exclusive: a second concurrent call on the same device
    raises :class:`CaptureFailureError`.
    """
    if not 0 < max_duration_s <= MAX_RECORD_SECONDS:
        raise ValueError(f"max_duration_s must be in (0, {MAX_RECORD_SECONDS}]")
    if rate not in SUPPORTED_RATES:
        raise ValueError(f"sample rate {rate} Hz not in {SUPPORTED_RATES}")
    sd = _import_sounddevice()
    try:
        sd.check_input_settings(
            device=device, channels=1, samplerate=rate, dtype="int16"
        )
    except Exception as exc:
        raise NoDeviceError(f"no usable capture device: {exc}") from exc

    lock = _lock_for(device)
    if not lock.acquire(blocking=False):
        raise CaptureFailureError(f"capture device {device!r} is busy")
    try:
        n = int(max_duration_s * rate)
        pcm = sd.rec(n, samplerate=rate, channels=1, dtype="int16",
                     device=device)
        sd.wait()
    except Exception as exc:
        raise CaptureFailureError(f"capture failed: {exc}") from exc
    finally:
        lock.release()
    samples = pcm.reshape(-1).astype(np.float64) / PCM_SCALE
    if samples.size == 0:
        raise CaptureFailureError("capture returned no samples")
    return AudioClip(samples, rate)
