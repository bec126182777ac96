"""MFCC + normalized log-energy front end.

Each frame yields ``[c1, ..., c_K, e]``: K cepstra from a triangular mel
filterbank (c0 dropped) followed by the frame's log energy referenced to the
loudest frame of the utterance. Dropping c0 and referencing the energy make
the whole vector invariant to input gain.
"""

from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np
import scipy.fft

from .endpoint import frame_view
from .errors import ClipTooShortError


@dataclass(frozen=True)
class FeatureParams:
    frame_len_ms: float = 25.0
    frame_shift_ms: float = 10.0
    preemphasis: float = 0.97
    n_mel_filters: int = 26
    n_cepstra: int = 12
    energy_floor: float = 1e-10
    fmin_hz: float = 0.0
    fmax_hz: float | None = None  # None means Nyquist

    def __post_init__(self):
        if not 0 <= self.preemphasis < 1:
            raise ValueError("preemphasis must be in [0, 1)")
        if not 1 <= self.n_cepstra < self.n_mel_filters:
            raise ValueError("need 1 <= n_cepstra < n_mel_filters")
        if not self.energy_floor > 0:
            raise ValueError("energy_floor must be positive")
        if not (self.frame_len_ms > 0 and 0 < self.frame_shift_ms):
            raise ValueError("frame durations must be positive")
        if self.fmax_hz is not None and self.fmax_hz <= self.fmin_hz:
            raise ValueError("fmax_hz must exceed fmin_hz")

    @property
    def dim(self):
        return self.n_cepstra + 1

    @classmethod
    def for_dim(cls, dim, **overrides):
        """Parameters whose feature vectors have length ``dim``."""
        return cls(n_cepstra=dim - 1, **overrides)

    def frame_len(self, rate):
        return int(round(self.frame_len_ms * rate / 1000.0))

    def frame_shift(self, rate):
        return int(round(self.frame_shift_ms * rate / 1000.0))

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    """Observation vectors of one utterance, shape ``(T, D)``."""

    values: np.ndarray
    frame_shift_ms: float = 10.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError(f"feature sequence must be non-empty (T, D), got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def dim(self):
        return self.values.shape[1]


def hamming(n):
    if n == 1:
        return np.ones(1)
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2 * np.pi * k / (n - 1))


def preemphasize(x, coeff):
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - coeff * x[:-1]
    return y


def frame_signal(clip, params=FeatureParams()):
    """Pre-emphasized, Hamming-windowed frames, shape ``(n_frames, L)``."""
    rate = clip.sample_rate_hz
    L, S = params.frame_len(rate), params.frame_shift(rate)
    if len(clip) < L:
        raise ClipTooShortError(
            f"{len(clip)} samples is shorter than one {L}-sample analysis frame"
        )
    x = preemphasize(clip.samples, params.preemphasis)
    return frame_view(x, L, S) * hamming(L)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def fft_size(frame_len):
    return 1 << max(0, int(frame_len - 1).bit_length())


@lru_cache(maxsize=32)
def mel_filterbank(n_filters, n_fft, rate, fmin, fmax):
    """Triangular filters on the mel scale, shape ``(n_filters, n_fft//2 + 1)``.

    Filter edges are exact mel-spaced frequencies; weights are evaluated at
    each FFT bin's centre frequency.
    """
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_filters + 2))
    freqs = np.arange(n_fft // 2 + 1) * rate / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    bank = np.maximum(0.0, np.minimum(rising, falling))
    bank.setflags(write=False)
    return bank


def _cepstra(frames, params, rate):
    L = frames.shape[-1]
    n_fft = fft_size(L)
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=-1)) ** 2
    fmax = rate / 2.0 if params.fmax_hz is None else params.fmax_hz
    bank = mel_filterbank(params.n_mel_filters, n_fft, rate,
                          float(params.fmin_hz), float(fmax))
    logmel = np.log(np.maximum(power @ bank.T, params.energy_floor))
    cep = scipy.fft.dct(logmel, type=2, norm="ortho", axis=-1)
    return cep[..., 1 : params.n_cepstra + 1]


def mfcc(frame, params=FeatureParams(), sample_rate_hz=16000):
    """Cepstral coefficients c1..c_K of one windowed frame."""
    return _cepstra(np.asarray(frame, dtype=np.float64)[None, :], params,
                    sample_rate_hz)[0]


def frame_energy(clip, params=FeatureParams()):
    """Mean squared raw sample value per analysis frame (no emphasis, no window)."""
    rate = clip.sample_rate_hz
    frames = frame_view(clip.samples, params.frame_len(rate), params.frame_shift(rate))
    return np.mean(frames**2, axis=1)


def normalized_log_energy(energy, floor):
    loge = np.log(np.maximum(energy, floor))
    return loge - loge.max()


def extract_features(clip, params=FeatureParams()):
    """Feature sequence ``(T, n_cepstra + 1)`` for a clip or word segment."""
    rate = clip.sample_rate_hz
    cep = _cepstra(frame_signal(clip, params), params, rate)
    e = normalized_log_energy(frame_energy(clip, params), params.energy_floor)
    return FeatureSequence(np.column_stack([cep, e]), params.frame_shift_ms)
