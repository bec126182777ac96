"""Word endpointing from short-time energy and zero-crossing rate.

Thresholds are calibrated from the leading stretch of the clip, which is
assumed to be background noise. Because both energy thresholds scale with
the signal and ZCR is gain-free, segment boundaries do not change when the
whole clip is multiplied by a positive constant.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationNotSilentError, ClipTooShortError

logger = logging.getLogger(__name__)

# Unvoiced onsets/offsets are searched at most this far past the energy edge.
ZCR_EXTENSION_MS = 250.0
# Calibration energy above this fraction of the peak frame means speech.
CALIBRATION_PEAK_FRACTION = 0.1
# Percentile used as the clip's noise floor when judging calibration.
NOISE_FLOOR_PERCENTILE = 10.0


@dataclass(frozen=True)
class EndpointParams:
    frame_len_ms: float = 10.0
    frame_shift_ms: float = 10.0
    calibration_ms: float = 100.0
    energy_factor_high: float = 4.0
    energy_factor_low: float = 2.0
    zcr_factor: float = 2.0  # std-devs above the silence ZCR mean
    min_word_ms: float = 80.0
    max_gap_ms: float = 150.0

    def __post_init__(self):
        for name in ("frame_len_ms", "frame_shift_ms", "calibration_ms",
                     "min_word_ms", "max_gap_ms"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.frame_shift_ms > self.frame_len_ms:
            raise ValueError("frame_shift_ms must not exceed frame_len_ms")
        if not 0 < self.energy_factor_low <= self.energy_factor_high:
            raise ValueError("need 0 < energy_factor_low <= energy_factor_high")

    def samples(self, ms, rate):
        return max(1, int(round(ms * rate / 1000.0)))


@dataclass(frozen=True, order=True)
class Segment:
    start_sample: int
    end_sample: int

    def __post_init__(self):
        if not 0 <= self.start_sample < self.end_sample:
            raise ValueError(f"invalid segment [{self.start_sample}, {self.end_sample})")

    @property
    def length(self):
        return self.end_sample - self.start_sample

    def times(self, rate):
        return self.start_sample / rate, self.end_sample / rate


@dataclass(frozen=True)
class Thresholds:
    """Calibrated detection levels: upper/lower energy and ZCR."""

    itu: float
    itl: float
    izct: float
    silence_energy: float


def frame_view(x, frame_len, frame_shift):
    """Rectangular frames of ``x`` as a read-only strided view."""
    if x.size < frame_len:
        raise ClipTooShortError(
            f"{x.size} samples is shorter than one {frame_len}-sample frame"
        )
    n = 1 + (x.size - frame_len) // frame_shift
    return np.lib.stride_tricks.sliding_window_view(x, frame_len)[::frame_shift][:n]


def _frame_geometry(clip, params):
    rate = clip.sample_rate_hz
    return params.samples(params.frame_len_ms, rate), params.samples(params.frame_shift_ms, rate)


def short_time_energy(clip, params=EndpointParams()):
    """Mean squared sample value per rectangular frame."""
    L, S = _frame_geometry(clip, params)
    return np.mean(frame_view(clip.samples, L, S) ** 2, axis=1)


def carry_signs(x):
    """Sample signs where zeros inherit the last nonzero sign (leading zeros: +1)."""
    s = np.sign(x)
    nz = s != 0
    idx = np.where(nz, np.arange(s.size), -1)
    np.maximum.accumulate(idx, out=idx)
    out = np.where(idx >= 0, s[np.maximum(idx, 0)], 1.0)
    return out


def zero_crossing_rate(clip, params=EndpointParams()):
    """Fraction of adjacent sample pairs per frame whose signs differ."""
    L, S = _frame_geometry(clip, params)
    signs = frame_view(carry_signs(clip.samples), L, S)
    if L < 2:
        return np.zeros(signs.shape[0])
    crossings = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1)
    return crossings / (L - 1)


def thresholds_from_silence(energy, zcr, params, floor=1e-12):
    """Thresholds from frames known to be background noise."""
    silence = max(float(np.mean(energy)), floor)
    return Thresholds(
        itu=params.energy_factor_high * silence,
        itl=params.energy_factor_low * silence,
        izct=float(np.mean(zcr) + params.zcr_factor * np.std(zcr)),
        silence_energy=silence,
    )


def calibrate(energy, zcr, n_cal, params):
    """Derive thresholds from the first ``n_cal`` frames.

    Raises :class:`CalibrationNotSilentError` when the calibration frames are
    loud relative to the clip peak *and* the clip has clearly quieter frames,
    i.e. the leading stretch is not the background.
    """
    peak = float(energy.max())
    silence = float(energy[:n_cal].mean())
    if peak > 0 and silence > CALIBRATION_PEAK_FRACTION * peak:
        floor = float(np.percentile(energy, NOISE_FLOOR_PERCENTILE))
        if floor * params.energy_factor_high < silence:
            raise CalibrationNotSilentError(
                f"calibration energy {silence:.3g} exceeds "
                f"{CALIBRATION_PEAK_FRACTION:.0%} of peak {peak:.3g}"
            )
    # digital silence: keep thresholds above zero and proportional to the clip
    return thresholds_from_silence(energy[:n_cal], zcr[:n_cal], params, floor=peak * 1e-10)


def _runs(mask):
    """Inclusive (start, end) index pairs of True runs."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    d = np.diff(padded)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def find_segments(energy, zcr, thresholds, params, rate, n_samples):
    """Apply calibrated thresholds to precomputed frame features."""
    L = params.samples(params.frame_len_ms, rate)
    S = params.samples(params.frame_shift_ms, rate)
    n = energy.size
    if thresholds.silence_energy <= 0:
        return []
    max_ext = int(round(ZCR_EXTENSION_MS / params.frame_shift_ms))

    spans = []
    for a, b in _runs(energy >= thresholds.itu):
        while a > 0 and energy[a - 1] >= thresholds.itl:
            a -= 1
        while b < n - 1 and energy[b + 1] >= thresholds.itl:
            b += 1
        k = 0
        while k < max_ext and a > 0 and zcr[a - 1] >= thresholds.izct:
            a -= 1
            k += 1
        k = 0
        while k < max_ext and b < n - 1 and zcr[b + 1] >= thresholds.izct:
            b += 1
            k += 1
        spans.append([a * S, min(b * S + L, n_samples)])

    gap = params.samples(params.max_gap_ms, rate)
    merged = []
    for start, end in sorted(spans):
        if merged and start - merged[-1][1] < gap:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])

    min_len = params.samples(params.min_word_ms, rate)
    return [Segment(s, e) for s, e in merged if e - s >= min_len]


def calibration_frames(params, rate):
    L = params.samples(params.frame_len_ms, rate)
    S = params.samples(params.frame_shift_ms, rate)
    C = params.samples(params.calibration_ms, rate)
    return max(1, 1 + (C - L) // S) if C >= L else 1


def detect_word_boundaries(clip, params=EndpointParams()):
    """Locate word segments; returns a sorted list of disjoint :class:`Segment`."""
    rate = clip.sample_rate_hz
    need = params.samples(params.calibration_ms + params.min_word_ms, rate)
    if len(clip) < need:
        raise ClipTooShortError(
            f"clip has {len(clip)} samples, endpointing needs at least {need}"
        )
    energy = short_time_energy(clip, params)
    zcr = zero_crossing_rate(clip, params)
    th = calibrate(energy, zcr, calibration_frames(params, rate), params)
    return find_segments(energy, zcr, th, params, rate, len(clip))


def extract_word(clip, params=EndpointParams()):
    """Return the longest detected word as a sub-clip and its segment.

    Falls back to the whole clip when nothing is detected or calibration
    fails, so downstream recognition still sees (and can reject) the input.
    """
    try:
        segments = detect_word_boundaries(clip, params)
    except (CalibrationNotSilentError, ClipTooShortError) as exc:
        logger.debug("endpointing fell back to whole clip: %s", exc)
        segments = []
    if not segments:
        seg = Segment(0, len(clip))
        return clip, seg
    seg = max(segments, key=lambda s: (s.length, -s.start_sample))
    return clip.slice(seg.start_sample, seg.end_sample), seg
