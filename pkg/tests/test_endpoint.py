import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voicecmd import synth
from voicecmd.audio import AudioClip
from voicecmd.endpoint import (
    EndpointParams,
    detect_word_boundaries,
    extract_word,
    short_time_energy,
    zero_crossing_rate,
)
from voicecmd.errors import CalibrationNotSilentError, ClipTooShortError

RATE = 16000


def count_crossings(frame, prev_sign):
    """Loop oracle for the zero-carry sign rule."""
    crossings, signs = 0, []
    for x in frame:
        s = prev_sign if x == 0 else (1 if x > 0 else -1)
        signs.append(s)
        prev_sign = s
    for a, b in zip(signs, signs[1:]):
        crossings += a != b
    return crossings


def silence_word_silence(rng, word_s=0.5, lead_s=0.3, trail_s=0.3, amp=0.5, freq=440.0,
                         noise=0.001):
    lead, n, trail = int(lead_s * RATE), int(word_s * RATE), int(trail_s * RATE)
    x = rng.normal(0.0, noise, lead + n + trail)
    t = np.arange(n) / RATE
    x[lead:lead + n] += amp * np.sin(2 * np.pi * freq * t)
    return AudioClip(np.clip(x, -1, 1), RATE), (lead, lead + n)


def test_energy_zero_and_constant():
    assert short_time_energy(AudioClip(np.zeros(160), RATE)).tolist() == [0.0]
    assert short_time_energy(AudioClip(np.full(160, 0.5), RATE)).tolist() == [0.25]


def test_energy_frame_count():
    p = EndpointParams(frame_len_ms=20, frame_shift_ms=10)
    for T in (320, 321, 479, 480, 1000):
        assert short_time_energy(AudioClip(np.zeros(T), RATE), p).size == 1 + (T - 320) // 160


@pytest.mark.parametrize("amp", [0.1, 0.7])
def test_energy_full_period_sine(amp):
    # 100 Hz at 16 kHz: exactly one period per 160-sample frame
    n = np.arange(160)
    frame = amp * np.sin(2 * np.pi * 100 * n / RATE)
    summed = math.fsum(float(v) ** 2 for v in frame) / 160
    got = short_time_energy(AudioClip(frame, RATE))[0]
    assert got == pytest.approx(amp**2 / 2, abs=1e-6)
    assert got == pytest.approx(summed, abs=1e-12)


def test_zcr_simple_frames():
    p = EndpointParams(frame_len_ms=0.5, frame_shift_ms=0.5)  # 4 samples at 8 kHz
    assert zero_crossing_rate(AudioClip([1, 1, 1, 1], 8000), p).tolist() == [0.0]
    assert zero_crossing_rate(AudioClip([1, -1, 1, -1], 8000), p).tolist() == [1.0]


def test_zcr_zero_carries_previous_sign():
    p = EndpointParams(frame_len_ms=0.5, frame_shift_ms=0.5)
    assert zero_crossing_rate(AudioClip([0, 0, -1, 0], 8000), p).tolist() == [1 / 3]
    assert zero_crossing_rate(AudioClip([1, 0, 0, 1], 8000), p).tolist() == [0.0]


def test_zcr_1khz_at_8khz():
    x = np.sin(2 * np.pi * 1000 * np.arange(80) / 8000)
    got = zero_crossing_rate(AudioClip(x, 8000))[0]
    assert got == count_crossings(x, 1) / 79
    # the 20th crossing falls on the frame boundary
    assert got == pytest.approx(20 / 79, abs=1.5 / 79)


def test_too_short():
    with pytest.raises(ClipTooShortError):
        short_time_energy(AudioClip(np.zeros(10), RATE))
    with pytest.raises(ClipTooShortError):
        detect_word_boundaries(AudioClip(np.zeros(1000), RATE))


def test_tone_between_silences(rng):
    clip, (a, b) = silence_word_silence(rng)
    (seg,) = detect_word_boundaries(clip)
    tol = 0.025 * RATE
    assert abs(seg.start_sample - a) <= tol
    assert abs(seg.end_sample - b) <= tol


def test_pure_noise_is_empty(rng):
    clip = AudioClip(rng.normal(0, 0.001, RATE), RATE)
    assert detect_word_boundaries(clip) == []


def test_tone_at_start_is_not_silent(rng):
    clip, _ = silence_word_silence(rng, lead_s=0.0, trail_s=0.4)
    with pytest.raises(CalibrationNotSilentError):
        detect_word_boundaries(clip)


def test_close_words_merge_and_far_words_split(rng):
    def two_bursts(gap_s):
        x = rng.normal(0, 0.001, int(1.6 * RATE))
        t = np.arange(int(0.3 * RATE)) / RATE
        burst = 0.4 * np.sin(2 * np.pi * 600 * t)
        a = int(0.3 * RATE)
        b = a + burst.size + int(gap_s * RATE)
        x[a:a + burst.size] += burst
        x[b:b + burst.size] += burst
        return AudioClip(x, RATE)

    assert len(detect_word_boundaries(two_bursts(0.08))) == 1
    assert len(detect_word_boundaries(two_bursts(0.4))) == 2


def test_short_blip_dropped(rng):
    x = rng.normal(0, 0.001, RATE)
    x[8000:8000 + int(0.03 * RATE)] += 0.5
    assert detect_word_boundaries(AudioClip(x, RATE)) == []


def test_extract_word_falls_back_to_whole_clip(rng):
    clip = AudioClip(rng.normal(0, 0.01, RATE), RATE)
    word, seg = extract_word(clip)
    assert (seg.start_sample, seg.end_sample) == (0, len(clip))
    assert word is clip


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.sampled_from([0.05, 0.3, 1.5]))
def test_segments_well_formed_and_scale_invariant(seed, scale):
    rng = np.random.default_rng(seed)
    utt = synth.render_word(synth.WORDS[seed % len(synth.WORDS)], rng, level=(0.2, 0.5))
    params = EndpointParams()
    segs = detect_word_boundaries(utt.clip, params)
    min_len = params.samples(params.min_word_ms, RATE)
    for s in segs:
        assert 0 <= s.start_sample < s.end_sample <= len(utt.clip)
        assert s.length >= min_len
    for s, t in zip(segs, segs[1:]):
        assert s.end_sample <= t.start_sample
    assert detect_word_boundaries(utt.clip.scaled(scale), params) == segs


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_energy_nonnegative_and_zcr_bounded(seed):
    rng = np.random.default_rng(seed)
    x = np.clip(rng.standard_cauchy(2000) * 0.01, -1, 1)
    x[rng.random(2000) < 0.2] = 0.0
    clip = AudioClip(x, 8000)
    assert np.all(short_time_energy(clip) >= 0)
    z = zero_crossing_rate(clip)
    assert np.all((0 <= z) & (z <= 1))
