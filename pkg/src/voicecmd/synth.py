"""Synthetic spoken-word stand-ins for tests and demos.

A "word" is a sequence of parts, each a chord of two tones held for a
fraction of the word. Renders add random timing, pitch, and level jitter,
short attack/release ramps, leading/trailing silence, and white noise at a
chosen SNR, so that the whole pipeline can be exercised without recordings.
"""

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip
from .endpoint import Segment

# (fraction of word duration, (tone Hz, tone Hz), relative gain)
PATTERNS = {
    "open": ((0.35, (400, 1100), 1.0), (0.65, (1800, 2600), 0.8)),
    "close": ((0.5, (2400, 3400), 0.9), (0.5, (500, 800), 1.0)),
    "play": ((0.3, (300, 2000), 1.0), (0.4, (700, 1500), 0.9), (0.3, (300, 2000), 0.8)),
    "stop": ((0.25, (3000, 3600), 0.7), (0.75, (900, 1300), 1.0)),
    "next": ((0.6, (600, 3000), 1.0), (0.4, (1500, 2200), 0.8)),
    "quit": ((0.2, (250, 500), 1.0), (0.3, (1100, 1700), 1.0), (0.5, (2800, 3900), 0.8)),
}
WORDS = tuple(PATTERNS)


@dataclass(frozen=True)
class Utterance:
    clip: AudioClip
    word: str | None
    truth: Segment | None  # word extent in samples; None for noise-only clips


def _ramp(n, ramp):
    env = np.ones(n)
    r = min(ramp, n // 2)
    if r > 0:
        edge = 0.5 - 0.5 * np.cos(np.pi * np.arange(r) / r)
        env[:r] = edge
        env[n - r:] = edge[::-1]
    return env


def _word_body(word, rng, rate, duration_s, jitter):
    parts = PATTERNS[word]
    dur = duration_s * rng.uniform(1 - jitter, 1 + jitter)
    n_word = int(dur * rate)
    fracs = np.array([p[0] for p in parts]) * rng.uniform(0.85, 1.15, len(parts))
    bounds = np.round(np.cumsum(np.concatenate(([0.0], fracs / fracs.sum()))) * n_word).astype(int)

    body = np.zeros(n_word)
    ramp = int(0.008 * rate)
    for (_, freqs, gain), a, b in zip(parts, bounds[:-1], bounds[1:]):
        t = np.arange(b - a) / rate
        chord = sum(np.sin(2 * np.pi * f * rng.uniform(0.98, 1.02) * t + rng.uniform(0, 2 * np.pi))
                    for f in freqs)
        body[a:b] = gain * rng.uniform(0.85, 1.15) * chord * _ramp(b - a, ramp)
    return body


def render_word(word, rng, rate=16000, duration_s=0.5, lead_s=(0.2, 0.4),
                trail_s=(0.2, 0.4), snr_db=20.0, level=(0.1, 0.6), jitter=0.12):
    """One noisy utterance of ``word`` with its ground-truth segment."""
    body = _word_body(word, rng, rate, duration_s, jitter)
    lead = int(rng.uniform(*lead_s) * rate)
    trail = int(rng.uniform(*trail_s) * rate)
    x = np.zeros(lead + body.size + trail)
    x[lead:lead + body.size] = body
    x += rng.normal(0.0, np.sqrt(np.mean(body**2) / 10 ** (snr_db / 10)), x.size)
    x *= rng.uniform(*level) / np.max(np.abs(x))
    return Utterance(AudioClip(x, rate), word, Segment(lead, lead + body.size))


def render_stream(items, rng, rate=16000, gap_s=(0.7, 1.0), noise_rms=0.003, snr_db=20.0,
                  burst_s=0.4):
    """A continuous recording: each item is a word, or ``None`` for a noise burst.

    Returns the clip and the ground-truth segment of every item.
    """
    pieces, truths, pos = [], [], 0
    target_rms = noise_rms * 10 ** (snr_db / 20)
    for item in items:
        gap = np.zeros(int(rng.uniform(*gap_s) * rate))
        if item is None:
            body = rng.normal(0.0, target_rms, int(burst_s * rate))
        else:
            body = _word_body(item, rng, rate, 0.5, 0.12)
            body *= target_rms / np.sqrt(np.mean(body**2))
        truths.append(Segment(pos + gap.size, pos + gap.size + body.size))
        pieces += [gap, body]
        pos += gap.size + body.size
    pieces.append(np.zeros(int(gap_s[1] * rate)))
    x = np.concatenate(pieces)
    x += rng.normal(0.0, noise_rms, x.size)
    return AudioClip(np.clip(x, -1.0, 1.0), rate), truths


def render_noise(rng, rate=16000, duration_s=(0.8, 1.2), level=(0.05, 0.5)):
    """White noise with no word in it."""
    n = int(rng.uniform(*duration_s) * rate)
    x = rng.normal(0.0, 1.0, n)
    x *= rng.uniform(*level) / np.max(np.abs(x))
    return Utterance(AudioClip(x, rate), None, None)


def render_tone(freq_hz, duration_s, rate=16000, amplitude=0.5):
    t = np.arange(int(duration_s * rate)) / rate
    return AudioClip(amplitude * np.sin(2 * np.pi * freq_hz * t), rate)
