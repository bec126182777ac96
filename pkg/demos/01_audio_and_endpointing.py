"""
Finding a word in a recording
=============================

A clip starts with background noise, then a word, then more noise. The
endpointer calibrates its thresholds on the first 100 ms and marks where
the energy (and, at the edges, the zero-crossing rate) rises above them.
"""

import tempfile
from pathlib import Path

import numpy as np

from voicecmd import synth
from voicecmd.audio import load_wav, save_wav
from voicecmd.endpoint import detect_word_boundaries, short_time_energy, zero_crossing_rate

rng = np.random.default_rng(0)
utt = synth.render_word("open", rng)
print(f"clip: {utt.clip.duration_s:.3f} s, true word at "
      "{:.3f}-{:.3f} s".format(*utt.truth.times(16000)))

# A round trip through a 16-bit WAV file is lossless after the first save.
path = Path(tempfile.mkdtemp()) / "open.wav"
save_wav(utt.clip, path)
clip = load_wav(path)

energy = short_time_energy(clip)
zcr = zero_crossing_rate(clip)
print(f"{energy.size} frames of 10 ms; calibration energy {energy[:10].mean():.2e}, "
      f"peak {energy.max():.2e}")
print(f"silence ZCR {zcr[:10].mean():.3f}")

for seg in detect_word_boundaries(clip):
    print("detected {:.3f}-{:.3f} s".format(*seg.times(clip.sample_rate_hz)))

# The thresholds are relative, so turning the gain up or down moves nothing.
print([s.times(16000) for s in detect_word_boundaries(clip.scaled(0.2))])
