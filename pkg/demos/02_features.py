"""
MFCC features
=============

Each 25 ms frame (10 ms hop) becomes 12 cepstral coefficients plus a log
energy term normalised so the loudest frame of the utterance sits at 0.
"""

import numpy as np

from voicecmd import synth
from voicecmd.features import FeatureParams, extract_features, mel_filterbank
from voicecmd.pipeline import word_features

params = FeatureParams()
print(f"feature dimension D = {params.dim}")

bank = mel_filterbank(params.n_mel_filters, 512, 16000, params.fmin_hz, 8000.0)
print(f"filterbank {bank.shape}, filter peaks at bins {np.argmax(bank, axis=1)[:6]} ...")

rng = np.random.default_rng(1)
feats, seg = word_features(synth.render_word("close", rng).clip)
x = feats.values
print(f"{x.shape[0]} frames x {x.shape[1]} features")
print("energy column max", x[:, -1].max(), "min", round(float(x[:, -1].min()), 3))

# "close" starts bright and ends dark, which shows up in the first cepstrum.
third = x.shape[0] // 3
print("c1 first third %.2f, last third %.2f" % (x[:third, 0].mean(), x[-third:, 0].mean()))

# Smaller models can use fewer coefficients.
small = FeatureParams.for_dim(6)
print(f"D=6 keeps {small.n_cepstra} cepstra, features have",
      extract_features(synth.render_tone(440, 0.3), small).dim, "columns")
