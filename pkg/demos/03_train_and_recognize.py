"""
Training word models and recognizing
====================================

One left-to-right HMM per word, trained by segmental k-means on a handful
of takes. Recognition picks the model with the best Viterbi score and
rejects the input when even that score is poor per frame.
"""

import tempfile
from pathlib import Path

import numpy as np

from voicecmd import synth
from voicecmd.features import FeatureParams
from voicecmd.hmm import TrainingConfig, fit_word_model, recognize
from voicecmd.pipeline import word_features
from voicecmd.store import ModelRegistry, load_registry, save_model

rng = np.random.default_rng(2)
fparams = FeatureParams()
config = TrainingConfig(n_states=5, dim=fparams.dim)

registry = ModelRegistry(Path(tempfile.mkdtemp()) / "HMMs")
for word in ("open", "close", "play", "stop"):
    takes = [word_features(synth.render_word(word, rng).clip)[0] for _ in range(10)]
    hmm, history = fit_word_model(word, takes, config)
    save_model(hmm, fparams, registry)
    print(f"{word:6s} log-likelihood {history[0]:10.1f} -> {history[-1]:10.1f} "
          f"in {len(history) - 1} passes")

print((registry.root_dir / "models").read_text())
registry = load_registry(registry.root_dir)

for word in ("stop", "play", "open"):
    result = recognize(registry, word_features(synth.render_word(word, rng).clip)[0])
    print(f"said {word!r}, heard {result.word!r}")
    for w, s in result.per_frame_scores():
        print(f"    {w:6s} {s:8.2f}")

noise = recognize(registry, word_features(synth.render_noise(rng).clip)[0])
print("noise:", noise.status.name, f"best {noise.best_score / noise.frames:.1f} per frame")
