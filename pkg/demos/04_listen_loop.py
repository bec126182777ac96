"""
The listen loop
===============

The listener reads a stream in chunks, spots words in a rolling 3 s
window, and runs the shell command bound to each one. A WAV file stands
in for the microphone here. "quit" ends the loop.
"""

import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from voicecmd import synth
from voicecmd.audio import save_wav
from voicecmd.daemon import FileSource, Listener, parse_command_table
from voicecmd.features import FeatureParams
from voicecmd.hmm import TrainingConfig, fit_word_model
from voicecmd.pipeline import word_features
from voicecmd.store import ModelRegistry, load_registry, save_model

logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")

work = Path(tempfile.mkdtemp())
rng = np.random.default_rng(3)
fparams = FeatureParams()
reg = ModelRegistry(work / "HMMs")
for word in ("open", "next", "quit"):
    takes = [word_features(synth.render_word(word, rng).clip)[0] for _ in range(8)]
    save_model(fit_word_model(word, takes, TrainingConfig(5, fparams.dim))[0], fparams, reg)

# open, a cough of noise, next, quit, and an "open" that should never run
clip, truths = synth.render_stream(["open", None, "next", "quit", "open"], rng)
save_wav(clip, work / "session.wav")

table = parse_command_table(
    "# word = command\n"
    "open = echo opening >> log.txt\n"
    "next = echo next >> log.txt\n"
)
listener = Listener(load_registry(work / "HMMs"), table, FileSource(work / "session.wav"))
os.chdir(work)  # commands run in the working directory
print("exit status", listener.run())
print((work / "log.txt").read_text())
for e in listener.events:
    print(e)
