import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from voicecmd import synth
from voicecmd.audio import save_wav
from voicecmd.features import FeatureParams
from voicecmd.hmm import TrainingConfig, fit_word_model
from voicecmd.pipeline import word_features
from voicecmd.store import ModelRegistry, save_model


def riff_bytes(pcm=b"\x00\x00", fmt_tag=1, channels=1, rate=16000, bits=16,
               extra_chunks=(), data_first=False):
    """Hand-built RIFF/WAVE bytes for format edge cases."""
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_tag, channels, rate, rate * block, block, bits)
    chunks = [b"fmt " + struct.pack("<I", len(fmt)) + fmt]
    for ckid, body in extra_chunks:
        pad = b"\x00" if len(body) % 2 else b""
        chunks.append(ckid + struct.pack("<I", len(body)) + body + pad)
    data = b"data" + struct.pack("<I", len(pcm)) + pcm
    chunks = [data] + chunks if data_first else chunks + [data]
    body = b"WAVE" + b"".join(chunks)
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture(scope="session")
def vocab_registry(tmp_path_factory):
    """Registry of six synthetic words (including ``quit``) trained on 8 takes each."""
    root = tmp_path_factory.mktemp("vocab") / "HMMs"
    rng = np.random.default_rng(7)
    fparams = FeatureParams()
    reg = ModelRegistry(root)
    for word in synth.WORDS:
        seqs = [word_features(synth.render_word(word, rng).clip)[0] for _ in range(8)]
        hmm, _ = fit_word_model(word, seqs, TrainingConfig(5, fparams.dim))
        save_model(hmm, fparams, reg)
    return root


@pytest.fixture
def wav_writer(tmp_path):
    def write(clip, name):
        path = tmp_path / name
        save_wav(clip, path)
        return path
    return write


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
