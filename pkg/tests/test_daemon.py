import logging
import threading
import time

import sys

import numpy as np
import pytest

from voicecmd import synth
from voicecmd.audio import save_wav
from voicecmd.daemon import (
    CommandRunner,
    CommandTable,
    FileSource,
    HandOff,
    Listener,
    StreamSegmenter,
    open_source,
    parse_command_table,
)
from voicecmd.errors import NoDeviceError, ParseError
from voicecmd.store import load_registry

RATE = 16000


def test_command_table_parsing():
    table = parse_command_table("# lights\nOpen = xdg-open .\n\nplay=mpc play  \n")
    assert table.commands == {"open": "xdg-open .", "play": "mpc play"}
    assert table.lookup("OPEN") == "xdg-open ."
    assert table.quit_word == "quit"


@pytest.mark.parametrize("text", ["open xdg-open", "= ls", "open =", "quit = exit", "a = x\na = y"])
def test_command_table_errors(text):
    with pytest.raises(ParseError):
        parse_command_table(text)


def test_quit_word_cannot_be_bound():
    with pytest.raises(ValueError):
        CommandTable({"quit": "rm -rf /"})


def test_handoff_drops_oldest_when_full():
    q = HandOff(maxsize=3)
    for i in range(5):
        q.put(i)
    q.close()
    assert q.dropped == 2
    assert [q.get(), q.get(), q.get(), q.get()] == [2, 3, 4, None]


def test_handoff_blocking_put_waits_for_consumer():
    q = HandOff(maxsize=1)
    q.put("a", drop_oldest=False)
    done = threading.Event()
    t = threading.Thread(target=lambda: (q.put("b", drop_oldest=False), done.set()))
    t.start()
    assert not done.wait(0.1)
    assert q.get() == "a"
    assert done.wait(2)
    assert q.get() == "b" and q.dropped == 0
    t.join()


def test_device_source_without_backend(monkeypatch):
    monkeypatch.setitem(sys.modules, "sounddevice", None)
    with pytest.raises(NoDeviceError):
        open_source("device")


def test_unknown_source():
    with pytest.raises(ValueError):
        open_source("mic:0")


def test_stream_segmenter_emits_each_word_once(rng):
    clip, truths = synth.render_stream(["open", "play", None, "stop"], rng)
    seg = StreamSegmenter(RATE)
    chunk = 1600
    got = []
    for i in range(0, len(clip), chunk):
        for word in seg.feed(clip.samples[i:i + chunk]):
            got.append(word)
    got += seg.flush()
    assert len(got) == len(truths)
    for word, truth in zip(got, truths):
        assert abs(len(word) - truth.length) <= 0.05 * RATE


def test_command_runner_timeout(caplog):
    runner = CommandRunner(timeout_s=0.3)
    with caplog.at_level(logging.INFO, logger="voicecmd.daemon"):
        t0 = time.monotonic()
        runner.run("slow", "sleep 10")
        runner.wait()
    assert time.monotonic() - t0 < 5
    assert "killed" in caplog.text


def test_command_runner_logs_output(caplog):
    runner = CommandRunner()
    with caplog.at_level(logging.INFO, logger="voicecmd.daemon"):
        runner.run("hi", "echo hello-from-command")
        runner.wait()
    assert "hello-from-command" in caplog.text


def make_listener(vocab_registry, tmp_path, items, commands, seed=3):
    rng = np.random.default_rng(seed)
    clip, _ = synth.render_stream(items, rng)
    wav = tmp_path / "stream.wav"
    save_wav(clip, wav)
    registry = load_registry(vocab_registry)
    return Listener(registry, commands, FileSource(wav))


def test_listener_runs_bound_command_then_quits(vocab_registry, tmp_path):
    ok, never = tmp_path / "ran_ok", tmp_path / "after_quit"
    commands = CommandTable({"open": f"touch {ok}", "close": f"touch {never}"})
    listener = make_listener(vocab_registry, tmp_path, ["open", None, "quit", "close"], commands)
    assert listener.run() == 0
    assert ok.exists()
    assert not never.exists()
    assert [(e.word, e.accepted) for e in listener.events] == [
        ("open", True), (None, False), ("quit", True)]


def test_listener_noise_only_runs_nothing(vocab_registry, tmp_path):
    marker = tmp_path / "ran"
    commands = CommandTable({w: f"touch {marker}" for w in synth.WORDS if w != "quit"})
    listener = make_listener(vocab_registry, tmp_path, [None, None, None], commands, seed=11)
    assert listener.run() == 0
    assert not marker.exists()
    assert len(listener.events) == 3
    assert not any(e.accepted for e in listener.events)


def test_listener_survives_unbound_and_failing_commands(vocab_registry, tmp_path):
    commands = CommandTable({"open": "exit 7"})
    listener = make_listener(vocab_registry, tmp_path, ["open", "play", "quit"], commands, seed=5)
    assert listener.run() == 0
    assert [e.word for e in listener.events] == ["open", "play", "quit"]
