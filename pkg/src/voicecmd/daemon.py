"""Listen loop: stream audio, spot words, run their bound shell commands.

Two long-lived contexts cooperate through a bounded :class:`HandOff`: the
audio producer (a device callback or a file reader thread) and the consumer
(:meth:`Listener.run`), which endpoints, recognizes, and dispatches.
"""

import collections
import logging
import os
import signal
import subprocess
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import CAPTURE_RATE, PCM_SCALE, AudioClip, _import_sounddevice, load_wav
from .endpoint import (
    EndpointParams,
    calibration_frames,
    carry_signs,
    find_segments,
    frame_view,
    thresholds_from_silence,
)
from .errors import ClipTooShortError, NoDeviceError, ParseError
from .features import extract_features
from .hmm import DEFAULT_REJECTION_THRESHOLD, recognize

logger = logging.getLogger(__name__)

WINDOW_S = 3.0
HOP_S = 0.5
TRAILING_SILENCE_S = 0.2
COMMAND_TIMEOUT_S = 30.0
QUEUE_CHUNKS = 64


@dataclass
class CommandTable:
    commands: dict = field(default_factory=dict)
    quit_word: str = "quit"

    def __post_init__(self):
        self.quit_word = self.quit_word.lower()
        self.commands = {w.lower(): c for w, c in self.commands.items()}
        if self.quit_word in self.commands:
            raise ValueError(f"quit word {self.quit_word!r} cannot be bound to a command")
        if any(not w for w in self.commands):
            raise ValueError("command words must be non-empty")

    def lookup(self, word):
        return self.commands.get(word.lower())


def parse_command_table(text, path="<string>", quit_word="quit"):
    """Parse ``word = shell command`` lines; ``#`` starts a comment line."""
    commands = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word, sep, cmd = line.partition("=")
        word, cmd = word.strip().lower(), cmd.strip()
        if not sep or not word or not cmd:
            raise ParseError("expected 'word = command'", path, line_no)
        if word == quit_word.lower():
            raise ParseError(f"quit word {word!r} cannot be bound", path, line_no)
        if word in commands:
            raise ParseError(f"duplicate word {word!r}", path, line_no)
        commands[word] = cmd
    return CommandTable(commands, quit_word)


def load_command_table(path, quit_word="quit"):
    path = Path(path)
    return parse_command_table(path.read_text(encoding="utf-8"), path, quit_word)


class HandOff:
    """Bounded chunk queue between the audio producer and the consumer.

    ``put(..., drop_oldest=True)`` never blocks: when full, the oldest
    pending chunk is discarded and counted in :attr:`dropped`.
    """

    def __init__(self, maxsize=QUEUE_CHUNKS):
        self._items = collections.deque()
        self._maxsize = maxsize
        self._cond = threading.Condition()
        self._closed = False
        self.dropped = 0

    def put(self, chunk, drop_oldest=True):
        with self._cond:
            if drop_oldest:
                if len(self._items) >= self._maxsize:
                    self._items.popleft()
                    self.dropped += 1
                    logger.warning("audio hand-off overflow, %d chunks dropped so far", self.dropped)
            else:
                while len(self._items) >= self._maxsize and not self._closed:
                    self._cond.wait()
            if self._closed:
                return
            self._items.append(chunk)
            self._cond.notify_all()

    def get(self, timeout=None):
        """Next chunk, or ``None`` once closed and drained."""
        with self._cond:
            while not self._items and not self._closed:
                if not self._cond.wait(timeout):
                    raise TimeoutError
            if not self._items:
                return None
            chunk = self._items.popleft()
            self._cond.notify_all()
            return chunk

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class FileSource:
    """Feeds a WAV file as if it were live capture (no dropping)."""

    def __init__(self, path, chunk_s=0.1):
        self.path = Path(path)
        self.clip = load_wav(self.path)
        self.sample_rate_hz = self.clip.sample_rate_hz
        self._chunk = max(1, int(chunk_s * self.sample_rate_hz))
        self._thread = None
        self._stop = threading.Event()

    def start(self, handoff):
        def pump():
            x = self.clip.samples
            for i in range(0, x.size, self._chunk):
                if self._stop.is_set():
                    break
                handoff.put(x[i:i + self._chunk], drop_oldest=False)
            handoff.close()

        self._thread = threading.Thread(target=pump, name="file-source", daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()


class DeviceSource:
    """Microphone capture through sounddevice; the callback never blocks."""

    def __init__(self, device=None, blocksize=1600):
        self.sample_rate_hz = CAPTURE_RATE
        self._sd = _import_sounddevice()
        self.device = device
        self.blocksize = blocksize
        self._stream = None
        self._handoff = None

    def start(self, handoff):
        self._handoff = handoff

        def callback(indata, frames, time_info, status):
            if status:
                logger.warning("capture status: %s", status)
            handoff.put(indata[:, 0].astype(np.float64) / PCM_SCALE, drop_oldest=True)

        try:
            self._stream = self._sd.InputStream(
                samplerate=CAPTURE_RATE, channels=1, dtype="int16",
                blocksize=self.blocksize, device=self.device, callback=callback,
            )
            self._stream.start()
        except Exception as exc:
            raise NoDeviceError(f"cannot open capture device {self.device!r}: {exc}") from exc

    def stop(self):
        if self._stream is not None:
            self._stream.stop()
            self._stream.close()
        if self._handoff is not None:
            self._handoff.close()


def open_source(spec, device=None):
    """``device`` or ``file:PATH`` to an audio source."""
    if spec is None or spec == "device":
        return DeviceSource(device)
    if spec.startswith("file:"):
        return FileSource(spec[len("file:"):])
    raise ValueError(f"unknown input source {spec!r}; use 'device' or 'file:PATH'")


class StreamSegmenter:
    """Rolling-window endpointing over an unbounded sample stream.

    Thresholds are calibrated once from the start of the stream. Every hop,
    the last ``window_s`` seconds are scanned; a word is emitted once it is
    followed by ``trailing_s`` of audio, and never emitted twice.
    """

    def __init__(self, rate, params=EndpointParams(), window_s=WINDOW_S, hop_s=HOP_S,
                 trailing_s=TRAILING_SILENCE_S):
        self.rate = rate
        self.params = params
        self.L = params.samples(params.frame_len_ms, rate)
        self.S = params.samples(params.frame_shift_ms, rate)
        self.window = int(window_s * rate) // self.S * self.S
        self.hop = int(hop_s * rate)
        self.trailing = int(trailing_s * rate)
        self.calibration = max(self.L, params.samples(params.calibration_ms, rate))
        self.thresholds = None
        self._buf = np.zeros(0)
        self._origin = 0  # absolute index of _buf[0]
        self._since_scan = 0
        self._emitted_until = 0

    def _frames(self, x):
        energy = np.mean(frame_view(x, self.L, self.S) ** 2, axis=1)
        signs = frame_view(carry_signs(x), self.L, self.S)
        zcr = np.count_nonzero(signs[:, 1:] != signs[:, :-1], axis=1) / max(self.L - 1, 1)
        return energy, zcr

    def _calibrate(self):
        energy, zcr = self._frames(self._buf[:self.calibration])
        n = calibration_frames(self.params, self.rate)
        self.thresholds = thresholds_from_silence(energy[:n], zcr[:n], self.params)
        logger.info("calibrated: ITU=%.3g ITL=%.3g IZCT=%.3f",
                    self.thresholds.itu, self.thresholds.itl, self.thresholds.izct)

    def _scan(self, final):
        end = self._origin + self._buf.size
        start = max(self._origin, end - self.window)
        start -= (start - self._origin) % self.S
        x = self._buf[start - self._origin:]
        if x.size < self.L:
            return []
        energy, zcr = self._frames(x)
        out = []
        for seg in find_segments(energy, zcr, self.thresholds, self.params, self.rate, x.size):
            a, b = start + seg.start_sample, start + seg.end_sample
            if a < self._emitted_until:
                continue
            if not final and end - b < self.trailing:
                continue
            out.append(AudioClip(self._buf[a - self._origin:b - self._origin], self.rate))
            self._emitted_until = b
        return out

    def feed(self, chunk):
        """Append samples; return word clips completed by this chunk."""
        self._buf = np.concatenate([self._buf, chunk])
        if self.thresholds is None:
            if self._buf.size < self.calibration:
                return []
            self._calibrate()
        self._since_scan += chunk.size
        words = []
        if self._since_scan >= self.hop:
            self._since_scan = 0
            words = self._scan(final=False)
        if self._buf.size > 2 * self.window:
            drop = self._buf.size - self.window
            drop -= drop % self.S
            self._buf = self._buf[drop:]
            self._origin += drop
        return words

    def flush(self):
        if self.thresholds is None:
            if self._buf.size < self.L:
                return []
            self._calibrate()
        return self._scan(final=True)


class CommandRunner:
    """Runs shell commands detached, each under a watchdog timeout."""

    def __init__(self, timeout_s=COMMAND_TIMEOUT_S):
        self.timeout_s = timeout_s
        self._threads = []

    def run(self, word, command):
        try:
            proc = subprocess.Popen(
                command, shell=True, stdin=subprocess.DEVNULL, stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT, start_new_session=True,
            )
        except OSError as exc:
            logger.error("could not start command for %r: %s", word, exc)
            return

        def watch():
            try:
                out, _ = proc.communicate(timeout=self.timeout_s)
            except subprocess.TimeoutExpired:
                os.killpg(proc.pid, signal.SIGKILL)
                out, _ = proc.communicate()
                logger.error("command for %r killed after %.0f s", word, self.timeout_s)
            text = out.decode(errors="replace").strip()
            logger.info("command for %r exited %s%s", word, proc.returncode,
                        f": {text}" if text else "")

        t = threading.Thread(target=watch, name=f"cmd-{word}", daemon=True)
        t.start()
        self._threads.append(t)

    def wait(self):
        for t in self._threads:
            t.join()


@dataclass
class Event:
    word: str | None
    per_frame_score: float
    accepted: bool


class Listener:
    """Consumer side of the listen loop.

    ``run`` returns the process exit status: 0 on the quit word or when a
    file source is exhausted.
    """

    def __init__(self, registry, commands, source, endpoint_params=EndpointParams(),
                 rejection_threshold=DEFAULT_REJECTION_THRESHOLD, runner=None):
        self.registry = registry
        self.commands = commands
        self.source = source
        self.feature_params = registry.feature_params
        self.segmenter = StreamSegmenter(source.sample_rate_hz, endpoint_params)
        self.rejection_threshold = rejection_threshold
        self.runner = runner or CommandRunner()
        self.handoff = HandOff()
        self.events = []

    def _handle(self, clip):
        try:
            obs = extract_features(clip, self.feature_params)
        except ClipTooShortError:
            return False
        result = recognize(self.registry, obs, self.rejection_threshold)
        score = result.best_score / result.frames
        if not result.accepted:
            self.events.append(Event(None, score, False))
            logger.info("no match (best %.2f per frame), listening again", score)
            return False
        word = result.word
        self.events.append(Event(word, score, True))
        logger.info("heard %r (%.2f per frame)", word, score)
        if word.lower() == self.commands.quit_word:
            return True
        command = self.commands.lookup(word)
        if command is None:
            logger.info("no command bound to %r", word)
        else:
            self.runner.run(word, command)
        return False

    def run(self):
        self.source.start(self.handoff)
        try:
            while True:
                chunk = self.handoff.get()
                words = self.segmenter.flush() if chunk is None else self.segmenter.feed(chunk)
                for clip in words:
                    if self._handle(clip):
                        return 0
                if chunk is None:
                    return 0
        finally:
            self.source.stop()
            self.handoff.close()
            self.runner.wait()
            if self.handoff.dropped:
                logger.warning("%d audio chunks dropped during listening", self.handoff.dropped)
