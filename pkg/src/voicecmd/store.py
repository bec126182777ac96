"""Word-model persistence.

A registry is a directory (``HMMs`` by default) holding one ``<word>.whmm``
text file per word and a ``models`` index with one ``word<TAB>path`` line
per word, sorted by word. Reals are written with 17 significant digits so
a save/load round trip is exact.
"""

import logging
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from filelock import FileLock

from .errors import (
    InvariantViolationError,
    IoFailureError,
    MissingModelFileError,
    NotFoundError,
    ParamMismatchError,
    ParseError,
)
from .features import FeatureParams
from .hmm import WordHmm

logger = logging.getLogger(__name__)

DEFAULT_ROOT = "HMMs"
INDEX_NAME = "models"
MODEL_SUFFIX = ".whmm"
FORMAT_VERSION = 1
_LOCK_NAME = ".models.lock"
_INDEX_HEADER = "# word\tmodel file\n"


def _fmt(x):
    return format(float(x), ".17g")


def _fmt_param(v):
    if v is None:
        return "none"
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


def format_model(hmm, feature_params):
    """Serialize a model and its front-end settings to ``.whmm`` text."""
    params = " ".join(f"{k}={_fmt_param(v)}" for k, v in feature_params.as_dict().items())
    lines = [
        f"format-version {FORMAT_VERSION}",
        f"word {hmm.word}",
        f"N {hmm.n_states}",
        f"D {hmm.dim}",
        f"feature-params {params}",
        "initial " + " ".join(map(_fmt, hmm.initial)),
    ]
    lines += ["transition " + " ".join(map(_fmt, row)) for row in hmm.transitions]
    for mean, var in zip(hmm.means, hmm.variances):
        lines.append("mean " + " ".join(map(_fmt, mean)))
        lines.append("variance " + " ".join(map(_fmt, var)))
    return "\n".join(lines) + "\n"


def _parse_param(name, raw, path, line_no):
    types = {f.name: f.type for f in fields(FeatureParams)}
    if name not in types:
        raise ParseError(f"unknown feature parameter {name!r}", path, line_no)
    if raw == "none":
        return None
    try:
        return int(raw) if types[name] in (int, "int") else float(raw)
    except ValueError:
        raise ParseError(f"bad value {raw!r} for {name}", path, line_no) from None


def parse_model(text, path="<string>"):
    """Parse ``.whmm`` text into ``(WordHmm, FeatureParams)``.

    Structural problems raise :class:`ParseError` with the line number;
    well-formed files whose numbers break a model invariant raise
    :class:`InvariantViolationError`.
    """
    rows = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    it = iter(rows)

    def expect(key):
        try:
            line_no, toks = next(it)
        except StopIteration:
            raise ParseError(f"unexpected end of file, wanted {key!r}", path) from None
        if toks[0] != key:
            raise ParseError(f"expected {key!r}, found {toks[0]!r}", path, line_no)
        return line_no, toks[1:]

    def reals(key, n):
        line_no, toks = expect(key)
        if len(toks) != n:
            raise ParseError(f"{key} needs {n} values, found {len(toks)}", path, line_no)
        try:
            return [float(t) for t in toks]
        except ValueError as exc:
            raise ParseError(str(exc), path, line_no) from None

    def integer(key):
        line_no, toks = expect(key)
        try:
            (value,) = toks
            return int(value)
        except ValueError:
            raise ParseError(f"{key} needs one integer", path, line_no) from None

    version = integer("format-version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format-version {version}", path)
    line_no, toks = expect("word")
    if len(toks) != 1:
        raise ParseError("word line needs exactly one label", path, line_no)
    word = toks[0]
    n, d = integer("N"), integer("D")
    if n < 1 or d < 1:
        raise InvariantViolationError(f"{path}: N and D must be positive")

    line_no, toks = expect("feature-params")
    kwargs = {}
    for tok in toks:
        name, sep, raw = tok.partition("=")
        if not sep:
            raise ParseError(f"feature parameter {tok!r} lacks '='", path, line_no)
        kwargs[name] = _parse_param(name, raw, path, line_no)
    try:
        fparams = FeatureParams(**kwargs)
    except ValueError as exc:
        raise InvariantViolationError(f"{path}: {exc}") from None
    if fparams.dim != d:
        raise InvariantViolationError(
            f"{path}: D={d} disagrees with n_cepstra={fparams.n_cepstra}"
        )

    initial = reals("initial", n)
    trans = [reals("transition", n) for _ in range(n)]
    means, variances = [], []
    for _ in range(n):
        means.append(reals("mean", d))
        variances.append(reals("variance", d))
    leftover = next(it, None)
    if leftover is not None:
        raise ParseError(f"trailing content {leftover[1][0]!r}", path, leftover[0])

    try:
        hmm = WordHmm(word, np.array(means), np.array(variances), np.array(trans), np.array(initial))
    except InvariantViolationError as exc:
        raise InvariantViolationError(f"{path}: {exc}") from None
    return hmm, fparams


def load_model(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingModelFileError(f"{path}: model file missing") from None
    return parse_model(text, path)


@dataclass
class ModelRegistry:
    """Word models sharing one feature front end, backed by a directory."""

    root_dir: Path = Path(DEFAULT_ROOT)
    entries: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    feature_params: FeatureParams | None = None

    def __post_init__(self):
        self.root_dir = Path(self.root_dir)

    @property
    def index_path(self):
        return self.root_dir / INDEX_NAME

    @property
    def words(self):
        return sorted(self.models)

    @property
    def dim(self):
        return next(iter(self.models.values())).dim if self.models else None

    def __len__(self):
        return len(self.models)

    def __contains__(self, word):
        return word in self.models

    def __getitem__(self, word):
        return self.models[word]

    def _admit(self, hmm, fparams, source):
        if self.feature_params is not None and fparams != self.feature_params:
            raise ParamMismatchError(
                f"{source}: feature parameters differ from the registry's"
            )
        others = [m for w, m in self.models.items() if w != hmm.word]
        if others and others[0].dim != hmm.dim:
            raise ParamMismatchError(
                f"{source}: model has D={hmm.dim}, registry uses D={others[0].dim}"
            )
        self.feature_params = fparams
        self.models[hmm.word] = hmm


def parse_index(text, path="<string>"):
    """``models`` index lines to an ordered ``{word: relative path}`` map."""
    entries = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word, sep, rel = raw.strip("\r\n").partition("\t")
        word, rel = word.strip(), rel.strip()
        if not sep:
            raise ParseError("expected 'word<TAB>path'", path, line_no)
        if not word or not rel:
            raise ParseError("empty word or path", path, line_no)
        if word in entries:
            raise ParseError(f"duplicate word {word!r}", path, line_no)
        entries[word] = rel
    return entries


def format_index(entries):
    return _INDEX_HEADER + "".join(f"{w}\t{entries[w]}\n" for w in sorted(entries))


def load_registry(root_dir=DEFAULT_ROOT):
    """Load every model listed in ``<root_dir>/models``."""
    reg = ModelRegistry(root_dir)
    try:
        text = reg.index_path.read_text(encoding="utf-8")
    except (FileNotFoundError, NotADirectoryError):
        raise NotFoundError(f"{reg.index_path}: registry index not found") from None
    reg.entries = parse_index(text, reg.index_path)
    for word, rel in reg.entries.items():
        model_path = reg.root_dir / rel
        hmm, fparams = load_model(model_path)
        if hmm.word != word:
            raise InvariantViolationError(
                f"{model_path}: holds word {hmm.word!r}, index says {word!r}"
            )
        try:
            reg._admit(hmm, fparams, model_path)
        except ParamMismatchError as exc:
            raise InvariantViolationError(str(exc)) from None
    return reg


def _atomic_write(path, text):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(hmm, feature_params, registry):
    """Write ``hmm`` into ``registry`` and update its ``models`` index.

    The on-disk index is re-read under an advisory lock so concurrent savers
    never lose each other's entries.
    """
    if feature_params.dim != hmm.dim:
        raise ParamMismatchError(
            f"model D={hmm.dim} but feature parameters give D={feature_params.dim}"
        )
    root = registry.root_dir
    try:
        root.mkdir(parents=True, exist_ok=True)
        with FileLock(str(root / _LOCK_NAME)):
            if registry.index_path.exists():
                on_disk = load_registry(root)
                for word, model in on_disk.models.items():
                    if word not in registry.models or word == hmm.word:
                        registry.models[word] = model
                registry.entries.update(on_disk.entries)
                if registry.feature_params is None:
                    registry.feature_params = on_disk.feature_params
            registry._admit(hmm, feature_params, f"model {hmm.word!r}")
            rel = hmm.word + MODEL_SUFFIX
            _atomic_write(root / rel, format_model(hmm, feature_params))
            registry.entries[hmm.word] = rel
            registry.entries = {w: registry.entries[w] for w in sorted(registry.entries)}
            _atomic_write(registry.index_path, format_index(registry.entries))
    except OSError as exc:
        if isinstance(exc, (MissingModelFileError, NotFoundError)):
            raise
        raise IoFailureError(f"{root}: cannot save model ({exc})") from exc
    logger.info("saved %s to %s", hmm.word, root)
