"""Left-to-right word HMMs with diagonal-Gaussian emissions.

Training seeds N states from evenly spaced frames of the first utterance,
assigns the remaining frames to the nearest seed, and then refines the
model with Viterbi (segmental k-means) re-estimation over every utterance.
All scores are natural-log likelihoods.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatchError,
    EmptyObservationError,
    EmptyRegistryError,
    InvariantViolationError,
    TooFewObservationsError,
)

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-3
DEFAULT_REJECTION_THRESHOLD = -40.0
_STOCHASTIC_TOL = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    variance: np.ndarray


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WordHmm:
    """An N-state left-to-right HMM for one vocabulary word.

    ``means`` and ``variances`` have shape ``(N, D)``; the variances are the
    diagonal of each state's covariance.
    """

    word: str
    means: np.ndarray
    variances: np.ndarray
    transitions: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        for name in ("means", "variances", "transitions", "initial"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        self.validate()

    @property
    def n_states(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def states(self):
        return [GaussianState(m, v) for m, v in zip(self.means, self.variances)]

    def validate(self):
        if not self.word or any(c.isspace() for c in self.word):
            raise InvariantViolationError(f"invalid word label {self.word!r}")
        if self.means.ndim != 2 or self.means.shape[0] < 1 or self.means.shape[1] < 1:
            raise InvariantViolationError(f"means must be (N, D), got {self.means.shape}")
        n, d = self.means.shape
        if self.variances.shape != (n, d):
            raise InvariantViolationError("variances must match means in shape")
        if self.transitions.shape != (n, n) or self.initial.shape != (n,):
            raise InvariantViolationError("transition/initial shapes do not match N")
        for name in ("means", "variances", "transitions", "initial"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvariantViolationError(f"{name} contains non-finite values")
        if np.any(self.variances <= 0):
            raise InvariantViolationError("variances must be positive")
        if np.any(self.transitions < 0):
            raise InvariantViolationError("negative transition probability")
        rows = self.transitions.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > _STOCHASTIC_TOL)
        if bad.size:
            raise InvariantViolationError(
                f"transition row {bad[0]} sums to {rows[bad[0]]!r}, not 1"
            )
        legal = np.eye(n, dtype=bool) | np.eye(n, k=1, dtype=bool)
        if np.any(self.transitions[~legal] != 0):
            raise InvariantViolationError("transitions are not left-to-right")
        expected_initial = np.zeros(n)
        expected_initial[0] = 1.0
        if not np.array_equal(self.initial, expected_initial):
            raise InvariantViolationError("initial distribution must start in state 0")


@dataclass(frozen=True)
class TrainingConfig:
    n_states: int
    dim: int
    viterbi_iterations: int = 10
    convergence_epsilon: float = 1e-4
    variance_floor: float = VARIANCE_FLOOR
    transition_smoothing: float = 0.01

    def __post_init__(self):
        if self.n_states < 1 or self.dim < 1:
            raise ValueError("n_states and dim must be at least 1")
        if not self.variance_floor > 0:
            raise ValueError("variance_floor must be positive")
        if self.viterbi_iterations < 0 or self.transition_smoothing < 0:
            raise ValueError("iterations and smoothing must be non-negative")


def _obs_array(obs):
    x = np.asarray(obs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyObservationError("observation sequence is empty")
    return x


def log_gaussian(state, obs):
    """Log density of a diagonal Gaussian at one observation vector."""
    x = np.asarray(obs, dtype=np.float64)
    if x.shape != state.mean.shape:
        raise DimensionMismatchError(
            f"observation has dimension {x.shape}, state expects {state.mean.shape}"
        )
    var = state.variance
    return float(np.sum(-0.5 * np.log(2 * np.pi * var) - (x - state.mean) ** 2 / (2 * var)))


def log_emissions(hmm, obs):
    """Per-frame, per-state emission log densities, shape ``(T, N)``."""
    x = _obs_array(obs)
    if x.shape[1] != hmm.dim:
        raise DimensionMismatchError(
            f"observations have D={x.shape[1]}, model {hmm.word!r} has D={hmm.dim}"
        )
    norm = -0.5 * np.sum(_LOG_2PI + np.log(hmm.variances), axis=1)
    diff = x[:, None, :] - hmm.means[None, :, :]
    return norm[None, :] - 0.5 * np.sum(diff**2 / hmm.variances[None, :, :], axis=2)


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


def viterbi(hmm, obs, require_final=False):
    """Best state path and its joint log-likelihood.

    By default the path may end in any state. With ``require_final=True``
    the path must end in the last state; if ``T < N`` that is impossible and
    the score is ``-inf`` with ``path=None``.
    """
    b = log_emissions(hmm, obs)
    T, N = b.shape
    log_a = _log(hmm.transitions)
    delta = _log(hmm.initial) + b[0]
    back = np.zeros((T, N), dtype=np.intp)
    cols = np.arange(N)
    for t in range(1, T):
        cand = delta[:, None] + log_a
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], cols] + b[t]

    last = N - 1 if require_final else int(np.argmax(delta))
    score = float(delta[last])
    if score == -np.inf:
        return score, None
    path = np.empty(T, dtype=np.intp)
    path[-1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return score, path


def forward_log_likelihood(hmm, obs, require_final=False):
    """Log of the total probability over all state paths."""
    b = log_emissions(hmm, obs)
    log_a = _log(hmm.transitions)
    alpha = _log(hmm.initial) + b[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        for t in range(1, b.shape[0]):
            alpha = logsumexp(alpha[:, None] + log_a, axis=0) + b[t]
        if require_final:
            return float(alpha[-1])
        return float(logsumexp(alpha))


def seed_indices(T, n_states):
    """Evenly spaced frame indices including both endpoints (half-up rounding)."""
    if n_states == 1:
        return [0]
    step = (T - 1) / (n_states - 1)
    return [int(math.floor(i * step + 0.5)) for i in range(n_states)]


def _gaussians(frames_by_state, fallback_means, fallback_vars, floor):
    n, d = fallback_means.shape
    means = np.array(fallback_means, dtype=np.float64)
    variances = np.array(fallback_vars, dtype=np.float64)
    for i, frames in enumerate(frames_by_state):
        if len(frames) == 0:
            continue
        x = np.asarray(frames)
        means[i] = x.mean(axis=0)
        variances[i] = np.maximum(x.var(axis=0), floor)
    return means, variances


def transition_matrix(paths, n_states, smoothing):
    """Row-normalized left-to-right transition estimate from state paths.

    Only self-loops and single forward steps are counted; ``smoothing`` is
    added to both legal slots of each row before normalizing.
    """
    stay = np.zeros(n_states)
    step = np.zeros(n_states)
    for path in paths:
        p = np.asarray(path)
        src, dst = p[:-1], p[1:]
        np.add.at(stay, src[dst == src], 1.0)
        np.add.at(step, src[dst == src + 1], 1.0)
    a = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        s, f = stay[i] + smoothing, step[i] + smoothing
        total = s + f
        if total == 0:
            s, f, total = 1.0, 1.0, 2.0
        a[i, i] = s / total
        a[i, i + 1] = f / total
    a[-1, -1] = 1.0
    return a


def _initial(n):
    pi = np.zeros(n)
    pi[0] = 1.0
    return pi


def _check_dim(x, dim, what="observations"):
    if x.shape[1] != dim:
        raise DimensionMismatchError(f"{what} have D={x.shape[1]}, expected D={dim}")


def init_hmm(first_sequence, config, word="word"):
    """Segmental initialization from one utterance.

    Returns the model and the per-frame state assignment it was built from.
    Each non-seed frame joins the state whose seed frame is nearest in
    Euclidean distance, ties going to the lower state.
    """
    x = _obs_array(first_sequence)
    _check_dim(x, config.dim)
    T, N = x.shape[0], config.n_states
    if T < N:
        raise TooFewObservationsError(f"{T} frames cannot seed {N} states")

    seeds = seed_indices(T, N)
    seed_vecs = x[seeds]
    d2 = np.sum((x[:, None, :] - seed_vecs[None, :, :]) ** 2, axis=2)
    assignment = np.argmin(d2, axis=1)
    assignment[seeds] = np.arange(N)

    frames = [x[assignment == i] for i in range(N)]
    means, variances = _gaussians(frames, seed_vecs, np.full((N, config.dim), config.variance_floor),
                                  config.variance_floor)
    trans = transition_matrix([assignment], N, config.transition_smoothing)
    return WordHmm(word, means, variances, trans, _initial(N)), assignment


def _reestimate(hmm, seqs, paths, config):
    N = hmm.n_states
    frames = [[] for _ in range(N)]
    for x, path in zip(seqs, paths):
        for i in range(N):
            sel = x[path == i]
            if sel.size:
                frames[i].append(sel)
    frames = [np.concatenate(f) if f else [] for f in frames]
    means, variances = _gaussians(frames, hmm.means, hmm.variances, config.variance_floor)
    trans = transition_matrix(paths, N, config.transition_smoothing)
    return WordHmm(hmm.word, means, variances, trans, _initial(N))


def _align_all(hmm, seqs):
    results = [viterbi(hmm, x) for x in seqs]
    return sum(r[0] for r in results), [r[1] for r in results]


def fit_word_model(word, training_sequences, config):
    """Train a word model and return it with its log-likelihood history.

    ``history[k]`` is the total Viterbi log-likelihood of all training
    utterances under the model after ``k`` re-estimation passes. A pass that
    would lower the total (possible only through transition smoothing) is
    discarded and training stops.
    """
    seqs = [_obs_array(s) for s in training_sequences]
    if not seqs:
        raise EmptyObservationError("no training sequences")
    for k, x in enumerate(seqs):
        _check_dim(x, config.dim, what=f"training sequence {k}")

    hmm, _ = init_hmm(seqs[0], config, word=word)
    ll, paths = _align_all(hmm, seqs)
    history = [ll]
    for it in range(config.viterbi_iterations):
        candidate = _reestimate(hmm, seqs, paths, config)
        new_ll, new_paths = _align_all(candidate, seqs)
        if new_ll < ll:
            logger.debug("%s: pass %d lowered log-likelihood, stopping", word, it + 1)
            break
        hmm, paths = candidate, new_paths
        history.append(new_ll)
        improved = new_ll - ll
        ll = new_ll
        if improved < config.convergence_epsilon * abs(ll):
            break
    logger.debug("%s: trained in %d passes, log-likelihood %.6g", word, len(history) - 1, ll)
    return hmm, history


def train_word_model(word, training_sequences, config):
    return fit_word_model(word, training_sequences, config)[0]


class Status(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


@dataclass(frozen=True)
class RecognitionResult:
    status: Status
    word: str | None
    scores: dict = field(default_factory=dict)
    frames: int = 0

    @property
    def accepted(self):
        return self.status is Status.ACCEPTED

    @property
    def best_score(self):
        return max(self.scores.values()) if self.scores else -np.inf

    def per_frame_scores(self):
        """(word, per-frame log-likelihood) pairs, best first."""
        ranked = sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(w, s / self.frames) for w, s in ranked]


def recognize(registry, obs, rejection_threshold=DEFAULT_REJECTION_THRESHOLD):
    """Score ``obs`` against every model and pick the best word.

    ``registry`` is a :class:`~voicecmd.store.ModelRegistry` or any mapping
    from word to :class:`WordHmm`. The input is rejected when the winning
    per-frame log-likelihood falls below ``rejection_threshold``.
    """
    models = getattr(registry, "models", registry)
    if not models:
        raise EmptyRegistryError("no word models loaded")
    x = _obs_array(obs)
    scores = {word: viterbi(hmm, x)[0] for word, hmm in sorted(models.items())}
    T = x.shape[0]
    best_word = min(scores, key=lambda w: (-scores[w], w))
    best = scores[best_word]
    if not np.isfinite(best) or best / T < rejection_threshold:
        return RecognitionResult(Status.REJECTED, None, scores, T)
    return RecognitionResult(Status.ACCEPTED, best_word, scores, T)
