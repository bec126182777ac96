"""Independent reference computations used as test oracles.

Nothing here imports the code under test's numerics; each routine is a
direct, slow transcription of the defining formula.
"""

import itertools
import math


def log_normal_1d(x, mean, var):
    return -0.5 * math.log(2 * math.pi * var) - (x - mean) ** 2 / (2 * var)


def log_density(mean, var, obs):
    return math.fsum(log_normal_1d(o, m, v) for o, m, v in zip(obs, mean, var))


def legal_paths(n_states, T):
    """All state paths starting at 0 with steps of 0 or +1 (any end state)."""
    for steps in itertools.product((0, 1), repeat=T - 1):
        path = [0]
        for s in steps:
            path.append(path[-1] + s)
        if path[-1] < n_states:
            yield path


def path_log_prob(means, variances, trans, initial, obs, path):
    lp = math.log(initial[path[0]]) if initial[path[0]] > 0 else -math.inf
    for t, s in enumerate(path):
        if t:
            a = trans[path[t - 1]][s]
            lp += math.log(a) if a > 0 else -math.inf
        lp += log_density(means[s], variances[s], obs[t])
    return lp


def enumerate_scores(means, variances, trans, initial, obs):
    """(max, log-sum) of the joint log-probability over every legal path."""
    lps = [path_log_prob(means, variances, trans, initial, obs, p)
           for p in legal_paths(len(means), len(obs))]
    best = max(lps)
    if best == -math.inf:
        return best, best
    return best, best + math.log(math.fsum(math.exp(lp - best) for lp in lps))


def reference_mfcc(frame, rate, n_filters=26, n_ceps=12, floor=1e-10, fmin=0.0, fmax=None):
    """Loop-level MFCC of one already-windowed frame."""
    L = len(frame)
    n_fft = 1
    while n_fft < L:
        n_fft *= 2
    fmax = rate / 2.0 if fmax is None else fmax
    import numpy as np
    k = np.arange(n_fft // 2 + 1)[:, None]
    n = np.arange(L)[None, :]
    ang = 2.0 * np.pi * k * n / n_fft  # explicit DFT, deliberately not an FFT
    x = np.asarray(frame, dtype=np.float64)
    power = list((np.cos(ang) @ x) ** 2 + (np.sin(ang) @ x) ** 2)

    def mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def inv(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    lo_m, hi_m = mel(fmin), mel(fmax)
    edges = [inv(lo_m + i * (hi_m - lo_m) / (n_filters + 1)) for i in range(n_filters + 2)]
    logmel = []
    for m in range(1, n_filters + 1):
        left, centre, right = edges[m - 1], edges[m], edges[m + 1]
        acc = 0.0
        for k, p in enumerate(power):
            f = k * rate / n_fft
            if left < f < right:
                w = (f - left) / (centre - left) if f <= centre else (right - f) / (right - centre)
                acc += w * p
        logmel.append(math.log(max(acc, floor)))

    M = n_filters
    ceps = []
    for i in range(1, n_ceps + 1):
        s = math.fsum(logmel[m] * math.cos(math.pi * i * (2 * m + 1) / (2 * M)) for m in range(M))
        ceps.append(math.sqrt(2.0 / M) * s)
    return ceps


def dominant_frequency(samples, rate):
    """Peak of the magnitude spectrum via a direct DFT scan (coarse, 1 Hz grid)."""
    import numpy as np
    x = np.asarray(samples)
    spec = np.abs(np.fft.rfft(x * np.hanning(x.size), n=max(x.size, rate)))
    return float(np.argmax(spec) * rate / max(x.size, rate))
