"""Straight-line reference for tokenization, the encoder and drift.

Written without touching the package's kernels, cache or prefix bank: every
prefix is tokenized by regex and encoded from scratch in float64 with plain
Python loops over time steps.
"""

import math
import re

import numpy as np

_TOKEN = re.compile(r"(?:[A-Za-z0-9]|(?<=[A-Za-z])['-](?=[A-Za-z]))+|.", re.DOTALL)


def tokens(raw):
    """(text, start, end) triples."""
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN.finditer(raw)]


def lookahead_count(n, k, N):
    return N if n + k >= N else n + k


def _conv_same(x, kernel, bias):
    width = kernel.shape[0]
    r = width // 2
    L = x.shape[0]
    out = np.zeros((L, kernel.shape[2]))
    for t in range(L):
        acc = bias.astype(np.float64).copy()
        for j in range(width):
            s = t + j - r
            if 0 <= s < L:
                acc += x[s] @ kernel[j].astype(np.float64)
        out[t] = np.maximum(acc, 0.0)
    return out


def _sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


def _lstm(x, w_in, w_rec, bias, reverse):
    H = w_rec.shape[0]
    L = x.shape[0]
    h = np.zeros(H)
    c = np.zeros(H)
    out = np.zeros((L, H))
    steps = range(L - 1, -1, -1) if reverse else range(L)
    for t in steps:
        g = x[t] @ w_in.astype(np.float64) + h @ w_rec.astype(np.float64) + bias
        i = _sigmoid(g[:H])
        f = _sigmoid(g[H:2 * H])
        cand = np.tanh(g[2 * H:3 * H])
        o = _sigmoid(g[3 * H:])
        c = f * c + i * cand
        h = o * np.tanh(c)
        out[t] = h
    return out


def char_states(text, tensors, vocab):
    ids = [vocab.index(ch) for ch in text]
    x = tensors["embedding"].astype(np.float64)[ids]
    for i in range(3):
        x = _conv_same(x, tensors[f"conv{i}.kernel"], tensors[f"conv{i}.bias"])
    fwd = _lstm(x, tensors["lstm_fwd.w_in"], tensors["lstm_fwd.w_rec"], tensors["lstm_fwd.bias"], False)
    bwd = _lstm(x, tensors["lstm_bwd.w_in"], tensors["lstm_bwd.w_rec"], tensors["lstm_bwd.bias"], True)
    return fwd, bwd


def token_vectors(raw, c, tensors, vocab):
    """Vectors of the first ``c`` tokens when only those tokens are visible."""
    toks = tokens(raw)
    text = "".join(t for t, _, _ in toks[:c])
    fwd, bwd = char_states(text, tensors, vocab)
    return [np.concatenate([fwd[e - 1], bwd[s]]) for _, s, e in toks[:c]]


def cosine_distance(a, b):
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) ** 2 for x in a))
    nb = math.sqrt(sum(float(y) ** 2 for y in b))
    return 1.0 - dot / (na * nb)


def drift_table(raw, k_max, tensors, vocab):
    """{(n, k): d} for one sentence."""
    N = len(tokens(raw))
    prefix = {c: token_vectors(raw, c, tensors, vocab) for c in range(1, N + 1)}
    full = prefix[N]
    out = {}
    for k in range(k_max + 1):
        for n in range(1, N + 1):
            c = lookahead_count(n, k, N)
            out[(n, k)] = 0.0 if c == N else cosine_distance(prefix[c][n - 1], full[n - 1])
    return out


def mean_drift_by_k(raws, k_max, tensors, vocab):
    sums = {k: [] for k in range(k_max + 1)}
    for raw in raws:
        for (n, k), d in drift_table(raw, k_max, tensors, vocab).items():
            sums[k].append(d)
    return {k: math.fsum(v) / len(v) for k, v in sums.items()}
