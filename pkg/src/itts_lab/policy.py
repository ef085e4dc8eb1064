"""Lookahead-k policy: which prefix is encoded when output for token n is produced."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import Sentence, TokenKind
from .encoder import (EncoderConfig, EncoderWeights, ForwardCache, TokenVector, encode_chars,
                      extract_token_vector)


def context_size(n: int, k: int, N: int) -> int:
    """Number of tokens read before emitting output for token ``n``."""
    if N < 1 or not 1 <= n <= N:
        raise IndexError(f"token index {n} outside 1..{N}")
    if k < 0:
        raise ValueError(f"lookahead must be non-negative, got {k}")
    return min(n + k, N)


def prefix_text(sentence: Sentence, c: int) -> str:
    if not 0 < c <= sentence.N:
        raise IndexError(f"prefix length {c} outside 1..{sentence.N}")
    return sentence.raw[: sentence.tokens[c - 1].char_span[1]]


def word_lookahead(sentence: Sentence, n: int, k: int) -> int:
    """How many whole words the lookahead window of token ``n`` contains.

    k counts every token, so with words and single spaces alternating,
    k=2 usually means one word of lookahead.
    """
    c = context_size(n, k, sentence.N)
    return sum(1 for t in sentence.tokens[n:c] if t.kind is TokenKind.WORD)


@dataclass
class PrefixEncoding:
    n: int
    k: int
    c: int
    vectors: list[TokenVector]

    def matrix(self) -> np.ndarray:
        return np.stack([v.z for v in self.vectors])


@dataclass
class EncodingTrace:
    sentence_id: str
    k: int
    prefixes: list[PrefixEncoding]
    full: list[TokenVector]
    encodings: int = 0  # number of encoder invocations that produced this trace

    def incremental(self, n: int) -> TokenVector:
        """z_n under the policy: the vector of token n in prefix encoding n."""
        return self.prefixes[n - 1].vectors[n - 1]


def encode_prefix(sentence: Sentence, c: int, weights: EncoderWeights, config: EncoderConfig,
                  cache: Optional[ForwardCache] = None) -> list[TokenVector]:
    states = encode_chars(prefix_text(sentence, c), weights, config, cache)
    return [extract_token_vector(states, sentence, j, c) for j in range(1, c + 1)]


def encode_full(sentence: Sentence, weights: EncoderWeights, config: EncoderConfig) -> list[TokenVector]:
    return encode_prefix(sentence, sentence.N, weights, config)


def encode_incremental(sentence: Sentence, k: int, weights: EncoderWeights, config: EncoderConfig,
                       use_cache: bool = False) -> EncodingTrace:
    """Re-encode the prefix x_1..x_c(n,k) from scratch for every n, plus the full sentence once.

    ``use_cache`` reuses forward-direction work across the growing prefixes;
    outputs are bit-identical either way.
    """
    N = sentence.N
    if N == 0:
        raise ValueError("empty sentence")
    cache = ForwardCache() if use_cache else None
    prefixes = []
    for n in range(1, N + 1):
        c = context_size(n, k, N)
        prefixes.append(PrefixEncoding(n, k, c, encode_prefix(sentence, c, weights, config, cache)))
    full = encode_full(sentence, weights, config)
    return EncodingTrace(sentence.id, k, prefixes, full, encodings=N + 1)


@dataclass
class PrefixBank:
    """Every distinct prefix encoding of one sentence, c = 1..N, plus the full encoding.

    z_n^{n,k} only depends on c(n,k), so one bank serves every lookahead.
    """

    sentence: Sentence
    by_c: list[np.ndarray]  # by_c[c-1] has shape (c, 2H)
    full: np.ndarray = field(repr=False)

    def vector(self, n: int, k: int) -> np.ndarray:
        c = context_size(n, k, self.sentence.N)
        return self.by_c[c - 1][n - 1]

    def trace(self, k: int) -> EncodingTrace:
        N = self.sentence.N
        prefixes = []
        for n in range(1, N + 1):
            c = context_size(n, k, N)
            vecs = [TokenVector(self.by_c[c - 1][j - 1], j, c, c == N) for j in range(1, c + 1)]
            prefixes.append(PrefixEncoding(n, k, c, vecs))
        full = [TokenVector(self.full[j - 1], j, N, True) for j in range(1, N + 1)]
        return EncodingTrace(self.sentence.id, k, prefixes, full, encodings=0)


def encode_all_prefixes(sentence: Sentence, weights: EncoderWeights, config: EncoderConfig,
                        use_cache: bool = True) -> PrefixBank:
    cache = ForwardCache() if use_cache else None
    by_c = []
    for c in range(1, sentence.N + 1):
        vecs = encode_prefix(sentence, c, weights, config, cache)
        by_c.append(np.stack([v.z for v in vecs]))
    full = np.stack([v.z for v in encode_full(sentence, weights, config)])
    return PrefixBank(sentence, by_c, full)


TRACE_COLUMNS = ("sentence_id", "n", "k", "c")


def write_trace_dump(traces, path) -> None:
    """One row per (sentence, n, k) holding z_n^{n,k}; full-context rows use k = -1.

    Columns: sentence_id, n, k, c, z0 .. z{2H-1}.
    """
    traces = list(traces)
    dim = traces[0].full[0].z.shape[0] if traces else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(TRACE_COLUMNS) + [f"z{i}" for i in range(dim)])
        done_full = set()
        for tr in traces:
            for p in tr.prefixes:
                z = tr.incremental(p.n).z
                w.writerow([tr.sentence_id, p.n, p.k, p.c] + [repr(float(v)) for v in z])
            if tr.sentence_id not in done_full:
                done_full.add(tr.sentence_id)
                N = len(tr.full)
                for v in tr.full:
                    w.writerow([tr.sentence_id, v.token_index, -1, N] + [repr(float(x)) for x in v.z])
