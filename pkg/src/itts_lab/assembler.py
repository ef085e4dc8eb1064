"""Incremental waveform assembly: per-prefix synthesis, segment cutting, cross-fade concatenation."""

from __future__ import annotations

import csv
import math
import wave
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .corpus import Sentence
from .encoder import EncoderConfig, EncoderWeights
from .errors import AlignmentError, FormatError, MissingPrefix, OverlapError, ParseError, RateError
from .policy import PrefixEncoding, context_size, encode_full, encode_prefix

DEFAULT_RATE = 22050
CROSSFADE_MS = 5.0

# toy decoder constants
BASE_MS = 40
MS_PER_CHAR = 25
F_LOW = 120.0
F_SPAN = 60.0
AMPLITUDE = 0.5
RAMP_MS = 10
#: frequency produced by a zero first component (the squashing map sends 0 to 0.5)
ZERO_POINT_HZ = F_LOW + 0.5 * F_SPAN


@dataclass
class Waveform:
    samples: np.ndarray  # float32
    sample_rate: int = DEFAULT_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.sample_rate <= 0:
            raise FormatError("sample rate must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class Alignment:
    """Half-open sample intervals keyed by 1-based token index."""

    spans: dict[int, tuple[int, int]] = field(default_factory=dict)

    def validate(self, n_samples: int) -> None:
        prev_end = 0
        for idx in sorted(self.spans):
            start, end = self.spans[idx]
            if start < 0 or end > n_samples or start > end:
                raise AlignmentError(idx)
            if start < prev_end:
                raise AlignmentError(idx, "interval overlaps its predecessor")
            prev_end = end

    def cut(self, wav: Waveform, n: int) -> Waveform:
        if n not in self.spans:
            raise AlignmentError(n, "token missing from alignment")
        start, end = self.spans[n]
        return Waveform(wav.samples[start:end].copy(), wav.sample_rate)


def squash(v: float) -> float:
    """Affine map of an LSTM output in [-1, 1] onto [0, 1], clipped."""
    return min(1.0, max(0.0, (float(v) + 1.0) / 2.0))


def token_samples(n_chars: int, rate: int = DEFAULT_RATE) -> int:
    duration_ms = BASE_MS + MS_PER_CHAR * n_chars
    return duration_ms * rate // 1000


def token_frequency(z) -> float:
    return F_LOW + F_SPAN * squash(z[0])


def render_token(n_chars: int, z, rate: int = DEFAULT_RATE) -> np.ndarray:
    length = token_samples(n_chars, rate)
    t = np.arange(length, dtype=np.float64)
    tone = AMPLITUDE * np.sin(2.0 * math.pi * token_frequency(z) * t / rate)
    ramp = min(RAMP_MS * rate // 1000, length // 2)
    if ramp > 0:
        up = np.arange(1, ramp + 1, dtype=np.float64) / ramp
        tone[:ramp] *= up
        tone[length - ramp:] *= up[::-1]
    return tone.astype(np.float32)


def _render(sentence: Sentence, vectors, rate: int) -> tuple[Waveform, Alignment]:
    parts = []
    spans = {}
    pos = 0
    for j, z in enumerate(vectors, start=1):
        seg = render_token(len(sentence.token(j).text), z, rate)
        spans[j] = (pos, pos + len(seg))
        pos += len(seg)
        parts.append(seg)
    samples = np.concatenate(parts) if parts else np.zeros(0, dtype=np.float32)
    return Waveform(samples, rate), Alignment(spans)


def toy_synthesize(prefix: PrefixEncoding, sentence: Sentence, rate: int = DEFAULT_RATE
                   ) -> tuple[Waveform, Alignment]:
    """Stand-in decoder: each token becomes a ramped sinusoid whose pitch follows z[0].

    Duration is 40 ms + 25 ms per character, so the alignment is exact by
    construction.
    """
    if not prefix.vectors:
        raise ValueError("empty prefix encoding")
    return _render(sentence, [v.z for v in prefix.vectors], rate)


def offline_synthesize(sentence: Sentence, weights: EncoderWeights, config: EncoderConfig,
                       rate: int = DEFAULT_RATE) -> tuple[Waveform, Alignment]:
    return _render(sentence, [v.z for v in encode_full(sentence, weights, config)], rate)


def overlap_samples(crossfade_ms: float, rate: int) -> int:
    x = crossfade_ms / 1000.0 * rate
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def crossfade_concat(a: Waveform, b: Waveform, crossfade_ms: float = CROSSFADE_MS,
                     law: str = "linear") -> Waveform:
    """Overlap the tail of ``a`` with the head of ``b``.

    The overlap has L samples (crossfade_ms rounded half away from zero);
    weight w_i = (i + 1) / (L + 1) goes to ``b`` and 1 - w_i to ``a``.
    ``law="equal_power"`` uses sin/cos of the same ramp instead.
    """
    if a.sample_rate != b.sample_rate:
        raise RateError(f"sample rates differ: {a.sample_rate} vs {b.sample_rate}")
    L = overlap_samples(crossfade_ms, a.sample_rate)
    if L < 0:
        raise OverlapError("negative cross-fade")
    if L > min(len(a), len(b)):
        raise OverlapError(f"overlap of {L} samples exceeds a segment ({len(a)}, {len(b)})")
    if L == 0:
        return Waveform(np.concatenate([a.samples, b.samples]), a.sample_rate)
    w = np.arange(1, L + 1, dtype=np.float64) / (L + 1)
    if law == "linear":
        wa, wb = 1.0 - w, w
    elif law == "equal_power":
        wa, wb = np.cos(w * math.pi / 2), np.sin(w * math.pi / 2)
    else:
        raise ValueError(f"unknown cross-fade law {law!r}")
    mid = a.samples[len(a) - L:].astype(np.float64) * wa + b.samples[:L].astype(np.float64) * wb
    out = np.concatenate([a.samples[: len(a) - L], mid.astype(np.float32), b.samples[L:]])
    return Waveform(out, a.sample_rate)


@dataclass
class AssemblyStep:
    n: int
    source_prefix: int
    cut: tuple[int, int]
    output: tuple[int, int]


@dataclass
class AssemblyResult:
    waveform: Waveform
    alignment: Alignment
    steps: list[AssemblyStep]
    k: int
    crossfade_ms: float

    def write_report(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "source_prefix", "cut_start", "cut_end", "out_start", "out_end"])
            for s in self.steps:
                w.writerow([s.n, s.source_prefix, *s.cut, *s.output])


def assemble_incremental(sentence: Sentence, k: int, weights: Optional[EncoderWeights] = None,
                         config: Optional[EncoderConfig] = None, *,
                         imported: Optional[Mapping[int, tuple[Waveform, Alignment]]] = None,
                         crossfade_ms: float = CROSSFADE_MS, rate: int = DEFAULT_RATE,
                         law: str = "linear") -> AssemblyResult:
    """Build y_1..N: for each n, cut token n out of the waveform of prefix c(n,k) and append it.

    With ``imported`` (prefix length -> waveform and alignment) no synthesis
    happens; otherwise the toy decoder renders each prefix encoding.
    """
    N = sentence.N
    if imported is None and (weights is None or config is None):
        raise ValueError("toy synthesis needs weights and config")
    rendered: dict[int, tuple[Waveform, Alignment]] = {}
    out: Optional[Waveform] = None
    steps = []
    spans = {}
    for n in range(1, N + 1):
        c = context_size(n, k, N)
        if imported is not None:
            if c not in imported:
                raise MissingPrefix(c)
            wav, ali = imported[c]
        else:
            if c not in rendered:
                vecs = encode_prefix(sentence, c, weights, config)
                rendered[c] = toy_synthesize(PrefixEncoding(n, k, c, vecs), sentence, rate)
            wav, ali = rendered[c]
        seg = ali.cut(wav, n)
        if out is None:
            out = seg
            start = 0
        else:
            out = crossfade_concat(out, seg, crossfade_ms, law)
            start = len(out) - len(seg)
        spans[n] = (start, len(out))
        steps.append(AssemblyStep(n, c, ali.spans[n], (start, len(out))))
    return AssemblyResult(out, Alignment(spans), steps, k, crossfade_ms)


# ---------------------------------------------------------------------------
# file I/O


def read_wav(path) -> Waveform:
    """Mono PCM (8/16/24/32-bit) to float32; 16-bit values are scaled by 1/32768."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise FormatError(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise FormatError(f"{path}: truncated") from exc
    if channels != 1:
        raise FormatError(f"{path}: expected mono, got {channels} channels")
    if width == 1:
        data = (np.frombuffer(frames, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif width == 2:
        data = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 3:
        raw = np.frombuffer(frames, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        data = ints.astype(np.float64) / float(1 << 23)
    elif width == 4:
        data = np.frombuffer(frames, dtype="<i4").astype(np.float64) / float(1 << 31)
    else:
        raise FormatError(f"{path}: unsupported sample width {width}")
    return Waveform(data.astype(np.float32), rate)


def write_wav(path, wav: Waveform) -> None:
    """16-bit PCM mono, scaled by 32767 with clamping, no dither."""
    ints = np.clip(np.round(wav.samples.astype(np.float64) * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(wav.sample_rate))
        wf.writeframes(ints.tobytes())


ALIGNMENT_COLUMNS = ("index", "start_sample", "end_sample")


def read_alignment(path) -> Alignment:
    spans = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ALIGNMENT_COLUMNS:
            raise ParseError(f"{path}: expected header {','.join(ALIGNMENT_COLUMNS)}")
        for line, row in enumerate(reader, start=2):
            try:
                idx, start, end = int(row["index"]), int(row["start_sample"]), int(row["end_sample"])
            except (TypeError, ValueError) as exc:
                raise ParseError(str(exc), line) from exc
            if idx in spans:
                raise ParseError(f"duplicate token index {idx}", line)
            spans[idx] = (start, end)
    return Alignment(spans)


def write_alignment(path, alignment: Alignment) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ALIGNMENT_COLUMNS)
        for idx in sorted(alignment.spans):
            w.writerow([idx, *alignment.spans[idx]])


def import_waveform(wav_path, alignment_path) -> tuple[Waveform, Alignment]:
    wav = read_wav(wav_path)
    ali = read_alignment(alignment_path)
    ali.validate(len(wav))
    return wav, ali
