"""Character-level encoder: embedding, three same-padded convolutions, bidirectional LSTM.

Inference only. All arithmetic is float32.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .corpus import Sentence
from .errors import OutOfPrefix, ParseError, ShapeError, UnsupportedChar

DEFAULT_VOCAB = "".join(chr(c) for c in range(0x20, 0x7F))
WEIGHT_FORMAT = "itts-lab-weights/1"


@dataclass(frozen=True)
class ConvSpec:
    kernel_width: int = 5
    channels: int = 32


@dataclass(frozen=True)
class EncoderConfig:
    char_vocab: str = DEFAULT_VOCAB
    embed_dim: int = 32
    conv: tuple[ConvSpec, ...] = (ConvSpec(), ConvSpec(), ConvSpec())
    hidden_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        if len(self.conv) != 3:
            raise ValueError("exactly three convolution layers are required")
        for spec in self.conv:
            if spec.kernel_width < 1 or spec.kernel_width % 2 == 0:
                raise ValueError(f"kernel width must be odd and positive, got {spec.kernel_width}")
            if spec.channels < 1:
                raise ValueError("conv channels must be positive")
        if self.embed_dim < 1 or self.hidden_dim < 1:
            raise ValueError("embed_dim and hidden_dim must be >= 1")
        if not self.char_vocab or len(set(self.char_vocab)) != len(self.char_vocab):
            raise ValueError("char_vocab must be a non-empty string of distinct characters")

    @classmethod
    def desk(cls, hidden_dim=32, embed_dim=32, channels=32, kernel_width=5, seed=0, char_vocab=DEFAULT_VOCAB):
        conv = tuple(ConvSpec(kernel_width, channels) for _ in range(3))
        return cls(char_vocab, embed_dim, conv, hidden_dim, seed)

    @property
    def receptive_radius(self) -> int:
        """How many characters to either side one conv output can see."""
        return sum(s.kernel_width // 2 for s in self.conv)

    @property
    def vector_dim(self) -> int:
        return 2 * self.hidden_dim

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv"] = [asdict(s) for s in self.conv]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        d = dict(d)
        d["conv"] = tuple(ConvSpec(**s) for s in d["conv"])
        return cls(**d)


def _tensor_shapes(config: EncoderConfig) -> dict[str, tuple[int, ...]]:
    shapes = {"embedding": (len(config.char_vocab), config.embed_dim)}
    cin = config.embed_dim
    for i, spec in enumerate(config.conv):
        shapes[f"conv{i}.kernel"] = (spec.kernel_width, cin, spec.channels)
        shapes[f"conv{i}.bias"] = (spec.channels,)
        cin = spec.channels
    H = config.hidden_dim
    for d in ("fwd", "bwd"):
        # gate blocks ordered i, f, g, o along the last axis
        shapes[f"lstm_{d}.w_in"] = (cin, 4 * H)
        shapes[f"lstm_{d}.w_rec"] = (H, 4 * H)
        shapes[f"lstm_{d}.bias"] = (4 * H,)
    return shapes


@dataclass
class EncoderWeights:
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def conv_layers(self):
        for i in range(3):
            yield self.tensors[f"conv{i}.kernel"], self.tensors[f"conv{i}.bias"]

    def equals(self, other: "EncoderWeights") -> bool:
        if self.tensors.keys() != other.tensors.keys():
            return False
        return all(np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors)

    @classmethod
    def zeros(cls, config: EncoderConfig) -> "EncoderWeights":
        return cls({k: np.zeros(s, dtype=np.float32) for k, s in _tensor_shapes(config).items()})


def check_weights(weights: EncoderWeights, config: EncoderConfig) -> None:
    shapes = _tensor_shapes(config)
    for name, shape in shapes.items():
        if name not in weights.tensors:
            raise ShapeError(name, shape, None)
        t = weights.tensors[name]
        if t.shape != shape:
            raise ShapeError(name, shape, t.shape)
        if not np.all(np.isfinite(t)):
            raise ParseError(f"tensor {name} has non-finite entries")


def init_weights(config: EncoderConfig) -> EncoderWeights:
    """Draw every tensor i.i.d. from U[-0.1, 0.1], in a fixed name order, from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    tensors = {}
    for name, shape in _tensor_shapes(config).items():
        tensors[name] = rng.uniform(-0.1, 0.1, size=shape).astype(np.float32)
    return EncoderWeights(tensors)


def save_weights(weights: EncoderWeights, path, config: Optional[EncoderConfig] = None) -> None:
    """Write a ``.npz`` container of little-endian float32 tensors.

    A ``__meta__`` entry holds UTF-8 JSON with the format tag, tensor shapes
    and, when given, the encoder config.
    """
    meta = {"format": WEIGHT_FORMAT,
            "shapes": {k: list(v.shape) for k, v in weights.tensors.items()}}
    if config is not None:
        meta["config"] = config.to_dict()
    arrays = {k: np.ascontiguousarray(v, dtype="<f4") for k, v in weights.tensors.items()}
    arrays["__meta__"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def read_weight_file(path) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        with np.load(path, allow_pickle=False) as z:
            arrays = {k: z[k] for k in z.files}
    except (zipfile.BadZipFile, ValueError, OSError, EOFError, KeyError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise ParseError(f"corrupt weight file {path}: {exc}") from exc
    if "__meta__" not in arrays:
        raise ParseError(f"{path}: missing __meta__ entry")
    try:
        meta = json.loads(arrays.pop("__meta__").tobytes().decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: unreadable metadata") from exc
    if meta.get("format") != WEIGHT_FORMAT:
        raise ParseError(f"{path}: unknown format {meta.get('format')!r}")
    for k, v in arrays.items():
        if v.dtype != np.dtype("<f4"):
            raise ParseError(f"{path}: tensor {k} is {v.dtype}, expected <f4")
        if list(v.shape) != meta["shapes"].get(k):
            raise ParseError(f"{path}: tensor {k} shape disagrees with metadata")
    return meta, arrays


def load_weights(path, config: EncoderConfig) -> EncoderWeights:
    _, arrays = read_weight_file(path)
    weights = EncoderWeights({k: v.astype(np.float32) for k, v in arrays.items()})
    check_weights(weights, config)
    return weights


def load_config_from_weights(path) -> Optional[EncoderConfig]:
    meta, _ = read_weight_file(path)
    if "config" not in meta:
        return None
    return EncoderConfig.from_dict(meta["config"])


@dataclass
class CharStates:
    h_fwd: np.ndarray  # (L, H)
    h_bwd: np.ndarray  # (L, H)

    def __len__(self) -> int:
        return self.h_fwd.shape[0]


@dataclass
class TokenVector:
    z: np.ndarray
    token_index: int
    context_tokens: int
    full_context: bool


def char_ids(text: str, config: EncoderConfig) -> np.ndarray:
    lookup = {ch: i for i, ch in enumerate(config.char_vocab)}
    ids = np.empty(len(text), dtype=np.int64)
    for pos, ch in enumerate(text):
        try:
            ids[pos] = lookup[ch]
        except KeyError:
            raise UnsupportedChar(pos, ch) from None
    return ids


@dataclass
class _Layers:
    text: str
    acts: list  # embedding output, then each conv output
    c_fwd: np.ndarray
    h_fwd: np.ndarray


@dataclass
class ForwardCache:
    """Reuses conv rows and forward LSTM states across growing prefixes.

    A convolution output at position ``t`` sees characters up to
    ``t + receptive_radius``, so only rows far enough from the previous
    prefix end are reused; everything else is recomputed.
    """

    last: Optional[_Layers] = None
    hits: int = 0

    def reset(self) -> None:
        self.last = None


def _encode(text: str, weights: EncoderWeights, config: EncoderConfig, cache: Optional[ForwardCache]):
    ids = char_ids(text, config)
    L = len(text)
    H = config.hidden_dim
    if L == 0:
        empty = np.zeros((0, H), dtype=np.float32)
        return CharStates(empty, empty.copy())

    prev = None
    if cache is not None and cache.last is not None and text.startswith(cache.last.text):
        prev = cache.last
    Lp = len(prev.text) if prev is not None else 0

    acts = [weights["embedding"][ids]]
    radius = 0
    for li, (kernel, bias) in enumerate(weights.conv_layers()):
        radius += kernel.shape[0] // 2
        keep = max(0, Lp - radius) if prev is not None else 0
        fresh = _kernels.conv1d_relu(acts[-1], kernel, bias, keep, L)
        if keep:
            out = np.empty((L, kernel.shape[2]), dtype=np.float32)
            out[:keep] = prev.acts[li + 1][:keep]
            out[keep:] = fresh
        else:
            out = fresh
        acts.append(out)

    feats = acts[-1]
    zeros = np.zeros(H, dtype=np.float32)
    t0 = max(0, Lp - radius) if prev is not None else 0
    xp_f = _kernels.input_projection(feats, weights["lstm_fwd.w_in"], weights["lstm_fwd.bias"])
    if t0 > 0:
        h0, c0 = prev.h_fwd[t0 - 1], prev.c_fwd[t0 - 1]
        cache.hits += 1
    else:
        h0, c0 = zeros, zeros
    hf, cf = _kernels.lstm_scan(xp_f, weights["lstm_fwd.w_rec"], h0, c0, t0, L, 1)
    if t0 > 0:
        hf[:t0] = prev.h_fwd[:t0]
        cf[:t0] = prev.c_fwd[:t0]

    xp_b = _kernels.input_projection(feats, weights["lstm_bwd.w_in"], weights["lstm_bwd.bias"])
    hb, _ = _kernels.lstm_scan(xp_b, weights["lstm_bwd.w_rec"], zeros, zeros, L - 1, -1, -1)

    if cache is not None:
        cache.last = _Layers(text, acts, cf, hf)
    return CharStates(hf, hb)


def encode_chars(prefix_text: str, weights: EncoderWeights, config: EncoderConfig,
                 cache: Optional[ForwardCache] = None) -> CharStates:
    """Per-character forward and backward LSTM outputs for ``prefix_text``.

    The backward direction starts from the last character of the text it is
    given, which is how lookahead context reaches earlier tokens.
    """
    return _encode(prefix_text, weights, config, cache)


def extract_token_vector(states: CharStates, sentence: Sentence, n: int,
                         context_tokens: Optional[int] = None) -> TokenVector:
    """Concatenate the forward state at the token's last character with the
    backward state at its first character."""
    tok = sentence.token(n)
    if tok.char_span[1] > len(states):
        raise OutOfPrefix(n)
    z = np.concatenate([states.h_fwd[tok.last_char], states.h_bwd[tok.first_char]])
    if context_tokens is None:
        context_tokens = sentence.N
    return TokenVector(z, n, context_tokens, context_tokens == sentence.N)
