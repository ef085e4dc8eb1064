"""Tokenization into word / space / punctuation tokens and annotated corpus I/O."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterator, Optional

from .errors import AnnotationMismatch, EmptyInput, ParseError, UnsupportedChar


class TokenKind(str, enum.Enum):
    WORD = "word"
    SPACE = "space"
    PUNCT = "punct"


class Category(str, enum.Enum):
    PUNCTUATION = "punctuation"
    SPACE = "space"
    FUNCTION_WORD = "function_word"
    CONTENT_WORD = "content_word"


#: Universal POS tags treated as closed-class.
FUNCTION_TAGS = frozenset({"DET", "ADP", "PRON", "AUX", "CCONJ", "SCONJ", "PART", "NUM"})

_JOINERS = "'-"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind
    index: int  # 1-based
    char_span: tuple[int, int]  # half-open

    @property
    def first_char(self) -> int:
        return self.char_span[0]

    @property
    def last_char(self) -> int:
        return self.char_span[1] - 1


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: tuple[Token, ...]
    id: str = ""

    @property
    def N(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, n: int) -> Token:
        """Token at 1-based position ``n``."""
        if not 1 <= n <= len(self.tokens):
            raise IndexError(f"token index {n} outside 1..{len(self.tokens)}")
        return self.tokens[n - 1]


@dataclass(frozen=True)
class AnnotatedToken:
    token: Token
    pos: Optional[str] = None
    tokens_to_parent_phrase_end: Optional[int] = None
    training_frequency: Optional[int] = None


@dataclass
class AnnotatedSentence:
    sentence: Sentence
    annotations: list[AnnotatedToken] = field(default_factory=list)

    @property
    def id(self) -> str:
        return self.sentence.id


def _is_supported(ch: str) -> bool:
    return " " <= ch <= "~"


def _is_letter(ch: str) -> bool:
    return ch.isascii() and ch.isalpha()


def _is_word_char(raw: str, i: int) -> bool:
    ch = raw[i]
    if ch.isascii() and ch.isalnum():
        return True
    if ch in _JOINERS:
        return 0 < i < len(raw) - 1 and _is_letter(raw[i - 1]) and _is_letter(raw[i + 1])
    return False


def tokenize(raw: str, id: str = "") -> Sentence:
    """Split ``raw`` into maximal word runs, single whitespace and single punctuation tokens.

    Apostrophes and hyphens stay inside a word only when a letter sits on
    both sides ("don't", "well-known"). Input is restricted to printable ASCII.
    """
    if not raw:
        raise EmptyInput("cannot tokenize an empty string")
    for i, ch in enumerate(raw):
        if not _is_supported(ch):
            raise UnsupportedChar(i, ch)

    tokens = []
    i = 0
    while i < len(raw):
        if _is_word_char(raw, i):
            j = i + 1
            while j < len(raw) and _is_word_char(raw, j):
                j += 1
            kind = TokenKind.WORD
        else:
            j = i + 1
            kind = TokenKind.SPACE if raw[i].isspace() else TokenKind.PUNCT
        tokens.append(Token(raw[i:j], kind, len(tokens) + 1, (i, j)))
        i = j
    return Sentence(raw, tuple(tokens), id)


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("itts_lab").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def categorize(token: AnnotatedToken) -> Category:
    kind = token.token.kind
    if kind is TokenKind.PUNCT:
        return Category.PUNCTUATION
    if kind is TokenKind.SPACE:
        return Category.SPACE
    if token.pos is not None:
        if token.pos.upper() in FUNCTION_TAGS:
            return Category.FUNCTION_WORD
        return Category.CONTENT_WORD
    if token.token.text.lower() in stopwords():
        return Category.FUNCTION_WORD
    return Category.CONTENT_WORD


def bare_annotations(sentence: Sentence) -> list[AnnotatedToken]:
    return [AnnotatedToken(t) for t in sentence.tokens]


def _optional_count(rec: dict, key: str, line: int) -> Optional[int]:
    value = rec.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ParseError(f"{key} must be a non-negative integer", line)
    return value


def parse_record(rec: object, line: int = 0) -> AnnotatedSentence:
    if not isinstance(rec, dict):
        raise ParseError("record is not an object", line)
    raw = rec.get("raw")
    toks = rec.get("tokens")
    if not isinstance(raw, str) or not isinstance(toks, list):
        raise ParseError("record needs string 'raw' and list 'tokens'", line)
    sid = rec.get("id", str(line))
    if not isinstance(sid, str):
        raise ParseError("'id' must be a string", line)
    try:
        sentence = tokenize(raw, sid)
    except (EmptyInput, UnsupportedChar) as exc:
        raise ParseError(str(exc), line) from exc
    if len(toks) != sentence.N:
        raise AnnotationMismatch(line, min(len(toks), sentence.N) + 1,
                                 f"({len(toks)} annotations for {sentence.N} tokens)")

    annotated = []
    for tok, t in zip(sentence.tokens, toks):
        if not isinstance(t, dict) or not isinstance(t.get("text"), str):
            raise ParseError(f"token {tok.index} is not an object with 'text'", line)
        if t["text"] != tok.text:
            raise AnnotationMismatch(line, tok.index, f"({t['text']!r} != {tok.text!r})")
        kind = t.get("kind")
        if kind is not None and str(kind).lower() != tok.kind.value:
            raise AnnotationMismatch(line, tok.index, f"(kind {kind!r} != {tok.kind.value!r})")
        pos = t.get("pos")
        if pos is not None and not isinstance(pos, str):
            raise ParseError(f"token {tok.index}: pos must be a string", line)
        dist = _optional_count(t, "tokens_to_parent_phrase_end", line)
        freq = _optional_count(t, "training_frequency", line)
        if tok.kind is not TokenKind.WORD:
            # only punctuation may carry a tag; the counts are word-level
            if tok.kind is TokenKind.SPACE:
                pos = None
            dist = freq = None
        annotated.append(AnnotatedToken(tok, pos, dist, freq))
    return AnnotatedSentence(sentence, annotated)


def iter_annotated_corpus(path) -> Iterator[AnnotatedSentence]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
            yield parse_record(rec, line_no)


def load_annotated_corpus(path) -> list[AnnotatedSentence]:
    """Read a line-delimited JSON corpus; see README for the record schema."""
    return list(iter_annotated_corpus(path))


def to_record(item: AnnotatedSentence) -> dict:
    tokens = []
    for a in item.annotations:
        t = {"text": a.token.text, "kind": a.token.kind.value}
        if a.pos is not None:
            t["pos"] = a.pos
        if a.tokens_to_parent_phrase_end is not None:
            t["tokens_to_parent_phrase_end"] = a.tokens_to_parent_phrase_end
        if a.training_frequency is not None:
            t["training_frequency"] = a.training_frequency
        tokens.append(t)
    return {"id": item.sentence.id, "raw": item.sentence.raw, "tokens": tokens}


def write_annotated_corpus(items, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for item in items:
            fh.write(json.dumps(to_record(item), sort_keys=True) + "\n")
