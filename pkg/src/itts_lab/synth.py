"""Seeded synthetic annotated corpus over a small tagged vocabulary.

Sentences are built from noun, verb and prepositional phrases, so POS tags
and phrase-end distances come from the generator itself rather than from a
tagger or parser.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .corpus import AnnotatedSentence, AnnotatedToken, TokenKind, tokenize

VOCAB = {
    "DET": ["the", "a", "this", "that", "every", "some", "no", "his", "her", "their"],
    "ADJ": ["old", "small", "bright", "quiet", "dark", "green", "strange", "happy", "well-known",
            "enormous", "gentle", "bitter", "cold", "little", "beautiful"],
    "NOUN": ["dog", "yard", "captain", "house", "river", "forest", "widow", "letter", "window", "child",
             "mountain", "garden", "teacher", "village", "evening", "bread", "journey", "kitchen",
             "stranger", "morning", "door", "sister", "road", "lamp"],
    "PROPN": ["Hansel", "Grethel", "Kitty", "Norman", "London", "Mary"],
    "PRON": ["he", "she", "it", "they", "we", "i", "you"],
    "AUX": ["was", "is", "had", "will", "could", "would", "did", "don't", "must"],
    "VERB": ["walked", "said", "wept", "opened", "found", "carried", "watched", "remembered", "followed",
             "concluded", "suppose", "became", "introduced", "answered", "waited"],
    "ADV": ["bitterly", "slowly", "never", "often", "quietly", "suddenly", "again", "there", "soon"],
    "ADP": ["in", "of", "to", "with", "under", "after", "through", "near", "over", "from"],
    "CCONJ": ["and", "but", "or"],
    "SCONJ": ["because", "while", "when", "although"],
    "PART": ["not"],
    "NUM": ["two", "three", "seven", "twenty"],
}

_RANKED = [w for tag in ("DET", "ADP", "PRON", "AUX", "CCONJ", "PART", "SCONJ", "ADV", "VERB", "NOUN",
                         "ADJ", "NUM", "PROPN") for w in VOCAB[tag]]
TRAINING_FREQUENCY = {w: int(60000 / (rank + 1) ** 1.1) + 3 for rank, w in enumerate(_RANKED)}


def _pick(rng, tag):
    words = VOCAB[tag]
    return words[int(rng.integers(len(words)))], tag


def _noun_phrase(rng):
    if rng.random() < 0.2:
        return [_pick(rng, "PRON")]
    if rng.random() < 0.12:
        return [_pick(rng, "PROPN")]
    out = [_pick(rng, "NUM") if rng.random() < 0.08 else _pick(rng, "DET")]
    while rng.random() < 0.35 and len(out) < 3:
        out.append(_pick(rng, "ADJ"))
    out.append(_pick(rng, "NOUN"))
    return out


def _phrases(rng):
    """One clause as a list of phrases, each a list of (word, tag)."""
    phrases = [_noun_phrase(rng)]
    vp = []
    if rng.random() < 0.4:
        vp.append(_pick(rng, "AUX"))
        if rng.random() < 0.15:
            vp.append(_pick(rng, "PART"))
    vp.append(_pick(rng, "VERB"))
    if rng.random() < 0.3:
        vp.append(_pick(rng, "ADV"))
    phrases.append(vp)
    if rng.random() < 0.6:
        phrases.append(_noun_phrase(rng))
    while rng.random() < 0.45:
        phrases.append([_pick(rng, "ADP")] + _noun_phrase(rng))
    return phrases


def generate_sentence(rng: np.random.Generator, sid: str, n_words: Optional[int] = None,
                      min_words: int = 5, max_words: int = 42) -> AnnotatedSentence:
    if n_words is None:
        n_words = int(rng.integers(min_words, max_words + 1))
    words: list[tuple[str, str, int]] = []  # (word, tag, words left in its phrase)
    comma_after: set[int] = set()
    while len(words) < n_words:
        if words:
            comma_after.add(len(words) - 1)
            joiner = "CCONJ" if rng.random() < 0.6 else "SCONJ"
            words.append((*_pick(rng, joiner), 0))
        for phrase in _phrases(rng):
            for j, (w, tag) in enumerate(phrase):
                words.append((w, tag, len(phrase) - 1 - j))
    words = [(w, t, min(d, n_words - 1 - i)) for i, (w, t, d) in enumerate(words[:n_words])]
    comma_after = {i for i in comma_after if i < n_words - 1}

    first = words[0][0]
    if first == "i" or first[0].islower():
        words[0] = (first[0].upper() + first[1:], words[0][1], words[0][2])
    words = [(("I" if w == "i" else w), t, d) for w, t, d in words]
    end = "." if rng.random() < 0.8 else ("?" if rng.random() < 0.5 else "!")

    pieces = []
    for i, (w, _, _) in enumerate(words):
        pieces.append(w)
        if i in comma_after:
            pieces.append(",")
        pieces.append(" " if i < len(words) - 1 else end)
    raw = "".join(pieces)
    sentence = tokenize(raw, sid)

    # re-attach word annotations in token order; phrase distances are in words,
    # converted to tokens by counting the separators in between
    word_iter = iter(words)
    word_tok_index = []
    anns = []
    for tok in sentence.tokens:
        if tok.kind is TokenKind.WORD:
            w, tag, left = next(word_iter)
            word_tok_index.append(tok.index)
            anns.append([tok, tag, left, TRAINING_FREQUENCY.get(w.lower(), TRAINING_FREQUENCY.get(w, 3))])
        elif tok.kind is TokenKind.PUNCT:
            anns.append([tok, "PUNCT", None, None])
        else:
            anns.append([tok, None, None, None])
    for wi, ti in enumerate(word_tok_index):
        left = anns[ti - 1][2]
        end_tok = word_tok_index[wi + left]
        anns[ti - 1][2] = end_tok - ti
    return AnnotatedSentence(sentence, [AnnotatedToken(t, p, d, f) for t, p, d, f in anns])


def generate_corpus(n_sentences: int, seed: int = 0, min_words: int = 5, max_words: int = 42,
                    prefix: str = "syn") -> list[AnnotatedSentence]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    width = max(4, len(str(n_sentences)))
    return [generate_sentence(rng, f"{prefix}{i:0{width}d}", None, min_words, max_words)
            for i in range(n_sentences)]
