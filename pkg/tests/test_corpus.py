import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itts_lab.corpus import (AnnotatedToken, Category, TokenKind, bare_annotations, categorize,
                             load_annotated_corpus, parse_record, stopwords, to_record, tokenize,
                             write_annotated_corpus)
from itts_lab.errors import AnnotationMismatch, EmptyInput, ParseError, UnsupportedChar
from itts_lab.synth import generate_corpus
from oracles import straight_line

TABLE_SENTENCE = "The dog is in the yard."


class TestTokenize:
    def test_table_sentence(self):
        s = tokenize(TABLE_SENTENCE)
        assert [t.text for t in s.tokens] == ["The", " ", "dog", " ", "is", " ", "in", " ", "the", " ",
                                              "yard", "."]
        assert s.N == 12
        assert [t.kind for t in s.tokens[:2]] == [TokenKind.WORD, TokenKind.SPACE]
        assert s.tokens[-1].kind is TokenKind.PUNCT

    def test_indices_and_spans(self):
        s = tokenize("Hi, you.")
        assert [t.index for t in s.tokens] == [1, 2, 3, 4, 5]
        assert s.token(3).char_span == (3, 4)
        assert s.token(4).first_char == 4 and s.token(4).last_char == 6

    def test_token_out_of_range(self):
        s = tokenize("Hi.")
        with pytest.raises(IndexError):
            s.token(0)
        with pytest.raises(IndexError):
            s.token(3)

    def test_single_word(self):
        s = tokenize("Hi")
        assert s.N == 1

    def test_joiners_inside_words(self):
        assert [t.text for t in tokenize("don't well-known").tokens] == ["don't", " ", "well-known"]

    def test_joiners_not_flanked_by_letters(self):
        assert [t.text for t in tokenize("'a - b'").tokens] == ["'", "a", " ", "-", " ", "b", "'"]

    def test_each_whitespace_char_is_a_token(self):
        s = tokenize("a  b")
        assert [t.kind for t in s.tokens] == [TokenKind.WORD, TokenKind.SPACE, TokenKind.SPACE, TokenKind.WORD]

    def test_empty(self):
        with pytest.raises(EmptyInput):
            tokenize("")

    def test_unsupported_char_position(self):
        with pytest.raises(UnsupportedChar) as err:
            tokenize("café")
        assert err.value.position == 3

    @given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), min_size=1, max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_roundtrip_and_regex_oracle(self, raw):
        s = tokenize(raw)
        assert "".join(t.text for t in s.tokens) == raw
        assert [(t.text, *t.char_span) for t in s.tokens] == straight_line.tokens(raw)
        for a, b in zip(s.tokens, s.tokens[1:]):
            assert a.char_span[1] == b.char_span[0]


class TestCategorize:
    def test_by_kind(self):
        s = tokenize("Hi, you.")
        cats = [categorize(a) for a in bare_annotations(s)]
        assert cats[1] is Category.PUNCTUATION
        assert cats[2] is Category.SPACE

    def test_by_pos(self):
        tok = tokenize("dog").tokens[0]
        assert categorize(AnnotatedToken(tok, "DET")) is Category.FUNCTION_WORD
        assert categorize(AnnotatedToken(tok, "NOUN")) is Category.CONTENT_WORD

    def test_stopword_fallback(self):
        s = tokenize("the yard")
        cats = [categorize(a) for a in bare_annotations(s)]
        assert cats[0] is Category.FUNCTION_WORD
        assert cats[2] is Category.CONTENT_WORD

    def test_stopword_list_loaded(self):
        words = stopwords()
        assert {"the", "in", "of", "and"} <= words
        assert "yard" not in words


def _record(raw="Hi, you.", **overrides):
    s = tokenize(raw)
    rec = {"id": "s1", "raw": raw, "tokens": [{"text": t.text, "kind": t.kind.value} for t in s.tokens]}
    rec.update(overrides)
    return rec


class TestParse:
    def test_minimal(self):
        item = parse_record(_record())
        assert item.id == "s1"
        assert len(item.annotations) == 5

    def test_annotations_kept_on_words_only(self):
        rec = _record()
        rec["tokens"][0].update(pos="INTJ", tokens_to_parent_phrase_end=0, training_frequency=4)
        rec["tokens"][2].update(pos="SPACE", training_frequency=9)
        rec["tokens"][1].update(pos="PUNCT", tokens_to_parent_phrase_end=3)
        item = parse_record(rec)
        a = item.annotations
        assert (a[0].pos, a[0].tokens_to_parent_phrase_end, a[0].training_frequency) == ("INTJ", 0, 4)
        assert a[2].pos is None and a[2].training_frequency is None
        assert a[1].pos == "PUNCT" and a[1].tokens_to_parent_phrase_end is None

    def test_kind_case_insensitive(self):
        rec = _record()
        rec["tokens"][0]["kind"] = "WORD"
        parse_record(rec)

    def test_count_mismatch(self):
        rec = _record()
        rec["tokens"].pop()
        with pytest.raises(AnnotationMismatch):
            parse_record(rec, 7)

    def test_text_mismatch(self):
        rec = _record()
        rec["tokens"][0]["text"] = "Ho"
        with pytest.raises(AnnotationMismatch) as err:
            parse_record(rec)
        assert err.value.index == 1

    @pytest.mark.parametrize("bad", [[], {"raw": 3, "tokens": []}, {"raw": "x"}])
    def test_malformed(self, bad):
        with pytest.raises(ParseError):
            parse_record(bad)

    def test_negative_count(self):
        rec = _record()
        rec["tokens"][0]["training_frequency"] = -1
        with pytest.raises(ParseError):
            parse_record(rec)

    def test_file_roundtrip(self, tmp_path):
        items = generate_corpus(5, seed=2)
        path = tmp_path / "c.jsonl"
        write_annotated_corpus(items, path)
        back = load_annotated_corpus(path)
        assert [to_record(b) for b in back] == [to_record(a) for a in items]

    def test_bad_json_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(_record()) + "\n{oops\n")
        with pytest.raises(ParseError) as err:
            load_annotated_corpus(path)
        assert err.value.line == 2
