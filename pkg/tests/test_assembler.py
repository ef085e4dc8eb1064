import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itts_lab.assembler import (ZERO_POINT_HZ, Alignment, Waveform, assemble_incremental, crossfade_concat,
                                import_waveform, offline_synthesize, overlap_samples, read_alignment, read_wav,
                                render_token, squash, token_frequency, token_samples, toy_synthesize,
                                write_alignment, write_wav)
from itts_lab.corpus import tokenize
from itts_lab.errors import AlignmentError, FormatError, MissingPrefix, OverlapError, ParseError, RateError
from itts_lab.policy import PrefixEncoding, encode_prefix
from itts_lab.synth import generate_corpus


class TestToyDecoder:
    def test_duration(self):
        assert token_samples(2, 22050) == 1984  # (40 + 2 * 25) ms at 22.05 kHz
        assert token_samples(0, 1000) == 40

    def test_zero_vector_pitch(self):
        assert squash(0.0) == 0.5
        assert token_frequency(np.zeros(4)) == ZERO_POINT_HZ == 150.0

    def test_squash_clips(self):
        assert squash(-3.0) == 0.0 and squash(3.0) == 1.0

    def test_ramps(self):
        seg = render_token(3, np.zeros(2))
        assert seg.dtype == np.float32
        assert seg[0] == 0.0
        assert np.max(np.abs(seg)) <= 0.5

    def test_alignment_exact(self, small_config, small_weights):
        s = tokenize("Hi, you.", "x")
        wav, ali = offline_synthesize(s, small_weights, small_config)
        assert sorted(ali.spans) == list(range(1, s.N + 1))
        assert ali.spans[s.N][1] == len(wav)
        for n, (a, b) in ali.spans.items():
            assert b - a == token_samples(len(s.token(n).text))
        ali.validate(len(wav))

    def test_prefix_synthesis(self, small_config, small_weights):
        s = tokenize("Hi, you.", "x")
        vecs = encode_prefix(s, 3, small_weights, small_config)
        wav, ali = toy_synthesize(PrefixEncoding(1, 2, 3, vecs), s)
        assert sorted(ali.spans) == [1, 2, 3]


class TestCrossfade:
    def test_overlap_at_default_rate(self):
        assert overlap_samples(5.0, 22050) == 110

    def test_rounding_half_away(self):
        assert overlap_samples(1.5, 1000) == 2
        assert overlap_samples(2.5, 1000) == 3

    @given(st.integers(0, 400), st.integers(0, 400), st.integers(0, 400))
    @settings(max_examples=200, deadline=None)
    def test_length(self, la, lb, L):
        a = Waveform(np.ones(la), 1000)
        b = Waveform(np.ones(lb), 1000)
        if L > min(la, lb):
            with pytest.raises(OverlapError):
                crossfade_concat(a, b, float(L))
        else:
            assert len(crossfade_concat(a, b, float(L))) == la + lb - L

    @pytest.mark.parametrize("value", [1.0, -0.25, 0.7])
    def test_constant_preserved(self, value):
        a = Waveform(np.full(300, value), 22050)
        b = Waveform(np.full(200, value), 22050)
        out = crossfade_concat(a, b, 5.0)
        assert np.all(out.samples == np.float32(value))

    def test_weights(self):
        a = Waveform(np.ones(4), 1000)
        b = Waveform(np.zeros(4), 1000)
        out = crossfade_concat(a, b, 3.0)
        assert out.samples.tolist() == pytest.approx([1.0, 0.75, 0.5, 0.25, 0.0])

    def test_zero_overlap_concatenates(self):
        a = Waveform(np.arange(3), 100)
        b = Waveform(np.arange(2), 100)
        assert crossfade_concat(a, b, 0.0).samples.tolist() == [0, 1, 2, 0, 1]

    def test_equal_power(self):
        a = Waveform(np.ones(10), 1000)
        b = Waveform(np.ones(10), 1000)
        mid = crossfade_concat(a, b, 4.0, law="equal_power").samples[6:10]
        assert np.all(mid >= 1.0 - 1e-6)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_linear_stays_in_range(self, seed):
        rng = np.random.default_rng(seed)
        a = Waveform(rng.uniform(-1, 1, 300), 22050)
        b = Waveform(rng.choice([-1.0, 1.0], 300), 22050)
        out = crossfade_concat(a, b, 5.0)
        assert np.max(np.abs(out.samples)) <= 1.0

    def test_rate_mismatch(self):
        with pytest.raises(RateError):
            crossfade_concat(Waveform(np.ones(10), 100), Waveform(np.ones(10), 200))

    def test_negative(self):
        with pytest.raises(OverlapError):
            crossfade_concat(Waveform(np.ones(10), 1000), Waveform(np.ones(10), 1000), -2.0)


class TestAssembly:
    def test_saturation_matches_offline(self, small_config, small_weights):
        for item in generate_corpus(5, seed=21, max_words=8):
            s = item.sentence
            res = assemble_incremental(s, s.N - 1, small_weights, small_config, crossfade_ms=0.0)
            wav, _ = offline_synthesize(s, small_weights, small_config)
            assert np.array_equal(res.waveform.samples, wav.samples)

    def test_source_prefixes_k1(self, small_config, small_weights):
        s = tokenize("The dog is in the yard.", "t")
        res = assemble_incremental(s, 1, small_weights, small_config)
        assert [st.source_prefix for st in res.steps] == [min(n + 1, 12) for n in range(1, 13)]

    def test_output_length_with_crossfade(self, small_config, small_weights):
        s = tokenize("Hi, you.", "x")
        res = assemble_incremental(s, 0, small_weights, small_config, crossfade_ms=5.0)
        total = sum(token_samples(len(t.text)) for t in s.tokens)
        assert len(res.waveform) == total - (s.N - 1) * 110
        assert res.alignment.spans[s.N][1] == len(res.waveform)

    def test_single_token(self, small_config, small_weights):
        s = tokenize("Hi", "x")
        res = assemble_incremental(s, 0, small_weights, small_config, crossfade_ms=5.0)
        assert len(res.waveform) == token_samples(2)

    def test_report(self, tmp_path, small_config, small_weights):
        s = tokenize("Hi you", "x")
        res = assemble_incremental(s, 1, small_weights, small_config)
        res.write_report(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "n,source_prefix,cut_start,cut_end,out_start,out_end" and len(lines) == 4

    def test_imported(self):
        s = tokenize("a b", "x")
        rate = 1000
        imported = {}
        for c in (2, 3):
            spans = {j: ((j - 1) * 10, j * 10) for j in range(1, c + 1)}
            imported[c] = (Waveform(np.full(10 * c, float(c)), rate), Alignment(spans))
        res = assemble_incremental(s, 1, imported=imported, crossfade_ms=0.0, rate=rate)
        assert res.waveform.samples.tolist() == [2.0] * 10 + [3.0] * 20

    def test_imported_missing_prefix(self):
        s = tokenize("a b", "x")
        with pytest.raises(MissingPrefix):
            assemble_incremental(s, 0, imported={}, crossfade_ms=0.0)

    def test_needs_weights(self):
        with pytest.raises(ValueError):
            assemble_incremental(tokenize("a", "x"), 0)


class TestFiles:
    def test_wav_roundtrip(self, tmp_path):
        samples = np.array([0.0, 0.5, -0.5, 1.0, -1.0], dtype=np.float32)
        write_wav(tmp_path / "a.wav", Waveform(samples, 16000))
        back = read_wav(tmp_path / "a.wav")
        assert back.sample_rate == 16000
        np.testing.assert_allclose(back.samples, samples, atol=1 / 32767)

    def test_not_a_wav(self, tmp_path):
        (tmp_path / "x.wav").write_bytes(b"RIFFjunk")
        with pytest.raises(FormatError):
            read_wav(tmp_path / "x.wav")

    def test_alignment_roundtrip(self, tmp_path):
        ali = Alignment({1: (0, 10), 2: (10, 25)})
        write_alignment(tmp_path / "a.csv", ali)
        assert read_alignment(tmp_path / "a.csv").spans == ali.spans

    def test_alignment_bounds(self, tmp_path):
        write_wav(tmp_path / "a.wav", Waveform(np.zeros(20), 1000))
        write_alignment(tmp_path / "a.csv", Alignment({1: (0, 10), 2: (10, 25)}))
        with pytest.raises(AlignmentError):
            import_waveform(tmp_path / "a.wav", tmp_path / "a.csv")

    def test_alignment_overlap(self):
        with pytest.raises(AlignmentError):
            Alignment({1: (0, 10), 2: (5, 12)}).validate(20)

    def test_alignment_bad_header(self, tmp_path):
        (tmp_path / "a.csv").write_text("i,s,e\n")
        with pytest.raises(ParseError):
            read_alignment(tmp_path / "a.csv")
