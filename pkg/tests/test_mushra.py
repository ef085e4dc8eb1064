import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itts_lab.errors import DuplicateError, InsufficientData, MissingReference, ParseError, RangeError
from itts_lab.mushra import (CONDITIONS, RatingSet, apply_exclusion, load_ratings, summarize_mushra,
                             write_ratings, write_summary)

HEADER = "participant_id,sentence_id,condition,score\n"


def synthetic(n_participants=18, means=(20, 40, 60, 80, 95), sd=2.0, n_sentences=4, seed=0, ref_override=None):
    rng = np.random.default_rng(seed)
    scores = {}
    for i in range(n_participants):
        p = f"p{i:02d}"
        for s in range(n_sentences):
            for c, m in zip(CONDITIONS, means):
                if c == "ref" and ref_override and p in ref_override:
                    m = ref_override[p]
                scores[(p, f"s{s}", c)] = float(np.clip(rng.normal(m, sd), 0, 100))
    return RatingSet.from_scores(scores)


class TestLoad:
    def test_roundtrip(self, tmp_path):
        r = synthetic(3, n_sentences=2)
        write_ratings(tmp_path / "r.csv", r)
        back = load_ratings(tmp_path / "r.csv")
        assert back.scores == r.scores and back.complete

    def test_out_of_range(self, tmp_path):
        (tmp_path / "r.csv").write_text(HEADER + "a,s,k1,50\na,s,k2,101\n")
        with pytest.raises(RangeError) as err:
            load_ratings(tmp_path / "r.csv")
        assert err.value.row == 3 and err.value.value == 101.0

    def test_duplicate(self, tmp_path):
        (tmp_path / "r.csv").write_text(HEADER + "a,s,k1,50\na,s,k1,60\n")
        with pytest.raises(DuplicateError):
            load_ratings(tmp_path / "r.csv")

    @pytest.mark.parametrize("body", ["a,s,k3,50\n", "a,s,k1,abc\n"])
    def test_bad_rows(self, tmp_path, body):
        (tmp_path / "r.csv").write_text(HEADER + body)
        with pytest.raises(ParseError):
            load_ratings(tmp_path / "r.csv")

    def test_bad_header(self, tmp_path):
        (tmp_path / "r.csv").write_text("p,s,c,score\n")
        with pytest.raises(ParseError):
            load_ratings(tmp_path / "r.csv")

    def test_missing_cells_flagged(self, tmp_path):
        (tmp_path / "r.csv").write_text(HEADER + "a,s,k1,50\na,s,ref,99\nb,s,k1,40\n")
        r = load_ratings(tmp_path / "r.csv")
        assert r.missing == [("b", "s", "ref")] and not r.complete


class TestExclusion:
    def test_low_reference_excluded(self):
        r = synthetic(4, ref_override={"p01": 45.0}, sd=0.0)
        kept, excluded = apply_exclusion(r)
        assert [e.participant for e in excluded] == ["p01"]
        assert excluded[0].reference_mean == 45.0
        assert "p01" not in kept.participants

    def test_threshold_is_strict(self):
        r = synthetic(3, ref_override={"p00": 90.0}, sd=0.0)
        _, excluded = apply_exclusion(r, 90.0)
        assert excluded == []

    def test_idempotent(self):
        r = synthetic(6, ref_override={"p02": 70.0, "p04": 80.0}, seed=3)
        kept, ex1 = apply_exclusion(r)
        again, ex2 = apply_exclusion(kept)
        assert len(ex1) == 2 and ex2 == [] and again.scores == kept.scores

    def test_no_reference(self):
        r = RatingSet.from_scores({("a", "s", "k1"): 10.0, ("b", "s", "k1"): 20.0})
        with pytest.raises(MissingReference):
            apply_exclusion(r)

    def test_participant_without_reference(self):
        r = RatingSet.from_scores({("a", "s", "ref"): 99.0, ("b", "s", "k1"): 20.0})
        _, excluded = apply_exclusion(r)
        assert [e.participant for e in excluded] == ["b"]


class TestSummary:
    def test_identical_scores_degenerate(self):
        scores = {(p, s, c): 50.0 for p in "abc" for s in ("s1", "s2") for c in ("k1", "k2")}
        summ = summarize_mushra(RatingSet.from_scores(scores), [("k1", "k2")])
        r = summ.tests[0].result
        assert (r.t, r.p) == (0.0, 1.0)

    def test_single_participant(self):
        r = synthetic(1)
        with pytest.raises(InsufficientData):
            summarize_mushra(r)

    def test_condition_stats(self):
        scores = {("a", "s", "k1"): 10.0, ("b", "s", "k1"): 20.0, ("a", "s", "k2"): 30.0, ("b", "s", "k2"): 30.0}
        summ = summarize_mushra(RatingSet.from_scores(scores), [("k1", "k2")])
        assert summ.conditions["k1"].mean == 15.0
        assert summ.conditions["k1"].std == pytest.approx(np.std([10, 20], ddof=1))
        assert summ.tests[0].units == 2

    def test_pairs_only_shared_sentences(self):
        scores = {("a", "s1", "k1"): 10.0, ("a", "s1", "k2"): 20.0, ("a", "s2", "k1"): 90.0,
                  ("b", "s1", "k1"): 12.0, ("b", "s1", "k2"): 25.0, ("b", "s2", "k1"): 95.0}
        summ = summarize_mushra(RatingSet.from_scores(scores), [("k1", "k2")])
        assert summ.tests[0].result.mean_diff == pytest.approx(((10 - 20) + (12 - 25)) / 2)

    @given(st.permutations(list(range(40))))
    @settings(max_examples=10, deadline=None)
    def test_row_order_invariant(self, order):
        r = synthetic(5, n_sentences=2, seed=9)
        items = list(r.scores.items())
        shuffled = RatingSet.from_scores(dict(items[i] for i in order + list(range(40, len(items)))))
        a, b = summarize_mushra(r), summarize_mushra(shuffled)
        assert [t.result for t in a.tests] == [t.result for t in b.tests]
        assert a.conditions == b.conditions

    def test_all_consecutive_pairs_significant(self):
        summ = summarize_mushra(synthetic(18, means=(20, 40, 60, 80, 95), seed=1))
        assert [(t.a, t.b) for t in summ.tests] == [("k1", "k2"), ("k2", "k4"), ("k4", "k6"), ("k6", "ref")]
        assert all(t.result.significant(0.05) for t in summ.tests)

    def test_write_summary(self, tmp_path):
        r = synthetic(5, ref_override={"p03": 50.0})
        kept, excluded = apply_exclusion(r)
        write_summary(tmp_path / "m.csv", summarize_mushra(kept, excluded=excluded, threshold=90.0))
        sections = [line.split(",")[0] for line in (tmp_path / "m.csv").read_text().splitlines()[1:]]
        assert sections.count("condition") == 5 and sections.count("ttest") == 4
        assert sections.count("excluded") == 1 and sections[-1] == "setting"
