"""MUSHRA rating ingestion, hidden-reference screening and paired comparisons."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import DuplicateError, InsufficientData, MissingReference, ParseError, RangeError
from .stats import TTestResult, paired_ttest

CONDITIONS = ("k1", "k2", "k4", "k6", "ref")
REFERENCE = "ref"
DEFAULT_PAIRS = (("k1", "k2"), ("k2", "k4"), ("k4", "k6"), ("k6", "ref"))
RATING_COLUMNS = ("participant_id", "sentence_id", "condition", "score")


@dataclass
class RatingSet:
    scores: dict[tuple[str, str, str], float]  # (participant, sentence, condition) -> score
    participants: list[str] = field(default_factory=list)
    items: list[tuple[str, str]] = field(default_factory=list)  # (sentence, condition)
    missing: list[tuple[str, str, str]] = field(default_factory=list)

    @classmethod
    def from_scores(cls, scores: dict[tuple[str, str, str], float]) -> "RatingSet":
        participants = sorted({p for p, _, _ in scores})
        items = sorted({(s, c) for _, s, c in scores}, key=lambda sc: (sc[0], _cond_order(sc[1])))
        missing = [(p, s, c) for p in participants for s, c in items if (p, s, c) not in scores]
        return cls(dict(scores), participants, items, missing)

    @property
    def complete(self) -> bool:
        return not self.missing

    def restrict(self, participants: Sequence[str]) -> "RatingSet":
        keep = set(participants)
        return RatingSet.from_scores({key: v for key, v in self.scores.items() if key[0] in keep})


def _cond_order(c: str) -> tuple:
    return (CONDITIONS.index(c), c) if c in CONDITIONS else (len(CONDITIONS), c)


def load_ratings(path) -> RatingSet:
    """Read the ratings CSV. Missing cells are listed in ``RatingSet.missing``, not fatal."""
    scores = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RATING_COLUMNS:
            raise ParseError(f"{path}: expected header {','.join(RATING_COLUMNS)}")
        for row_no, row in enumerate(reader, start=2):
            cond = row["condition"].strip()
            if cond not in CONDITIONS:
                raise ParseError(f"unknown condition {cond!r}", row_no)
            try:
                score = float(row["score"])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad score {row['score']!r}", row_no) from exc
            if not (0.0 <= score <= 100.0):
                raise RangeError(row_no, score)
            key = (row["participant_id"].strip(), row["sentence_id"].strip(), cond)
            if key in scores:
                raise DuplicateError(f"row {row_no}: duplicate rating for {key}")
            scores[key] = score
    return RatingSet.from_scores(scores)


def write_ratings(path, ratings: RatingSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATING_COLUMNS)
        for (p, s, c), v in sorted(ratings.scores.items(), key=lambda kv: (kv[0][0], kv[0][1], _cond_order(kv[0][2]))):
            w.writerow([p, s, c, repr(v)])


@dataclass(frozen=True)
class Exclusion:
    participant: str
    reference_mean: float
    reason: str


def reference_means(ratings: RatingSet) -> dict[str, float]:
    per = defaultdict(list)
    for (p, _, c), v in ratings.scores.items():
        if c == REFERENCE:
            per[p].append(v)
    return {p: math.fsum(v) / len(v) for p, v in per.items()}


def apply_exclusion(ratings: RatingSet, threshold: float = 90.0) -> tuple[RatingSet, list[Exclusion]]:
    """Drop participants whose mean hidden-reference score is below ``threshold`` (strict)."""
    means = reference_means(ratings)
    if not means:
        raise MissingReference("no hidden-reference ratings present")
    excluded = []
    for p in ratings.participants:
        m = means.get(p)
        if m is None:
            excluded.append(Exclusion(p, float("nan"), "no hidden-reference ratings"))
        elif m < threshold:
            excluded.append(Exclusion(p, m, f"hidden-reference mean {m:.2f} < {threshold:g}"))
    gone = {e.participant for e in excluded}
    kept = [p for p in ratings.participants if p not in gone]
    return ratings.restrict(kept), excluded


@dataclass
class ConditionStat:
    mean: float
    std: float
    count: int


@dataclass
class PairTest:
    a: str
    b: str
    result: TTestResult
    units: int


@dataclass
class MushraSummary:
    conditions: dict[str, ConditionStat]
    tests: list[PairTest]
    excluded: list[Exclusion] = field(default_factory=list)
    threshold: Optional[float] = None


def _participant_means(ratings: RatingSet, a: str, b: str) -> tuple[list[float], list[float]]:
    """Per-participant means over the sentences rated under both conditions."""
    xs, ys = [], []
    for p in ratings.participants:
        sents = sorted({s for (pp, s, c) in ratings.scores if pp == p and c == a}
                       & {s for (pp, s, c) in ratings.scores if pp == p and c == b})
        if not sents:
            continue
        xs.append(math.fsum(ratings.scores[(p, s, a)] for s in sents) / len(sents))
        ys.append(math.fsum(ratings.scores[(p, s, b)] for s in sents) / len(sents))
    return xs, ys


def summarize_mushra(ratings: RatingSet, pairs: Sequence[tuple[str, str]] = DEFAULT_PAIRS,
                     excluded: Sequence[Exclusion] = (), threshold: Optional[float] = None) -> MushraSummary:
    """Per-condition mean and sample sd over all cells, and paired t-tests with participants as units."""
    if len(ratings.participants) < 2:
        raise InsufficientData(f"{len(ratings.participants)} retained participant(s); need at least 2")
    by_cond = defaultdict(list)
    for (_, _, c), v in sorted(ratings.scores.items()):
        by_cond[c].append(v)
    stats = {}
    for c in sorted(by_cond, key=_cond_order):
        vals = by_cond[c]
        mean = math.fsum(vals) / len(vals)
        sd = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
        stats[c] = ConditionStat(mean, sd, len(vals))
    tests = []
    for a, b in pairs:
        if a not in by_cond or b not in by_cond:
            continue
        xs, ys = _participant_means(ratings, a, b)
        if len(xs) < 2:
            raise InsufficientData(f"fewer than two participants rated both {a} and {b}")
        tests.append(PairTest(a, b, paired_ttest(xs, ys), len(xs)))
    return MushraSummary(stats, tests, list(excluded), threshold)


def write_summary(path, summary: MushraSummary, alpha: float = 0.05) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["section", "a", "b", "mean", "std", "count", "t", "df", "p", "significant", "note"])
        for c, s in summary.conditions.items():
            w.writerow(["condition", c, "", repr(s.mean), repr(s.std), s.count, "", "", "", "", ""])
        for t in summary.tests:
            r = t.result
            w.writerow(["ttest", t.a, t.b, repr(r.mean_diff), "", t.units, repr(r.t), r.df, repr(r.p),
                        int(r.significant(alpha)), "degenerate" if r.degenerate else ""])
        for e in summary.excluded:
            w.writerow(["excluded", e.participant, "", repr(e.reference_mean), "", "", "", "", "", "", e.reason])
        w.writerow(["setting", "threshold", "", "" if summary.threshold is None else repr(summary.threshold),
                    "", "", "", "", "", "", "pairing unit: participant mean over shared sentences"])
