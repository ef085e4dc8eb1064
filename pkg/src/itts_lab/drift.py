"""Representation drift: cosine distance between incremental and full-context token vectors."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import AnnotatedToken, Category, categorize
from .errors import DegenerateVector, EmptyData, ParseError, ShapeError
from .policy import EncodingTrace, PrefixBank
from .stats import TTestResult, paired_ttest

CATEGORIES = (Category.PUNCTUATION, Category.SPACE, Category.FUNCTION_WORD, Category.CONTENT_WORD)
DRIFT_COLUMNS = ("sentence_id", "n", "k", "category", "d")


@dataclass(frozen=True)
class DriftRecord:
    sentence_id: str
    n: int
    k: int
    d: float
    category: Category


def cosine_distance(a, b) -> float:
    """1 - cos(a, b), computed in float64 and clipped to [0, 2]."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError("vector", a.shape, b.shape)
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVector()
    if np.array_equal(a, b):
        return 0.0
    cos = float(np.dot(a, b)) / (na * nb)
    return min(2.0, max(0.0, 1.0 - cos))


def _distance(a, b, context) -> float:
    try:
        return cosine_distance(a, b)
    except DegenerateVector as exc:
        raise DegenerateVector(context=context) from exc


def compute_drift(trace: EncodingTrace, annotations: Sequence[AnnotatedToken]) -> list[DriftRecord]:
    N = len(trace.full)
    if len(annotations) != N:
        raise ValueError(f"{len(annotations)} annotations for a {N}-token trace")
    out = []
    for n in range(1, N + 1):
        d = _distance(trace.incremental(n).z, trace.full[n - 1].z,
                      (trace.sentence_id, n, trace.k))
        out.append(DriftRecord(trace.sentence_id, n, trace.k, d, categorize(annotations[n - 1])))
    return out


def drift_from_bank(bank: PrefixBank, annotations: Sequence[AnnotatedToken], k_max: int) -> list[DriftRecord]:
    """All records for k = 0..k_max, ordered by (k, n); same values as :func:`compute_drift`."""
    sid = bank.sentence.id
    cats = [categorize(a) for a in annotations]
    out = []
    for k in range(k_max + 1):
        for n in range(1, bank.sentence.N + 1):
            d = _distance(bank.vector(n, k), bank.full[n - 1], (sid, n, k))
            out.append(DriftRecord(sid, n, k, d, cats[n - 1]))
    return out


@dataclass
class Stat:
    mean: float
    std: float
    count: int


def _stat(values: list[float]) -> Stat:
    m = len(values)
    mean = math.fsum(values) / m
    # population sd: these are error bars over the data shown
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / m)
    return Stat(mean, std, m)


@dataclass
class DriftSummary:
    k_max: int
    by_category: dict[tuple[int, Category], Stat] = field(default_factory=dict)
    overall: dict[int, Stat] = field(default_factory=dict)
    closeness: dict[int, float] = field(default_factory=dict)
    degenerate: bool = False

    def rows(self):
        for k in range(self.k_max + 1):
            if k in self.overall:
                s = self.overall[k]
                yield k, "all", s.mean, s.std, s.count, self.closeness.get(k, float("nan"))
            for cat in CATEGORIES:
                s = self.by_category.get((k, cat))
                if s is not None:
                    yield k, cat.value, s.mean, s.std, s.count, ""


def summarize(records: Iterable[DriftRecord], k_max: int) -> DriftSummary:
    """Flat means and population sds per lookahead and per (lookahead, category).

    Closeness r(k) = 1 - mean(k) / mean(0). A corpus with zero drift at k=0
    reports r=1 for k > 0 and sets ``degenerate``.
    """
    by_cat = defaultdict(list)
    by_k = defaultdict(list)
    any_rec = False
    for r in records:
        any_rec = True
        if r.k > k_max:
            continue
        by_cat[(r.k, r.category)].append(r.d)
        by_k[r.k].append(r.d)
    if not any_rec:
        raise EmptyData("no drift records to summarize")

    summary = DriftSummary(k_max)
    for key in sorted(by_cat, key=lambda kc: (kc[0], CATEGORIES.index(kc[1]))):
        summary.by_category[key] = _stat(by_cat[key])
    for k in sorted(by_k):
        summary.overall[k] = _stat(by_k[k])
    base = summary.overall.get(0)
    for k in summary.overall:
        if base is None:
            continue
        if base.mean == 0.0:
            summary.degenerate = True
            summary.closeness[k] = 0.0 if k == 0 else 1.0
        else:
            summary.closeness[k] = 1.0 - summary.overall[k].mean / base.mean
    return summary


@dataclass(frozen=True)
class LookaheadTest:
    k: int
    k_next: int
    result: TTestResult


def consecutive_lookahead_tests(records: Iterable[DriftRecord], k_max: int) -> list[LookaheadTest]:
    """Paired t-tests of d(n,k) against d(n,k+1) over identical (sentence, n) units."""
    table: dict[int, dict[tuple[str, int], float]] = defaultdict(dict)
    for r in records:
        table[r.k][(r.sentence_id, r.n)] = r.d
    if not table:
        raise EmptyData("no drift records")
    out = []
    for k in range(k_max):
        a, b = table.get(k, {}), table.get(k + 1, {})
        units = sorted(a.keys() & b.keys())
        if len(units) < 2:
            raise EmptyData(f"fewer than two paired units for k={k} vs k={k + 1}")
        res = paired_ttest([a[u] for u in units], [b[u] for u in units])
        out.append(LookaheadTest(k, k + 1, res))
    return out


def write_drift_csv(records: Iterable[DriftRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DRIFT_COLUMNS)
        for r in records:
            w.writerow([r.sentence_id, r.n, r.k, r.category.value, repr(r.d)])


def read_drift_csv(path) -> list[DriftRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != DRIFT_COLUMNS:
            raise ParseError(f"{path}: expected header {','.join(DRIFT_COLUMNS)}")
        for line, row in enumerate(reader, start=2):
            try:
                out.append(DriftRecord(row["sentence_id"], int(row["n"]), int(row["k"]),
                                       float(row["d"]), Category(row["category"])))
            except (ValueError, KeyError) as exc:
                raise ParseError(str(exc), line) from exc
    return out


def write_summary_csv(summary: DriftSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "category", "mean", "std", "count", "closeness"])
        for k, cat, mean, std, count, r in summary.rows():
            w.writerow([k, cat, repr(mean), repr(std), count, repr(r) if r != "" else ""])
        if summary.degenerate:
            w.writerow(["#", "degenerate: mean drift at k=0 is zero", "", "", "", ""])


def write_tests_csv(tests: Sequence[LookaheadTest], path, alpha: float = 0.05) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "k_next", "t", "df", "p", "mean_diff", "degenerate", f"significant_at_{alpha:g}"])
        for lt in tests:
            r = lt.result
            w.writerow([lt.k, lt.k_next, repr(r.t), r.df, repr(r.p), repr(r.mean_diff),
                        int(r.degenerate), int(r.significant(alpha))])


def read_summary_csv(path) -> dict[tuple[int, str], dict]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["k"].startswith("#"):
                continue
            out[(int(row["k"]), row["category"])] = row
    return out


def mean_drift_by_k(records: Iterable[DriftRecord]) -> dict[int, float]:
    by_k = defaultdict(list)
    for r in records:
        by_k[r.k].append(r.d)
    return {k: math.fsum(v) / len(v) for k, v in sorted(by_k.items())}
