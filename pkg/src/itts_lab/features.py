"""Per-token text features and the random-forest importance pipeline that explains drift."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import AnnotatedSentence, AnnotatedToken, TokenKind
from .drift import DriftRecord
from .errors import EvalError, TrainingError
from .forest import (ForestParams, fit_forest, group_permutation_importance, has_splits,
                     permutation_importance, probe_eliminate)
from .seeding import derive_seed

SENTINEL = -1
DEFAULT_BANDS = (0.01, 0.05, 0.15)


def pos_label(a: AnnotatedToken) -> str:
    """Category used for POS features; tokens without a tag get a kind-derived pseudo tag."""
    if a.pos:
        return a.pos.upper()
    return {TokenKind.SPACE: "_SPACE", TokenKind.PUNCT: "_PUNCT"}.get(a.token.kind, "_UNK")


@dataclass
class FeatureRow:
    sentence_id: str
    n: int
    token_length: int
    pos: str
    training_frequency: int  # SENTINEL when absent
    relative_position: float
    penultimate: bool
    followed_by_punctuation: bool
    distance_to_punctuation: int
    distance_to_parent_phrase_end: int  # SENTINEL when absent
    pos_prev: list[Optional[str]]  # index m-1; None past the sentence start
    pos_next: list[Optional[str]]
    word_length_prev: list[int]  # SENTINEL past the sentence start
    word_length_next: list[int]
    target: float = float("nan")

    @property
    def M(self) -> int:
        return len(self.pos_prev)


def extract_features(sentence: AnnotatedSentence, n: int, target: float = float("nan"), M: int = 4
                     ) -> FeatureRow:
    anns = sentence.annotations
    N = len(anns)
    if not 1 <= n <= N:
        raise IndexError(f"token index {n} outside 1..{N}")
    a = anns[n - 1]
    tok = a.token

    next_punct = next((j for j in range(n + 1, N + 1) if anns[j - 1].token.kind is TokenKind.PUNCT), None)
    dist_punct = (next_punct - n - 1) if next_punct is not None else N - n

    def neighbour(j):
        if 1 <= j <= N:
            b = anns[j - 1]
            return pos_label(b), len(b.token.text)
        return None, SENTINEL

    prev = [neighbour(n - m) for m in range(1, M + 1)]
    nxt = [neighbour(n + m) for m in range(1, M + 1)]
    return FeatureRow(
        sentence_id=sentence.id,
        n=n,
        token_length=len(tok.text),
        pos=pos_label(a),
        training_frequency=a.training_frequency if a.training_frequency is not None else SENTINEL,
        relative_position=n / N,
        penultimate=(n == N - 1),
        followed_by_punctuation=(n < N and anns[n].token.kind is TokenKind.PUNCT),
        distance_to_punctuation=dist_punct,
        distance_to_parent_phrase_end=(a.tokens_to_parent_phrase_end
                                       if a.tokens_to_parent_phrase_end is not None else SENTINEL),
        pos_prev=[p for p, _ in prev],
        pos_next=[p for p, _ in nxt],
        word_length_prev=[w for _, w in prev],
        word_length_next=[w for _, w in nxt],
        target=target,
    )


@dataclass
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    names: list[str]
    groups: dict[str, list[int]]  # table-level feature -> matrix columns
    sentence_ids: list[str]
    token_index: list[int]

    def subset_rows(self, mask) -> "FeatureMatrix":
        idx = np.flatnonzero(mask)
        return FeatureMatrix(self.X[idx], self.y[idx], self.names, self.groups,
                             [self.sentence_ids[i] for i in idx], [self.token_index[i] for i in idx])

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]

    def with_columns(self, extra: np.ndarray, names: Sequence[str]) -> "FeatureMatrix":
        extra = np.asarray(extra, dtype=np.float64).reshape(self.X.shape[0], -1)
        start = self.X.shape[1]
        groups = dict(self.groups)
        for i, nm in enumerate(names):
            groups[nm] = [start + i]
        return FeatureMatrix(np.column_stack([self.X, extra]), self.y, self.names + list(names), groups,
                             self.sentence_ids, self.token_index)


def build_matrix(rows: Sequence[FeatureRow], tags: Optional[Sequence[str]] = None) -> FeatureMatrix:
    """One-hot expand categorical features; absent values become SENTINEL plus a validity column."""
    if not rows:
        raise TrainingError("no feature rows")
    M = rows[0].M
    if tags is None:
        seen = set()
        for r in rows:
            seen.add(r.pos)
            seen.update(p for p in r.pos_prev + r.pos_next if p is not None)
        tags = sorted(seen)
    tags = list(tags)

    names: list[str] = []
    groups: dict[str, list[int]] = {}

    def add(group, *cols):
        groups.setdefault(group, [])
        for c in cols:
            groups[group].append(len(names))
            names.append(c)

    add("token_length", "token_length")
    add("pos", *[f"pos={t}" for t in tags])
    add("training_frequency", "training_frequency", "training_frequency_valid")
    add("relative_position", "relative_position")
    add("penultimate", "penultimate")
    add("followed_by_punctuation", "followed_by_punctuation")
    add("distance_to_punctuation", "distance_to_punctuation")
    add("distance_to_parent_phrase_end", "distance_to_parent_phrase_end", "distance_to_parent_phrase_end_valid")
    for side in ("prev", "next"):
        for m in range(1, M + 1):
            add(f"word_length_{side}_{m}", f"word_length_{side}_{m}", f"{side}_{m}_valid")
            add(f"pos_{side}_{m}", *[f"pos_{side}_{m}={t}" for t in tags])

    col = {nm: i for i, nm in enumerate(names)}
    X = np.zeros((len(rows), len(names)), dtype=np.float64)
    for i, r in enumerate(rows):
        x = X[i]
        x[col["token_length"]] = r.token_length
        if f"pos={r.pos}" in col:
            x[col[f"pos={r.pos}"]] = 1
        x[col["training_frequency"]] = r.training_frequency
        x[col["training_frequency_valid"]] = r.training_frequency != SENTINEL
        x[col["relative_position"]] = r.relative_position
        x[col["penultimate"]] = r.penultimate
        x[col["followed_by_punctuation"]] = r.followed_by_punctuation
        x[col["distance_to_punctuation"]] = r.distance_to_punctuation
        x[col["distance_to_parent_phrase_end"]] = r.distance_to_parent_phrase_end
        x[col["distance_to_parent_phrase_end_valid"]] = r.distance_to_parent_phrase_end != SENTINEL
        for side, lens, tags_ in (("prev", r.word_length_prev, r.pos_prev), ("next", r.word_length_next, r.pos_next)):
            for m in range(1, M + 1):
                x[col[f"word_length_{side}_{m}"]] = lens[m - 1]
                x[col[f"{side}_{m}_valid"]] = lens[m - 1] != SENTINEL
                t = tags_[m - 1]
                if t is not None and f"pos_{side}_{m}={t}" in col:
                    x[col[f"pos_{side}_{m}={t}"]] = 1
    y = np.array([r.target for r in rows], dtype=np.float64)
    return FeatureMatrix(X, y, names, groups, [r.sentence_id for r in rows], [r.n for r in rows])


def rows_for_corpus(corpus: Iterable[AnnotatedSentence], targets: dict[tuple[str, int], float],
                    M: int = 4) -> list[FeatureRow]:
    rows = []
    for s in corpus:
        for n in range(1, len(s.annotations) + 1):
            key = (s.id, n)
            if key not in targets:
                raise TrainingError(f"no drift record for sentence {s.id!r}, token {n}")
            rows.append(extract_features(s, n, targets[key], M))
    return rows


def band(delta_r2: float, thresholds: Sequence[float] = DEFAULT_BANDS) -> str:
    lo, mid, hi = thresholds
    if delta_r2 < lo:
        return "NS"
    if delta_r2 < mid:
        return "*"
    if delta_r2 < hi:
        return "**"
    return "***"


@dataclass
class RFParams:
    n_estimators: int = 100
    seed: int = 0
    repeats: int = 10
    heldout_fraction: float = 0.2
    bands: tuple[float, float, float] = DEFAULT_BANDS
    permute_on_training: bool = False
    threads: int = 1
    M: int = 4


@dataclass
class ImportanceReport:
    k_target: Optional[int]
    feature_names: list[str]
    gini: list[float]  # over feature_names, from the probe fit
    probe_gini: float
    surviving_features: list[str]
    empty_survivor_set: bool
    r2_baseline: float
    permutation: dict[str, dict]  # name -> {mean, std, band}
    groups: dict[str, dict] = field(default_factory=dict)
    n_train: int = 0
    n_heldout: int = 0
    params: dict = field(default_factory=dict)

    def ranking(self) -> list[str]:
        return sorted(self.permutation, key=lambda nm: (-self.permutation[nm]["mean"], nm))

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.__dict__), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def split_by_sentence(sentence_ids: Sequence[str], fraction: float, seed: int) -> np.ndarray:
    """Boolean mask of held-out rows; whole sentences land on one side."""
    uniq = sorted(set(sentence_ids))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(uniq))
    n_hold = max(1, int(round(fraction * len(uniq)))) if len(uniq) > 1 else 0
    held = {uniq[i] for i in order[:n_hold]}
    return np.array([s in held for s in sentence_ids], dtype=bool)


def importance_report(fm: FeatureMatrix, params: RFParams, k_target: Optional[int] = None) -> ImportanceReport:
    """Random probe elimination, refit on survivors, permutation importance on held-out rows."""
    if np.all(fm.y == fm.y[0]):
        raise TrainingError("target is constant; nothing to explain")
    held = split_by_sentence(fm.sentence_ids, params.heldout_fraction, derive_seed(params.seed, "rf-split"))
    train, test = fm.subset_rows(~held), fm.subset_rows(held)
    if len(test.y) < 10 and not params.permute_on_training:
        raise EvalError(f"held-out set has {len(test.y)} rows, need at least 10")

    fp = ForestParams(params.n_estimators, derive_seed(params.seed, "rf-probe-forest"), True, params.threads)
    try:
        probe = probe_eliminate(train.X, train.y, fp, probe_seed=derive_seed(params.seed, "rf-probe-column"))
    except TrainingError as exc:
        raise TrainingError(f"probe stage: {exc}") from exc
    survivors = probe.survivors
    report = ImportanceReport(
        k_target=k_target,
        feature_names=list(fm.names),
        gini=[float(g) for g in probe.gini[:-1]],
        probe_gini=probe.probe_gini,
        surviving_features=[fm.names[i] for i in survivors],
        empty_survivor_set=probe.empty,
        r2_baseline=float("nan"),
        permutation={},
        n_train=len(train.y),
        n_heldout=len(test.y),
        params={"n_estimators": params.n_estimators, "seed": params.seed, "repeats": params.repeats,
                "heldout_fraction": params.heldout_fraction, "bands": list(params.bands),
                "permutation_data": "training" if params.permute_on_training else "heldout",
                "M": params.M},
    )
    if probe.empty:
        return report

    rp = ForestParams(params.n_estimators, derive_seed(params.seed, "rf-refit-forest"), True, params.threads)
    names = [fm.names[i] for i in survivors]
    try:
        model = fit_forest(train.X[:, survivors], train.y, rp, names)
    except TrainingError as exc:
        raise TrainingError(f"refit stage: {exc}") from exc
    evalset = train if params.permute_on_training else test
    Xe = evalset.X[:, survivors]
    perm_seed = derive_seed(params.seed, "rf-permutation")
    pr = permutation_importance(model, Xe, evalset.y, params.repeats, perm_seed)
    report.r2_baseline = pr.baseline
    for j, nm in enumerate(names):
        report.permutation[nm] = {"mean": float(pr.mean[j]), "std": float(pr.std[j]),
                                  "band": band(float(pr.mean[j]), params.bands)}
    local = {g: [names.index(fm.names[c]) for c in cols if fm.names[c] in names]
             for g, cols in fm.groups.items()}
    local = {g: cols for g, cols in local.items() if cols}
    if has_splits(model):
        for g, (mean, std) in group_permutation_importance(model, Xe, evalset.y, local, params.repeats,
                                                           perm_seed).items():
            report.groups[g] = {"mean": mean, "std": std, "band": band(mean, params.bands),
                                "columns": [names[c] for c in local[g]]}
    return report


def run_rf_pipeline(drift_records: Iterable[DriftRecord], corpus: Sequence[AnnotatedSentence], k_target: int,
                    params: Optional[RFParams] = None) -> ImportanceReport:
    params = params or RFParams()
    targets = {(r.sentence_id, r.n): r.d for r in drift_records if r.k == k_target}
    if not targets:
        raise TrainingError(f"no drift records at k={k_target}")
    rows = rows_for_corpus(corpus, targets, params.M)
    return importance_report(build_matrix(rows), params, k_target)


def write_feature_csv(fm: FeatureMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sentence_id", "n"] + fm.names + ["target"])
        for i in range(fm.X.shape[0]):
            w.writerow([fm.sentence_ids[i], fm.token_index[i]] + [repr(float(v)) for v in fm.X[i]]
                       + [repr(float(fm.y[i]))])
