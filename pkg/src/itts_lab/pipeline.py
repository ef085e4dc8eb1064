"""Experiment orchestration: corpus -> prefix encodings -> drift -> summaries / RF -> assembly.

Output layout under ``out_dir``::

    drift/drift.csv      one row per (sentence, n, k)
    drift/summary.csv    mean/std/count per (k, category) plus closeness r(k)
    drift/ttests.csv     paired t-tests between consecutive lookaheads
    rf/importance_k{K}.json, rf/features_k{K}.csv
    audio/{sid}_k{K}.wav, audio/{sid}_k{K}_report.csv, audio/{sid}_offline.wav
    manifest.json        config snapshot, versions, per-stage file digests

The manifest carries no timestamps, absolute paths or thread counts, so two
runs with the same inputs and master seed write identical bytes.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, _accel
from .assembler import CROSSFADE_MS, DEFAULT_RATE, assemble_incremental, offline_synthesize, write_alignment, write_wav
from .corpus import AnnotatedSentence, load_annotated_corpus
from .drift import (DriftRecord, consecutive_lookahead_tests, drift_from_bank, read_drift_csv, summarize,
                    write_drift_csv, write_summary_csv, write_tests_csv)
from .encoder import EncoderConfig, EncoderWeights, init_weights, load_config_from_weights, load_weights
from .errors import DataError, DependencyError, NotFound
from .features import RFParams, build_matrix, importance_report, rows_for_corpus, write_feature_csv
from .policy import encode_all_prefixes
from .seeding import derive_seed

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "itts-lab-manifest/1"


@dataclass
class ExperimentConfig:
    corpus_path: Path
    out_dir: Path
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    weights_path: Optional[Path] = None
    k_max: int = 8
    k_targets: tuple[int, ...] = (0, 2)
    crossfade_ms: float = CROSSFADE_MS
    master_seed: int = 0
    alpha: float = 0.05
    n_estimators: int = 100
    repeats: int = 10
    threads: int = 1  # execution only; never changes results, so kept out of the manifest

    def __post_init__(self):
        self.corpus_path = Path(self.corpus_path)
        self.out_dir = Path(self.out_dir)
        if self.weights_path is not None:
            self.weights_path = Path(self.weights_path)
        self.k_targets = tuple(int(k) for k in self.k_targets)
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        bad = [k for k in self.k_targets if not 0 <= k <= self.k_max]
        if bad:
            raise ValueError(f"k_targets {bad} outside 0..{self.k_max}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def snapshot(self) -> dict:
        """Settings shared by every stage; paths reduced to file names."""
        return {
            "corpus": self.corpus_path.name,
            "encoder": self.encoder.to_dict(),
            "weights": None if self.weights_path is None else self.weights_path.name,
            "master_seed": self.master_seed,
        }


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def component_versions() -> dict:
    try:
        import numba
        nb = numba.__version__
    except ModuleNotFoundError:  # pragma: no cover
        nb = None
    return {"itts_lab": __version__, "numpy": np.__version__, "numba": nb,
            "python": platform.python_version(), "backend": _accel.backend()}


@dataclass
class RunManifest:
    config: dict
    versions: dict
    inputs: dict = field(default_factory=dict)  # name -> sha256
    stages: dict = field(default_factory=dict)  # stage -> {"params": {...}, "files": {path: sha256}}

    def to_json(self) -> str:
        doc = {"format": MANIFEST_FORMAT, "config": self.config, "versions": self.versions,
               "inputs": self.inputs, "stages": self.stages}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        doc = json.loads(text)
        return cls(doc["config"], doc["versions"], doc.get("inputs", {}), doc.get("stages", {}))

    def files(self) -> dict[str, str]:
        out = {}
        for entry in self.stages.values():
            out.update(entry["files"])
        return out

    def verify(self, root) -> list[str]:
        """Relative paths whose current digest differs from the recorded one."""
        root = Path(root)
        return [rel for rel, digest in sorted(self.files().items())
                if not (root / rel).exists() or sha256_file(root / rel) != digest]


def _open_manifest(config: ExperimentConfig) -> RunManifest:
    """Reuse the manifest in ``out_dir`` when its shared settings match; otherwise start afresh."""
    path = config.out_dir / MANIFEST_NAME
    snap = config.snapshot()
    if path.exists():
        m = RunManifest.from_json(path.read_text())
        if m.config == snap:
            m.versions = component_versions()
            return m
    return RunManifest(snap, component_versions())


def _record(manifest: RunManifest, config: ExperimentConfig, stage: str, params: dict,
            paths: Sequence[Path]) -> None:
    files = {p.relative_to(config.out_dir).as_posix(): sha256_file(p) for p in paths}
    manifest.stages[stage] = {"params": params, "files": files}
    (config.out_dir / MANIFEST_NAME).write_text(manifest.to_json())


class StageError(DataError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


def _stage(name):
    """Label any data error escaping a stage with the stage name."""
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except DataError as exc:
                raise StageError(name, exc) from exc
        return run
    return wrap


def resolve_encoder(encoder: EncoderConfig, weights_path: Optional[Path], master_seed: int
                    ) -> tuple[EncoderWeights, EncoderConfig]:
    """Weights from file (its stored config wins), else seeded random init."""
    if weights_path is not None:
        stored = load_config_from_weights(weights_path)
        enc = stored if stored is not None else encoder
        return load_weights(weights_path, enc), enc
    enc = dataclasses.replace(encoder, seed=derive_seed(master_seed, "encoder-init"))
    return init_weights(enc), enc


def load_inputs(config: ExperimentConfig) -> tuple[list[AnnotatedSentence], EncoderWeights, EncoderConfig]:
    corpus = load_annotated_corpus(config.corpus_path)
    weights, enc = resolve_encoder(config.encoder, config.weights_path, config.master_seed)
    return corpus, weights, enc


def _inputs_digest(manifest: RunManifest, config: ExperimentConfig) -> None:
    manifest.inputs["corpus"] = sha256_file(config.corpus_path)
    if config.weights_path is not None:
        manifest.inputs["weights"] = sha256_file(config.weights_path)


def compute_corpus_drift(corpus: Sequence[AnnotatedSentence], weights: EncoderWeights, config: EncoderConfig,
                         k_max: int, threads: int = 1) -> list[DriftRecord]:
    """Drift records for every sentence, in corpus order then (k, n)."""
    def one(item):
        bank = encode_all_prefixes(item.sentence, weights, config)
        return drift_from_bank(bank, item.annotations, k_max)

    if threads > 1 and len(corpus) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, corpus))
    else:
        parts = [one(item) for item in corpus]
    return [r for part in parts for r in part]


@_stage("drift")
def run_drift_experiment(config: ExperimentConfig) -> RunManifest:
    corpus, weights, enc = load_inputs(config)
    out = config.out_dir / "drift"
    out.mkdir(parents=True, exist_ok=True)
    records = compute_corpus_drift(corpus, weights, enc, config.k_max, config.threads)
    summary = summarize(records, config.k_max)
    tests = consecutive_lookahead_tests(records, config.k_max)
    paths = [out / "drift.csv", out / "summary.csv", out / "ttests.csv"]
    write_drift_csv(records, paths[0])
    write_summary_csv(summary, paths[1])
    write_tests_csv(tests, paths[2], config.alpha)
    manifest = _open_manifest(config)
    _inputs_digest(manifest, config)
    _record(manifest, config, "drift", {"k_max": config.k_max, "alpha": config.alpha}, paths)
    return manifest


@_stage("rf")
def run_rf_experiment(config: ExperimentConfig) -> RunManifest:
    drift_csv = config.out_dir / "drift" / "drift.csv"
    if not drift_csv.exists():
        raise DependencyError(f"drift stage output {drift_csv} is missing; run the drift stage first")
    records = read_drift_csv(drift_csv)
    corpus = load_annotated_corpus(config.corpus_path)
    present = {r.k for r in records}
    out = config.out_dir / "rf"
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in config.k_targets:
        if k not in present:
            raise DependencyError(f"drift output has no records for k={k}")
        targets = {(r.sentence_id, r.n): r.d for r in records if r.k == k}
        fm = build_matrix(rows_for_corpus(corpus, targets))
        params = RFParams(n_estimators=config.n_estimators, seed=derive_seed(config.master_seed, "rf", k),
                          repeats=config.repeats, threads=config.threads)
        report = importance_report(fm, params, k)
        feat = out / f"features_k{k}.csv"
        rep = out / f"importance_k{k}.json"
        write_feature_csv(fm, feat)
        rep.write_text(report.to_json())
        paths += [feat, rep]
    manifest = _open_manifest(config)
    _inputs_digest(manifest, config)
    _record(manifest, config, "rf", {"k_targets": list(config.k_targets), "n_estimators": config.n_estimators,
                                    "repeats": config.repeats}, paths)
    return manifest


@_stage("assembly")
def run_assembly(config: ExperimentConfig, sentence_id: str, k: int, rate: int = DEFAULT_RATE,
                 law: str = "linear") -> RunManifest:
    corpus, weights, enc = load_inputs(config)
    by_id = {item.id: item for item in corpus}
    if sentence_id not in by_id:
        raise NotFound(f"sentence {sentence_id!r} not in {config.corpus_path.name}")
    sentence = by_id[sentence_id].sentence
    out = config.out_dir / "audio"
    out.mkdir(parents=True, exist_ok=True)
    result = assemble_incremental(sentence, k, weights, enc, crossfade_ms=config.crossfade_ms, rate=rate, law=law)
    offline, alignment = offline_synthesize(sentence, weights, enc, rate)
    paths = [out / f"{sentence_id}_k{k}.wav", out / f"{sentence_id}_k{k}_report.csv",
             out / f"{sentence_id}_offline.wav", out / f"{sentence_id}_offline_alignment.csv"]
    write_wav(paths[0], result.waveform)
    result.write_report(paths[1])
    write_wav(paths[2], offline)
    write_alignment(paths[3], alignment)
    manifest = _open_manifest(config)
    _inputs_digest(manifest, config)
    _record(manifest, config, f"assembly:{sentence_id}:k{k}",
            {"k": k, "crossfade_ms": config.crossfade_ms, "rate": rate, "law": law}, paths)
    return manifest


def load_manifest(out_dir) -> RunManifest:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        raise NotFound(f"no manifest in {out_dir}")
    return RunManifest.from_json(path.read_text())
