"""Command-line front end: ``itts-lab <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data error (bad or missing input),
3 internal error. Diagnostics and the resolved configuration go to stderr;
data goes to files under ``--out-dir`` or to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

from .errors import DataError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _k_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _add_common(p, *, corpus=True, encoder=True):
    if corpus:
        p.add_argument("--corpus", type=Path, required=True, help="annotated corpus (JSON lines)")
    if encoder:
        p.add_argument("--weights", type=Path, default=None,
                       help="encoder weight file (.npz); default: random init from --seed")
        p.add_argument("--hidden-dim", type=int, default=32, help="LSTM hidden size per direction")
        p.add_argument("--embed-dim", type=int, default=32, help="character embedding size")
        p.add_argument("--channels", type=int, default=32, help="conv channels per layer")
        p.add_argument("--kernel-width", type=int, default=5, help="conv kernel width (odd)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out-dir", type=Path, default=Path("itts_out"), help="output directory")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads within a stage; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="itts-lab", description="Lookahead experiments for incremental TTS encoders.",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tokenize", help="split text into word/space/punctuation tokens", formatter_class=fmt)
    p.add_argument("--text", required=True, help="sentence to tokenize")
    p.add_argument("--k", type=int, default=None, help="also list c(n,k) and the visible prefix per token")

    p = sub.add_parser("encode", help="dump incremental and full-context token vectors", formatter_class=fmt)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text", help="single sentence")
    src.add_argument("--corpus", type=Path, help="annotated corpus (JSON lines)")
    p.add_argument("--k-max", type=int, default=2, help="largest lookahead to dump")
    _add_common(p, corpus=False)

    p = sub.add_parser("drift", help="drift of incremental vectors vs full context", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--k-max", type=int, default=8, help="largest lookahead")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level for the t-test report")

    p = sub.add_parser("rf", help="random-forest importance of linguistic features", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--k-max", type=int, default=8, help="largest lookahead present in the drift output")
    p.add_argument("--k-target", type=_k_list, default=[0, 2], help="lookaheads to explain, comma-separated")
    p.add_argument("--n-estimators", type=int, default=100, help="trees per forest")
    p.add_argument("--repeats", type=int, default=10, help="shuffles per permutation importance")

    p = sub.add_parser("assemble", help="incremental waveform assembly for one sentence", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--sentence-id", required=True, help="sentence to assemble")
    p.add_argument("--k", type=int, default=1, help="lookahead")
    p.add_argument("--crossfade-ms", type=float, default=5.0, help="cross-fade length at each junction")
    p.add_argument("--rate", type=int, default=22050, help="sample rate")
    p.add_argument("--law", choices=["linear", "equal_power"], default="linear", help="cross-fade weighting")

    p = sub.add_parser("mushra", help="listening-test exclusion and paired t-tests", formatter_class=fmt)
    p.add_argument("--ratings", type=Path, required=True, help="ratings CSV")
    p.add_argument("--threshold", type=float, default=90.0,
                   help="exclude participants whose mean hidden-reference score is below this")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--out-dir", type=Path, default=Path("itts_out"), help="output directory")
    p.add_argument("--plot", action="store_true", help="also write a box plot (SVG)")

    p = sub.add_parser("gen-corpus", help="write a seeded synthetic annotated corpus", formatter_class=fmt)
    p.add_argument("--n-sentences", type=int, default=200, help="number of sentences")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--min-words", type=int, default=5, help="shortest sentence in words")
    p.add_argument("--max-words", type=int, default=42, help="longest sentence in words")
    p.add_argument("--out", type=Path, required=True, help="output JSON lines file")

    p = sub.add_parser("plot", help="render SVG figures from stage outputs", formatter_class=fmt)
    p.add_argument("--out-dir", type=Path, default=Path("itts_out"), help="run directory holding drift/")
    p.add_argument("--ratings", type=Path, default=None, help="also plot a ratings CSV")
    p.add_argument("--threshold", type=float, default=90.0, help="exclusion threshold for the ratings plot")
    return parser


def _encoder_config(args):
    from .encoder import EncoderConfig
    try:
        return EncoderConfig.desk(args.hidden_dim, args.embed_dim, args.channels, args.kernel_width)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _experiment(args, **extra):
    from .pipeline import ExperimentConfig
    try:
        return ExperimentConfig(corpus_path=args.corpus, out_dir=args.out_dir, encoder=_encoder_config(args),
                                weights_path=args.weights, master_seed=args.seed,
                                threads=max(1, args.threads), **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _require_file(path: Path, what: str) -> None:
    if not path.is_file():
        raise FileNotFoundError(f"{what} not found: {path}")


def _resolved(args) -> dict:
    out = {}
    for key, val in sorted(vars(args).items()):
        out[key] = str(val) if isinstance(val, Path) else val
    return out


def cmd_tokenize(args) -> int:
    from .corpus import tokenize
    from .policy import context_size, prefix_text
    s = tokenize(args.text)
    for t in s.tokens:
        line = f"{t.index}\t{t.kind.value}\t{t.text!r}"
        if args.k is not None:
            c = context_size(t.index, args.k, s.N)
            line += f"\t{c}\t{prefix_text(s, c)!r}"
        print(line)
    print(f"{s.N} tokens", file=sys.stderr)
    return EXIT_OK


def cmd_encode(args) -> int:
    from .corpus import load_annotated_corpus, tokenize
    from .pipeline import resolve_encoder
    from .policy import encode_all_prefixes, write_trace_dump
    if args.k_max < 0:
        raise UsageError("--k-max must be >= 0")
    if args.corpus is not None:
        _require_file(args.corpus, "corpus")
        sentences = [item.sentence for item in load_annotated_corpus(args.corpus)]
    else:
        sentences = [tokenize(args.text, "text")]
    if args.weights is not None:
        _require_file(args.weights, "weights")
    weights, enc = resolve_encoder(_encoder_config(args), args.weights, args.seed)
    traces = []
    for s in sentences:
        bank = encode_all_prefixes(s, weights, enc)
        traces += [bank.trace(k) for k in range(args.k_max + 1)]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "encodings.csv"
    write_trace_dump(traces, path)
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_drift(args) -> int:
    from .pipeline import run_drift_experiment
    cfg = _experiment(args, k_max=args.k_max, k_targets=(), alpha=args.alpha)
    _require_file(cfg.corpus_path, "corpus")
    if cfg.weights_path is not None:
        _require_file(cfg.weights_path, "weights")
    run_drift_experiment(cfg)
    print(f"wrote {cfg.out_dir / 'drift'}", file=sys.stderr)
    return EXIT_OK


def cmd_rf(args) -> int:
    from .pipeline import run_rf_experiment
    cfg = _experiment(args, k_max=args.k_max, k_targets=tuple(args.k_target),
                      n_estimators=args.n_estimators, repeats=args.repeats)
    _require_file(cfg.corpus_path, "corpus")
    run_rf_experiment(cfg)
    print(f"wrote {cfg.out_dir / 'rf'}", file=sys.stderr)
    return EXIT_OK


def cmd_assemble(args) -> int:
    from .pipeline import run_assembly
    cfg = _experiment(args, k_targets=(), crossfade_ms=args.crossfade_ms)
    _require_file(cfg.corpus_path, "corpus")
    if cfg.weights_path is not None:
        _require_file(cfg.weights_path, "weights")
    if args.k < 0:
        raise UsageError("--k must be >= 0")
    run_assembly(cfg, args.sentence_id, args.k, rate=args.rate, law=args.law)
    print(f"wrote {cfg.out_dir / 'audio'}", file=sys.stderr)
    return EXIT_OK


def cmd_mushra(args) -> int:
    from .mushra import apply_exclusion, load_ratings, summarize_mushra, write_summary
    _require_file(args.ratings, "ratings")
    ratings = load_ratings(args.ratings)
    for p, s, c in ratings.missing:
        print(f"warning: missing rating participant={p} sentence={s} condition={c}", file=sys.stderr)
    kept, excluded = apply_exclusion(ratings, args.threshold)
    for e in excluded:
        print(f"excluded {e.participant}: {e.reason}", file=sys.stderr)
    summary = summarize_mushra(kept, excluded=excluded, threshold=args.threshold)
    out = args.out_dir / "mushra"
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out / "summary.csv", summary, args.alpha)
    if args.plot:
        from .plots import plot_mushra
        plot_mushra(kept, out / "scores.svg")
    for t in summary.tests:
        r = t.result
        mark = "significant" if r.significant(args.alpha) else "n.s."
        print(f"{t.a} vs {t.b}: t={r.t:.4f} df={r.df} p={r.p:.4g} {mark}")
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    from .corpus import write_annotated_corpus
    from .synth import generate_corpus
    if args.n_sentences < 1 or not 1 <= args.min_words <= args.max_words:
        raise UsageError("need --n-sentences >= 1 and 1 <= --min-words <= --max-words")
    items = generate_corpus(args.n_sentences, args.seed, args.min_words, args.max_words)
    if args.out.parent != Path(""):
        args.out.parent.mkdir(parents=True, exist_ok=True)
    write_annotated_corpus(items, args.out)
    print(f"wrote {len(items)} sentences to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import plot_drift
    summary = args.out_dir / "drift" / "summary.csv"
    _require_file(summary, "drift summary")
    plot_drift(summary, args.out_dir / "drift" / "drift.svg")
    if args.ratings is not None:
        from .mushra import apply_exclusion, load_ratings
        from .plots import plot_mushra
        _require_file(args.ratings, "ratings")
        kept, _ = apply_exclusion(load_ratings(args.ratings), args.threshold)
        (args.out_dir / "mushra").mkdir(parents=True, exist_ok=True)
        plot_mushra(kept, args.out_dir / "mushra" / "scores.svg")
    return EXIT_OK


COMMANDS = {"tokenize": cmd_tokenize, "encode": cmd_encode, "drift": cmd_drift, "rf": cmd_rf,
            "assemble": cmd_assemble, "mushra": cmd_mushra, "gen-corpus": cmd_gen_corpus, "plot": cmd_plot}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    print("config: " + json.dumps(_resolved(args), sort_keys=True), file=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"itts-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"itts-lab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
