"""Command-line entry point.

Subcommands:
  synth       generate a planted-community folksonomy (JSONL/TSV + truth CSV)
  run         full pipeline, writing every intermediate artifact
  similarity  similarity matrices and link-strength histogram only
  spectrum    eigen-decomposition of Q for a saved transformed matrix
  report      re-render heatmaps and report.html from a finished run

Exit codes: 0 ok, 1 parse error, 2 configuration error, 3 numerical
failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import ingest, pipeline, similarity, spectral, synth
from .errors import ConfigError, NumericalError, ParseError

log = logging.getLogger("folksonet")

EXIT_OK, EXIT_PARSE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

PRESETS = {
    "two": lambda seed: synth.two_community_spec(seed=seed),
    "nested": lambda seed: synth.nested_spec(noise_rate=0.02, seed=seed)[0],
    "six": lambda seed: synth.six_community_spec(seed=seed),
}


def _auto_int(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", "-i", action="append", required=True,
                   help="post file (repeatable)")
    p.add_argument("--format", choices=ingest.FORMATS, default=None,
                   help="input format (default: from file suffix)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="folksonet", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate planted-community data")
    p.add_argument("--preset", choices=sorted(PRESETS), default="two")
    p.add_argument("--spec", help="PlantedSpec JSON file (overrides --preset)")
    p.add_argument("--seed", type=int, default=None, help="override the preset/spec seed")
    p.add_argument("--noise-rate", type=float, default=None, help="override the noise rate")
    p.add_argument("--out", required=True, help="post file to write")
    p.add_argument("--truth", help="ground-truth CSV to write")
    p.add_argument("--format", choices=ingest.FORMATS, default="jsonl")

    p = sub.add_parser("run", help="full pipeline")
    _add_input_args(p)
    p.add_argument("--gamma", type=float, default=similarity.DEFAULT_GAMMA)
    p.add_argument("--k", type=_auto_int, default=None, help="community count or 'auto'")
    p.add_argument("--d", type=_auto_int, default=None, help="embedding dimension or 'auto'")
    p.add_argument("--max-k", type=int, default=10, help="upper bound for automatic k")
    p.add_argument("--zero-tol", type=float, default=spectral.DEFAULT_ZERO_TOL)
    p.add_argument("--top-n", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins-per-decade", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--normalize-rows", action="store_true")
    p.add_argument("--truth", help="ground-truth CSV; adds the ARI to summary.json")
    p.add_argument("--out-dir", "-o", default="out")

    p = sub.add_parser("similarity", help="similarity matrices only")
    _add_input_args(p)
    p.add_argument("--gamma", type=float, default=similarity.DEFAULT_GAMMA)
    p.add_argument("--bins-per-decade", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", "-o", default="out")

    p = sub.add_parser("spectrum", help="eigenvalues of Q for a transformed matrix")
    p.add_argument("--matrix", required=True, help="similarity CSV or FSM1 file (transformed)")
    p.add_argument("--zero-tol", type=float, default=spectral.DEFAULT_ZERO_TOL)
    p.add_argument("--max-k", type=int, default=10)
    p.add_argument("--out-dir", "-o", default="out")

    p = sub.add_parser("report", help="re-render reports from saved artifacts")
    p.add_argument("--out-dir", "-o", default="out")
    return parser


def cmd_synth(args) -> int:
    if args.spec:
        spec = synth.PlantedSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        seed = args.seed if args.seed is not None else (42 if args.preset != "six" else 7)
        spec = PRESETS[args.preset](seed)
    if args.noise_rate is not None:
        spec = dataclasses.replace(spec, noise_rate=args.noise_rate)
    planted = synth.generate(spec)
    Path(args.out).write_bytes(ingest.serialize_posts(planted.posts, args.format))
    if args.truth:
        synth.write_truth_csv(planted, args.truth)
    log.info("synth: %d posts on %d resources", len(planted.posts), len(planted.resources))
    return EXIT_OK


def cmd_run(args) -> int:
    config = pipeline.RunConfig(
        inputs=args.input, format=args.format, gamma=args.gamma, k=args.k, d=args.d,
        zero_tol=args.zero_tol, top_n=args.top_n, seed=args.seed, out_dir=args.out_dir,
        normalize_rows=args.normalize_rows, max_k=args.max_k,
        bins_per_decade=args.bins_per_decade, workers=args.workers, truth=args.truth)
    result = pipeline.run(config)
    s = result.summary
    print(f"resources={s['resources']} k={s['k']} sizes={s['community_sizes']}"
          + (f" ari={s['ari']:.4f}" if "ari" in s else ""))
    return EXIT_OK


def cmd_similarity(args) -> int:
    if not (0 < args.gamma <= 1):
        raise ConfigError(f"gamma must lie in (0, 1], got {args.gamma}")
    posts, _ = pipeline.load_posts(args.input, args.format)
    corpus = ingest.build_corpus(posts)
    raw = similarity.build_matrix(corpus, workers=args.workers)
    w = similarity.power_transform(raw, args.gamma)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    similarity.write_matrix_csv(raw, out / "similarity_raw.csv")
    similarity.write_matrix_csv(w, out / "similarity.csv")
    similarity.write_matrix_binary(w, out / "similarity.fsm")
    if raw.n >= 2:
        hist = similarity.strength_histogram(raw, args.bins_per_decade)
        similarity.write_histogram_csv(hist, out / "histogram.csv")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    m = similarity.read_matrix(args.matrix)
    r = spectral.eigendecompose(spectral.build_q(m))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spectral.write_spectrum_csv(r, out / "spectrum.csv")
    spectral.write_eigenvectors_csv(r, out / "eigenvectors.csv")
    zeros = spectral.count_zero_eigenvalues(r, args.zero_tol)
    k, degenerate = spectral.select_k(r, args.max_k, args.zero_tol) if r.n >= 2 else (1, True)
    print(json.dumps({"n": r.n, "zero_eigenvalues": zeros, "k": k, "degenerate": degenerate,
                      "sweeps": r.sweeps}))
    return EXIT_OK


def cmd_report(args) -> int:
    path = pipeline.render_from_artifacts(args.out_dir)
    print(path)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "similarity": cmd_similarity,
            "spectrum": cmd_spectrum, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
