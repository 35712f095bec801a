"""Command-line pipeline: ingest titles, build the matrix, decompose, export.

Every run writes a manifest.json next to its outputs recording the effective
configuration, input digests, package versions, seed and wall time, so any
stage can be reproduced exactly. A key=value config file can pre-set any
long flag; flags given on the command line win. The default output directory
comes from TRENDNETS_OUTPUT_DIR when set.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, backend, corpus, coword, decomp, evaluation, graph, synth
from .baselines import (
    KleinbergParams,
    kleinberg_detector,
    series_counts,
    threshold_derivative,
    threshold_mean_deviation,
    threshold_raw,
)
from .errors import ConfigurationError, TrendnetsError

ENV_OUTPUT_DIR = "TRENDNETS_OUTPUT_DIR"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _inject_config(argv: list[str]) -> list[str]:
    """Expand `--config FILE` into flags placed before explicit ones."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ConfigurationError("--config requires a file path")
    config_path = Path(argv[idx + 1])
    rest = argv[:idx] + argv[idx + 2 :]
    if not rest:
        raise ConfigurationError("--config must follow a subcommand")
    flags: list[str] = []
    for line in config_path.read_text("utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        flags.extend([f"--{key.strip().replace('_', '-')}", value.strip()])
    return [rest[0]] + flags + rest[1:]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--output-dir",
        default=os.environ.get(ENV_OUTPUT_DIR, "trendnets_out"),
        help="where outputs and the manifest go",
    )
    p.add_argument("--threads", type=int, default=None, help="cap solver worker threads")
    p.add_argument("--config", help=argparse.SUPPRESS)  # consumed before parsing


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="sparsity weight; larger values keep fewer bursts")
    p.add_argument("--lipschitz", type=float, default=4.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=1000)


def _add_corpus(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="JSON-lines corpus of titles")
    p.add_argument("--title-field", default="title")
    p.add_argument("--year-field", default="year")
    p.add_argument("--id-field", default="id")
    p.add_argument("--stopwords", default=None, help="custom stop-word file")
    p.add_argument("--start-year", type=int, required=True)
    p.add_argument("--end-year", type=int, required=True)
    p.add_argument("--bin-years", type=int, default=2, help="calendar years per period")
    p.add_argument("--min-count", type=int, default=30,
                   help="drop words seen in fewer documents than this")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendnets",
        description="Detect bursty topics in a time series of co-word networks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", help="tokenize, stem and bin a titles corpus")
    _add_corpus(p)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("matrix", help="stack per-period co-word weights")
    p.add_argument("--input", required=True, help="directory produced by ingest")
    p.add_argument("--format", choices=("npz", "text"), default="npz")
    _add_common(p)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("decompose", help="split the matrix into smooth + burst parts")
    p.add_argument("--input", required=True, help="matrix file (.npz or text)")
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("baseline", help="run a comparison burst detector")
    p.add_argument("--input", required=True, help="matrix file (.npz or text)")
    p.add_argument("--detector", required=True,
                   choices=("raw", "derivative", "mean-deviation", "kleinberg"))
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--kleinberg-s", type=float, default=2.0)
    _add_common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("synth", help="generate a ground-truth burst benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-pairs", type=int, default=2000)
    p.add_argument("--num-periods", type=int, default=50)
    p.add_argument("--omega-size", type=int, default=50)
    p.add_argument("--rate-median", type=float, default=2.0)
    p.add_argument("--rate-shape", type=float, default=1.0)
    p.add_argument("--noise-model", choices=synth.NOISE_MODELS, default="poisson")
    p.add_argument("--drift-rho", type=float, default=0.9)
    p.add_argument("--drift-scale", type=float, default=0.3)
    p.add_argument("--eval", action="store_true",
                   help="also sweep all detectors and report PR-AUC")
    p.add_argument("--grid", default=None,
                   help="comma-separated lambda values for the sweep")
    p.add_argument("--grid-size", type=int, default=25)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score a detection TSV against ground truth")
    p.add_argument("--input", required=True, help="bursts TSV (i j t score detector)")
    p.add_argument("--truth", required=True, help="truth TSV (i j t type)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="write per-period burst graphs")
    p.add_argument("--input", required=True,
                   help="directory holding decomposition_{triplets,pairs} files")
    p.add_argument("--matrix", required=True, help="matrix file used for the decomposition")
    p.add_argument("--vocab", default=None, help="vocabulary.tsv for labels")
    p.add_argument("--corpus", default=None,
                   help="raw JSON-lines corpus; enables surface-form label restoration")
    p.add_argument("--stopwords", default=None)
    p.add_argument("--format", choices=graph.FORMATS, default="json")
    p.add_argument("--seed", type=int, default=0, help="community detection seed")
    _add_common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("pipeline", help="ingest, matrix, decompose and export in one run")
    _add_corpus(p)
    _add_solver(p)
    p.add_argument("--format", choices=graph.FORMATS, default="json")
    p.add_argument("--seed", type=int, default=0, help="community detection seed")
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_stopwords(args) -> frozenset[str]:
    return corpus.load_stopwords(getattr(args, "stopwords", None))


def _ingest_stage(args, out: Path) -> dict[str, Path]:
    schema = corpus.CorpusSchema(
        title_field=args.title_field,
        year_field=args.year_field,
        id_field=args.id_field,
    )
    result = corpus.ingest(args.input, schema)
    stopwords = _load_stopwords(args)
    spec = corpus.BinSpec(args.start_year, args.end_year, args.bin_years)
    binned = corpus.prepare_corpus(result.documents, stopwords, spec)
    vocab = corpus.build_vocabulary(binned, args.min_count)

    docs_path = out / "documents.jsonl"
    with open(docs_path, "w", encoding="utf-8") as fh:
        for doc in result.documents:
            fh.write(json.dumps(
                {"id": doc.id, "title": doc.title, "year": doc.year},
                ensure_ascii=False, sort_keys=True,
            ) + "\n")
    tokens_path = out / "tokens.jsonl"
    with open(tokens_path, "w", encoding="utf-8") as fh:
        for subset in binned.subsets:
            for doc in subset:
                fh.write(json.dumps(
                    {"id": doc.id, "period": doc.period, "tokens": list(doc.tokens)},
                    ensure_ascii=False, sort_keys=True,
                ) + "\n")
    vocab_path = out / "vocabulary.tsv"
    vocab.write_tsv(vocab_path)
    meta_path = out / "corpus_meta.json"
    meta_path.write_text(json.dumps({
        "start_year": spec.start_year,
        "end_year": spec.end_year,
        "years_per_bin": spec.years_per_bin,
        "num_periods": binned.num_periods,
        "omega_sizes": binned.omega_sizes,
        "documents": len(result.documents),
        "skipped_records": result.skipped,
        "vocabulary_size": vocab.size,
    }, indent=2) + "\n", "utf-8")
    return {
        "documents": docs_path,
        "tokens": tokens_path,
        "vocabulary": vocab_path,
        "corpus_meta": meta_path,
    }


def _read_tokens(in_dir: Path) -> tuple[corpus.BinnedCorpus, corpus.VocabularyIndex]:
    meta = json.loads((in_dir / "corpus_meta.json").read_text("utf-8"))
    spec = corpus.BinSpec(meta["start_year"], meta["end_year"], meta["years_per_bin"])
    docs = []
    with open(in_dir / "tokens.jsonl", "r", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            docs.append(corpus.TokenizedDocument(
                id=rec["id"], period=rec["period"], tokens=tuple(rec["tokens"]),
            ))
    binned = corpus.bin_documents(docs, spec)
    vocab = corpus.VocabularyIndex.read_tsv(in_dir / "vocabulary.tsv")
    return binned, vocab


def cmd_ingest(args) -> dict:
    out = _out_dir(args)
    return _ingest_stage(args, out)


def cmd_matrix(args) -> dict:
    out = _out_dir(args)
    binned, vocab = _read_tokens(Path(args.input))
    series = coword.build_pair_series(binned, vocab)
    suffix = "npz" if args.format == "npz" else "txt"
    matrix_path = out / f"matrix.{suffix}"
    coword.save_pair_series(series, matrix_path)
    return {"matrix": matrix_path}


def _solver_config(args) -> decomp.SolverConfig:
    return decomp.SolverConfig(
        lam=args.lam,
        lipschitz=args.lipschitz,
        tol=args.tol,
        max_iters=args.max_iters,
    )


def cmd_decompose(args) -> dict:
    out = _out_dir(args)
    series = coword.load_pair_series(args.input)
    t0 = time.perf_counter()
    result = decomp.decompose(series, _solver_config(args))
    wall = time.perf_counter() - t0
    paths = decomp.export_decomposition(result, out, wall_time=wall)
    print(
        f"decomposed {series.num_rows} rows x {series.num_periods} periods in "
        f"{wall:.3f}s: {result.nonzeros} burst entries, "
        f"{result.iterations} iterations, kkt residual {result.kkt_residual:.3e}"
    )
    return paths


def cmd_baseline(args) -> dict:
    out = _out_dir(args)
    series = coword.load_pair_series(args.input)
    if args.detector == "raw":
        bursts = threshold_raw(series, args.threshold)
    elif args.detector == "derivative":
        bursts = threshold_derivative(series, args.threshold)
    elif args.detector == "mean-deviation":
        bursts = threshold_mean_deviation(series, args.threshold)
    else:
        params = KleinbergParams(s=args.kleinberg_s, gamma=args.gamma)
        totals = series.omega_sizes
        bursts = kleinberg_detector(series_counts(series), totals, series.pairs, params)
    path = out / f"bursts_{args.detector.replace('-', '_')}.tsv"
    bursts.write_tsv(path)
    print(f"{args.detector}: {len(bursts)} burst points")
    return {"bursts": path}


def cmd_synth(args) -> dict:
    out = _out_dir(args)
    config = synth.SynthConfig(
        num_pairs=args.num_pairs,
        num_periods=args.num_periods,
        rate_median=args.rate_median,
        rate_shape=args.rate_shape,
        noise_model=args.noise_model,
        drift_rho=args.drift_rho,
        drift_scale=args.drift_scale,
        seed=args.seed,
    )
    stable = synth.generate_stable(config)
    injected, truth = synth.inject_bursts(stable)
    series = synth.to_pair_series(injected, omega_size=args.omega_size)
    outputs: dict[str, Path] = {}
    outputs["series"] = out / "series.tsv"
    synth.save_series_tsv(injected, outputs["series"])
    outputs["truth"] = out / "truth.tsv"
    synth.save_truth_tsv(truth, outputs["truth"])
    outputs["matrix"] = out / "matrix.npz"
    coword.save_pair_series(series, outputs["matrix"])
    if args.eval:
        report = evaluation.run_benchmark(
            injected, truth, omega_size=args.omega_size, grid_size=args.grid_size
        )
        if args.grid:
            lam_grid = [float(v) for v in args.grid.split(",")]
            report.sweep_spec["decomposition"] = lam_grid
            pts = evaluation.sweep(
                lambda lam: evaluation.decomposition_bursts(
                    series, decomp.SolverConfig(lam=lam)
                ),
                lam_grid,
                truth,
            )
            report.points["decomposition"] = pts
            report.auc["decomposition"] = evaluation.auc(pts)
        report.metadata["seed"] = args.seed
        outputs["report"] = out / "evaluation_report.json"
        report.write_json(outputs["report"])
        outputs["pr_curves"] = out / "pr_curves.csv"
        report.write_csv(outputs["pr_curves"])
        ranking = sorted(report.auc.items(), key=lambda kv: -kv[1])
        print("PR-AUC: " + ", ".join(f"{k}={v:.3f}" for k, v in ranking))
    return outputs


def cmd_eval(args) -> dict:
    out = _out_dir(args)
    truth = synth.load_truth_tsv(args.truth)
    from .baselines import BurstSet

    detected = BurstSet(detector="file", params={})
    with open(args.input, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            i, j, t, score, detector = line.rstrip("\n").split("\t")
            detected.detector = detector
            detected.scores[(int(i), int(j), int(t))] = float(score)
    precision, recall = evaluation.precision_recall(detected, truth)
    path = out / "eval.json"
    path.write_text(json.dumps({
        "detector": detected.detector,
        "precision": precision,
        "recall": recall,
        "detected": len(detected),
        "truth": len(truth),
    }, indent=2) + "\n", "utf-8")
    print(f"precision={precision:.4f} recall={recall:.4f}")
    return {"eval": path}


def _load_decomposition(in_dir: Path, series: coword.PairSeries) -> decomp.DecompositionResult:
    triplets = in_dir / "decomposition_triplets.txt"
    diagnostics = json.loads((in_dir / "decomposition_diagnostics.json").read_text("utf-8"))
    S = np.zeros_like(series.weights)
    with open(triplets, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row, period, value = line.split()
            S[int(row), int(period) - 1] = float(value)
    cfg = decomp.SolverConfig(
        lam=diagnostics["lambda"],
        lipschitz=diagnostics["lipschitz"],
        tol=diagnostics["tol"],
        max_iters=diagnostics["max_iters"],
    )
    return decomp.DecompositionResult(
        S=S,
        pairs=series.pairs,
        iterations=diagnostics["iterations"],
        objective=diagnostics["objective"],
        kkt_residual=diagnostics["kkt_residual"],
        converged=diagnostics["converged"],
        config=cfg,
    )


def _export_stage(args, out: Path, series, result, vocab) -> dict:
    labels = None
    if vocab is not None and getattr(args, "corpus", None):
        raw = corpus.ingest(args.corpus).documents
        stopwords = _load_stopwords(args)
        active = {
            int(wid)
            for row in np.nonzero((result.S > 0).any(axis=1))[0]
            for wid in result.pairs[row]
        }
        labels = corpus.restore_labels(vocab, raw, active, stopwords)
    graphs = []
    for t in range(1, series.num_periods + 1):
        g = graph.extract_graph(result, t, vocab=vocab, labels=labels, seed=args.seed)
        graphs.append(g)
    paths = graph.export_periods(graphs, out, args.format)
    nonempty = sum(1 for g in graphs if g.num_edges)
    print(f"exported {len(paths)} period graphs ({nonempty} non-empty) as {args.format}")
    return {f"graph_{g.period}": p for g, p in zip(graphs, paths)}


def cmd_export(args) -> dict:
    out = _out_dir(args)
    series = coword.load_pair_series(args.matrix)
    result = _load_decomposition(Path(args.input), series)
    vocab = corpus.VocabularyIndex.read_tsv(args.vocab) if args.vocab else None
    return _export_stage(args, out, series, result, vocab)


def cmd_pipeline(args) -> dict:
    out = _out_dir(args)
    outputs = _ingest_stage(args, out)
    binned, vocab = _read_tokens(out)
    series = coword.build_pair_series(binned, vocab)
    outputs["matrix"] = out / "matrix.npz"
    coword.save_pair_series(series, outputs["matrix"])
    t0 = time.perf_counter()
    result = decomp.decompose(series, _solver_config(args))
    wall = time.perf_counter() - t0
    outputs.update(decomp.export_decomposition(result, out, wall_time=wall))
    print(
        f"decompose: {result.nonzeros} burst entries in {wall:.3f}s "
        f"({result.iterations} iterations)"
    )
    args.corpus = args.input
    outputs.update(_export_stage(args, out, series, result, vocab))
    return outputs


def _write_manifest(args, outputs: dict, wall: float) -> None:
    out = _out_dir(args)
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func",) and not k.startswith("_")
    }
    inputs = {}
    for key in ("input", "matrix", "truth", "vocab", "corpus"):
        value = getattr(args, key, None)
        if value and Path(value).is_file():
            inputs[key] = {"path": str(value), "sha256": _sha256(Path(value))}
    manifest = {
        "subcommand": args.subcommand,
        "config": config,
        "inputs": inputs,
        "outputs": {k: str(v) for k, v in outputs.items()},
        "versions": {
            "trendnets": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "backend": backend.active_backend(),
        },
        "wall_time_seconds": wall,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", "utf-8")


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        argv = _inject_config(argv)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        backend.set_num_threads(args.threads)
    t0 = time.perf_counter()
    try:
        outputs = args.func(args)
    except TrendnetsError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    _write_manifest(args, outputs, time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
