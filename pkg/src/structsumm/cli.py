"""Batch command-line frontend.

Subcommands: summarize, train-hmm, segment, stats, evaluate, oracle.
Options resolve in precedence order: CLI flag, then config file (key=value
lines, # comments), then environment (STRUCTSUMM_EMBED_URL for the service
embedder), then built-in defaults. The resolved configuration is echoed
verbatim into the run manifest together with config and corpus hashes, so
a run can be reproduced from its manifest alone.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import corpus as corpus_io
from .embeddings import ProviderConfig, make_embedder
from .errors import StructSummError
from .evaluation import (MatchParams, evaluate_corpus, ext_oracle, irc_oracle,
                         position_histogram)
from .graph import HipoRankParams, centrality
from .segmentation import C99Segmenter, StageHmm, segmentation_stats
from .selection import (LexRankParams, ReweightParams, SummarySelection,
                        lexrank, select_greedy, select_reweighted,
                        summary_record)
from .types import Document, StructureView, flat_view

_VIEWS = ("flat", "html", "c99", "hmm")
_SELECTORS = ("greedy", "reweight", "lexrank")
_EMBEDDERS = ("hashed", "tfidf", "service")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one summarize run."""

    corpus: str
    out: str
    manifest: str
    view: str = "flat"
    selector: str = "reweight"
    header_removal: bool = True
    embedder: str = "hashed"
    dim: int = 256
    service_url: Optional[str] = None
    cache: Optional[str] = None
    hmm_model: Optional[str] = None
    mu1: float = 0.5
    lambda1: float = 0.0
    lambda2: float = 1.0
    alpha: float = 1.0
    g: float = 0.5
    mu2: float = 1.0
    max_words: int = 220
    damping: float = 0.85
    tolerance: float = 1e-6
    max_iter: int = 200
    similarity_threshold: float = 0.0
    c99_window: int = 4
    c99_std_coeff: float = 1.0
    seed: int = 0
    workers: int = 1


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise StructSummError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_BOOL_STRINGS = {"true": True, "1": True, "yes": True,
                 "false": False, "0": False, "no": False}


def _parse_bool(value: str) -> bool:
    try:
        return _BOOL_STRINGS[value.lower()]
    except KeyError:
        raise StructSummError(f"expected a boolean, got {value!r}") from None


def _resolve(flag_value, file_values: dict[str, str], key: str, default,
             parse=str):
    """flag > config file > default; flag value None means unset."""
    if flag_value is not None:
        return flag_value
    if key in file_values:
        raw = file_values[key]
        return _parse_bool(raw) if parse is bool else parse(raw)
    return default


def _hash_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _hash_file(path: str) -> str:
    return _hash_bytes(Path(path).read_bytes())


def _provider_config(cfg: RunConfig) -> ProviderConfig:
    return ProviderConfig(kind=cfg.embedder, dim=cfg.dim,
                          service_url=cfg.service_url, cache_path=cfg.cache)


def _load_documents(cfg_corpus: str, header_removal: bool) -> list[Document]:
    docs = corpus_io.read_corpus(cfg_corpus)
    if header_removal:
        docs = [corpus_io.remove_header(d) for d in docs]
    return docs


def _build_view(doc: Document, X, cfg: RunConfig,
                hmm: Optional[StageHmm]) -> StructureView:
    if cfg.view == "flat":
        return flat_view(len(doc.sentences), header_removed=doc.header_removed)
    if cfg.view == "html":
        return corpus_io.extract_html_structure(doc)
    if cfg.view == "c99":
        segmenter = C99Segmenter(window=cfg.c99_window, std_coeff=cfg.c99_std_coeff)
        return segmenter.segment(X, header_removed=doc.header_removed)
    if cfg.view == "hmm":
        assert hmm is not None
        return hmm.decode(X, header_removed=doc.header_removed)
    raise StructSummError(f"unknown view {cfg.view!r}")


def _select(doc: Document, X, view: StructureView, cfg: RunConfig
            ) -> tuple[SummarySelection, str, dict]:
    texts = doc.sentence_texts
    graph_params = HipoRankParams(cfg.mu1, cfg.lambda1, cfg.lambda2, cfg.alpha)
    if cfg.selector == "lexrank":
        params = LexRankParams(cfg.damping, cfg.tolerance, cfg.max_iter,
                               cfg.similarity_threshold)
        selection = lexrank(X, texts, params, cfg.max_words)
        return selection, "lexrank", {"damping": cfg.damping,
                                      "similarity_threshold": cfg.similarity_threshold,
                                      "max_words": cfg.max_words}
    result = centrality(X, view, graph_params)
    if cfg.selector == "greedy":
        selection = select_greedy(result, texts, cfg.max_words)
        return selection, "greedy", {"mu1": cfg.mu1, "max_words": cfg.max_words}
    params = ReweightParams(g=cfg.g, mu2=cfg.mu2, max_len=cfg.max_words)
    selection = select_reweighted(result, view, X, texts, params)
    return selection, "reweight", {"mu1": cfg.mu1, "g": cfg.g, "mu2": cfg.mu2,
                                   "max_words": cfg.max_words}


def _load_hmm(cfg: RunConfig, fingerprint: str) -> Optional[StageHmm]:
    if cfg.view != "hmm":
        return None
    if not cfg.hmm_model or not Path(cfg.hmm_model).exists():
        raise StructSummError(
            "view 'hmm' needs a trained stage model; run "
            "`structsumm train-hmm --corpus ... --out model.npz` and pass "
            "--hmm-model model.npz")
    hmm = StageHmm().load(cfg.hmm_model)
    model_fp = hmm.model_.provider_fingerprint
    if model_fp and model_fp != fingerprint:
        raise StructSummError(
            f"stage model was trained with embedder {model_fp!r} but this "
            f"run uses {fingerprint!r}; retrain or switch embedders")
    return hmm


def cmd_summarize(cfg: RunConfig) -> int:
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    docs = _load_documents(cfg.corpus, cfg.header_removal)
    timings["read"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    embedder = make_embedder(_provider_config(cfg))
    all_texts = [t for d in docs for t in d.sentence_texts]
    embedder.fit(all_texts)
    matrices = [embedder.transform(d.sentence_texts) for d in docs]
    timings["embed"] = time.perf_counter() - t0

    hmm = _load_hmm(cfg, embedder.fingerprint())

    t0 = time.perf_counter()

    def run_one(pair):
        doc, X = pair
        view = _build_view(doc, X, cfg, hmm)
        selection, method, params = _select(doc, X, view, cfg)
        return summary_record(doc.id, selection, doc.sentence_texts,
                              method, params)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(run_one, zip(docs, matrices)))
    else:
        records = [run_one(pair) for pair in zip(docs, matrices)]
    timings["summarize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    out_path = Path(cfg.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True,
                                separators=(",", ":")) + "\n")
    timings["write"] = time.perf_counter() - t0

    config_dict = asdict(cfg)
    manifest = {
        "config": config_dict,
        "config_hash": _hash_bytes(json.dumps(config_dict, sort_keys=True,
                                              separators=(",", ":")).encode()),
        "corpus_hash": _hash_file(cfg.corpus),
        "n_documents": len(docs),
        "provider_fingerprint": embedder.fingerprint(),
        "timings": timings,
    }
    manifest_path = Path(cfg.manifest)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    return 0


def cmd_train_hmm(corpus_path: str, out_path: str, cfg: RunConfig,
                  n_stages: int, n_iter: int) -> int:
    docs = _load_documents(corpus_path, cfg.header_removal)
    embedder = make_embedder(_provider_config(cfg))
    all_texts = [t for d in docs for t in d.sentence_texts]
    embedder.fit(all_texts)
    matrices = [embedder.transform(d.sentence_texts) for d in docs
                if len(d.sentences) >= n_stages]
    if not matrices:
        raise StructSummError(
            f"no documents with at least {n_stages} sentences to train on")
    hmm = StageHmm(n_stages=n_stages, n_iter=n_iter, seed=cfg.seed)
    hmm.fit(matrices)
    hmm.model_.provider_fingerprint = embedder.fingerprint()
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    hmm.save(out_path)
    return 0


def _views_for_corpus(docs: list[Document], cfg: RunConfig,
                      hmm: Optional[StageHmm], embedder) -> list[StructureView]:
    views = []
    for doc in docs:
        X = embedder.transform(doc.sentence_texts)
        views.append(_build_view(doc, X, cfg, hmm))
    return views


def cmd_segment(cfg: RunConfig) -> int:
    docs = _load_documents(cfg.corpus, cfg.header_removal)
    embedder = make_embedder(_provider_config(cfg))
    embedder.fit([t for d in docs for t in d.sentence_texts])
    hmm = _load_hmm(cfg, embedder.fingerprint())
    views = _views_for_corpus(docs, cfg, hmm, embedder)
    out_path = Path(cfg.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as fh:
        for doc, view in zip(docs, views):
            record = {
                "id": doc.id,
                "view": view.method.value,
                "sections": [{"start": sec.sentence_indices[0],
                              "end": sec.sentence_indices[-1] + 1,
                              "title": sec.title}
                             for sec in view.sections],
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True,
                                separators=(",", ":")) + "\n")
    return 0


def cmd_stats(cfg: RunConfig) -> int:
    docs = _load_documents(cfg.corpus, cfg.header_removal)
    embedder = make_embedder(_provider_config(cfg))
    embedder.fit([t for d in docs for t in d.sentence_texts])
    hmm = _load_hmm(cfg, embedder.fingerprint())
    views = _views_for_corpus(docs, cfg, hmm, embedder)
    report = segmentation_stats(views)
    out_path = Path(cfg.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report.CSV_HEADER + "\n" + report.csv_row(cfg.view) + "\n",
                        encoding="utf-8")
    return 0


def _read_summary_records(path: str) -> list[dict]:
    records = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise StructSummError(f"{path}:{line_no}: bad summary record: {exc}") from exc
    return records


def cmd_evaluate(corpus_path: str, summaries_path: str, out_prefix: str,
                 header_removal: bool, match_threshold: float,
                 positions: bool) -> int:
    docs = _load_documents(corpus_path, header_removal)
    records = _read_summary_records(summaries_path)
    summaries = {r["id"]: r["summary_text"] for r in records}
    by_id = {d.id: d for d in docs}
    selections = {}
    for r in records:
        doc = by_id.get(r["id"])
        if doc is None:
            raise StructSummError(f"summary for unknown document {r['id']!r}")
        indices = tuple(r.get("selected_indices", ()))
        counts = [len(t.split()) for t in doc.sentence_texts]
        selections[r["id"]] = SummarySelection(
            sentence_indices=indices,
            word_count=sum(counts[i] for i in indices),
            selection_trace=())

    report = evaluate_corpus(docs, summaries, selections,
                             MatchParams(match_threshold))
    for row in report.rows:
        for warning in row.warnings:
            print(f"{row.doc_id}: {warning}", file=sys.stderr)

    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{out_prefix}.per_doc.csv").write_text(report.per_document_csv(),
                                                 encoding="utf-8")
    Path(f"{out_prefix}.aggregate.csv").write_text(report.aggregate_csv(),
                                                   encoding="utf-8")
    Path(f"{out_prefix}.table.txt").write_text(report.table() + "\n",
                                               encoding="utf-8")
    if positions:
        ordered = [d for d in docs if d.id in selections]
        hist = position_histogram([selections[d.id] for d in ordered], ordered)
        Path(f"{out_prefix}.positions.csv").write_text(hist.positions_csv(),
                                                       encoding="utf-8")
        Path(f"{out_prefix}.position_hist.csv").write_text(hist.histogram_csv(),
                                                           encoding="utf-8")
    print(report.table())
    return 0


def cmd_oracle(corpus_path: str, out_path: str, kind: str, budget: int,
               header_removal: bool) -> int:
    docs = _load_documents(corpus_path, header_removal)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for doc in docs:
            if kind == "ext":
                selection = ext_oracle(doc, budget)
                record = summary_record(doc.id, selection, doc.sentence_texts,
                                        "ext_oracle", {"budget_words": budget})
            else:
                selection = irc_oracle(doc)
                record = summary_record(doc.id, selection, doc.sentence_texts,
                                        "irc_oracle", {})
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True,
                                separators=(",", ":")) + "\n")
    return 0


def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags win")
    p.add_argument("--view", choices=_VIEWS)
    p.add_argument("--embedder", choices=_EMBEDDERS)
    p.add_argument("--dim", type=int)
    p.add_argument("--service-url")
    p.add_argument("--cache")
    p.add_argument("--hmm-model")
    p.add_argument("--header-removal", dest="header_removal",
                   action="store_true", default=None)
    p.add_argument("--no-header-removal", dest="header_removal",
                   action="store_false", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--c99-window", type=int)
    p.add_argument("--c99-std-coeff", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structsumm",
        description="Structure-aware extractive summarization for long "
                    "sectioned documents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="select summaries for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")
    _add_shared_flags(p)
    p.add_argument("--selector", choices=_SELECTORS)
    p.add_argument("--greedy", dest="selector", action="store_const",
                   const="greedy")
    p.add_argument("--reweight", dest="selector", action="store_const",
                   const="reweight")
    p.add_argument("--g", type=float)
    p.add_argument("--mu2", type=float)
    p.add_argument("--max-words", type=int)
    p.add_argument("--mu1", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--similarity-threshold", type=float)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("train-hmm", help="fit a thematic stage model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stages", type=int, default=5)
    p.add_argument("--iters", type=int, default=50)
    _add_shared_flags(p)

    p = sub.add_parser("segment", help="dump structure views")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_shared_flags(p)

    p = sub.add_parser("stats", help="section statistics for one view")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_shared_flags(p)

    p = sub.add_parser("evaluate", help="score summaries against references")
    p.add_argument("--corpus", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--match-threshold", type=float, default=0.5)
    p.add_argument("--positions", action="store_true")
    p.add_argument("--header-removal", dest="header_removal",
                   action="store_true", default=None)
    p.add_argument("--no-header-removal", dest="header_removal",
                   action="store_false", default=None)

    p = sub.add_parser("oracle", help="reference-aware oracle selections")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("ext", "irc"), required=True)
    p.add_argument("--budget", type=int, default=220)
    p.add_argument("--header-removal", dest="header_removal",
                   action="store_true", default=None)
    p.add_argument("--no-header-removal", dest="header_removal",
                   action="store_false", default=None)
    return parser


def _run_config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(file_values) - known
    if unknown:
        raise StructSummError(f"unknown config keys: {sorted(unknown)}")

    def flag(name):
        return getattr(args, name, None)

    service_url = _resolve(flag("service_url"), file_values, "service_url",
                           os.environ.get("STRUCTSUMM_EMBED_URL"))
    return RunConfig(
        corpus=getattr(args, "corpus", ""),
        out=getattr(args, "out", ""),
        manifest=_resolve(flag("manifest"), file_values, "manifest",
                          str(getattr(args, "out", "run")) + ".manifest.json"),
        view=_resolve(flag("view"), file_values, "view", "flat"),
        selector=_resolve(flag("selector"), file_values, "selector", "reweight"),
        header_removal=_resolve(flag("header_removal"), file_values,
                                "header_removal", True, bool),
        embedder=_resolve(flag("embedder"), file_values, "embedder", "hashed"),
        dim=_resolve(flag("dim"), file_values, "dim", 256, int),
        service_url=service_url,
        cache=_resolve(flag("cache"), file_values, "cache", None),
        hmm_model=_resolve(flag("hmm_model"), file_values, "hmm_model", None),
        mu1=_resolve(flag("mu1"), file_values, "mu1", 0.5, float),
        lambda1=_resolve(flag("lambda1"), file_values, "lambda1", 0.0, float),
        lambda2=_resolve(flag("lambda2"), file_values, "lambda2", 1.0, float),
        alpha=_resolve(flag("alpha"), file_values, "alpha", 1.0, float),
        g=_resolve(flag("g"), file_values, "g", 0.5, float),
        mu2=_resolve(flag("mu2"), file_values, "mu2", 1.0, float),
        max_words=_resolve(flag("max_words"), file_values, "max_words", 220, int),
        damping=_resolve(flag("damping"), file_values, "damping", 0.85, float),
        tolerance=_resolve(flag("tolerance"), file_values, "tolerance", 1e-6, float),
        max_iter=_resolve(flag("max_iter"), file_values, "max_iter", 200, int),
        similarity_threshold=_resolve(flag("similarity_threshold"), file_values,
                                      "similarity_threshold", 0.0, float),
        c99_window=_resolve(flag("c99_window"), file_values, "c99_window", 4, int),
        c99_std_coeff=_resolve(flag("c99_std_coeff"), file_values,
                               "c99_std_coeff", 1.0, float),
        seed=_resolve(flag("seed"), file_values, "seed", 0, int),
        workers=_resolve(flag("workers"), file_values, "workers", 1, int),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "summarize":
            return cmd_summarize(_run_config_from_args(args))
        if args.command == "train-hmm":
            cfg = _run_config_from_args(args)
            return cmd_train_hmm(args.corpus, args.out, cfg,
                                 args.stages, args.iters)
        if args.command == "segment":
            cfg = _run_config_from_args(args)
            return cmd_segment(cfg)
        if args.command == "stats":
            cfg = _run_config_from_args(args)
            return cmd_stats(cfg)
        if args.command == "evaluate":
            header = args.header_removal if args.header_removal is not None else True
            return cmd_evaluate(args.corpus, args.summaries, args.out_prefix,
                                header, args.match_threshold, args.positions)
        if args.command == "oracle":
            header = args.header_removal if args.header_removal is not None else True
            return cmd_oracle(args.corpus, args.out, args.kind, args.budget,
                              header)
        parser.error(f"unknown command {args.command!r}")
    except StructSummError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
