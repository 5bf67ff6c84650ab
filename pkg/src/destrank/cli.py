"""Command-line entry point.

Subcommands: import, reformulate, run, evaluate, sweep, cache-stats.
Experiment settings come from a flat JSON config file (--config); any
flag given on the command line overrides the file value. Exit codes:
0 success, 1 runtime failure, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from . import dense, evaluation, scoring, sparse
from .corpus import (
    Corpus,
    Destination,
    Paragraph,
    chunk_document,
    load_corpus,
    load_dataset,
    save_corpus,
    slugify,
)
from .errors import CacheMiss, DestrankError
from .llm_gateway import LlmGateway, cache_stats
from .reformulation import (
    DEFAULT_K_SUBTOPICS,
    PromptOptions,
    ReformMethod,
    ReformulatedQuery,
    load_reformulated,
    reformulate,
    save_reformulated,
)

DEFAULT_METRICS = ("map@30", "map@50", "recall@30", "recall@50", "r-precision")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    corpus_path: Optional[str] = None
    queries_path: Optional[str] = None
    qrels_path: Optional[str] = None
    cache_path: Optional[str] = None
    embeddings_path: Optional[str] = None
    query_embeddings_path: Optional[str] = None
    reformulated_path: Optional[str] = None
    method: str = ReformMethod.NO_QR.value
    retriever: str = "sparse-bm25"
    top_n: Optional[int] = None
    k_subtopics: int = DEFAULT_K_SUBTOPICS
    few_shot: bool = True
    dest_list: bool = True
    cache_only: bool = False
    output_dir: str = "."

    def effective_top_n(self) -> int:
        if self.top_n is not None:
            return self.top_n
        return scoring.DEFAULT_TOP_N[self.retriever]

    def prompt_options(self) -> PromptOptions:
        return PromptOptions(few_shot=self.few_shot, destination_list=self.dest_list)


class UsageError(Exception):
    pass


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
        unknown = set(data) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **data)
    overrides = {}
    for key in (
        "corpus_path", "queries_path", "qrels_path", "cache_path",
        "embeddings_path", "query_embeddings_path", "reformulated_path",
        "method", "retriever", "top_n", "k_subtopics", "few_shot",
        "dest_list", "cache_only", "output_dir",
    ):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    cfg = replace(cfg, **overrides)
    if cfg.retriever not in scoring.DEFAULT_TOP_N:
        raise UsageError(f"unknown retriever: {cfg.retriever!r}")
    try:
        ReformMethod(cfg.method)
    except ValueError:
        raise UsageError(f"unknown method: {cfg.method!r}") from None
    return cfg


def _require(cfg: RunConfig, *fields: str) -> None:
    for name in fields:
        value = getattr(cfg, name)
        if value is None:
            raise UsageError(f"missing required setting: {name}")
        # cache_path is created on demand; every other path must already exist
        if name.endswith("_path") and name != "cache_path" and not Path(value).exists():
            raise UsageError(f"{name} does not exist: {value}")


# --- subcommands ---

def cmd_import(args: argparse.Namespace) -> int:
    src = Path(args.pages)
    if not src.exists():
        raise UsageError(f"input file not found: {src}")
    destinations = []
    with src.open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            page = json.loads(line)
            name = page["name"]
            dest_id = page.get("id") or slugify(name)
            texts = chunk_document(page["text"])
            if not texts:
                print(f"skipping {dest_id}: no paragraphs survive chunking", file=sys.stderr)
                continue
            paragraphs = tuple(
                Paragraph(dest_id=dest_id, index=i, text=t) for i, t in enumerate(texts)
            )
            destinations.append(Destination(id=dest_id, name=name, paragraphs=paragraphs))
    corpus = Corpus(
        destinations=tuple(destinations),
        total_paragraphs=sum(len(d.paragraphs) for d in destinations),
    )
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus.destinations)} destinations to {args.out}")
    return EXIT_OK


def cmd_reformulate(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _require(cfg, "queries_path", "qrels_path")
    method = ReformMethod(cfg.method)
    corpus = None
    destination_names = None
    if cfg.corpus_path:
        corpus = load_corpus(cfg.corpus_path)
        destination_names = [d.name for d in corpus.destinations]
    dataset = load_dataset(cfg.queries_path, cfg.qrels_path, corpus)

    gateway = None
    if method is not ReformMethod.NO_QR:
        _require(cfg, "cache_path")
        gateway = LlmGateway.from_env(cfg.cache_path, cache_only=cfg.cache_only)

    options = cfg.prompt_options()
    if options.destination_list and destination_names is None and method is not ReformMethod.NO_QR:
        raise UsageError("dest_list option requires corpus_path")

    rqs = []
    misses = []
    for query in dataset.queries:
        try:
            rqs.append(
                reformulate(
                    query, method, k=cfg.k_subtopics, options=options,
                    gateway=gateway, destination_names=destination_names,
                )
            )
        except CacheMiss as exc:
            misses.append(exc.key)
    if misses:
        print("cache misses for request digests:", file=sys.stderr)
        for key in misses:
            print(f"  {key}", file=sys.stderr)
        return EXIT_RUNTIME

    out = Path(cfg.output_dir) / "reformulated.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_reformulated(rqs, out)
    print(f"wrote {len(rqs)} reformulations to {out}")
    return EXIT_OK


def _load_rqs(cfg: RunConfig, dataset) -> list[ReformulatedQuery]:
    method = ReformMethod(cfg.method)
    if cfg.reformulated_path:
        rqs = [rq for rq in load_reformulated(cfg.reformulated_path) if rq.method is method]
        by_qid = {rq.qid: rq for rq in rqs}
        missing = [q.qid for q in dataset.queries if q.qid not in by_qid]
        if missing:
            raise UsageError(f"reformulated file lacks entries for: {missing}")
        return [by_qid[q.qid] for q in dataset.queries]
    if method is not ReformMethod.NO_QR:
        raise UsageError(f"method {method.value} requires reformulated_path")
    return [
        reformulate(q, ReformMethod.NO_QR, options=cfg.prompt_options())
        for q in dataset.queries
    ]


def _build_backend(cfg: RunConfig, corpus: Corpus):
    if cfg.retriever == "sparse-bm25":
        return scoring.SparseBackend(index=sparse.build_index(corpus))
    _require(cfg, "embeddings_path")
    store = dense.load_embeddings(cfg.embeddings_path)
    query_store = None
    if cfg.query_embeddings_path:
        query_store = dense.load_embeddings(cfg.query_embeddings_path)
    return scoring.DenseBackend(store=store, query_store=query_store)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _require(cfg, "corpus_path", "queries_path", "qrels_path")
    corpus = load_corpus(cfg.corpus_path)
    dataset = load_dataset(cfg.queries_path, cfg.qrels_path, corpus)
    rqs = _load_rqs(cfg, dataset)
    backend = _build_backend(cfg, corpus)
    top_n = cfg.effective_top_n()
    scfg = scoring.ScoringConfig(
        retriever=cfg.retriever.split("-")[0], top_n=top_n,
    )
    rankings = [scoring.rank_destinations(rq, corpus, backend, scfg) for rq in rqs]
    out = Path(cfg.output_dir) / "results.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    scoring.save_results(rankings, out, method=cfg.method, retriever=cfg.retriever, top_n=top_n)
    print(f"wrote {len(rankings)} rankings to {out}")
    return EXIT_OK


def _rankings_from_results(rows: list[dict]) -> dict[str, list[str]]:
    return {row["qid"]: [e["id"] for e in row["ranking"]] for row in rows}


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _require(cfg, "queries_path", "qrels_path")
    metrics = args.metrics.split(",") if args.metrics is not None else list(DEFAULT_METRICS)
    metrics = [m.strip() for m in metrics if m.strip()]
    if not metrics:
        raise UsageError("metric list is empty")
    dataset = load_dataset(cfg.queries_path, cfg.qrels_path)

    rows = []
    baseline_reports = None
    baseline_method = None
    if args.baseline:
        base_rows = scoring.load_results(args.baseline)
        baseline_method = base_rows[0]["method"] if base_rows else "baseline"
        baseline_reports = evaluation.evaluate_run(
            _rankings_from_results(base_rows), dataset, metrics
        )
        rows.append(evaluation.MethodRow(method=baseline_method, reports=baseline_reports))

    for results_path in args.results:
        result_rows = scoring.load_results(results_path)
        method = result_rows[0]["method"] if result_rows else Path(results_path).stem
        reports = evaluation.evaluate_run(
            _rankings_from_results(result_rows), dataset, metrics
        )
        significance = {}
        if baseline_reports is not None:
            significance = evaluation.compare_to_baseline(reports, baseline_reports)
        rows.append(
            evaluation.MethodRow(method=method, reports=reports, significance=significance)
        )

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluation.write_report(
        rows, metrics, out_dir / "report.md", out_dir / "report.csv",
        baseline_method=baseline_method,
    )
    for row in rows:
        for report in row.reports:
            print(f"{row.method}\t{report.metric}\t{report.mean:.4f}")
    print(f"wrote {out_dir / 'report.md'} and {out_dir / 'report.csv'}")
    return EXIT_OK


def _parse_range(spec: str) -> list[int]:
    try:
        lo, hi = spec.split(":")
        values = list(range(int(lo), int(hi) + 1))
    except ValueError:
        raise UsageError(f"bad range {spec!r}; expected LO:HI") from None
    if not values:
        raise UsageError(f"empty range: {spec!r}")
    return values


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    _require(cfg, "corpus_path", "queries_path", "qrels_path")
    if args.parameter not in ("top_n", "k_subtopics"):
        raise UsageError(f"unknown sweep parameter: {args.parameter!r}")
    values = _parse_range(args.range)
    metrics = args.metrics.split(",") if args.metrics is not None else list(DEFAULT_METRICS)
    metrics = [m.strip() for m in metrics if m.strip()]
    if not metrics:
        raise UsageError("metric list is empty")

    corpus = load_corpus(cfg.corpus_path)
    dataset = load_dataset(cfg.queries_path, cfg.qrels_path, corpus)
    backend = _build_backend(cfg, corpus)

    if args.parameter == "top_n":
        rqs = _load_rqs(cfg, dataset)
        # Paragraph scores do not depend on n; compute once per query.
        per_query_scores = {rq.qid: backend.paragraph_scores(rq) for rq in rqs}

        def run_fn(n: int):
            return {
                qid: scoring.aggregate(corpus, scores, qid, n).ids()
                for qid, scores in per_query_scores.items()
            }
    else:
        _require(cfg, "cache_path")
        gateway = LlmGateway.from_env(cfg.cache_path, cache_only=True)
        destination_names = [d.name for d in corpus.destinations]
        options = cfg.prompt_options()
        top_n = cfg.effective_top_n()
        scfg = scoring.ScoringConfig(retriever=cfg.retriever.split("-")[0], top_n=top_n)

        def run_fn(k: int):
            rankings = {}
            for query in dataset.queries:
                rq = reformulate(
                    query, ReformMethod.EQR, k=k, options=options,
                    gateway=gateway, destination_names=destination_names,
                )
                rankings[query.qid] = scoring.rank_destinations(rq, corpus, backend, scfg).ids()
            return rankings

    result = evaluation.sweep(args.parameter, values, run_fn, dataset, metrics)
    out = Path(cfg.output_dir) / "sweep.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    evaluation.save_sweep_csv(result, out)
    print(f"wrote {len(values)}-row sweep to {out}")
    return EXIT_OK


def cmd_cache_stats(args: argparse.Namespace) -> int:
    stats = cache_stats(args.cache)
    models = ", ".join(sorted(stats["models"])) or "-"
    print(f"entries: {stats['entries']}")
    print(f"models: {models}")
    return EXIT_OK


# --- argument parsing ---

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--corpus", dest="corpus_path")
    parser.add_argument("--queries", dest="queries_path")
    parser.add_argument("--qrels", dest="qrels_path")
    parser.add_argument("--cache", dest="cache_path")
    parser.add_argument("--embeddings", dest="embeddings_path")
    parser.add_argument("--query-embeddings", dest="query_embeddings_path")
    parser.add_argument("--reformulated", dest="reformulated_path")
    parser.add_argument("--method", choices=[m.value for m in ReformMethod])
    parser.add_argument("--retriever", choices=sorted(scoring.DEFAULT_TOP_N))
    parser.add_argument("--top-n", dest="top_n", type=int)
    parser.add_argument("--k", dest="k_subtopics", type=int)
    parser.add_argument("--few-shot", dest="few_shot", action="store_true", default=None)
    parser.add_argument("--no-few-shot", dest="few_shot", action="store_false")
    parser.add_argument("--dest-list", dest="dest_list", action="store_true", default=None)
    parser.add_argument("--no-dest-list", dest="dest_list", action="store_false")
    parser.add_argument("--cache-only", dest="cache_only", action="store_true", default=None)
    parser.add_argument("--out", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="destrank",
        description="Query-driven travel destination retrieval benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="convert a raw page dump to corpus.jsonl")
    p.add_argument("--pages", required=True, help="pages.jsonl with {name, text} rows")
    p.add_argument("--out", required=True, help="output corpus.jsonl path")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("reformulate", help="reformulate all dataset queries")
    _add_config_flags(p)
    p.set_defaults(func=cmd_reformulate)

    p = sub.add_parser("run", help="rank destinations for every query")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="compute metrics and write the report")
    _add_config_flags(p)
    p.add_argument("--results", nargs="+", required=True, help="results.jsonl file(s)")
    p.add_argument("--baseline", help="baseline results.jsonl for significance tests")
    p.add_argument("--metrics", help="comma-separated metric list")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="sweep top_n or k_subtopics")
    _add_config_flags(p)
    p.add_argument("--parameter", required=True)
    p.add_argument("--range", required=True, help="inclusive LO:HI")
    p.add_argument("--metrics", help="comma-separated metric list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cache-stats", help="summarize an LLM response cache")
    p.add_argument("--cache", required=True)
    p.set_defaults(func=cmd_cache_stats)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DestrankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
