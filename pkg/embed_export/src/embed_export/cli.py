"""embed-export command line: encode a corpus or query file, or serve /embed."""
from __future__ import annotations

import argparse
import errno
import logging
import sys
from pathlib import Path

from . import export
from .encoders import ENCODERS, Encoder, get_spec

log = logging.getLogger("embed_export")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-export")
    sub = parser.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus", help="encode every corpus paragraph")
    corpus.add_argument("--model", required=True, choices=sorted(ENCODERS))
    corpus.add_argument("--corpus", required=True)
    corpus.add_argument("--out", required=True)

    queries = sub.add_parser("queries", help="encode rendered reformulated queries")
    queries.add_argument("--model", required=True, choices=sorted(ENCODERS))
    queries.add_argument("--reformulated", required=True)
    queries.add_argument("--out", required=True)

    serve = sub.add_parser("serve", help="serve vectors over POST /embed")
    serve.add_argument("--model", required=True, choices=sorted(ENCODERS))
    serve.add_argument("--port", type=int, default=8000)
    return parser


def load_encoder(alias: str) -> Encoder:
    try:
        return Encoder(get_spec(alias))
    except Exception as exc:
        print(f"error: could not load encoder {alias!r}: {exc}", file=sys.stderr)
        raise SystemExit(1)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        from .server import serve

        encoder = load_encoder(args.model)
        try:
            serve(encoder, args.port)
        except OSError as exc:
            if exc.errno == errno.EADDRINUSE:
                print(f"error: port {args.port} is already in use", file=sys.stderr)
                return 1
            raise
        return 0

    in_path = Path(args.corpus if args.command == "corpus" else args.reformulated)
    if not in_path.exists():
        print(f"error: {in_path} does not exist", file=sys.stderr)
        return 2
    try:
        pairs = (
            export.read_corpus_texts(in_path)
            if args.command == "corpus"
            else export.read_query_texts(in_path)
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    encoder = load_encoder(args.model)
    count = export.export(encoder, pairs, args.out)
    log.info("wrote %d vectors (dim %d) to %s", count, encoder.spec.dim, args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
