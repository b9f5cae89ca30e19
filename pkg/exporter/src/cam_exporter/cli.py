"""CLI for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from cam.errors import CamError

from .export import DescriptionTable, export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cam-export-embeddings",
        description="Embed a (id, description) CSV into an embedding table JSON",
    )
    parser.add_argument("--input", required=True, help="CSV of (id, description)")
    parser.add_argument("--output", required=True, help="embedding table JSON to write")
    parser.add_argument(
        "--model",
        default="paraphrase-multilingual-MiniLM-L12-v2",
        help="sentence-transformers model name, or hashed-ngram-<dim> for the offline backend",
    )
    args = parser.parse_args(argv)
    try:
        table = DescriptionTable.from_csv(args.input)
        embeddings = export(table, args.model)
        embeddings.save(args.output)
    except CamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # model download/load failures
        print(f"error: embedding model failed: {exc}", file=sys.stderr)
        return 1
    print(f"{len(embeddings.vectors)} vectors of dimension {embeddings.dim} written to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
