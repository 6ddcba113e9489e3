"""Command-line entry points: export to a store file, or serve over HTTP."""
from __future__ import annotations

import argparse
import sys

from embed_exporter.export import ExportJob, export
from embed_exporter.model import POOLINGS, EmbeddingModel, ModelLoadError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-exporter")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="embed a text file into an EMBV store")
    exp.add_argument("--model", required=True, help="model identifier or path")
    exp.add_argument("--input", required=True, help="UTF-8 text file, one text per line")
    exp.add_argument("--output", required=True, help="EMBV store path to write")
    exp.add_argument("--pooling", choices=POOLINGS, default="mean")
    exp.add_argument("--batch-size", type=int, default=32)

    srv = sub.add_parser("serve", help="run the POST /embed HTTP service")
    srv.add_argument("--model", required=True, help="model identifier or path")
    srv.add_argument("--pooling", choices=POOLINGS, default="mean")
    srv.add_argument("--port", type=int, default=8756)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            job = ExportJob(
                input_path=args.input,
                model_id=args.model,
                output_path=args.output,
                pooling=args.pooling,
                batch_size=args.batch_size,
            )
            count = export(job)
            print(f"wrote {count} vectors to {args.output}")
        else:
            from embed_exporter.service import serve

            serve(EmbeddingModel(args.model, pooling=args.pooling), args.port)
    except (ModelLoadError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
