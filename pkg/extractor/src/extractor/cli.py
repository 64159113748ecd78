"""Command line entry points.

Subcommands:

    images        embed every image named in metadata.csv
    prompts       embed the prompt texts of a plan export
    translate     build the translation manifest for a topic catalog
    job-template  emit a starter job file

Exit codes: 0 success, 1 backend or data failure, 2 missing or unreadable
input, 3 malformed usage or configuration. Failures print a single JSON
object to stderr with the error class, the message, and the offending path
when one is known. Successes print a one-object JSON summary to stdout.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from .errors import ExtractorError, UsageError
from .job import load_job, template_job
from .pipeline import embed_images, embed_prompts, write_translation_manifest
from .wire import canonical_dumps, read_json, write_canonical_json

__all__ = ["main", "build_parser"]

__version__ = "0.1.0"


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad flags through the usage exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="promptstrata-extract",
        description="embedding and translation manifest extraction",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("images", help="embed the images of a metadata CSV")
    p.add_argument("--job", required=True, help="job file (JSON)")
    p.set_defaults(func=_cmd_images)

    p = subs.add_parser("prompts", help="embed the prompt texts of a plan export")
    p.add_argument("--job", required=True, help="job file (JSON)")
    p.add_argument("--plan", help="plan export overriding the job's plan_path")
    p.set_defaults(func=_cmd_prompts)

    p = subs.add_parser("translate", help="build the translation manifest")
    p.add_argument("--job", required=True, help="job file (JSON)")
    p.add_argument("--topics", required=True, help="topic catalog CSV")
    p.add_argument("--chrf", help="JSON object of language -> chrf score, "
                                  "copied into the manifest as metadata")
    p.set_defaults(func=_cmd_translate)

    p = subs.add_parser("job-template", help="emit a starter job file")
    p.add_argument("--out", help="destination (default: stdout)")
    p.set_defaults(func=_cmd_job_template)

    return parser


def _emit(payload: dict[str, Any]) -> None:
    sys.stdout.write(canonical_dumps(payload))
    sys.stdout.flush()


def _cmd_images(args: argparse.Namespace) -> int:
    result = embed_images(load_job(args.job))
    _emit(result.to_dict())
    return 0


def _cmd_prompts(args: argparse.Namespace) -> int:
    job = load_job(args.job)
    if args.plan:
        job = replace(job, plan_path=Path(args.plan))
    result = embed_prompts(job)
    _emit(result.to_dict())
    return 0


def _cmd_translate(args: argparse.Namespace) -> int:
    job = load_job(args.job)
    chrf = None
    if args.chrf:
        raw = read_json(args.chrf)
        if not isinstance(raw, dict):
            raise UsageError(f"{args.chrf}: expected a JSON object of scores")
        chrf = {str(k): float(v) for k, v in raw.items()}
    result = write_translation_manifest(job, args.topics, chrf_scores=chrf)
    _emit(result.to_dict())
    return 0


def _cmd_job_template(args: argparse.Namespace) -> int:
    if args.out:
        write_canonical_json(args.out, template_job())
    else:
        _emit(template_job())
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ExtractorError as exc:
        report: dict[str, Any] = {
            "error": type(exc).__name__,
            "message": str(exc),
        }
        if exc.path is not None:
            report["path"] = exc.path
        sys.stderr.write(canonical_dumps(report))
        sys.stderr.flush()
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
