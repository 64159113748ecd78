"""Command line entry points.

Subcommands:

    validate   check a dataset directory and print an inventory
    plan       emit an experiment plan (and optionally its prompt-text manifest)
    eval       run a plan and write tables, heatmap, and manifest
    stats      paired signed-rank comparison of two recall tables
    report     re-render a stored recall table
    fixture    generate synthetic datasets

Exit codes: 0 success, 1 data invariant violation, 2 missing or corrupt file,
3 malformed usage. Failures print a single JSON object to stderr carrying the
error class, the message, and the offending path when one is known.

The --data flag falls back to the PROMPTSTRATA_DATA_DIR environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from . import __version__
from .engine import ExperimentPlan, PRESET_NAMES, preset_plan
from .errors import (
    DataError,
    IoError,
    MissingBaseline,
    MissingEmbedding,
    PromptstrataError,
    UsageError,
)
from .fixtures import PlantedSpec, generate, generate_random_instance
from .jsonio import canonical_bytes, read_json, write_json
from .prompts import build_plan, plan_export
from .report import FORMATS, build_heatmap, render_table
from .runner import Bundle, evaluate, load_bundle, resolve_plan, write_outputs
from .stats import delta_summary, wilcoxon_signed_rank

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad flags through the usage exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _add_data_arg(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", help="dataset directory (default: $PROMPTSTRATA_DATA_DIR)")


def _add_edges_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--edges", default=None,
                     help="'preset' for the bundled quartiles, a JSON file path, "
                          "or omit to use edges.json / compute from the data")
    sub.add_argument("--edges-scope", default="all", choices=("all", "pool"),
                     help="income population for computed edges")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="promptstrata",
                     description="stratified recall evaluation over precomputed embeddings")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", parents=[], help="check a dataset directory")
    _add_data_arg(p)
    _add_edges_args(p)
    p.set_defaults(func=_cmd_validate)

    p = subs.add_parser("plan", help="emit an experiment plan")
    _add_data_arg(p)
    _add_edges_args(p)
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--family")
    p.add_argument("--name", default="custom")
    p.add_argument("--group-axes", default="")
    p.add_argument("--variant-axes", default="")
    p.add_argument("--languages", default="")
    p.add_argument("--filter-coarse", choices=("lower", "higher"))
    p.add_argument("--filter-classes", default="")
    p.add_argument("--filter-countries", default="")
    p.add_argument("--filter-continents", default="")
    p.add_argument("--pairing", choices=("native_language", "own_country"))
    p.add_argument("--aggregation", choices=("macro", "micro"), default="macro")
    p.add_argument("--restrict-gt", action="store_true")
    p.add_argument("--render-rows")
    p.add_argument("--out", help="plan JSON destination (default: stdout)")
    p.add_argument("--keys", help="also write the prompt-text manifest here")
    p.set_defaults(func=_cmd_plan)

    p = subs.add_parser("eval", help="run a plan over a dataset directory")
    _add_data_arg(p)
    _add_edges_args(p)
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--plan", dest="plan_path", help="plan JSON file")
    p.add_argument("--out", help="output directory (default: DATA/results)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--aggregation", choices=("macro", "micro"))
    p.add_argument("--restrict-gt", action="store_true", default=None)
    p.add_argument("--synonyms", help="synonym JSON overriding the bundled set")
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("stats", help="signed-rank test between two recall tables")
    p.add_argument("--baseline", required=True)
    p.add_argument("--intervention", required=True)
    p.add_argument("--deltas", action="store_true",
                   help="include the per-group delta list in the output")
    p.add_argument("--out", help="JSON destination (default: stdout)")
    p.set_defaults(func=_cmd_stats)

    p = subs.add_parser("report", help="re-render a stored recall table")
    p.add_argument("--table", required=True, help="recall_table.json path")
    p.add_argument("--format", default="md", choices=(*FORMATS, "heatmap"))
    p.add_argument("--row-axis")
    p.add_argument("--out", help="destination (default: stdout)")
    p.set_defaults(func=_cmd_report)

    p = subs.add_parser("fixture", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--random", action="store_true",
                   help="fully random instance instead of planted structure")
    p.add_argument("--topics", type=int, default=4)
    p.add_argument("--images-per-class", type=int, default=3)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--margin", type=float, default=0.3)
    p.add_argument("--noise-scale", type=float, default=0.9)
    p.add_argument("--mode", default="aligned", choices=("aligned", "orthogonal"))
    p.add_argument("--countries", default="",
                   help="comma-separated roster (default: a built-in mix)")
    p.set_defaults(func=_cmd_fixture)

    return parser


def _data_dir(args: argparse.Namespace) -> Path:
    given = args.data or os.environ.get("PROMPTSTRATA_DATA_DIR")
    if not given:
        raise UsageError("no dataset directory: pass --data or set PROMPTSTRATA_DATA_DIR")
    return Path(given)


def _load(args: argparse.Namespace, *, require_prompts: bool = True) -> Bundle:
    return load_bundle(
        _data_dir(args),
        edges=args.edges,
        edges_scope=args.edges_scope,
        synonyms_path=getattr(args, "synonyms", None),
        require_prompts=require_prompts,
    )


def _emit(payload: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _cmd_validate(args: argparse.Namespace) -> int:
    bundle = _load(args, require_prompts=False)
    for record in bundle.dataset.images:
        bundle.images.row_of(record.image_id)
    missing_baselines = []
    if bundle.prompts is not None:
        for topic in sorted({r.topic_id for r in bundle.dataset.pool()}):
            try:
                bundle.prompts.row_of(f"default|{topic}")
            except MissingEmbedding:
                missing_baselines.append(topic)
        if missing_baselines:
            raise MissingBaseline(missing_baselines[0])
    summary = {
        "records": len(bundle.dataset.images),
        "pool": len(bundle.dataset.pool()),
        "topics": len(bundle.dataset.topics.objective_ids()),
        "countries": len({r.country_code for r in bundle.dataset.images}),
        "image_rows": len(bundle.images.ids),
        "prompt_rows": len(bundle.prompts.ids) if bundle.prompts else 0,
        "translations": (
            {"languages": list(bundle.translations.languages()),
             "entries": len(bundle.translations.entries)}
            if bundle.translations else None
        ),
        "edges": bundle.edges.to_dict(),
        "edges_source": bundle.edges_source,
        "space_tag": bundle.images.space_tag,
    }
    _emit(canonical_bytes(summary), None)
    return 0


def _custom_plan(args: argparse.Namespace) -> ExperimentPlan:
    if not args.family:
        raise UsageError("plan needs --preset or --family")
    image_filter: dict[str, Any] = {}
    if args.filter_coarse:
        image_filter["coarse_income"] = args.filter_coarse
    if args.filter_classes:
        image_filter["income_classes"] = sorted(_csv_list(args.filter_classes))
    if args.filter_countries:
        image_filter["countries"] = sorted(_csv_list(args.filter_countries))
    if args.filter_continents:
        image_filter["continents"] = sorted(_csv_list(args.filter_continents))
    languages = _csv_list(args.languages)
    return ExperimentPlan(
        name=args.name,
        family=args.family,
        group_axes=_csv_list(args.group_axes),
        variant_axes=_csv_list(args.variant_axes),
        image_filter=image_filter,
        languages=languages or None,
        pairing=args.pairing,
        aggregation=args.aggregation,
        restrict_gt_to_group=args.restrict_gt,
        render_rows=args.render_rows,
    )


def _cmd_plan(args: argparse.Namespace) -> int:
    needs_data = args.preset is not None or args.keys is not None
    bundle = _load(args, require_prompts=False) if needs_data else None
    if args.preset:
        plan = preset_plan(args.preset, bundle.dataset, bundle.edges)
    else:
        plan = _custom_plan(args)
    if args.keys:
        families = ["default"]
        if plan.family != "default":
            families.append(plan.family)
        variants = build_plan(
            bundle.dataset,
            families,
            synonyms=bundle.synonyms,
            manifest=bundle.translations,
            languages=plan.languages,
        )
        write_json(args.keys, plan_export(variants))
    _emit(canonical_bytes(plan.to_dict()), args.out)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.workers < 1:
        raise UsageError(f"--workers must be >= 1, got {args.workers}")
    bundle = _load(args)
    plan = resolve_plan(
        bundle,
        preset=args.preset,
        plan_path=args.plan_path,
        aggregation=args.aggregation,
        restrict_gt=args.restrict_gt,
    )
    table = evaluate(bundle, plan, workers=args.workers)
    out_dir = Path(args.out) if args.out else _data_dir(args) / "results"
    manifest = write_outputs(bundle, plan, table, out_dir)
    _emit(canonical_bytes({
        "plan": plan.name,
        "rows": len(table.rows),
        "out": str(out_dir),
        "outputs": sorted(manifest["outputs"]),
    }), None)
    return 0


def _read_table_rows(path: str) -> list[dict[str, Any]]:
    obj = read_json(path)
    if not isinstance(obj, dict) or "groups" not in obj:
        raise DataError(f"{path}: not a recall table (no 'groups' key)")
    return obj["groups"]


def _cmd_stats(args: argparse.Namespace) -> int:
    base_obj = read_json(args.baseline)
    inter_obj = read_json(args.intervention)
    base_rows = _read_table_rows(args.baseline)
    inter_rows = _read_table_rows(args.intervention)
    deltas = delta_summary(base_rows, inter_rows)
    order = [canonical_bytes(d["axes"]) for d in deltas]
    by_axes_base = {canonical_bytes(r["axes"]): r["recall"] for r in base_rows}
    by_axes_inter = {canonical_bytes(r["axes"]): r["recall"] for r in inter_rows}
    a = [by_axes_base[k] for k in order]
    b = [by_axes_inter[k] for k in order]
    result = wilcoxon_signed_rank(a, b).to_dict()
    result["metadata"] = {
        "baseline_plan": (base_obj.get("plan") or {}).get("name"),
        "intervention_plan": (inter_obj.get("plan") or {}).get("name"),
        "groups": len(deltas),
    }
    if args.deltas:
        result["deltas"] = deltas
    _emit(canonical_bytes(result), args.out)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    table = read_json(args.table)
    if args.format == "heatmap":
        payload = build_heatmap(table).to_bytes()
    else:
        payload = render_table(table, args.format, row_axis=args.row_axis)
    _emit(payload, args.out)
    return 0


def _cmd_fixture(args: argparse.Namespace) -> int:
    if args.random:
        fixture = generate_random_instance(args.seed, args.out)
    else:
        kwargs: dict[str, Any] = {}
        if args.countries:
            kwargs["countries"] = _csv_list(args.countries)
        spec = PlantedSpec(
            seed=args.seed,
            n_topics=args.topics,
            images_per_class=args.images_per_class,
            dim=args.dim,
            margin=args.margin,
            noise_scale=args.noise_scale,
            prompt_mode=args.mode,
            **kwargs,
        )
        fixture = generate(spec, args.out)
    _emit(canonical_bytes({"out": str(fixture.directory), **dict(fixture.summary)}), None)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _print_error(exc)
        return 3
    except IoError as exc:
        _print_error(exc)
        return 2
    except DataError as exc:
        _print_error(exc)
        return 1
    except PromptstrataError as exc:
        _print_error(exc)
        return 1


def _print_error(exc: PromptstrataError) -> None:
    payload: dict[str, Any] = {"error": type(exc).__name__, "message": str(exc)}
    path = getattr(exc, "path", None)
    if path:
        payload["path"] = str(path)
    sys.stderr.write(canonical_bytes(payload).decode("utf-8"))
    sys.stderr.flush()


if __name__ == "__main__":
    raise SystemExit(main())
