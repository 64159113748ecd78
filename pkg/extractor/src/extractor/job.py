"""Extraction job configuration and its JSON mirror.

A job file is a JSON object with these fields (relative paths resolve against
the job file's own directory):

    model_tag             encoder tag shared by image and prompt embedding
    translator_tag        translation model tag (optional; NLLB by default)
    image_root            directory holding metadata.csv and the image files
    plan_path             prompt plan export consumed by prompt embedding
    languages             translation targets; [] means the bundled 40
    batch_size            inference batch size (embedding quality-neutral)
    out_dir               where stores and manifests are written
    allow_extra_languages opt-out of the bundled-language allowlist
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .backends import DEFAULT_ENCODER_TAG, DEFAULT_TRANSLATOR_TAG
from .errors import JobFileError
from .languages import bundled_languages
from .wire import read_json, write_canonical_json

__all__ = ["ExtractorJob", "load_job", "write_job", "template_job"]

_REQUIRED_FIELDS = ("model_tag", "image_root", "out_dir")
_ALL_FIELDS = frozenset((
    "model_tag", "translator_tag", "image_root", "plan_path",
    "languages", "batch_size", "out_dir", "allow_extra_languages",
))


@dataclass(frozen=True)
class ExtractorJob:
    model_tag: str
    image_root: Path
    out_dir: Path
    plan_path: Path | None = None
    languages: tuple[str, ...] = ()
    batch_size: int = 32
    translator_tag: str = DEFAULT_TRANSLATOR_TAG
    allow_extra_languages: bool = False

    def __post_init__(self) -> None:
        if not self.model_tag or not isinstance(self.model_tag, str):
            raise JobFileError("model_tag must be a non-empty string")
        if not self.translator_tag or not isinstance(self.translator_tag, str):
            raise JobFileError("translator_tag must be a non-empty string")
        if isinstance(self.batch_size, bool) or not isinstance(self.batch_size, int):
            raise JobFileError(f"batch_size must be an integer, got {self.batch_size!r}")
        if self.batch_size < 1:
            raise JobFileError(f"batch_size must be >= 1, got {self.batch_size}")
        if any(not isinstance(l, str) or not l for l in self.languages):
            raise JobFileError("languages must be non-empty strings")
        if len(set(self.languages)) != len(self.languages):
            raise JobFileError("languages contains duplicates")
        if not self.allow_extra_languages:
            extras = sorted(set(self.languages) - set(bundled_languages()))
            if extras:
                raise JobFileError(
                    f"languages {extras} are outside the bundled 40-language set; "
                    "set allow_extra_languages to use them"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_tag": self.model_tag,
            "translator_tag": self.translator_tag,
            "image_root": str(self.image_root),
            "plan_path": str(self.plan_path) if self.plan_path else None,
            "languages": list(self.languages),
            "batch_size": self.batch_size,
            "out_dir": str(self.out_dir),
            "allow_extra_languages": self.allow_extra_languages,
        }

    def translation_targets(self) -> tuple[str, ...]:
        """The job's languages, defaulting to the bundled set when empty."""
        return tuple(self.languages) or bundled_languages()


def _want(obj: Mapping[str, Any], key: str, kind: type, *, optional: bool = False) -> Any:
    value = obj.get(key)
    if value is None:
        if optional:
            return None
        raise JobFileError(f"job file is missing {key!r}")
    if kind is int and isinstance(value, bool):
        raise JobFileError(f"{key!r} must be {kind.__name__}, got {value!r}")
    if not isinstance(value, kind):
        raise JobFileError(f"{key!r} must be {kind.__name__}, got {value!r}")
    return value


def load_job(path: str | Path) -> ExtractorJob:
    """Load a job file; relative paths resolve against the file's directory."""
    p = Path(path)
    obj = read_json(p)
    if not isinstance(obj, dict):
        raise JobFileError(f"{p}: a job file is a JSON object", path=p)
    unknown = sorted(set(obj) - _ALL_FIELDS)
    if unknown:
        raise JobFileError(f"{p}: unknown job fields {unknown}", path=p)
    missing = [k for k in _REQUIRED_FIELDS if k not in obj]
    if missing:
        raise JobFileError(f"{p}: missing job fields {missing}", path=p)

    base = p.resolve().parent

    def _resolve(raw: str | None) -> Path | None:
        if raw is None:
            return None
        candidate = Path(raw)
        return candidate if candidate.is_absolute() else base / candidate

    languages = obj.get("languages", [])
    if not isinstance(languages, list):
        raise JobFileError(f"{p}: 'languages' must be a list", path=p)
    return ExtractorJob(
        model_tag=_want(obj, "model_tag", str),
        image_root=_resolve(_want(obj, "image_root", str)),
        out_dir=_resolve(_want(obj, "out_dir", str)),
        plan_path=_resolve(_want(obj, "plan_path", str, optional=True)),
        languages=tuple(languages),
        batch_size=obj.get("batch_size", 32),
        translator_tag=obj.get("translator_tag", DEFAULT_TRANSLATOR_TAG),
        allow_extra_languages=bool(obj.get("allow_extra_languages", False)),
    )


def write_job(job: ExtractorJob, path: str | Path) -> None:
    write_canonical_json(path, job.to_dict())


def template_job() -> dict[str, Any]:
    """A starter job dict with the documented default models."""
    return {
        "model_tag": DEFAULT_ENCODER_TAG,
        "translator_tag": DEFAULT_TRANSLATOR_TAG,
        "image_root": "data",
        "plan_path": "data/plan_keys.json",
        "languages": [],
        "batch_size": 32,
        "out_dir": "data",
        "allow_extra_languages": False,
    }
