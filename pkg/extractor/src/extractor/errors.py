"""Error types raised by the extraction pipeline.

Every error carries a CLI exit code: 3 for malformed usage or configuration,
2 for missing or unreadable inputs, 1 for everything else. `path` is set when
a concrete file is to blame so the CLI can report it.
"""

from __future__ import annotations

from pathlib import Path

__all__ = [
    "ExtractorError",
    "UsageError",
    "JobFileError",
    "MissingInput",
    "UnreadableImage",
    "ModelLoadFailure",
    "TranslationFailure",
]


class ExtractorError(Exception):
    """Base class for all pipeline failures."""

    exit_code = 1

    def __init__(self, message: str, *, path: str | Path | None = None):
        super().__init__(message)
        self.path = str(path) if path is not None else None


class UsageError(ExtractorError):
    """Bad command line."""

    exit_code = 3


class JobFileError(ExtractorError):
    """A job file, plan file, or catalog is malformed."""

    exit_code = 3


class MissingInput(ExtractorError):
    """An input file or directory does not exist."""

    exit_code = 2

    def __init__(self, path: str | Path):
        super().__init__(f"missing input: {path}", path=path)


class UnreadableImage(ExtractorError):
    """An image file is absent or cannot be decoded."""

    exit_code = 2

    def __init__(self, path: str | Path, reason: str):
        super().__init__(f"unreadable image {path}: {reason}", path=path)


class ModelLoadFailure(ExtractorError):
    """A model tag cannot be resolved to a working backend."""

    def __init__(self, tag: str, reason: str):
        super().__init__(f"cannot load model {tag!r}: {reason}")
        self.tag = tag


class TranslationFailure(ExtractorError):
    """A (topic, language) pair could not be translated."""

    def __init__(self, topic_id: str | None, language: str, reason: str = ""):
        pair = f"({topic_id!r}, {language!r})" if topic_id else repr(language)
        suffix = f": {reason}" if reason else ""
        super().__init__(f"translation failed for {pair}{suffix}")
        self.topic_id = topic_id
        self.language = language
