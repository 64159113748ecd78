"""The bundled target-language list.

The evaluation engine's country table records one major non-English language
per country; the distinct codes form the 40-language set that translation
jobs target by default. The list ships as package data so jobs can be
validated without the engine installed.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

__all__ = ["bundled_languages"]


@lru_cache(maxsize=1)
def bundled_languages() -> tuple[str, ...]:
    """The 40 ISO 639-1 codes, sorted."""
    ref = resources.files("extractor.data").joinpath("languages.json")
    return tuple(json.loads(ref.read_text(encoding="utf-8")))
