"""Embedding and translation backends, selected purely by model tag.

* ``stub:<name>:<dim>`` (encoders) and ``stub:<name>`` (translators) are
  hermetic stand-ins: they map a content hash to a deterministic output, so
  pipelines, tests, and downstream contracts can run without model weights.
* Any other tag is treated as a Hugging Face model id and loaded through the
  optional ``[models]`` extra (see `hf`).

Model identifiers are configuration, not code: any encoder pair that produces
a shared embedding space works, provided image and prompt jobs use the same
tag. Objects implementing the `Encoder`/`Translator` protocols can be passed
to the pipeline directly to integrate models outside the Hugging Face APIs.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from PIL import Image

from .errors import ModelLoadFailure, TranslationFailure, UnreadableImage
from .languages import bundled_languages

__all__ = [
    "DEFAULT_ENCODER_TAG",
    "DEFAULT_TRANSLATOR_TAG",
    "Encoder",
    "Translator",
    "StubEncoder",
    "StubTranslator",
    "load_encoder",
    "load_translator",
    "pixel_signature",
]

DEFAULT_ENCODER_TAG = "visheratin/nllb-clip-large-siglip"
DEFAULT_TRANSLATOR_TAG = "facebook/nllb-200-distilled-600M"

_STUB_ENCODER_RE = re.compile(r"^stub:([A-Za-z0-9._-]+):([1-9][0-9]*)$")
_STUB_TRANSLATOR_RE = re.compile(r"^stub:([A-Za-z0-9._-]+)$")
_MODELS_HINT = "Hugging Face backends need the [models] extra (pip install 'promptstrata-extractor[models]')"


@runtime_checkable
class Encoder(Protocol):
    """A dual image/text encoder over one shared embedding space."""

    tag: str
    dim: int

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray: ...

    def encode_images(self, paths: Sequence[str | Path]) -> np.ndarray: ...


@runtime_checkable
class Translator(Protocol):
    tag: str

    def translate(self, text: str, language: str) -> str: ...


def pixel_signature(path: str | Path) -> bytes:
    """Decode an image to RGB and return its size-prefixed raw pixels.

    Hashing pixels rather than file bytes makes stub embeddings depend on
    image content, not on the container format or compression settings.
    """
    p = Path(path)
    if not p.is_file():
        raise UnreadableImage(p, "no such file")
    try:
        with Image.open(p) as img:
            rgb = img.convert("RGB")
            width, height = rgb.size
            raw = rgb.tobytes()
    except Exception as exc:  # decoding failures span many exception types
        raise UnreadableImage(p, f"{type(exc).__name__}: {exc}") from exc
    return f"{width}x{height}:".encode("ascii") + raw


def _seeded_unit(namespace: bytes, tag: str, payload: bytes, dim: int) -> np.ndarray:
    """A unit vector drawn deterministically from (namespace, tag, payload)."""
    digest = hashlib.blake2b(
        b"\x00".join([namespace, tag.encode("utf-8"), payload]), digest_size=16
    ).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "big")))
    vector = rng.standard_normal(dim)
    norm = float(np.sqrt(np.dot(vector, vector)))
    if norm == 0.0:
        vector[0] = 1.0
        norm = 1.0
    return vector / norm


@dataclass(frozen=True)
class StubEncoder:
    """Deterministic content-hash encoder for hermetic pipelines.

    Identical inputs produce identical rows on every run and platform; texts
    and images live in disjoint hash namespaces so they never collide.
    """

    tag: str
    dim: int
    preprocessing = "decode to RGB at native size; embeddings hash pixel content"

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dim))
        return np.stack([
            _seeded_unit(b"text", self.tag, t.encode("utf-8"), self.dim) for t in texts
        ])

    def encode_images(self, paths: Sequence[str | Path]) -> np.ndarray:
        if not paths:
            return np.empty((0, self.dim))
        return np.stack([
            _seeded_unit(b"image", self.tag, pixel_signature(p), self.dim) for p in paths
        ])


@dataclass(frozen=True)
class StubTranslator:
    """Deterministic stand-in translator: tags the text with the language."""

    tag: str = "stub:echo"
    supported: frozenset[str] = field(
        default_factory=lambda: frozenset(bundled_languages())
    )

    def translate(self, text: str, language: str) -> str:
        if language not in self.supported:
            raise TranslationFailure(
                None, language, f"not supported by {self.tag!r}"
            )
        return f"[{language}] {text}"


def load_encoder(tag: str) -> Encoder:
    """Resolve a model tag to an encoder (stub or Hugging Face)."""
    if tag.startswith("stub:"):
        match = _STUB_ENCODER_RE.match(tag)
        if not match:
            raise ModelLoadFailure(tag, "stub encoder tags look like 'stub:<name>:<dim>'")
        return StubEncoder(tag=tag, dim=int(match.group(2)))
    try:
        from .hf import HFEncoder
    except ImportError as exc:
        raise ModelLoadFailure(tag, _MODELS_HINT) from exc
    try:
        return HFEncoder.load(tag)
    except ModelLoadFailure:
        raise
    except Exception as exc:
        raise ModelLoadFailure(tag, f"{type(exc).__name__}: {exc}") from exc


def load_translator(tag: str) -> Translator:
    """Resolve a model tag to a translator (stub or Hugging Face)."""
    if tag.startswith("stub:"):
        if not _STUB_TRANSLATOR_RE.match(tag):
            raise ModelLoadFailure(tag, "stub translator tags look like 'stub:<name>'")
        return StubTranslator(tag=tag)
    try:
        from .hf import HFTranslator
    except ImportError as exc:
        raise ModelLoadFailure(tag, _MODELS_HINT) from exc
    try:
        return HFTranslator.load(tag)
    except ModelLoadFailure:
        raise
    except Exception as exc:
        raise ModelLoadFailure(tag, f"{type(exc).__name__}: {exc}") from exc
