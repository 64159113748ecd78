"""Embedding and translation extraction for the promptstrata engine.

This package produces the files the evaluation engine consumes — image and
prompt embedding stores plus the translation manifest — speaking to the
engine only through its documented on-disk formats and CLI.
"""

from .backends import (
    DEFAULT_ENCODER_TAG,
    DEFAULT_TRANSLATOR_TAG,
    Encoder,
    StubEncoder,
    StubTranslator,
    Translator,
    load_encoder,
    load_translator,
)
from .errors import (
    ExtractorError,
    JobFileError,
    MissingInput,
    ModelLoadFailure,
    TranslationFailure,
    UnreadableImage,
    UsageError,
)
from .job import ExtractorJob, load_job, template_job, write_job
from .languages import bundled_languages
from .pipeline import (
    DEFAULT_PROMPT_TEMPLATE,
    OpResult,
    embed_images,
    embed_prompts,
    translate_prompts,
    write_translation_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_ENCODER_TAG",
    "DEFAULT_PROMPT_TEMPLATE",
    "DEFAULT_TRANSLATOR_TAG",
    "Encoder",
    "ExtractorError",
    "ExtractorJob",
    "JobFileError",
    "MissingInput",
    "ModelLoadFailure",
    "OpResult",
    "StubEncoder",
    "StubTranslator",
    "TranslationFailure",
    "Translator",
    "UnreadableImage",
    "UsageError",
    "bundled_languages",
    "embed_images",
    "embed_prompts",
    "load_encoder",
    "load_job",
    "load_translator",
    "template_job",
    "translate_prompts",
    "write_job",
    "write_translation_manifest",
    "__version__",
]
