"""Hugging Face backends for the optional ``[models]`` extra.

`HFEncoder` wraps any model exposing the CLIP-style API
(``get_text_features``/``get_image_features`` with an AutoProcessor and
AutoTokenizer); `HFTranslator` wraps seq2seq translation models using
FLORES-200 target codes. Both run in inference mode on CPU unless the model
itself moves tensors. Models outside these APIs should be integrated by
passing a custom `Encoder`/`Translator` object to the pipeline instead.

This module imports heavyweight dependencies, so callers import it lazily and
convert ImportError into ModelLoadFailure.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from transformers import AutoModel, AutoModelForSeq2SeqLM, AutoProcessor, AutoTokenizer

import numpy as np
import torch
from PIL import Image

from .errors import ModelLoadFailure, TranslationFailure, UnreadableImage

__all__ = ["HFEncoder", "HFTranslator", "FLORES_CODES"]

# ISO 639-1 -> FLORES-200 codes for the bundled 40-language set. Languages
# outside this table can be requested with an explicit FLORES code (any
# language token containing "_" is passed through untouched).
FLORES_CODES = {
    "ar": "arb_Arab", "bn": "ben_Beng", "cs": "ces_Latn", "da": "dan_Latn",
    "de": "deu_Latn", "ee": "ewe_Latn", "es": "spa_Latn", "fa": "pes_Arab",
    "fr": "fra_Latn", "ha": "hau_Latn", "hi": "hin_Deva", "ht": "hat_Latn",
    "id": "ind_Latn", "it": "ita_Latn", "km": "khm_Khmr", "ko": "kor_Hang",
    "ky": "kir_Cyrl", "mn": "khk_Cyrl", "my": "mya_Mymr", "ne": "npi_Deva",
    "nl": "nld_Latn", "om": "gaz_Latn", "pt": "por_Latn", "ro": "ron_Latn",
    "ru": "rus_Cyrl", "rw": "kin_Latn", "si": "sin_Sinh", "sn": "sna_Latn",
    "so": "som_Latn", "sr": "srp_Cyrl", "sv": "swe_Latn", "sw": "swh_Latn",
    "th": "tha_Thai", "tl": "tgl_Latn", "tr": "tur_Latn", "uk": "ukr_Cyrl",
    "ur": "urd_Arab", "vi": "vie_Latn", "zh": "zho_Hans", "zu": "zul_Latn",
}


def _unit_rows(features: "torch.Tensor") -> np.ndarray:
    matrix = features.detach().cpu().to(torch.float64).numpy()
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    return matrix / norms[:, None]


class HFEncoder:
    """CLIP-API dual encoder loaded from a Hugging Face model id."""

    def __init__(self, tag: str, model, processor, tokenizer, dim: int):
        self.tag = tag
        self.dim = dim
        self.preprocessing = f"AutoProcessor defaults for {tag}"
        self._model = model
        self._processor = processor
        self._tokenizer = tokenizer

    @classmethod
    def load(cls, tag: str) -> "HFEncoder":
        model = AutoModel.from_pretrained(tag)
        processor = AutoProcessor.from_pretrained(tag)
        tokenizer = AutoTokenizer.from_pretrained(tag)
        if not hasattr(model, "get_text_features") or not hasattr(model, "get_image_features"):
            raise ModelLoadFailure(
                tag, "model does not expose the CLIP-style feature API; "
                     "pass a custom Encoder object instead"
            )
        model.eval()
        with torch.inference_mode():
            probe = model.get_text_features(
                **tokenizer(["probe"], padding=True, return_tensors="pt")
            )
        return cls(tag, model, processor, tokenizer, dim=int(probe.shape[-1]))

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dim))
        with torch.inference_mode():
            features = self._model.get_text_features(
                **self._tokenizer(list(texts), padding=True, return_tensors="pt")
            )
        return _unit_rows(features)

    def encode_images(self, paths: Sequence[str | Path]) -> np.ndarray:
        if not paths:
            return np.empty((0, self.dim))
        images = []
        for p in paths:
            path = Path(p)
            if not path.is_file():
                raise UnreadableImage(path, "no such file")
            try:
                with Image.open(path) as img:
                    images.append(img.convert("RGB"))
            except Exception as exc:
                raise UnreadableImage(path, f"{type(exc).__name__}: {exc}") from exc
        with torch.inference_mode():
            features = self._model.get_image_features(
                **self._processor(images=images, return_tensors="pt")
            )
        return _unit_rows(features)


class HFTranslator:
    """Seq2seq translator driven by FLORES-200 target codes."""

    def __init__(self, tag: str, model, tokenizer):
        self.tag = tag
        self._model = model
        self._tokenizer = tokenizer

    @classmethod
    def load(cls, tag: str) -> "HFTranslator":
        tokenizer = AutoTokenizer.from_pretrained(tag, src_lang="eng_Latn")
        model = AutoModelForSeq2SeqLM.from_pretrained(tag)
        model.eval()
        return cls(tag, model, tokenizer)

    def translate(self, text: str, language: str) -> str:
        target = language if "_" in language else FLORES_CODES.get(language)
        if target is None:
            raise TranslationFailure(
                None, language,
                "no FLORES-200 code on record; pass one explicitly (e.g. 'fra_Latn')",
            )
        try:
            inputs = self._tokenizer([text], return_tensors="pt")
            bos = self._tokenizer.convert_tokens_to_ids(target)
            with torch.inference_mode():
                generated = self._model.generate(
                    **inputs, forced_bos_token_id=bos, max_new_tokens=64,
                    num_beams=1, do_sample=False,
                )
            out = self._tokenizer.batch_decode(generated, skip_special_tokens=True)
        except Exception as exc:
            raise TranslationFailure(
                None, language, f"{type(exc).__name__}: {exc}"
            ) from exc
        if not out or not out[0].strip():
            raise TranslationFailure(None, language, "model produced empty output")
        return out[0]
