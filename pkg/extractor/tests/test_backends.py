"""Backend registry and the deterministic stub encoders/translators."""

from __future__ import annotations

import sys

import numpy as np
import pytest
from PIL import Image

from extractor import (
    ModelLoadFailure,
    StubTranslator,
    TranslationFailure,
    load_encoder,
    load_translator,
)
from conftest import write_image


class TestStubEncoderTags:
    def test_tag_carries_the_dimension(self):
        encoder = load_encoder("stub:dual:48")
        assert encoder.dim == 48
        assert encoder.tag == "stub:dual:48"

    @pytest.mark.parametrize("tag", [
        "stub:dual", "stub:dual:0", "stub:dual:-3", "stub:dual:abc",
        "stub::8", "stub:dual:8:extra",
    ])
    def test_malformed_stub_tags_are_refused(self, tag):
        with pytest.raises(ModelLoadFailure):
            load_encoder(tag)


class TestStubEncoderDeterminism:
    def test_texts_embed_identically_on_every_call(self):
        encoder = load_encoder("stub:dual:32")
        first = encoder.encode_texts(["This is a photo of kitchen sink"])
        second = encoder.encode_texts(["This is a photo of kitchen sink"])
        np.testing.assert_array_equal(first, second)

    def test_rows_are_unit_norm(self):
        encoder = load_encoder("stub:dual:32")
        matrix = encoder.encode_texts(["a", "b", "c"])
        norms = np.sqrt((matrix ** 2).sum(axis=1))
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_distinct_texts_get_distinct_embeddings(self):
        encoder = load_encoder("stub:dual:32")
        matrix = encoder.encode_texts(["front door", "front  door"])
        assert float(matrix[0] @ matrix[1]) < 0.999

    def test_different_tags_decorrelate(self):
        a = load_encoder("stub:a:32").encode_texts(["same text"])[0]
        b = load_encoder("stub:b:32").encode_texts(["same text"])[0]
        assert abs(float(a @ b)) < 0.999

    def test_same_pixels_embed_identically_across_file_formats(self, tmp_path):
        png = write_image(tmp_path / "x.png", seed=3)
        with Image.open(png) as img:
            img.convert("RGB").save(tmp_path / "x.bmp")
        encoder = load_encoder("stub:dual:16")
        rows = encoder.encode_images([png, tmp_path / "x.bmp"])
        np.testing.assert_array_equal(rows[0], rows[1])

    def test_empty_batches_yield_empty_matrices(self):
        encoder = load_encoder("stub:dual:8")
        assert encoder.encode_texts([]).shape == (0, 8)
        assert encoder.encode_images([]).shape == (0, 8)


class TestStubTranslator:
    def test_deterministic_and_language_specific(self):
        translator = load_translator("stub:echo")
        once = translator.translate("This is a photo of front door", "fr")
        again = translator.translate("This is a photo of front door", "fr")
        other = translator.translate("This is a photo of front door", "sw")
        assert once == again
        assert once != other
        assert "fr" in once and "front door" in once

    def test_unsupported_language_fails(self):
        translator = load_translator("stub:echo")
        with pytest.raises(TranslationFailure) as err:
            translator.translate("text", "qq")
        assert err.value.language == "qq"

    def test_supported_set_is_configurable(self):
        translator = StubTranslator(tag="stub:echo", supported=frozenset({"xx"}))
        assert translator.translate("text", "xx") == "[xx] text"

    def test_malformed_stub_tag_refused(self):
        with pytest.raises(ModelLoadFailure):
            load_translator("stub:echo:extra")


class TestRealModelTags:
    @pytest.fixture
    def no_model_deps(self, monkeypatch):
        """Make the heavyweight backends unimportable for this test."""
        monkeypatch.delitem(sys.modules, "extractor.hf", raising=False)
        monkeypatch.setitem(sys.modules, "transformers", None)
        monkeypatch.setitem(sys.modules, "torch", None)

    def test_encoder_needs_the_models_extra(self, no_model_deps):
        with pytest.raises(ModelLoadFailure, match=r"\[models\]"):
            load_encoder("example-org/some-clip-model")

    def test_translator_needs_the_models_extra(self, no_model_deps):
        with pytest.raises(ModelLoadFailure, match=r"\[models\]"):
            load_translator("example-org/some-translation-model")
