"""Extraction operations: store round-trips, determinism, counts, errors."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from extractor import (
    ExtractorJob,
    JobFileError,
    StubTranslator,
    TranslationFailure,
    UnreadableImage,
    bundled_languages,
    embed_images,
    embed_prompts,
    load_translator,
    translate_prompts,
    write_translation_manifest,
)
from extractor.wire import read_store
from conftest import build_corpus, write_image

TAG = "stub:dual:16"


def make_job(corpus: Path, **overrides) -> ExtractorJob:
    defaults = dict(
        model_tag=TAG, image_root=corpus, out_dir=corpus,
        translator_tag="stub:echo", batch_size=4,
    )
    defaults.update(overrides)
    return ExtractorJob(**defaults)


def write_plan(path: Path, rows) -> Path:
    path.write_text(json.dumps(rows), encoding="utf-8")
    return path


def default_rows(*topics) -> list[dict]:
    return [
        {"key": f"default|{t}", "family": "default", "topic_id": t,
         "text": f"This is a photo of {t}"}
        for t in topics
    ]


class TestEmbedImages:
    def test_store_round_trips_with_one_row_per_image(self, corpus):
        result = embed_images(make_job(corpus))
        assert result.rows == 10
        header, matrix = read_store(corpus / "images.f32")
        assert set(header) == {"dim", "rows", "ids", "normalized", "space_tag"}
        assert header["dim"] == 16
        assert header["rows"] == 10
        assert header["ids"] == [f"img{i:02d}" for i in range(1, 11)]
        assert header["normalized"] is True
        assert header["space_tag"] == TAG
        assert (corpus / "images.f32").stat().st_size == 10 * 16 * 4
        norms = np.sqrt((matrix.astype(np.float64) ** 2).sum(axis=1))
        assert np.abs(norms - 1.0).max() <= 1e-6

    def test_repeat_runs_are_byte_identical(self, corpus):
        job = make_job(corpus)
        embed_images(job)
        first = {
            name: hashlib.sha256((corpus / name).read_bytes()).hexdigest()
            for name in ("images.f32", "images.f32.json", "extract_manifest.json")
        }
        embed_images(job)
        second = {
            name: hashlib.sha256((corpus / name).read_bytes()).hexdigest()
            for name in first
        }
        assert first == second

    def test_payload_does_not_depend_on_output_location(self, tmp_path):
        corpus = build_corpus(tmp_path / "corpus")
        embed_images(make_job(corpus, out_dir=tmp_path / "a"))
        embed_images(make_job(corpus, out_dir=tmp_path / "b"))
        assert (tmp_path / "a" / "images.f32").read_bytes() == \
               (tmp_path / "b" / "images.f32").read_bytes()
        assert (tmp_path / "a" / "images.f32.json").read_bytes() == \
               (tmp_path / "b" / "images.f32.json").read_bytes()

    def test_reported_hashes_match_the_files(self, corpus):
        result = embed_images(make_job(corpus))
        for name, digest in result.outputs.items():
            assert hashlib.sha256((corpus / name).read_bytes()).hexdigest() == digest

    def test_corrupt_image_is_named(self, corpus):
        (corpus / "images" / "img03.png").write_bytes(b"this is not an image")
        with pytest.raises(UnreadableImage) as err:
            embed_images(make_job(corpus))
        assert "img03" in str(err.value)
        assert err.value.path is not None

    def test_missing_image_file_is_named(self, corpus):
        (corpus / "images" / "img07.png").unlink()
        with pytest.raises(UnreadableImage, match="img07"):
            embed_images(make_job(corpus))

    def test_images_may_sit_beside_the_metadata(self, corpus):
        for path in (corpus / "images").iterdir():
            path.rename(corpus / path.name)
        result = embed_images(make_job(corpus))
        assert result.rows == 10

    def test_empty_metadata_yields_an_empty_store(self, tmp_path):
        root = tmp_path / "empty"
        root.mkdir()
        (root / "metadata.csv").write_text(
            "image_id,country_code,monthly_income_usd,topic_id\n", encoding="utf-8"
        )
        result = embed_images(make_job(root))
        assert result.rows == 0
        header, matrix = read_store(root / "images.f32")
        assert header["rows"] == 0
        assert matrix.shape == (0, 16)


class TestEmbedPrompts:
    def test_one_row_per_default_prompt(self, corpus):
        plan = write_plan(corpus / "plan.json", default_rows("t1", "t2"))
        result = embed_prompts(make_job(corpus, plan_path=plan))
        assert result.rows == 2
        header, _ = read_store(corpus / "prompts.f32")
        assert header["ids"] == ["default|t1", "default|t2"]

    def test_row_ids_follow_plan_order(self, corpus):
        rows = default_rows("t2", "t1", "t3")
        plan = write_plan(corpus / "plan.json", rows)
        embed_prompts(make_job(corpus, plan_path=plan))
        header, _ = read_store(corpus / "prompts.f32")
        assert header["ids"] == ["default|t2", "default|t1", "default|t3"]

    def test_sixty_three_country_suffixes_embed_sixty_three_rows(self, corpus):
        codes = [f"{a}{b}" for a in "ABCDEFG" for b in "ABCDEFGHI"][:63]
        rows = [
            {"key": f"country|t1|{code}", "family": "country_suffix",
             "topic_id": "t1", "country_code": code,
             "text": f"This is a photo of kitchen sink from Country {code}"}
            for code in codes
        ]
        plan = write_plan(corpus / "plan.json", rows)
        result = embed_prompts(make_job(corpus, plan_path=plan))
        assert result.rows == 63
        header, matrix = read_store(corpus / "prompts.f32")
        assert header["ids"] == [f"country|t1|{code}" for code in codes]
        assert matrix.shape == (63, 16)

    def test_duplicate_plan_keys_rejected(self, corpus):
        plan = write_plan(corpus / "plan.json", default_rows("t1", "t1"))
        with pytest.raises(JobFileError, match="duplicate"):
            embed_prompts(make_job(corpus, plan_path=plan))

    def test_job_without_plan_path_rejected(self, corpus):
        with pytest.raises(JobFileError, match="plan_path"):
            embed_prompts(make_job(corpus))

    def test_image_and_prompt_stores_share_space_tag_and_dim(self, corpus):
        plan = write_plan(corpus / "plan.json", default_rows("t1"))
        job = make_job(corpus, plan_path=plan)
        embed_images(job)
        embed_prompts(job)
        images_header, _ = read_store(corpus / "images.f32")
        prompts_header, _ = read_store(corpus / "prompts.f32")
        assert images_header["space_tag"] == prompts_header["space_tag"]
        assert images_header["dim"] == prompts_header["dim"]

    def test_batch_size_cannot_change_the_payload(self, corpus):
        plan = write_plan(corpus / "plan.json", default_rows("t1", "t2", "t3"))
        embed_prompts(make_job(corpus, plan_path=plan, batch_size=1))
        one = (corpus / "prompts.f32").read_bytes()
        embed_prompts(make_job(corpus, plan_path=plan, batch_size=64))
        assert (corpus / "prompts.f32").read_bytes() == one


class TestTranslate:
    def test_manifest_covers_every_topic_language_pair(self, corpus):
        job = make_job(corpus, languages=("fr", "sw"))
        result = write_translation_manifest(job, corpus / "topics.csv")
        assert result.rows == 6
        manifest = json.loads((corpus / "translations.json").read_text("utf-8"))
        assert set(manifest) == {"source_model_tag", "entries", "chrf_scores"}
        assert manifest["source_model_tag"] == "stub:echo"
        assert set(manifest["entries"]) == {
            f"{t}|{lang}" for t in ("t1", "t2", "t3") for lang in ("fr", "sw")
        }
        assert manifest["entries"]["t1|fr"] == "[fr] This is a photo of kitchen sink"

    def test_entry_count_scales_multiplicatively(self):
        topics = {f"t{i:03d}": f"label {i}" for i in range(272)}
        entries = translate_prompts(
            topics, bundled_languages(), translator=load_translator("stub:echo")
        )
        assert len(entries) == 272 * 40 == 10880

    def test_unsupported_language_reports_the_pair(self):
        translator = StubTranslator()
        with pytest.raises(TranslationFailure) as err:
            translate_prompts({"t1": "door"}, ("qq",), translator=translator)
        assert err.value.topic_id == "t1"
        assert err.value.language == "qq"

    def test_chrf_scores_are_copied_verbatim(self, corpus):
        job = make_job(corpus, languages=("fr",))
        write_translation_manifest(
            job, corpus / "topics.csv", chrf_scores={"fr": 0.62}
        )
        manifest = json.loads((corpus / "translations.json").read_text("utf-8"))
        assert manifest["chrf_scores"] == {"fr": 0.62}

    def test_repeat_runs_are_byte_identical(self, corpus):
        job = make_job(corpus, languages=("fr", "sw"))
        write_translation_manifest(job, corpus / "topics.csv")
        first = (corpus / "translations.json").read_bytes()
        write_translation_manifest(job, corpus / "topics.csv")
        assert (corpus / "translations.json").read_bytes() == first


class TestManifestRecord:
    def test_every_operation_is_recorded(self, corpus):
        plan = write_plan(corpus / "plan.json", default_rows("t1"))
        job = make_job(corpus, plan_path=plan, languages=("fr",))
        write_translation_manifest(job, corpus / "topics.csv")
        embed_images(job)
        embed_prompts(job)
        manifest = json.loads((corpus / "extract_manifest.json").read_text("utf-8"))
        assert set(manifest) == {"images", "prompts", "translations"}
        assert manifest["images"]["model_tag"] == TAG
        assert manifest["images"]["rows"] == 10
        assert "preprocessing" in manifest["images"]
        assert manifest["prompts"]["rows"] == 1
        assert manifest["translations"]["entries"] == 3  # every catalog topic x fr
        assert manifest["translations"]["languages"] == ["fr"]
