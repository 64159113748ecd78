"""Shared fixtures: tiny images and a 10-image/3-topic/2-language corpus."""

from __future__ import annotations

import csv
import random
from pathlib import Path

import pytest
from PIL import Image

# (image_id, country_code, monthly_income_usd, topic_id). Two countries with
# distinct major languages (BI: fr, KE: sw), incomes spread so both countries
# land images in the lower quartiles under computed edges.
CORPUS_ROWS = [
    ("img01", "BI", "40.0", "t1"),
    ("img02", "KE", "50.0", "t1"),
    ("img03", "BI", "60.0", "t2"),
    ("img04", "KE", "70.0", "t2"),
    ("img05", "BI", "80.0", "t3"),
    ("img06", "KE", "320.0", "t3"),
    ("img07", "BI", "300.0", "t1"),
    ("img08", "KE", "800.0", "t1"),
    ("img09", "BI", "900.0", "t2"),
    ("img10", "KE", "1100.0", "t3"),
]

CORPUS_TOPICS = [
    ("t1", "kitchen sink", "0"),
    ("t2", "front door", "0"),
    ("t3", "cooking pots", "0"),
]


def write_image(path: Path, seed: int, size: tuple[int, int] = (24, 24)) -> Path:
    """A small deterministic RGB noise image."""
    rng = random.Random(seed)
    img = Image.new("RGB", size)
    img.putdata([
        (rng.randrange(256), rng.randrange(256), rng.randrange(256))
        for _ in range(size[0] * size[1])
    ])
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path)
    return path


def build_corpus(root: Path) -> Path:
    """Materialize the toy corpus: metadata.csv, topics.csv, images/*.png."""
    root.mkdir(parents=True, exist_ok=True)
    with (root / "metadata.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "country_code", "monthly_income_usd", "topic_id"])
        writer.writerows(CORPUS_ROWS)
    with (root / "topics.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["topic_id", "label", "subjective"])
        writer.writerows(CORPUS_TOPICS)
    for i, (image_id, *_rest) in enumerate(CORPUS_ROWS):
        write_image(root / "images" / f"{image_id}.png", seed=i)
    return root


@pytest.fixture
def corpus(tmp_path: Path) -> Path:
    return build_corpus(tmp_path / "corpus")
