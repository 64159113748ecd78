"""Shared test scaffolding: deterministic hypothesis profile and tiny builders."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from promptstrata import (
    CountryProfile,
    Dataset,
    EmbeddingStore,
    ImageRecord,
    TopicCatalog,
)
from promptstrata.ingest import TopicEntry

settings.register_profile(
    "suite",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


PROFILES = {
    "BI": CountryProfile("BI", "Burundi", "Africa", "poor", "fr"),
    "CH": CountryProfile("CH", "Switzerland", "Europe", "rich", "de"),
    "IN": CountryProfile("IN", "India", "Asia", "low-mid", "hi"),
    "US": CountryProfile("US", "United States", "America", "rich", "es"),
    "GB": CountryProfile("GB", "United Kingdom", "Europe", "rich", None),
}


def make_dataset(rows, topics=None, profiles=None) -> Dataset:
    """rows: (image_id, country, income, topic); topics: {id: (label, subjective)}."""
    if topics is None:
        ids = sorted({r[3] for r in rows})
        topics = {t: (f"thing {t}", False) for t in ids}
    catalog = TopicCatalog({t: TopicEntry(label, subj) for t, (label, subj) in topics.items()})
    records = tuple(sorted((ImageRecord(*r) for r in rows), key=lambda r: r.image_id))
    return Dataset(records, catalog, profiles or PROFILES)


def unit_store(ids, vectors, space_tag="test", normalized=True) -> EmbeddingStore:
    matrix = np.asarray(vectors, dtype=np.float64)
    if normalized:
        matrix = matrix / np.sqrt(np.einsum("ij,ij->i", matrix, matrix))[:, None]
    return EmbeddingStore(matrix.shape[1], tuple(ids), matrix,
                          normalized=normalized, space_tag=space_tag)


@pytest.fixture
def planted_dir(tmp_path):
    from promptstrata.fixtures import PlantedSpec, generate

    spec = PlantedSpec(seed=11, n_topics=3, images_per_class=2, dim=6)
    return generate(spec, tmp_path / "planted"), tmp_path / "planted"
