"""Income stratification and geographic grouping.

Images are binned into four income classes by nearest-rank quartile edges over
monthly household income; countries carry a World Bank income class and a
continent from the bundled reference table. Both four-way classifications
collapse onto the same coarse lower/higher split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DegenerateDistribution,
    MissingFile,
    SchemaViolation,
    TooFewValues,
    UnknownCountry,
    WrongStratumKind,
)
from .jsonio import read_json

__all__ = [
    "INCOME_CLASSES",
    "CONTINENTS",
    "COARSE_GROUPS",
    "StratumKind",
    "Stratum",
    "QuartileEdges",
    "compute_quartile_edges",
    "assign_income_class",
    "coarse_group",
    "classify_country",
    "load_edges",
    "bundled_edges",
]

# Controlled vocabularies, in rendering order (poorest first).
INCOME_CLASSES: tuple[str, ...] = ("poor", "low-mid", "up-mid", "rich")
CONTINENTS: tuple[str, ...] = ("Africa", "America", "Asia", "Europe")
COARSE_GROUPS: tuple[str, ...] = ("lower", "higher")

_CLASS_RANK = {name: i for i, name in enumerate(INCOME_CLASSES)}


class StratumKind(Enum):
    IMAGE_INCOME_CLASS = "image_income_class"
    COUNTRY_WB_CLASS = "country_wb_class"
    CONTINENT = "continent"
    COARSE_INCOME = "coarse_income"


_VOCAB = {
    StratumKind.IMAGE_INCOME_CLASS: INCOME_CLASSES,
    StratumKind.COUNTRY_WB_CLASS: INCOME_CLASSES,
    StratumKind.CONTINENT: CONTINENTS,
    StratumKind.COARSE_INCOME: COARSE_GROUPS,
}


@dataclass(frozen=True)
class Stratum:
    """One grouping cell: a kind plus a value from that kind's vocabulary."""

    kind: StratumKind
    value: str

    def __post_init__(self) -> None:
        vocab = _VOCAB[self.kind]
        if self.value not in vocab:
            raise WrongStratumKind(
                f"{self.value!r} is not a {self.kind.value} value (expected one of {vocab})"
            )


@dataclass(frozen=True)
class QuartileEdges:
    """Inclusive upper boundaries of the lower three income quartiles."""

    e1: float
    e2: float
    e3: float

    def __post_init__(self) -> None:
        if not (self.e1 < self.e2 < self.e3):
            raise DegenerateDistribution(
                f"quartile edges must be strictly increasing, got {self.e1}, {self.e2}, {self.e3}"
            )

    def to_dict(self) -> dict[str, float]:
        return {"e1": self.e1, "e2": self.e2, "e3": self.e3}


def compute_quartile_edges(incomes: Sequence[float] | Iterable[float]) -> QuartileEdges:
    """Place quartile edges by the nearest-rank rule.

    Edge k is the element at 1-based rank ceil(k*n/4) of the sorted incomes,
    so with distinct values the four bins differ in size by at most one.

    Raises TooFewValues for fewer than 4 incomes and DegenerateDistribution
    when ties collapse two edges onto the same value.
    """
    values = sorted(float(v) for v in incomes)
    n = len(values)
    if n < 4:
        raise TooFewValues(n)
    e1, e2, e3 = (values[math.ceil(k * n / 4) - 1] for k in (1, 2, 3))
    return QuartileEdges(e1, e2, e3)


def assign_income_class(income: float, edges: QuartileEdges) -> Stratum:
    """Map a monthly income to its quartile class. Boundaries are inclusive
    on the upper side, so income == e1 is still 'poor'."""
    if income <= edges.e1:
        value = "poor"
    elif income <= edges.e2:
        value = "low-mid"
    elif income <= edges.e3:
        value = "up-mid"
    else:
        value = "rich"
    return Stratum(StratumKind.IMAGE_INCOME_CLASS, value)


def coarse_group(stratum: Stratum) -> Stratum:
    """Collapse a four-way income classification to lower/higher.

    poor and low-mid map to lower; up-mid and rich map to higher. Only income
    class kinds collapse; other kinds raise WrongStratumKind.
    """
    if stratum.kind not in (StratumKind.IMAGE_INCOME_CLASS, StratumKind.COUNTRY_WB_CLASS):
        raise WrongStratumKind(f"cannot coarsen stratum of kind {stratum.kind.value}")
    value = "lower" if _CLASS_RANK[stratum.value] <= 1 else "higher"
    return Stratum(StratumKind.COARSE_INCOME, value)


def classify_country(code: str, countries: Mapping[str, object]) -> tuple[Stratum, Stratum]:
    """Look up a country's (World Bank class, continent) pair.

    `countries` maps country_code to a profile with wb_class and continent
    attributes (see ingest.CountryProfile). Unknown codes raise UnknownCountry.
    """
    profile = countries.get(code)
    if profile is None:
        raise UnknownCountry(code)
    return (
        Stratum(StratumKind.COUNTRY_WB_CLASS, profile.wb_class),
        Stratum(StratumKind.CONTINENT, profile.continent),
    )


def load_edges(path: str | Path) -> QuartileEdges:
    """Read a {"e1": ..., "e2": ..., "e3": ...} preset."""
    obj = read_json(path)
    if not isinstance(obj, dict) or set(obj) != {"e1", "e2", "e3"}:
        raise SchemaViolation(path, 0, "edges", "expected keys e1, e2, e3")
    try:
        return QuartileEdges(float(obj["e1"]), float(obj["e2"]), float(obj["e3"]))
    except (TypeError, ValueError) as exc:
        raise SchemaViolation(path, 0, "edges", str(exc)) from exc


def bundled_edges() -> QuartileEdges:
    """The canonical edges preset shipped with the package."""
    ref = resources.files("promptstrata.data").joinpath("edges_dollar_street.json")
    with resources.as_file(ref) as path:
        if not Path(path).is_file():
            raise MissingFile(path)
        return load_edges(path)
