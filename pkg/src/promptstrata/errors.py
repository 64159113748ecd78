"""Exception hierarchy.

Every failure the package raises deliberately is a PromptstrataError subclass.
DataError means the inputs violate a documented invariant; IoError means a file
is missing or physically corrupt; UsageError means the request itself is
malformed. The CLI maps these three branches to exit codes 1, 2 and 3.
"""

from __future__ import annotations

__all__ = [
    "PromptstrataError",
    "DataError",
    "IoError",
    "UsageError",
    "MissingFile",
    "TruncatedMatrix",
    "SchemaViolation",
    "UnknownCountry",
    "DuplicateImageId",
    "DimensionMismatch",
    "NonFiniteValue",
    "NotNormalized",
    "MissingEmbedding",
    "MissingTranslation",
    "EmptyLabel",
    "EmptyCountry",
    "UnknownCategory",
    "TooFewValues",
    "DegenerateDistribution",
    "WrongStratumKind",
    "EmptyPool",
    "EmptyGroup",
    "MissingBaseline",
    "SpaceTagMismatch",
    "LengthMismatch",
    "AllZeroDifferences",
    "GroupMismatch",
    "EmptyTable",
    "MissingAxis",
    "InvalidSpec",
    "TooLarge",
    "InvalidPlan",
]


class PromptstrataError(Exception):
    """Base class for all deliberate package errors."""


class DataError(PromptstrataError):
    """Input data violates an invariant."""


class IoError(PromptstrataError):
    """A file is missing or physically unreadable."""


class UsageError(PromptstrataError):
    """The request itself is malformed (bad arguments, bad plan)."""


class MissingFile(IoError):
    def __init__(self, path: object, detail: str = "") -> None:
        self.path = str(path)
        msg = f"missing file: {self.path}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class TruncatedMatrix(IoError):
    def __init__(self, path: object, expected: int, actual: int) -> None:
        self.path = str(path)
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"embedding payload {self.path}: expected {expected} bytes, found {actual}"
        )


class SchemaViolation(DataError):
    def __init__(self, path: object, row: int, column: str, detail: str = "") -> None:
        self.path = str(path)
        self.row = row
        self.column = column
        msg = f"{self.path}: row {row}, column {column!r}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class UnknownCountry(DataError):
    def __init__(self, code: str, row: int | None = None) -> None:
        self.code = code
        self.row = row
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"unknown country code {code!r}{where}")


class DuplicateImageId(DataError):
    def __init__(self, image_id: str) -> None:
        self.image_id = image_id
        super().__init__(f"duplicate image id {image_id!r}")


class DimensionMismatch(DataError):
    pass


class NonFiniteValue(DataError):
    def __init__(self, row: int, detail: str = "") -> None:
        self.row = row
        msg = f"non-finite embedding value in row {row}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class NotNormalized(DataError):
    pass


class MissingEmbedding(DataError):
    def __init__(self, key: str) -> None:
        self.key = key
        super().__init__(f"no embedding row for id {key!r}")


class MissingTranslation(DataError):
    def __init__(self, topic_id: str, language: str) -> None:
        self.topic_id = topic_id
        self.language = language
        super().__init__(f"no translation for topic {topic_id!r} in language {language!r}")


class EmptyLabel(DataError):
    pass


class EmptyCountry(DataError):
    pass


class UnknownCategory(DataError):
    def __init__(self, category: str) -> None:
        self.category = category
        super().__init__(f"unknown income category {category!r}")


class TooFewValues(DataError):
    def __init__(self, count: int) -> None:
        self.count = count
        super().__init__(f"need at least 4 income values to place quartile edges, got {count}")


class DegenerateDistribution(DataError):
    pass


class WrongStratumKind(DataError):
    pass


class EmptyPool(DataError):
    pass


class EmptyGroup(DataError):
    pass


class MissingBaseline(DataError):
    def __init__(self, topic_id: str) -> None:
        self.topic_id = topic_id
        super().__init__(f"no baseline prompt embedding for topic {topic_id!r}")


class SpaceTagMismatch(DataError):
    def __init__(self, image_tag: str, prompt_tag: str) -> None:
        self.image_tag = image_tag
        self.prompt_tag = prompt_tag
        super().__init__(
            f"image embeddings tagged {image_tag!r} but prompt embeddings tagged {prompt_tag!r}"
        )


class LengthMismatch(DataError):
    pass


class AllZeroDifferences(DataError):
    pass


class GroupMismatch(DataError):
    pass


class EmptyTable(DataError):
    pass


class MissingAxis(DataError):
    def __init__(self, axis: str) -> None:
        self.axis = axis
        super().__init__(f"table rows lack required axis {axis!r}")


class InvalidSpec(DataError):
    pass


class TooLarge(DataError):
    pass


class InvalidPlan(UsageError):
    pass
