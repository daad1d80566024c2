"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LTTextError(Exception):
    """Base class for every error raised by lttext."""


class GeometryError(LTTextError, ValueError):
    pass


class DegeneratePolygon(GeometryError):
    """Fewer than three distinct vertices, or zero area."""


class SelfIntersectingPolygon(GeometryError):
    pass


class FormatError(LTTextError, ValueError):
    """Common parent of ParseError and SchemaError."""


class ParseError(FormatError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class SchemaError(FormatError):
    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


class UnknownImage(LTTextError, KeyError):
    pass


class MissingDiagonal(LTTextError, ValueError):
    pass


class EmptySplit(LTTextError, ValueError):
    pass


class DuplicateNamespacedId(LTTextError, ValueError):
    pass


class DimensionMismatch(LTTextError, ValueError):
    pass


class UndecodableImage(LTTextError, OSError):
    pass
