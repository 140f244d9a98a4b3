"""Shared exception hierarchy.

Every domain error raised by this package derives from SkyfedError so the
services and the CLI can map failures to HTTP codes / exit codes in one place.
"""

from __future__ import annotations


class SkyfedError(Exception):
    """Base class for all domain errors."""

    code = "error"


class CoordinateError(SkyfedError):
    """Invalid sky coordinate (non-finite RA, declination out of range...)."""

    code = "coordinate_error"


class PhotometryError(SkyfedError):
    """Invalid flux/magnitude conversion input."""

    code = "photometry_error"


class MissingBandError(SkyfedError):
    """A magnitude lookup named a band the object does not carry."""

    code = "missing_band"

    def __init__(self, band: str):
        super().__init__(f"missing band: {band}")
        self.band = band


class IndexError_(SkyfedError):
    """Zone-index construction or usage error (e.g. radius too large)."""

    code = "index_error"


class SchemaError(SkyfedError):
    """Schema descriptor failed validation; carries every problem found."""

    code = "schema_error"

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class IngestError(SkyfedError):
    """File-level ingest failure (missing header column, unreadable file)."""

    code = "ingest_error"


class QueryError(SkyfedError):
    """Base for query-language failures; carries an optional text offset."""

    code = "query_error"

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class LexError(QueryError):
    code = "parse_error"


class ParseError(QueryError):
    code = "parse_error"


class PlanError(QueryError):
    code = "plan_error"


class QueryTooLarge(QueryError):
    code = "query_too_large"


class RowCapExceeded(SkyfedError):
    code = "row_cap_exceeded"


class QueryTimeout(SkyfedError):
    code = "timeout"


class FederationError(SkyfedError):
    """Portal-side planning/execution failure."""

    code = "plan_error"


class NodeUnreachable(FederationError):
    """A federated node failed or could not be reached; names the node."""

    code = "node_unreachable"

    def __init__(self, survey: str, detail: str):
        super().__init__(f"node unreachable: {survey} ({detail})")
        self.survey = survey
