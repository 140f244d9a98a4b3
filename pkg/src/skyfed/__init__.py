"""skyfed: desk-scale federated sky-catalog services.

Per-archive catalog nodes with zone-indexed search and a small SQL dialect,
federated by a portal that cross-matches objects positionally across surveys.
"""

__version__ = "0.1.0"

from .core import (
    EquatorialPosition,
    ObjectClass,
    ResultTable,
    SkyObject,
    angular_separation,
    color_index,
    flux_to_magnitude,
    normalize_ra,
    separation_deg,
    to_unit_vector,
)
from .ingest import Catalog, CatalogSchema, ColumnMapping, ingest_csv, load_store, parse_schema
from .zones import ConeQuery, ZoneIndex, build_index, cone_search, neighbor_pairs

__all__ = [
    "EquatorialPosition",
    "ObjectClass",
    "ResultTable",
    "SkyObject",
    "angular_separation",
    "color_index",
    "flux_to_magnitude",
    "normalize_ra",
    "separation_deg",
    "to_unit_vector",
    "Catalog",
    "CatalogSchema",
    "ColumnMapping",
    "ingest_csv",
    "load_store",
    "parse_schema",
    "ConeQuery",
    "ZoneIndex",
    "build_index",
    "cone_search",
    "neighbor_pairs",
    "__version__",
]
