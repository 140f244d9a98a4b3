"""Desk-scale mining over domestic catalogs: grided counts, friends-of-friends
clusters, isolated points, and a displaced-detection (fast mover) finder.

All operations are pure functions over immutable catalogs and indexes; the
neighbor-based ones ride on the zone index and are exactly checkable against
brute-force oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ARCSEC_PER_DEG, separation_deg
from .errors import PlanError
from .ingest import Catalog
from .query.executor import ExecStats, catalog_table, eval_vec
from .query.nodes import Expr
from .query.planner import _Planner, catalog_columns
from .zones import ConeQuery, ZoneIndex, build_index


@dataclass(frozen=True)
class GridSpec:
    """Equirectangular counting grid anchored at (ra 0, dec -90)."""

    cell_deg: float

    def __post_init__(self):
        if not (self.cell_deg > 0):
            raise ValueError(f"cell size must be > 0: {self.cell_deg!r}")


@dataclass
class ClusterLabeling:
    """object_id -> cluster_id, ids dense from 0; singletons keep their own
    cluster. The component containing the smallest object id gets id 0."""

    labels: dict

    def clusters(self) -> dict:
        out: dict[int, list[int]] = {}
        for oid, cid in self.labels.items():
            out.setdefault(cid, []).append(oid)
        for members in out.values():
            members.sort()
        return out


@dataclass(frozen=True)
class MovingCandidate:
    id_a: int
    id_b: int
    separation_arcsec: float
    rate_arcsec_per_day: Optional[float] = None


def compile_cut(cut_text: str, catalog: Catalog) -> Expr:
    """Parse and resolve a boolean cut expression against a catalog schema."""
    from .query.parser import _Parser
    from .query.tokens import tokenize

    parser = _Parser(tokenize(cut_text))
    expr = parser.expr()
    from .query.tokens import TokenType

    parser.expect(TokenType.EOF)
    pl = _Planner(catalog_columns(catalog.schema), catalog.schema.survey_name, catalog.schema.survey_name)
    resolved = pl.resolve(expr)
    if pl.infer(resolved) != "bool":
        raise PlanError("cut must be a boolean predicate")
    return resolved


def _cut_mask(catalog: Catalog, cut: Optional[Expr]) -> np.ndarray:
    n = len(catalog.objects)
    if cut is None:
        return np.ones(n, dtype=bool)
    table = catalog_table(catalog)
    stats = ExecStats()
    _, v = eval_vec(cut, lambda name: table.cols[name], stats)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0:
        v = np.full(n, float(v))
    return v == 1.0


def grided_count(
    catalog: Catalog, grid: GridSpec, cut: Optional[Expr] = None
) -> dict[tuple[int, int], int]:
    """Sparse counts per grid cell (floor(ra/cell), floor((dec+90)/cell)) of
    objects passing the cut; empty cells are omitted."""
    mask = _cut_mask(catalog, cut)
    ra = catalog.ra[mask]
    dec = catalog.dec[mask]
    cx = np.floor(ra / grid.cell_deg).astype(np.int64)
    cy = np.floor((dec + 90.0) / grid.cell_deg).astype(np.int64)
    out: dict[tuple[int, int], int] = {}
    for x, y in zip(cx, cy):
        out[(int(x), int(y))] = out.get((int(x), int(y)), 0) + 1
    return out


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return int(x)

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def friends_of_friends(
    catalog: Catalog, index: ZoneIndex, link_radius_arcsec: float
) -> ClusterLabeling:
    """Single-linkage clusters: connected components of the within-radius
    neighbor graph. Labels are canonical (sorted by smallest member id), so
    the labeling is invariant under input permutation."""
    n = len(catalog.objects)
    uf = _UnionFind(n)
    for a, b, _ in index.neighbor_pairs(link_radius_arcsec / ARCSEC_PER_DEG):
        uf.union(a, b)
    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(uf.find(i), []).append(i)
    ids = [o.object_id for o in catalog.objects]
    ordered = sorted(components.values(), key=lambda refs: min(ids[r] for r in refs))
    labels: dict[int, int] = {}
    for cid, refs in enumerate(ordered):
        for r in refs:
            labels[ids[r]] = cid
    return ClusterLabeling(labels=labels)


def isolated_points(
    catalog: Catalog, index: ZoneIndex, radius_arcsec: float, max_neighbors: int
) -> list[int]:
    """Object ids with at most max_neighbors others within the radius,
    ascending."""
    n = len(catalog.objects)
    degree = np.zeros(n, dtype=np.int64)
    for a, b, _ in index.neighbor_pairs(radius_arcsec / ARCSEC_PER_DEG):
        degree[a] += 1
        degree[b] += 1
    ids = [o.object_id for o in catalog.objects]
    return sorted(ids[i] for i in range(n) if degree[i] <= max_neighbors)


def moving_candidates(
    catalog_a: Catalog,
    catalog_b: Catalog,
    min_sep_arcsec: float,
    max_sep_arcsec: float,
    index_b: Optional[ZoneIndex] = None,
) -> list[MovingCandidate]:
    """Pairs (a in A, b in B) displaced by [min_sep, max_sep], where a has no
    B counterpart closer than min_sep (a static cross-identification would).

    The motion rate is filled when both catalogs carry epochs. Results sorted
    by (id_a, id_b).
    """
    if not (0 <= min_sep_arcsec < max_sep_arcsec):
        raise ValueError(
            f"need 0 <= min_sep < max_sep, got [{min_sep_arcsec}, {max_sep_arcsec}]"
        )
    if index_b is None:
        index_b = build_index(
            catalog_b.objects,
            max(4.0 / 60.0, 1.5 * max_sep_arcsec / ARCSEC_PER_DEG),
        )
    epoch_a = catalog_a.schema.epoch_mjd
    epoch_b = catalog_b.schema.epoch_mjd
    dt = None
    if epoch_a is not None and epoch_b is not None and epoch_b != epoch_a:
        dt = abs(epoch_b - epoch_a)

    rb = catalog_b.ra
    db = catalog_b.dec
    out: list[MovingCandidate] = []
    for oa in catalog_a.objects:
        refs = index_b.cone_search(
            ConeQuery(oa.pos, max_sep_arcsec / ARCSEC_PER_DEG)
        )
        if not len(refs):
            continue
        sep = (
            separation_deg(rb[refs], db[refs], oa.pos.ra_deg, oa.pos.dec_deg)
            * ARCSEC_PER_DEG
        )
        if bool(np.any(sep < min_sep_arcsec)):
            continue  # a static counterpart exists; nothing moved
        for j in np.nonzero(sep <= max_sep_arcsec)[0]:
            ob = catalog_b.objects[int(refs[j])]
            s = float(sep[j])
            out.append(
                MovingCandidate(
                    id_a=oa.object_id,
                    id_b=ob.object_id,
                    separation_arcsec=s,
                    rate_arcsec_per_day=(s / dt) if dt else None,
                )
            )
    out.sort(key=lambda m: (m.id_a, m.id_b))
    return out
