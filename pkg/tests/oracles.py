"""Brute-force reference implementations the fast paths are checked against.

These deliberately stay simple: full scans, O(N^2) pair loops (blocked with
numpy so the suite finishes), and a tiny union-find. They share only the
separation formula with the library.
"""

from __future__ import annotations

import numpy as np

from skyfed.core import separation_deg


def brute_cone(ra, dec, center_ra, center_dec, radius_deg) -> np.ndarray:
    """Indices of all positions within radius of the center, ascending."""
    sep = separation_deg(ra, dec, center_ra, center_dec)
    return np.nonzero(sep <= radius_deg)[0].astype(np.int64)


def brute_pairs(ra, dec, radius_deg, block=2048):
    """All unordered index pairs (i < j) with separation <= radius."""
    n = len(ra)
    out = []
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        for j0 in range(i0, n, block):
            j1 = min(j0 + block, n)
            sep = separation_deg(
                ra[i0:i1, None], dec[i0:i1, None], ra[None, j0:j1], dec[None, j0:j1]
            )
            ii, jj = np.nonzero(sep <= radius_deg)
            for a, b in zip(ii, jj):
                gi, gj = i0 + int(a), j0 + int(b)
                if gi < gj:
                    out.append((gi, gj))
    return out


def brute_neighbor_counts(ra, dec, radius_deg, block=2048) -> np.ndarray:
    """Number of OTHER objects within radius of each object."""
    n = len(ra)
    counts = np.zeros(n, dtype=np.int64)
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        sep = separation_deg(ra[i0:i1, None], dec[i0:i1, None], ra[None, :], dec[None, :])
        counts[i0:i1] = np.count_nonzero(sep <= radius_deg, axis=1) - 1
    return counts


def brute_xmatch(
    probe_ra, probe_dec, probe_sigma, cat_ra, cat_dec, cat_sigma, k, max_radius_arcsec
):
    """Per-probe match lists [(catalog index, separation_arcsec), ...] under
    the k-sigma gate with a hard cap, sorted by (separation, index)."""
    out = []
    for i in range(len(probe_ra)):
        sep_arcsec = separation_deg(cat_ra, cat_dec, probe_ra[i], probe_dec[i]) * 3600.0
        gate = np.minimum(
            max_radius_arcsec, k * np.sqrt(probe_sigma[i] ** 2 + cat_sigma**2)
        )
        hits = np.nonzero(sep_arcsec <= gate)[0]
        matches = sorted((float(sep_arcsec[j]), int(j)) for j in hits)
        out.append([(j, s) for s, j in matches])
    return out


def brute_fed_matches(anchor_catalog, chain_catalogs, k, max_radius_arcsec, anchor_keep=None):
    """Anchor-relative cross-match oracle.

    Returns a list of (anchor_obj, {survey: [(obj, sep_arcsec), ...]}) for
    anchors that matched in EVERY chain survey; per-survey lists sorted by
    (separation, object_id). anchor_keep optionally filters anchor objects.
    """
    out = []
    for oa in anchor_catalog.objects:
        if anchor_keep is not None and not anchor_keep(oa):
            continue
        per_survey = {}
        dead = False
        for survey, cat in chain_catalogs.items():
            sep = separation_deg(cat.ra, cat.dec, oa.pos.ra_deg, oa.pos.dec_deg) * 3600.0
            sig = np.array([o.sigma_pos_arcsec for o in cat.objects])
            gate = np.minimum(
                max_radius_arcsec, k * np.hypot(oa.sigma_pos_arcsec, sig)
            )
            hits = np.nonzero(sep <= gate)[0]
            if len(hits) == 0:
                dead = True
                break
            matches = sorted(
                ((cat.objects[int(j)], float(sep[j])) for j in hits),
                key=lambda t: (t[1], t[0].object_id),
            )
            per_survey[survey] = matches
        if not dead:
            out.append((oa, per_survey))
    return out


def fed_tuple_set(matches, chain_order, mode="all"):
    """Id-vector set from brute_fed_matches output."""
    import itertools

    out = set()
    for oa, per_survey in matches:
        lists = []
        for s in chain_order:
            ms = per_survey[s]
            if mode == "best":
                ms = [min(ms, key=lambda t: (t[1], t[0].object_id))]
            lists.append(ms)
        for combo in itertools.product(*lists):
            out.add((oa.object_id,) + tuple(o.object_id for o, _ in combo))
    return out


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def components_from_pairs(n: int, pairs) -> list[list[int]]:
    """Connected components (lists of indices) from an edge list."""
    uf = UnionFind(n)
    for a, b in pairs:
        uf.union(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    return list(groups.values())
