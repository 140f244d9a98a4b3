import numpy as np
import pytest

from skyfed.core import EquatorialPosition, SkyObject
from skyfed.errors import IndexError_
from skyfed.zones import ConeQuery, ZoneIndex, build_index, cone_search, neighbor_pairs

from conftest import random_positions
from oracles import brute_cone, brute_pairs


def obj(i, ra, dec, sigma=0.1):
    return SkyObject(object_id=i, pos=EquatorialPosition(ra, dec), sigma_pos_arcsec=sigma)


class TestBuild:
    def test_empty(self):
        idx = build_index([], zone_height_deg=1.0)
        assert idx.object_count == 0
        assert cone_search(idx, ConeQuery(EquatorialPosition(0, 0), 10.0)).size == 0

    def test_zone_number(self):
        idx = build_index([obj(0, 10.0, 0.0)], zone_height_deg=1.0)
        assert idx.zone_of(0.0) == 90
        assert int(idx.starts[90]) == 0 and int(idx.starts[91]) == 1

    def test_bad_zone_height(self):
        with pytest.raises(IndexError_):
            build_index([], zone_height_deg=0.0)
        with pytest.raises(IndexError_):
            build_index([], zone_height_deg=-2.0)

    def test_pole_object_lands_in_top_zone(self):
        idx = build_index([obj(0, 0.0, 90.0)], zone_height_deg=1.0)
        assert int(idx.starts[-1]) == 1

    def test_ra_sorted_within_zones(self):
        rng = np.random.default_rng(5)
        ra, dec = random_positions(rng, 3000)
        idx = ZoneIndex.from_arrays(ra, dec, 4.0)
        for z in range(idx.n_zones):
            lo, hi = int(idx.starts[z]), int(idx.starts[z + 1])
            zra = idx.ra[lo:hi]
            assert np.all(np.diff(zra) >= 0)

    def test_every_object_findable_radius_zero(self):
        rng = np.random.default_rng(6)
        ra, dec = random_positions(rng, 10_000)
        idx = ZoneIndex.from_arrays(ra, dec, 0.5)
        for i in range(10_000):
            refs = idx.cone_search(ConeQuery(EquatorialPosition(ra[i], dec[i]), 0.0))
            assert i in refs


class TestConeSearch:
    def test_radius_zero_exact_hit(self):
        objs = [obj(0, 10.0, 10.0), obj(1, 10.0, 10.0), obj(2, 50.0, -3.0)]
        idx = build_index(objs, 1.0)
        refs = idx.cone_search(ConeQuery(EquatorialPosition(10.0, 10.0), 0.0))
        assert list(refs) == [0, 1]

    def test_whole_sphere(self):
        rng = np.random.default_rng(7)
        ra, dec = random_positions(rng, 500)
        idx = ZoneIndex.from_arrays(ra, dec, 4.0)
        refs = idx.cone_search(ConeQuery(EquatorialPosition(0, 0), 180.0))
        assert len(refs) == 500

    @pytest.mark.parametrize("seed,n_cones", [(8, 150)])
    def test_oracle_equivalence_random(self, seed, n_cones):
        rng = np.random.default_rng(seed)
        ra, dec = random_positions(rng, 20_000)
        idx = ZoneIndex.from_arrays(ra, dec, 4.0 / 60.0)
        for _ in range(n_cones):
            cra = rng.uniform(0, 360)
            cdec = np.degrees(np.arcsin(rng.uniform(-1, 1)))
            r = rng.uniform(0, 5.0)
            got = idx.cone_search(ConeQuery(EquatorialPosition(cra, cdec), r))
            want = brute_cone(ra, dec, cra, cdec, r)
            assert np.array_equal(got, want)

    def test_pole_centered(self):
        rng = np.random.default_rng(9)
        ra, dec = random_positions(rng, 20_000)
        idx = ZoneIndex.from_arrays(ra, dec, 4.0 / 60.0)
        for cdec in (90.0, -90.0):
            for r in (0.5, 3.0):
                got = idx.cone_search(ConeQuery(EquatorialPosition(0.0, cdec), r))
                want = brute_cone(ra, dec, 0.0, cdec, r)
                assert np.array_equal(got, want)

    def test_ra_wraparound(self):
        rng = np.random.default_rng(10)
        ra, dec = random_positions(rng, 20_000)
        idx = ZoneIndex.from_arrays(ra, dec, 4.0 / 60.0)
        for cra in (0.05, 359.95):
            got = idx.cone_search(ConeQuery(EquatorialPosition(cra, 0.0), 2.0))
            want = brute_cone(ra, dec, cra, 0.0, 2.0)
            assert np.array_equal(got, want)

    def test_near_pole_centers(self):
        rng = np.random.default_rng(11)
        ra, dec = random_positions(rng, 20_000)
        idx = ZoneIndex.from_arrays(ra, dec, 4.0 / 60.0)
        for cdec in (89.5, -89.5, 88.0, -88.0):
            got = idx.cone_search(ConeQuery(EquatorialPosition(123.0, cdec), 1.7))
            want = brute_cone(ra, dec, 123.0, cdec, 1.7)
            assert np.array_equal(got, want)


class TestNeighborPairs:
    def test_two_close_objects(self):
        objs = [obj(0, 10.0, 10.0), obj(1, 10.0, 10.0 + 1.0 / 3600.0)]
        idx = build_index(objs, 4.0 / 60.0)
        pairs = list(neighbor_pairs(idx, 2.0 / 3600.0))
        assert len(pairs) == 1
        a, b, sep = pairs[0]
        assert {a, b} == {0, 1}
        assert sep == pytest.approx(1.0 / 3600.0, rel=1e-9)

    def test_isolated_object(self):
        idx = build_index([obj(0, 10.0, 10.0)], 4.0 / 60.0)
        assert list(neighbor_pairs(idx, 1.0 / 60.0)) == []

    def test_radius_above_zone_height_rejected(self):
        idx = build_index([obj(0, 1, 1)], 4.0 / 60.0)
        with pytest.raises(IndexError_):
            list(neighbor_pairs(idx, 5.0 / 60.0))

    def test_oracle_equivalence_clustered(self):
        # dense band so pairs actually occur
        rng = np.random.default_rng(12)
        ra, dec = random_positions(rng, 10_000, dec_min=-2.0, dec_max=2.0)
        radius = 30.0 / 3600.0
        idx = ZoneIndex.from_arrays(ra, dec, 4.0 / 60.0)
        got = {(min(a, b), max(a, b)) for a, b, _ in idx.neighbor_pairs(radius)}
        want = set(brute_pairs(ra, dec, radius))
        assert got == want
        assert len(want) > 0

    def test_oracle_equivalence_near_poles(self):
        rng = np.random.default_rng(13)
        ra1, dec1 = random_positions(rng, 2000, dec_min=88.0, dec_max=90.0)
        ra2, dec2 = random_positions(rng, 2000, dec_min=-90.0, dec_max=-88.0)
        ra = np.concatenate([ra1, ra2])
        dec = np.concatenate([dec1, dec2])
        radius = 60.0 / 3600.0
        idx = ZoneIndex.from_arrays(ra, dec, 4.0 / 60.0)
        got = {(min(a, b), max(a, b)) for a, b, _ in idx.neighbor_pairs(radius)}
        want = set(brute_pairs(ra, dec, radius))
        assert got == want
        assert len(want) > 0

    def test_duplicate_positions_pair_once(self):
        objs = [obj(0, 5.0, 5.0), obj(1, 5.0, 5.0), obj(2, 5.0, 5.0)]
        idx = build_index(objs, 4.0 / 60.0)
        pairs = {(min(a, b), max(a, b)) for a, b, _ in neighbor_pairs(idx, 1e-6)}
        assert pairs == {(0, 1), (0, 2), (1, 2)}


class TestSnapshot:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(14)
        ra, dec = random_positions(rng, 5000)
        idx = ZoneIndex.from_arrays(ra, dec, 4.0 / 60.0)
        path = tmp_path / "zones.npz"
        idx.save(path)
        back = ZoneIndex.load(path)
        assert back.zone_height_deg == idx.zone_height_deg
        assert np.array_equal(back.starts, idx.starts)
        assert np.array_equal(back.refs, idx.refs)
        assert np.array_equal(back.ra, idx.ra)
        assert np.array_equal(back.dec, idx.dec)
        q = ConeQuery(EquatorialPosition(10, 10), 1.0)
        assert np.array_equal(back.cone_search(q), idx.cone_search(q))
