"""Coordinates, taxonomy, place classification and task validation."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobicrowd.domain import (
    EMERGENCY_MAX_RADIUS_M,
    GeoPoint,
    LocationClass,
    LocationIndex,
    Place,
    Question,
    Task,
    TaskContext,
    TaskKind,
    Taxonomy,
    classify_location,
    default_taxonomy,
    haversine_distance,
    load_geography,
    validate_task,
)
from mobicrowd.errors import InvalidConfigError

from conftest import make_index

# Reference distances computed from the haversine formula on a sphere of
# radius 6 371 000 m with 50-digit arithmetic, rounded to float64.
WARSAW = GeoPoint(52.2297, 21.0122)
POZNAN = GeoPoint(52.4064, 16.9252)
WARSAW_POZNAN_M = 278_453.922688885
HALF_CIRCUMFERENCE_M = 20_015_086.7960205727

lat_st = st.floats(min_value=-90.0, max_value=90.0, allow_nan=False)
lon_st = st.floats(min_value=-180.0, max_value=180.0, allow_nan=False)
point_st = st.builds(GeoPoint, lat_st, lon_st)


class TestGeoPoint:
    def test_valid_extremes(self):
        GeoPoint(90.0, -180.0)
        GeoPoint(-90.0, 179.999)

    @pytest.mark.parametrize("lat,lon", [(90.1, 0.0), (-91.0, 0.0), (0.0, 180.5), (0.0, -181.0)])
    def test_out_of_range_rejected(self, lat, lon):
        with pytest.raises(ValueError):
            GeoPoint(lat, lon)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            GeoPoint(float("nan"), 0.0)

    def test_antimeridian_normalized(self):
        assert GeoPoint(10.0, 180.0).lon == -180.0
        assert GeoPoint(10.0, 180.0) == GeoPoint(10.0, -180.0)

    def test_coerces_to_float(self):
        p = GeoPoint(52, 21)
        assert isinstance(p.lat, float) and isinstance(p.lon, float)


class TestHaversine:
    def test_reference_city_pair(self):
        d = haversine_distance(WARSAW, POZNAN)
        assert d == pytest.approx(WARSAW_POZNAN_M, rel=1e-9)

    def test_antipodal_on_equator(self):
        d = haversine_distance(GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0))
        assert abs(d - HALF_CIRCUMFERENCE_M) < 1.0

    def test_pole_to_pole(self):
        d = haversine_distance(GeoPoint(90.0, 0.0), GeoPoint(-90.0, 0.0))
        assert abs(d - HALF_CIRCUMFERENCE_M) < 1.0

    def test_one_degree_of_latitude(self):
        # pi * R / 180
        d = haversine_distance(GeoPoint(0.0, 0.0), GeoPoint(1.0, 0.0))
        assert d == pytest.approx(111_194.9266, abs=0.01)

    @given(point_st)
    def test_zero_at_identity(self, p):
        assert haversine_distance(p, p) == 0.0

    @given(point_st, point_st)
    def test_symmetric(self, a, b):
        assert haversine_distance(a, b) == pytest.approx(
            haversine_distance(b, a), abs=1e-6
        )

    @given(point_st, point_st)
    def test_bounded_by_half_circumference(self, a, b):
        d = haversine_distance(a, b)
        assert 0.0 <= d <= HALF_CIRCUMFERENCE_M + 1.0

    @settings(max_examples=50)
    @given(point_st, point_st, point_st)
    def test_triangle_inequality(self, a, b, c):
        ab = haversine_distance(a, b)
        bc = haversine_distance(b, c)
        ac = haversine_distance(a, c)
        assert ac <= ab + bc + 1e-6


class TestTaxonomy:
    def test_default_shape(self):
        tx = default_taxonomy()
        assert len(tx.classes) == 12
        assert len(tx.task_types) == 5
        assert tx.default_class_id == 0
        assert tx.class_name(4) == "transport"

    def test_duplicate_class_ids_rejected(self):
        with pytest.raises(InvalidConfigError):
            Taxonomy(classes=(LocationClass(0, "a"), LocationClass(0, "b")))

    def test_unknown_default_rejected(self):
        with pytest.raises(InvalidConfigError):
            Taxonomy(classes=(LocationClass(1, "a"),), default_class_id=0)

    def test_unknown_class_name_raises(self):
        with pytest.raises(KeyError):
            default_taxonomy().class_name(99)


class TestClassifyLocation:
    def test_inside_single_place(self, school_index):
        got = classify_location(GeoPoint(52.2401, 21.0001), school_index)
        assert got == 2

    def test_outside_everything_is_default(self, school_index):
        assert classify_location(GeoPoint(53.5, 22.5), school_index) == 0

    def test_no_places_is_default(self):
        idx = make_index(())
        assert classify_location(GeoPoint(0.0, 0.0), idx) == 0

    def test_boundary_is_inclusive(self):
        import numpy as np

        from mobicrowd import kernels

        center = GeoPoint(0.0, 0.0)
        probe = GeoPoint(0.0, 0.01)
        # measure with the same kernel classify_location uses, so the
        # comparison against the radius is reproducible at the last bit
        r = float(
            kernels.haversine_many(
                probe.lat, probe.lon, np.array([center.lat]), np.array([center.lon])
            )[0]
        )
        idx = make_index((Place(0, "edge", center, 5, r),))
        assert classify_location(probe, idx) == 5

    def test_nearest_covering_place_wins(self):
        # both cover the probe; the second center is closer
        idx = make_index((
            Place(0, "far", GeoPoint(0.0, 0.0), 1, 5_000.0),
            Place(1, "near", GeoPoint(0.0, 0.02), 2, 5_000.0),
        ))
        assert classify_location(GeoPoint(0.0, 0.015), idx) == 2

    def test_exact_tie_goes_to_smaller_id(self):
        idx = make_index((
            Place(7, "west", GeoPoint(0.0, -0.01), 3, 5_000.0),
            Place(2, "east", GeoPoint(0.0, 0.01), 4, 5_000.0),
        ))
        # equidistant from both centers
        assert classify_location(GeoPoint(0.0, 0.0), idx) == 4

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=-5.0, max_value=5.0),
                st.floats(min_value=-5.0, max_value=5.0),
                st.floats(min_value=100.0, max_value=400_000.0),
                st.integers(min_value=0, max_value=11),
            ),
            min_size=1,
            max_size=8,
        ),
        st.floats(min_value=-6.0, max_value=6.0),
        st.floats(min_value=-6.0, max_value=6.0),
    )
    def test_agrees_with_sequential_scan(self, raw_places, plat, plon):
        places = tuple(
            Place(i, f"p{i}", GeoPoint(lat, lon), cid, r)
            for i, (lat, lon, r, cid) in enumerate(raw_places)
        )
        idx = make_index(places)
        probe = GeoPoint(plat, plon)
        best = None
        for p in places:
            d = haversine_distance(probe, p.point)
            if d <= p.radius_m and (best is None or (d, p.id) < best[:2]):
                best = (d, p.id, p.class_id)
        want = best[2] if best else 0
        assert classify_location(probe, idx) == want


class TestValidateTask:
    def _task(self, **kw) -> Task:
        base = dict(
            id=0,
            task_type=1,
            kind=TaskKind.NORMAL,
            context=TaskContext(center=GeoPoint(52.0, 21.0), radius_m=1_000.0),
            questions=(Question(0, labels=(0, 1), ground_truth={1}),),
        )
        base.update(kw)
        return Task(**base)

    def test_well_formed_passes(self):
        report = validate_task(self._task(), default_taxonomy())
        assert report.ok and report.problems == ()

    def test_unknown_type(self):
        report = validate_task(self._task(task_type=42), default_taxonomy())
        assert not report.ok
        assert any("task type" in p for p in report.problems)

    def test_nonpositive_radius(self):
        ctx = TaskContext(center=GeoPoint(0, 0), radius_m=0.0)
        report = validate_task(self._task(context=ctx), default_taxonomy())
        assert any("radius" in p for p in report.problems)

    def test_emergency_radius_cap(self):
        ctx = TaskContext(center=GeoPoint(0, 0), radius_m=EMERGENCY_MAX_RADIUS_M + 1)
        report = validate_task(
            self._task(kind=TaskKind.EMERGENCY, context=ctx), default_taxonomy()
        )
        assert not report.ok
        # same radius is fine on a normal task
        assert validate_task(self._task(context=ctx), default_taxonomy()).ok

    def test_emergency_radius_at_cap_passes(self):
        ctx = TaskContext(center=GeoPoint(0, 0), radius_m=EMERGENCY_MAX_RADIUS_M)
        report = validate_task(
            self._task(kind=TaskKind.EMERGENCY, context=ctx), default_taxonomy()
        )
        assert report.ok

    def test_unknown_admissible_class(self):
        ctx = TaskContext(center=GeoPoint(0, 0), radius_m=100.0, admissible_classes={99})
        report = validate_task(self._task(context=ctx), default_taxonomy())
        assert any("admissible class 99" in p for p in report.problems)

    def test_skill_level_out_of_range(self):
        ctx = TaskContext(
            center=GeoPoint(0, 0), radius_m=100.0, required_skill=((1, 1.5),)
        )
        report = validate_task(self._task(context=ctx), default_taxonomy())
        assert any("skill" in p for p in report.problems)

    def test_no_questions(self):
        report = validate_task(self._task(questions=()), default_taxonomy())
        assert any("no questions" in p for p in report.problems)

    def test_duplicate_question_ids(self):
        qs = (Question(3, (0, 1)), Question(3, (0, 1)))
        report = validate_task(self._task(questions=qs), default_taxonomy())
        assert any("duplicate question id" in p for p in report.problems)

    def test_question_label_problems(self):
        qs = (
            Question(0, (1, 1)),             # duplicate labels
            Question(1, (0,)),               # too few
            Question(2, (0, 1), ground_truth={2}),  # truth outside labels
            Question(3, (0, 1, 2), ground_truth={0, 1}),  # multi truth, single-label
        )
        report = validate_task(self._task(questions=qs), default_taxonomy())
        text = "\n".join(report.problems)
        assert "duplicate labels" in text
        assert "too few labels" in text
        assert "not a subset" in text
        assert "single-label but has 2" in text

    def test_multilabel_truth_allowed(self):
        q = Question(0, (0, 1, 2), multi_label=True, ground_truth={0, 2})
        report = validate_task(self._task(questions=(q,)), default_taxonomy())
        assert report.ok


class TestLoadGeography:
    def test_round_trip_from_mapping(self):
        # replacing the classes means replacing the variants that hang off them
        idx = load_geography(
            {
                "classes": [{"id": 0, "name": "anywhere"}, {"id": 1, "name": "lab"}],
                "variants": [{"id": 0, "class": 1, "name": "wet lab"}],
                "default_class": 0,
                "places": [
                    {"id": 0, "name": "HQ", "lat": 52.1, "lon": 21.2, "class": 1, "radius_m": 500}
                ],
            }
        )
        assert len(idx.taxonomy.classes) == 2
        assert idx.place_by_id(0).class_id == 1
        # task types were omitted, so the built-ins carry over
        assert len(idx.taxonomy.task_types) == 5

    def test_partial_class_override_cannot_orphan_variants(self):
        with pytest.raises(InvalidConfigError, match="unknown class"):
            load_geography(
                {"classes": [{"id": 0, "name": "anywhere"}], "default_class": 0}
            )

    def test_file_round_trip(self, tmp_path):
        f = tmp_path / "geo.json"
        f.write_text('{"places": [{"id": 3, "name": "pond", "lat": 0, "lon": 0, "class": 8, "radius_m": 50}]}')
        idx = load_geography(f)
        assert idx.place_by_id(3).name == "pond"
        assert len(idx.taxonomy.classes) == 12

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidConfigError, match="unknown geography keys"):
            load_geography({"palces": []})

    def test_malformed_place_rejected(self):
        with pytest.raises(InvalidConfigError, match="malformed"):
            load_geography({"places": [{"id": 0, "name": "x"}]})

    def test_unreadable_file_rejected(self, tmp_path):
        with pytest.raises(InvalidConfigError, match="cannot read"):
            load_geography(tmp_path / "missing.json")

    def test_duplicate_place_ids_rejected(self):
        with pytest.raises(InvalidConfigError, match="duplicate place ids"):
            LocationIndex(
                taxonomy=default_taxonomy(),
                places=(
                    Place(0, "a", GeoPoint(0, 0), 0, 10.0),
                    Place(0, "b", GeoPoint(1, 1), 0, 10.0),
                ),
            )
