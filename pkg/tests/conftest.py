"""Shared builders for small deterministic fixtures."""

from __future__ import annotations

import pytest

from mobicrowd.domain import (
    GeoPoint,
    LocationIndex,
    Place,
    WorkerLocation,
    default_taxonomy,
)
from mobicrowd.world import Honest, MobilitySchedule, Segment, Worker

# roughly one degree of latitude on the reference sphere, in meters
M_PER_DEG_LAT = 111_194.93


def make_schedule(place_id: int = 0, class_id: int = 0,
                  day_length_s: float = 86_400.0) -> MobilitySchedule:
    return MobilitySchedule(
        segments=(Segment(0.0, place_id, class_id),),
        day_length_s=day_length_s,
    )


def make_worker(
    wid: int,
    lat: float,
    lon: float,
    class_id: int = 0,
    reliability: float = 0.8,
    strategy=Honest(),
    profile=None,
    place_id: int = 0,
) -> Worker:
    return Worker(
        id=wid,
        location=WorkerLocation(point=GeoPoint(lat, lon), class_id=class_id),
        schedule=make_schedule(place_id=place_id, class_id=class_id),
        reliability=reliability,
        strategy=strategy,
        profile=profile,
    )


def make_index(places: tuple[Place, ...]) -> LocationIndex:
    return LocationIndex(taxonomy=default_taxonomy(), places=places)


@pytest.fixture
def school_index() -> LocationIndex:
    places = (
        Place(0, "north school", GeoPoint(52.24, 21.00), 2, 300.0),
        Place(1, "mall", GeoPoint(52.20, 21.05), 3, 250.0),
        Place(2, "station", GeoPoint(52.22, 21.02), 4, 150.0),
    )
    return make_index(places)
