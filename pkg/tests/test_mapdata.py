import math

import pytest

from scenforge.actions import Action
from scenforge.mapdata import Lane, RoadMap, build_fixture_map


def test_lane_geometry_basics(road_map):
    lane = road_map.lane("lane_100")
    assert lane.length == pytest.approx(100.0)
    assert lane.point_at(0.0) == pytest.approx((0.0, 0.0))
    assert lane.point_at(40.0) == pytest.approx((40.0, 0.0))
    assert lane.direction_at(50.0) == pytest.approx((1.0, 0.0))
    assert lane.heading_at(50.0) == pytest.approx(0.0)


def test_lateral_offset_is_left_positive(road_map):
    lane = road_map.lane("lane_100")
    x, y = lane.point_at(10.0, lateral=2.0)
    assert (x, y) == pytest.approx((10.0, 2.0))


def test_project_clamps_to_lane(road_map):
    lane = road_map.lane("lane_100")
    off, lat = lane.project(30.0, 1.5)
    assert off == pytest.approx(30.0)
    assert lat == pytest.approx(1.5)
    off, _ = lane.project(-20.0, 0.0)
    assert off == pytest.approx(0.0)


def test_neighbors_and_successors(road_map):
    lane = road_map.lane("lane_100")
    assert lane.left_neighbor == "lane_110"
    assert road_map.lane("lane_110").right_neighbor == "lane_100"
    assert "lane_101" in lane.successors
    assert "lane_100" in road_map.predecessors("lane_101")


def test_neighbor_group_spans_the_road(road_map):
    group = road_map.neighbor_group("lane_100")
    assert set(group) >= {"lane_100", "lane_110"}
    assert road_map.same_road("lane_100", "lane_110")
    assert not road_map.same_road("lane_100", "lane_200")
    assert road_map.is_left_of("lane_110", "lane_100")


def test_junction_membership(road_map):
    assert not road_map.lane("lane_100").is_junction
    assert road_map.lane("lane_220").is_junction


def test_connector_maneuvers(road_map):
    assert road_map.connector_maneuver("lane_220") is Action.TURN_RIGHT
    assert road_map.connector_maneuver("lane_222") is Action.TURN_LEFT
    assert road_map.connector_maneuver("lane_210") is Action.CROSS
    assert road_map.connector_maneuver("lane_100") is None


def test_route_straight_chain(road_map):
    route = road_map.route("lane_100", "lane_101")
    assert route is not None
    assert [lid for lid, _ in route] == ["lane_100", "lane_101"]


def test_route_through_junction_reports_maneuver(road_map):
    route = road_map.route("lane_200", "lane_209")
    assert route is not None
    maneuvers = [m for _, m in route if m is not None]
    assert Action.TURN_RIGHT in maneuvers


def test_route_unreachable(road_map):
    # nothing feeds back from the far end of the straight road to its start
    assert road_map.route("lane_101", "lane_100") is None


def test_nearest_lane_uses_heading(road_map):
    east = road_map.nearest_lane(50.0, 0.5, 0.0)
    assert east is not None and east.lane_id == "lane_100"
    none = road_map.nearest_lane(5000.0, 5000.0, 0.0)
    assert none is None


def test_unknown_lane_raises(road_map):
    with pytest.raises(KeyError):
        road_map.lane("lane_nope")


def test_lane_needs_two_points():
    with pytest.raises(ValueError):
        Lane("solo", [(0, 0)], 4.0, 15.0)


def test_save_load_roundtrip(tmp_path, road_map):
    path = tmp_path / "map.json"
    road_map.save(path)
    again = RoadMap.load(path)
    assert again.map_id == road_map.map_id
    assert sorted(again.lanes) == sorted(road_map.lanes)
    lane = again.lane("lane_220")
    assert lane.is_junction
    assert lane.length == pytest.approx(road_map.lane("lane_220").length)


def test_bundled_fixture_matches_builder(fixtures_dir):
    bundled = RoadMap.load(fixtures_dir / "fixture_city.json")
    built = build_fixture_map()
    assert bundled.to_json() == built.to_json()
