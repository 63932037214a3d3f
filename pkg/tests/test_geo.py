import numpy as np
import pytest

from src.core.errors import ValidationError
from src.core.geo import SpatialGrid, check_coordinates, great_circle_m, great_circle_vec, nearest_index


def test_great_circle_distances():
    assert great_circle_m((39.29, -76.61), (39.29, -76.61)) == 0.0
    # one degree of latitude
    assert great_circle_m((0.0, 0.0), (1.0, 0.0)) == pytest.approx(111_195, rel=1e-4)
    baltimore, washington = (39.2904, -76.6122), (38.9072, -77.0369)
    assert great_circle_m(baltimore, washington) == pytest.approx(56_000, rel=0.02)
    assert great_circle_m(baltimore, washington) == pytest.approx(great_circle_m(washington, baltimore))


def test_vectorised_distance_matches_scalar():
    lats = np.array([39.0, 39.5, 40.0])
    lons = np.array([-76.0, -76.5, -77.0])
    distances = great_circle_vec(39.29, -76.61, lats, lons)

    for k in range(3):
        assert distances[k] == pytest.approx(great_circle_m((39.29, -76.61), (lats[k], lons[k])))


def test_coordinates_out_of_range_are_rejected():
    check_coordinates(-90.0, 180.0)
    with pytest.raises(ValidationError):
        check_coordinates(91.0, 0.0)
    with pytest.raises(ValidationError):
        check_coordinates(0.0, -181.0)
    with pytest.raises(ValidationError):
        check_coordinates(float('nan'), 0.0)


def test_nearest_index_with_mask():
    lats = np.array([39.0, 39.3, 39.31])
    lons = np.array([-76.0, -76.6, -76.6])

    assert nearest_index(39.31, -76.6, lats, lons) == 2
    assert nearest_index(39.31, -76.6, lats, lons, np.array([True, True, False])) == 1
    assert nearest_index(39.31, -76.6, lats, lons, np.zeros(3, dtype=bool)) is None
    assert nearest_index(39.31, -76.6, np.array([]), np.array([])) is None


def test_grid_pairs_match_brute_force():
    rng = np.random.default_rng(11)
    lats = 39.2 + rng.uniform(0, 0.1, size=150)
    lons = -76.7 + rng.uniform(0, 0.1, size=150)
    radius = 1200.0

    found = {(i, j) for i, j, _ in SpatialGrid(lats, lons, radius).pairs_within(radius)}
    expected = {(i, j) for i in range(150) for j in range(i + 1, 150)
                if great_circle_m((lats[i], lons[i]), (lats[j], lons[j])) <= radius}

    assert found == expected, "grid search must find exactly the pairs within the radius"


def test_grid_radius_cannot_exceed_cell():
    grid = SpatialGrid([39.0, 39.01], [-76.0, -76.0], 500.0)
    with pytest.raises(ValidationError):
        list(grid.pairs_within(800.0))
