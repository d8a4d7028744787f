import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rabs_isac.scenario import (CandidateLocation, DemandProfile, Grid, ProtectionLevels,
                                RadioConfig, build_grid_set, build_scenario, distance_bound_tables,
                                distance_bounds, sample_demands)


def test_grid_set_reference_area():
    grids = build_grid_set(100, 100, 20)
    assert len(grids) == 25
    assert all(g.half_width == 10 for g in grids)


def test_single_and_row_major_grids():
    (g,) = build_grid_set(20, 20, 20)
    assert g.center_xy == (10.0, 10.0)
    a, b = build_grid_set(40, 20, 20)
    assert (a.index, a.center_xy) == (0, (10.0, 10.0))
    assert (b.index, b.center_xy) == (1, (30.0, 10.0))


def test_grid_set_rejects_non_divisible():
    with pytest.raises(ValueError, match="multiple"):
        build_grid_set(100, 90, 20)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(1.0, 50.0))
def test_grids_tile_the_area(nx, ny, cell):
    grids = build_grid_set(nx * cell, ny * cell, cell)
    assert len(grids) == nx * ny
    # total area matches and centres are distinct, so squares cannot overlap
    assert math.isclose(sum((2 * g.half_width) ** 2 for g in grids), nx * ny * cell * cell)
    centres = {g.center_xy for g in grids}
    assert len(centres) == len(grids)
    for g in grids:
        cx, cy = g.center_xy
        assert g.half_width <= cx <= nx * cell - g.half_width + 1e-9
        assert g.half_width <= cy <= ny * cell - g.half_width + 1e-9


def test_distance_bounds_above_centre_and_corner():
    g = Grid(0, (10.0, 10.0), 10.0)
    far, near = distance_bounds(g, CandidateLocation(0, (10.0, 10.0, 10.0)))
    assert near == pytest.approx(10.0)
    assert far == pytest.approx(math.sqrt(300.0))
    far, near = distance_bounds(g, CandidateLocation(0, (0.0, 0.0, 10.0)))
    assert near == pytest.approx(10.0)
    assert far == pytest.approx(30.0)


def test_point_grid_collapses_interval():
    far, near = distance_bounds(Grid(0, (5.0, 5.0), 0.0), CandidateLocation(0, (30.0, 1.0, 7.0)))
    assert far == near


def test_location_must_be_elevated():
    with pytest.raises(ValueError):
        CandidateLocation(0, (1.0, 1.0, 0.0))


@given(st.floats(-50, 150), st.floats(-50, 150), st.floats(0.5, 30), st.floats(0.1, 1.0))
def test_distance_bounds_order_and_monotone_toward_centre(x, y, z, shrink):
    g = Grid(0, (50.0, 50.0), 10.0)
    far, near = distance_bounds(g, CandidateLocation(0, (x, y, z)))
    assert far >= near > 0
    # moving towards the centre at the same height never increases either distance
    x2, y2 = 50 + shrink * (x - 50), 50 + shrink * (y - 50)
    far2, near2 = distance_bounds(g, CandidateLocation(0, (x2, y2, z)))
    assert far2 <= far + 1e-9 and near2 <= near + 1e-9


def test_vectorised_bounds_match_scalar():
    grids = build_grid_set(60, 40, 20)
    rng = np.random.default_rng(3)
    locs = [CandidateLocation(j, (float(a), float(b), 10.0)) for j, (a, b) in
            enumerate(rng.uniform(0, 60, (5, 2)))]
    far, near = distance_bound_tables(grids, locs)
    for i, g in enumerate(grids):
        for j, l in enumerate(locs):
            assert (far[i, j], near[i, j]) == pytest.approx(distance_bounds(g, l), rel=1e-14)


def test_zero_spread_demands_are_exact():
    d = sample_demands(4, 15.0, 20e6, 0.0, 0.0, 7)
    assert np.all(d.m_sen == 15.0) and np.all(d.r_com == 20e6)


def test_demands_reproducible_and_positive():
    a = sample_demands(11, 15.0, 20e6, 1.0, 1.0, 25)
    b = sample_demands(11, 15.0, 20e6, 1.0, 1.0, 25)
    assert np.array_equal(a.m_sen, b.m_sen) and np.array_equal(a.r_com, b.r_com)
    assert np.all(a.m_sen > 0) and np.all(a.r_com > 0)


def test_demand_mean_matches_configuration():
    # Monte-Carlo check of the log-normal parameterisation
    d = sample_demands(0, 15.0, 20e6, 1.0, 1.0, 100_000)
    assert d.m_sen.mean() == pytest.approx(15.0, rel=0.02)
    assert d.r_com.mean() == pytest.approx(20e6, rel=0.02)
    assert np.log(d.m_sen).std() == pytest.approx(1.0, rel=0.02)


def test_demands_must_be_positive():
    with pytest.raises(ValueError):
        DemandProfile(np.array([1.0, 0.0]), np.array([1.0, 1.0]))


def test_protection_levels_scale_with_locations_and_subcarriers():
    p = ProtectionLevels.from_delta(0.01, 25, 10, 64)
    assert np.allclose(p.gamma, 6.4) and np.allclose(p.lam, 6.4)
    with pytest.raises(ValueError):
        ProtectionLevels.from_delta(-0.1, 3, 1, 1)


@pytest.mark.parametrize("field,value", [("delta_f_hz", 0.0), ("tx_power_w", -1.0), ("mu", 1.5),
                                         ("eta_m2", -1.0)])
def test_radio_validation(field, value):
    with pytest.raises(ValueError):
        RadioConfig(**{field: value})


def test_noise_power_per_subcarrier():
    assert RadioConfig().noise_power_w == pytest.approx(10 ** (-20.4) * 0.25e6, rel=1e-12)


def test_reference_scenario_shape():
    sc = build_scenario(seed=5)
    assert (sc.num_grids, sc.num_locations, sc.num_subcarriers) == (25, 10, 64)
    assert all(l.xyz[2] == 10.0 for l in sc.locations)
    assert all(0 <= l.xyz[0] <= 100 and 0 <= l.xyz[1] <= 100 for l in sc.locations)
    assert sc.with_delta(1.0).protection.gamma[0] == 640


def test_explicit_locations_override_random_ones():
    sc = build_scenario(locations=[[1, 2, 3], [4, 5, 6]])
    assert [l.xyz for l in sc.locations] == [(1.0, 2.0, 3.0), (4.0, 5.0, 6.0)]


def test_placements_independent_of_demand_parameters():
    a = build_scenario(seed=2, m_sen=3.0)
    b = build_scenario(seed=2, m_sen=30.0, sd_sen=0.2)
    assert a.locations == b.locations
