import io

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from rabs_isac.link import (comm_channel_gain, comm_rate, build_coefficients, sensing_channel_gain,
                            sensing_mi, subcarrier_frequency, wavelength)
from rabs_isac.scenario import RadioConfig, build_scenario

RADIO = RadioConfig()

# 50-digit evaluations of the closed forms with the reference radio constants
ORACLE = {
    # d: (sensing gain, sensing MI bits, comm gain, comm rate bit/s), subcarrier 0
    100.0: (5.0323322211886867e-8, 0.28887408488174594, 6.3238151746038339e-6, 8141247.8000291212),
    10.0: (5.0323322211886867e-4, 76.671140434827335, 6.3238151746038339e-4, 9802211.8474166057),
}
ORACLE_K63_D100 = (4.9799059500553571e-8, 0.28589424886831163, 6.2579343793048038e-6,
                   8137470.631960582)


def _mp_values(d, k):
    mp.mp.dps = 50
    lam = mp.mpf(299792458) / (mp.mpf(3e9) + k * mp.mpf(250000))
    sigma2 = mp.power(10, mp.mpf(-204) / 10) * 250000
    hs = mp.mpf(1e6) * lam ** 2 / ((4 * mp.pi) ** 3 * mp.mpf(d) ** 4)
    hc = mp.mpf(1e3) * lam ** 2 / ((4 * mp.pi) ** 2 * mp.mpf(d) ** 2)
    ts = mp.mpf("5e-6")
    m = mp.mpf(250000) * ts * 16 / 2 * mp.log(1 + ts ** 2 * 16 * hs / sigma2, 2)
    r = mp.mpf(250000) * mp.log(1 + hc / sigma2, 2)
    return tuple(float(v) for v in (hs, m, hc, r))


def _ours(d, k):
    hs = sensing_channel_gain(d, k, RADIO)
    hc = comm_channel_gain(d, k, RADIO)
    return float(hs), float(sensing_mi(hs, k, RADIO)), float(hc), float(comm_rate(hc, k, RADIO))


def test_subcarrier_frequencies():
    assert subcarrier_frequency(0, RADIO) == 3.0e9
    assert subcarrier_frequency(1, RADIO) == pytest.approx(3.00025e9, rel=1e-15)
    assert subcarrier_frequency(63, RADIO) == pytest.approx(3.01575e9, rel=1e-15)
    assert wavelength(0, RADIO) == pytest.approx(0.0999308193, rel=1e-9)
    with pytest.raises(IndexError):
        subcarrier_frequency(64, RADIO)
    with pytest.raises(IndexError):
        subcarrier_frequency(-1, RADIO)


@pytest.mark.parametrize("d", sorted(ORACLE))
def test_scalar_values_match_frozen_oracle(d):
    assert _ours(d, 0) == pytest.approx(ORACLE[d], rel=1e-9)


def test_highest_subcarrier_matches_frozen_oracle():
    assert _ours(100.0, 63) == pytest.approx(ORACLE_K63_D100, rel=1e-9)


@given(st.floats(1.0, 500.0), st.integers(0, 63))
def test_scalar_values_match_high_precision(d, k):
    assert _ours(d, k) == pytest.approx(_mp_values(d, k), rel=1e-9)


def test_reference_magnitudes():
    hs, m, hc, r = _ours(100.0, 0)
    assert hs == pytest.approx(5.03e-8, rel=1e-3)
    assert m == pytest.approx(0.29, rel=0.01)
    assert hc == pytest.approx(6.33e-6, rel=1e-3)
    assert r == pytest.approx(8.1e6, rel=0.01)
    assert 0.5 * RADIO.delta_f_hz * RADIO.ts_s * RADIO.ns_symbols == pytest.approx(10.0, rel=1e-15)


@given(st.floats(0.5, 1e3), st.integers(0, 63))
def test_distance_power_laws(d, k):
    assert sensing_channel_gain(2 * d, k, RADIO) * 16 == pytest.approx(
        sensing_channel_gain(d, k, RADIO), rel=1e-14)
    assert comm_channel_gain(d / 2, k, RADIO) == pytest.approx(
        4 * comm_channel_gain(d, k, RADIO), rel=1e-14)


def test_zero_gain_and_zero_rcs():
    assert sensing_mi(0.0, 0, RADIO) == 0.0
    assert comm_rate(0.0, 0, RADIO) == 0.0
    assert sensing_channel_gain(50.0, 0, RadioConfig(eta_m2=0.0)) == 0.0


@pytest.mark.parametrize("fn", [sensing_channel_gain, comm_channel_gain])
def test_non_positive_distance_rejected(fn):
    with pytest.raises(ValueError):
        fn(0.0, 0, RADIO)


@given(st.floats(0.0, 1e-3), st.floats(1e-12, 1e-3))
def test_mi_monotone_in_gain(h, dh):
    assert sensing_mi(h + dh, 0, RADIO) > sensing_mi(h, 0, RADIO)


def test_gain_decreases_with_subcarrier():
    ks = np.arange(64)
    assert np.all(np.diff(sensing_channel_gain(80.0, ks, RADIO)) < 0)
    assert np.all(np.diff(comm_channel_gain(80.0, ks, RADIO)) < 0)


def test_coefficient_tables_reference_scale():
    sc = build_scenario(seed=0)
    co = build_coefficients(sc)
    assert co.shape == (25, 10, 64)
    for t in (co.m_bar, co.m_hat, co.r_bar, co.r_hat):
        assert t.size == 16_000 and np.all(np.isfinite(t)) and np.all(t > 0)
    assert np.all(co.m_bar >= co.m_hat) and np.all(co.r_bar >= co.r_hat)


def test_coefficient_tables_match_scalar_path():
    from rabs_isac.scenario import distance_bounds
    sc = build_scenario(seed=3, num_locations=3)
    co = build_coefficients(sc)
    for (i, j, k) in [(0, 0, 0), (7, 2, 31), (24, 1, 63)]:
        far, near = distance_bounds(sc.grids[i], sc.locations[j])
        lb = sensing_mi(sensing_channel_gain(far, k, RADIO), k, RADIO)
        ub = sensing_mi(sensing_channel_gain(near, k, RADIO), k, RADIO)
        assert co.m_lb[i, j, k] == pytest.approx(lb, rel=1e-12)
        assert co.m_ub[i, j, k] == pytest.approx(ub, rel=1e-12)
        lb = comm_rate(comm_channel_gain(far, k, RADIO), k, RADIO)
        ub = comm_rate(comm_channel_gain(near, k, RADIO), k, RADIO)
        assert co.r_bar[i, j, k] == pytest.approx((lb + ub) / 2, rel=1e-12)
        assert co.r_hat[i, j, k] == pytest.approx((ub - lb) / 2, rel=1e-9)


def test_location_above_point_grid_has_no_bias():
    from dataclasses import replace
    from rabs_isac.scenario import Grid
    sc = build_scenario(area_w=20, area_h=20, cell=20, locations=[[10, 10, 10]])
    sc = replace(sc, grids=(Grid(0, (10.0, 10.0), 0.0),))
    co = build_coefficients(sc)
    assert np.all(co.m_hat == 0) and np.all(co.r_hat == 0)


def test_distance_monotone_average():
    # a farther location (in both bounds) never has a larger average MI
    sc = build_scenario(area_w=20, area_h=20, cell=20, locations=[[10, 10, 10], [60, 60, 10]])
    co = build_coefficients(sc)
    assert np.all(co.m_bar[:, 1, :] <= co.m_bar[:, 0, :])
    assert np.all(co.r_bar[:, 1, :] <= co.r_bar[:, 0, :])


def test_csv_dump():
    sc = build_scenario(area_w=20, area_h=20, cell=20, num_locations=1,
                        radio=RadioConfig(num_subcarriers=2))
    buf = io.StringIO()
    build_coefficients(sc).to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "i,j,k,m_bar,m_hat,r_bar,r_hat"
    assert len(lines) == 3
    assert all(len(field.split("e")[0].replace(".", "").replace("-", "")) <= 9
               for field in lines[1].split(",")[3:])
