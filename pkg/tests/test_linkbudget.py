import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmcover.errors import ConfigurationError, LinkBudgetError
from swarmcover.linkbudget import (
    SPEED_OF_LIGHT_MPS,
    A2AParams,
    A2GParams,
    a2g_rate_bps,
    max_a2a_distance_m,
    max_a2g_distance_m,
    path_loss_db,
    received_power_dbm,
    swarm_geometry,
    swarm_radius_m,
    tuav_cover_radius_m,
)

C = SPEED_OF_LIGHT_MPS


def ref_distance(fc):
    return C / (4 * math.pi * fc)


def test_path_loss_zero_at_reference_distance():
    p = A2AParams(carrier_hz=2.4e9, pathloss_exponent=3.1)
    assert path_loss_db(p, ref_distance(2.4e9)) == pytest.approx(0.0, abs=1e-12)


def test_path_loss_one_decade():
    p = A2AParams(carrier_hz=2.4e9, pathloss_exponent=2.0)
    assert path_loss_db(p, 10 * ref_distance(2.4e9)) == pytest.approx(20.0, rel=1e-12)


def test_path_loss_spot_value():
    # free-space form 20 log10(d) + 20 log10(f) + 20 log10(4 pi / c), a = 2
    p = A2AParams(carrier_hz=2.4e9, pathloss_exponent=2.0)
    expected = 20 * math.log10(100) + 20 * math.log10(2.4e9) + 20 * math.log10(4 * math.pi / C)
    assert path_loss_db(p, 100.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(80.05, abs=0.01)


def test_path_loss_domain():
    p = A2AParams()
    for d in (0.0, -1.0):
        with pytest.raises(LinkBudgetError):
            path_loss_db(p, d)
        with pytest.raises(LinkBudgetError):
            received_power_dbm(p, d)


def test_received_power_examples():
    p = A2AParams(tx_power_dbm=20, tx_gain_db=0, rx_gain_db=0, carrier_hz=2.4e9)
    assert received_power_dbm(p, ref_distance(2.4e9)) == pytest.approx(20.0, abs=1e-12)
    q = A2AParams(tx_power_dbm=20, tx_gain_db=3, rx_gain_db=3, carrier_hz=2.4e9)
    for d in (1.0, 50.0, 3000.0):
        assert received_power_dbm(q, d) - received_power_dbm(p, d) == pytest.approx(6.0, abs=1e-12)


def test_received_power_strictly_decreasing():
    p = A2AParams()
    d = np.geomspace(0.01, 1e5, 200)
    vals = [received_power_dbm(p, x) for x in d]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_max_a2a_zero_margin():
    p = A2AParams(tx_power_dbm=10, tx_gain_db=2, rx_gain_db=1, threshold_dbm=13, carrier_hz=5e9)
    assert max_a2a_distance_m(p) == pytest.approx(ref_distance(5e9), rel=1e-12)


def test_max_a2a_doubling_margin_squares_ratio():
    base = dict(tx_power_dbm=20, tx_gain_db=0, rx_gain_db=0, pathloss_exponent=2.0, carrier_hz=2.4e9)
    p1 = A2AParams(threshold_dbm=20 - 30, **base)
    p2 = A2AParams(threshold_dbm=20 - 60, **base)
    r1 = max_a2a_distance_m(p1) / ref_distance(2.4e9)
    r2 = max_a2a_distance_m(p2) / ref_distance(2.4e9)
    assert r2 == pytest.approx(r1**2, rel=1e-12)


@given(
    st.floats(-10, 40),
    st.floats(-5, 10),
    st.floats(-5, 10),
    st.floats(-120, -40),
    st.floats(1.5, 4.0),
    st.floats(1e8, 6e9),
)
def test_constraint_c3_threshold(pt, gt, gr, p0, a, fc):
    p = A2AParams(pt, gt, gr, p0, a, fc)
    d = max_a2a_distance_m(p)
    assert received_power_dbm(p, d * (1 - 1e-6)) >= p0
    assert received_power_dbm(p, d * (1 + 1e-6)) < p0


def test_a2g_rate_unit_snr():
    p = A2GParams(ref_channel_gain=1e-5, gu_tx_power_w=0.1, bandwidth_hz=1e6, noise_density_w_per_hz=1e-17)
    d = math.sqrt(0.1 * 1e-5 / (1e6 * 1e-17))
    assert a2g_rate_bps(p, d) == pytest.approx(1e6, rel=1e-12)


def test_a2g_rate_spot_value():
    p = A2GParams(ref_channel_gain=1e-5, gu_tx_power_w=0.1, bandwidth_hz=1e6, noise_density_w_per_hz=1e-17)
    # SNR = 0.1 * 1e-5 / 500^2 / (1e6 * 1e-17) = 0.4
    expected = 1e6 * math.log(1.4) / math.log(2)
    assert a2g_rate_bps(p, 500.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(485426.8, abs=0.1)


def test_a2g_rate_decreasing_to_zero():
    p = A2GParams()
    d = np.geomspace(1.0, 1e7, 100)
    vals = [a2g_rate_bps(p, x) for x in d]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3 * vals[0]
    with pytest.raises(LinkBudgetError):
        a2g_rate_bps(p, 0.0)


def test_max_a2g_examples():
    p = A2GParams(ref_channel_gain=1e-5, gu_tx_power_w=0.1, bandwidth_hz=1e6,
                  noise_density_w_per_hz=1e-17, rate_threshold_bps=1e6)
    assert max_a2g_distance_m(p) == pytest.approx(math.sqrt(0.1 * 1e-5 / (1e6 * 1e-17)), rel=1e-12)
    q = A2GParams(ref_channel_gain=1e-5, gu_tx_power_w=0.4, bandwidth_hz=1e6,
                  noise_density_w_per_hz=1e-17, rate_threshold_bps=1e6)
    assert max_a2g_distance_m(q) == pytest.approx(2 * max_a2g_distance_m(p), rel=1e-12)


def test_max_a2g_overflow():
    p = A2GParams(bandwidth_hz=1.0, rate_threshold_bps=5000.0)
    with pytest.raises(LinkBudgetError):
        max_a2g_distance_m(p)


@given(
    st.floats(1e-8, 1e-3),
    st.floats(1e-3, 1.0),
    st.floats(1e5, 1e8),
    st.floats(1e-21, 1e-17),
    st.floats(0.01, 20.0),
)
def test_constraint_c4_threshold(beta, power, bw, eta, spectral):
    p = A2GParams(beta, power, bw, eta, spectral * bw)
    d = max_a2g_distance_m(p)
    for frac in (0.1, 0.5, 1 - 1e-6):
        assert a2g_rate_bps(p, d * frac) >= p.rate_threshold_bps
    assert a2g_rate_bps(p, d * (1 + 1e-6)) < p.rate_threshold_bps


@pytest.mark.parametrize("d, h, r", [(500, 400, 300), (500, 500, 0), (500, 300, 400)])
def test_tuav_cover_radius_examples(d, h, r):
    assert tuav_cover_radius_m(d, h) == pytest.approx(r, abs=1e-12)


def test_tuav_cover_radius_infeasible():
    with pytest.raises(LinkBudgetError):
        tuav_cover_radius_m(100, 150)


@pytest.mark.parametrize("rj, rij, rs", [(300, 200, 500), (0, 200, 200), (300, 0, 300)])
def test_swarm_radius_examples(rj, rij, rs):
    assert swarm_radius_m(rj, rij) == rs


def test_default_parameters_give_500m_swarm():
    geo = swarm_geometry(A2AParams(), A2GParams(), 150.0)
    assert geo.a2a_radius_m == pytest.approx(200.0, rel=1e-9)
    assert geo.tuav_cover_radius_m == pytest.approx(300.0, rel=1e-9)
    assert geo.swarm_radius_m == pytest.approx(500.0, rel=1e-9)
    assert geo.swarm_radius_m == geo.a2a_radius_m + geo.tuav_cover_radius_m


def test_parameter_validation():
    with pytest.raises(ConfigurationError):
        A2AParams(pathloss_exponent=0)
    with pytest.raises(ConfigurationError):
        A2AParams(carrier_hz=-1)
    with pytest.raises(ConfigurationError):
        A2AParams(light_speed_mps=3e8)
    with pytest.raises(ConfigurationError):
        A2GParams(bandwidth_hz=0)
