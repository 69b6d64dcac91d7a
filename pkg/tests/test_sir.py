import math
from dataclasses import replace

import numpy as np

from mimo_d2d import (
    PilotConfig,
    ScenarioConfig,
    build_layout,
    drop_network,
    estimate_channels,
    generate_channels,
    zf_precoder,
)
from mimo_d2d.channel import ChannelSet
from mimo_d2d.geometry import HexLayout, NetworkRealization
from mimo_d2d.sir import (
    asymptotic_d2d_sir,
    asymptotic_d2d_sir_all,
    asymptotic_downlink_sir_all,
    exact_d2d_sir_all,
    exact_downlink_sir,
    exact_downlink_sir_all,
)


def _scenario(cells=7, users=3, d2d=2, m=16, seed=0):
    config = ScenarioConfig(cells=cells, antennas=m, users_per_cell=users, d2d_per_cell=d2d)
    layout = build_layout(cells, config.radius_m)
    drop = drop_network(config, layout, np.random.default_rng(seed))
    cs = generate_channels(drop, config.pathloss_params(), m, np.random.SeedSequence(seed + 1))
    cs = estimate_channels(cs, PilotConfig(config.pilot_length))
    precoders = [zf_precoder(cs.h_hat[i], i) for i in range(cells)]
    return config, drop, cs, precoders


def test_isolated_cell_no_d2d_gives_infinite_sir():
    config, drop, cs, precoders = _scenario(cells=1, users=2, d2d=0, m=8)
    exact = exact_downlink_sir_all(cs, precoders, 1.0, 1.0)
    asym = asymptotic_downlink_sir_all(cs, 1.0, 1.0, config.pilot_length, 8)
    assert np.all(np.isinf(exact))
    assert np.all(np.isinf(asym))


def test_single_cell_single_d2d_matches_scalar_formula():
    config, drop, cs, precoders = _scenario(cells=1, users=2, d2d=1, m=8, seed=3)
    pb, pd = config.pb_watts, config.pd_watts
    sir = exact_downlink_sir(drop, cs, precoders, pb, pd, user=(0, 0))
    # no contamination and no other cells: SIR = P_b / (P_d |u|^2)
    u2 = abs(cs.u[0][0, 0, 0]) ** 2
    assert math.isclose(sir.sir_linear, pb / (pd * u2), rel_tol=1e-12)
    assert sir.entity == "downlink" and sir.variant == "exact"
    expected_dist = float(np.linalg.norm(drop.user_pos[0, 0]))
    assert math.isclose(sir.distance_to_bs_m, expected_dist, rel_tol=1e-12)


def _two_cell_realization(users, d2d, rng):
    centers = np.array([[0.0, 0.0], [math.sqrt(3) * 300.0, 0.0]])
    layout = HexLayout(num_cells=2, circumradius_m=300.0, centers=centers)

    class _Cfg:
        users_per_cell = users
        d2d_per_cell = d2d
        min_bs_distance_m = 10.0
        d2d_link_distance_m = 10.0

    return drop_network(_Cfg, layout, rng)


def test_exact_downlink_matches_independent_reimplementation():
    # two cells, K=1, M=4, D=0; straight-line recomputation with plain inverses
    drop = _two_cell_realization(users=1, d2d=0, rng=np.random.default_rng(12))
    params = ScenarioConfig(antennas=4, users_per_cell=1).pathloss_params()
    lp = 31
    cs = generate_channels(drop, params, 4, np.random.SeedSequence(77), rx_cells=[0, 1])
    cs = estimate_channels(cs, PilotConfig(lp))
    precoders = [zf_precoder(cs.h_hat[i], i) for i in range(2)]
    got = exact_downlink_sir_all(cs, precoders, 2.0, 1.0)[0]

    # independent path: explicit pseudo-inverse, explicit sums
    h_hat_0 = cs.h[0, 0] + cs.h[0, 1] / math.sqrt(lp)
    h_hat_1 = cs.h[1, 1] + cs.h[1, 0] / math.sqrt(lp)
    p0 = h_hat_0.conj().T @ np.linalg.inv(h_hat_0 @ h_hat_0.conj().T)
    p1 = h_hat_1.conj().T @ np.linalg.inv(h_hat_1 @ h_hat_1.conj().T)
    delta = h_hat_0[0] - cs.h[0, 0, 0]
    denom = np.sum(np.abs(delta @ p0) ** 2) + np.sum(np.abs(cs.h[1, 0, 0] @ p1) ** 2)
    assert math.isclose(got, 1.0 / denom, rel_tol=1e-10)


def test_exact_full_scenario_against_standalone_recomputation():
    config, drop, cs, precoders = _scenario(cells=7, users=3, d2d=2, m=16, seed=9)
    pb, pd = config.pb_watts, config.pd_watts
    k, d = 1, 0  # spot-check one user and one link

    got_user = exact_downlink_sir_all(cs, precoders, pb, pd)[k]
    delta = cs.h_hat[0][k] - cs.h[0, 0, k]
    denom = np.sum(np.abs(delta @ precoders[0].matrix) ** 2)
    for l in range(1, 7):
        denom += np.sum(np.abs(cs.h[l, 0, k] @ precoders[l].matrix) ** 2)
    for i in range(7):
        for mm in range(2):
            denom += (pd / pb) * abs(cs.u[0][i, mm, k]) ** 2
    assert math.isclose(got_user, 1.0 / denom, rel_tol=1e-10)

    got_link = exact_d2d_sir_all(cs, precoders, pb, pd)[d]
    num = abs(cs.g[0][0, d, d]) ** 2
    denom = 0.0
    for l in range(7):
        denom += (pb / pd) * np.sum(np.abs(cs.v[0][l, d] @ precoders[l].matrix) ** 2)
    for i in range(7):
        for mm in range(2):
            if not (i == 0 and mm == d):
                denom += abs(cs.g[0][i, mm, d]) ** 2
    assert math.isclose(got_link, num / denom, rel_tol=1e-10)


def test_d2d_ratio_of_scalars_when_bs_silent():
    config, drop, cs, precoders = _scenario(cells=1, users=2, d2d=2, m=8, seed=4)
    sirs = exact_d2d_sir_all(cs, precoders, 0.0, 1.0)
    g2 = np.abs(cs.g[0]) ** 2
    assert math.isclose(sirs[0], g2[0, 0, 0] / g2[0, 1, 0], rel_tol=1e-12)
    assert math.isclose(sirs[1], g2[0, 1, 1] / g2[0, 0, 1], rel_tol=1e-12)


def test_isolated_d2d_pair_infinite_sir():
    config, drop, cs, precoders = _scenario(cells=1, users=2, d2d=1, m=8, seed=5)
    sirs = exact_d2d_sir_all(cs, precoders, 0.0, 1.0)
    assert np.isinf(sirs[0])
    asym = asymptotic_d2d_sir_all(cs, 0.0, 1.0, 8)
    assert np.isinf(asym[0])


def test_asymptotic_downlink_hand_built_instance():
    # two cells, K=1, M=2, deterministic channel vectors
    centers = np.array([[0.0, 0.0], [math.sqrt(3) * 300.0, 0.0]])
    layout = HexLayout(2, 300.0, centers)
    user_pos = np.array([[[100.0, 0.0]], [[519.615, 50.0]]])
    d2d_tx = np.zeros((2, 0, 2))
    real = NetworkRealization(layout, user_pos, d2d_tx, d2d_tx.copy(), 10.0)

    m, lp = 2, 31
    h = np.zeros((2, 2, 1, m), dtype=complex)
    h[1, 0, 0] = [1.0 + 1.0j, 2.0]        # interfering BS -> target user
    h[1, 1, 0] = [0.5j, 1.0]              # interfering BS -> its own user
    h[0, 0, 0] = [3.0, 4.0]               # serving BS -> target (unused by the formula)
    rho_h = np.ones((2, 2, 1))
    rho_h[1, 0, 0] = 2.0e-3               # pathloss BS 1 -> target
    rho_h[1, 1, 0] = 5.0e-2               # pathloss BS 1 -> own user
    cs = ChannelSet(
        m=m, h=h, rho_h=rho_h,
        v={0: np.zeros((2, 0, m), dtype=complex)}, rho_v={0: np.zeros((2, 0))},
        u={0: np.zeros((2, 0, 1), dtype=complex)}, rho_u={0: np.zeros((2, 0, 1))},
        g={0: np.zeros((2, 0, 0), dtype=complex)}, rho_g={0: np.zeros((2, 0, 0))},
    )
    got = asymptotic_downlink_sir_all(cs, 1.0, 1.0, lp, m)[0]

    inner = (1.0 + 1.0j) * np.conj(0.5j) + 2.0 * np.conj(1.0)
    beam = abs(inner) ** 2 / (m * 5.0e-2) ** 2
    contamination = (2.0e-3 / 5.0e-2) ** 2 / lp
    assert math.isclose(got, 1.0 / (beam + contamination), rel_tol=1e-12)


def test_asymptotic_d2d_hand_built_instance():
    centers = np.array([[0.0, 0.0], [math.sqrt(3) * 300.0, 0.0]])
    layout = HexLayout(2, 300.0, centers)
    m = 2
    h = np.zeros((2, 2, 1, m), dtype=complex)
    h[0, 0, 0] = [1.0, -1.0j]
    h[1, 1, 0] = [2.0, 1.0 + 1.0j]
    rho_h = np.full((2, 2, 1), 1.0)
    rho_h[0, 0, 0] = 4.0e-2
    rho_h[1, 1, 0] = 3.0e-2
    v = np.zeros((2, 1, m), dtype=complex)
    v[0, 0] = [1.0j, 0.5]
    v[1, 0] = [0.25, 0.0]
    g = np.zeros((2, 1, 1), dtype=complex)
    g[0, 0, 0] = 0.3 - 0.4j
    cs = ChannelSet(
        m=m, h=h, rho_h=rho_h,
        v={0: v}, rho_v={0: np.ones((2, 1))},
        u={0: np.zeros((2, 1, 1), dtype=complex)}, rho_u={0: np.zeros((2, 1, 1))},
        g={0: g}, rho_g={0: np.full((2, 1, 1), 0.25)},
    )
    pb, pd = 4.0, 0.5
    got = asymptotic_d2d_sir_all(cs, pb, pd, m)[0]

    beam0 = abs(v[0, 0] @ h[0, 0, 0].conj()) ** 2 / (m * 4.0e-2) ** 2
    beam1 = abs(v[1, 0] @ h[1, 1, 0].conj()) ** 2 / (m * 3.0e-2) ** 2
    expected = abs(g[0, 0, 0]) ** 2 / ((pb / pd) * (beam0 + beam1))
    assert math.isclose(got, expected, rel_tol=1e-12)


def test_adding_d2d_transmitter_never_raises_downlink_sir():
    config, drop, cs, precoders = _scenario(cells=7, users=3, d2d=2, m=16, seed=21)
    pb, pd = config.pb_watts, config.pd_watts
    base = exact_downlink_sir_all(cs, precoders, pb, pd)
    u_extended = dict(cs.u)
    extra = np.zeros((7, 3, 3), dtype=complex)
    extra[:, :2, :] = cs.u[0]
    extra[:, 2, :] = 0.01 + 0.02j
    u_extended[0] = extra
    cs_more = replace(cs, u=u_extended)
    more = exact_downlink_sir_all(cs_more, precoders, pb, pd)
    assert np.all(more <= base)


def test_power_scale_invariance():
    config, drop, cs, precoders = _scenario(cells=7, users=3, d2d=2, m=16, seed=8)
    a_user = exact_downlink_sir_all(cs, precoders, 2.0, 0.25)
    b_user = exact_downlink_sir_all(cs, precoders, 2.0e6, 0.25e6)
    assert np.allclose(a_user, b_user, rtol=1e-12, atol=0)
    a_link = exact_d2d_sir_all(cs, precoders, 2.0, 0.25)
    b_link = exact_d2d_sir_all(cs, precoders, 2.0e6, 0.25e6)
    assert np.allclose(a_link, b_link, rtol=1e-12, atol=0)
    a_asym = asymptotic_downlink_sir_all(cs, 2.0, 0.25, config.pilot_length, 16)
    b_asym = asymptotic_downlink_sir_all(cs, 2.0e6, 0.25e6, config.pilot_length, 16)
    assert np.allclose(a_asym, b_asym, rtol=1e-12, atol=0)


def test_asymptotic_d2d_sample_metadata():
    config, drop, cs, precoders = _scenario(cells=7, users=3, d2d=2, m=16, seed=2)
    s = asymptotic_d2d_sir(drop, cs, config.pb_watts, config.pd_watts, 16, 1)
    assert s.entity == "d2d" and s.variant == "asymptotic" and s.index == 1
    assert s.sir_linear > 0
    assert math.isclose(
        s.distance_to_bs_m, float(np.linalg.norm(drop.d2d_rx_pos[0, 1])), rel_tol=1e-12
    )
