import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cran_duality.model import ChannelMatrix, UplinkDesign, uplink_fronthaul_rates, uplink_user_rates
from cran_duality.duality import quantization_from_fronthaul_ul
from cran_duality.optimizer import (
    RateTargets,
    SolverOptions,
    fixed_point_solve,
    interference_map,
    mmse_receivers,
    saturation_eta,
    solve_downlink_min_power,
)
from cran_duality.verify import random_beamformers, random_channel, random_instance

R43 = np.log2(4 / 3)


def _sinr(ch, w, p, q, k, sigma2=1.0):
    H = ch.entries
    sig = p[k] * abs(np.vdot(w, H[:, k])) ** 2
    den = sum(p[j] * abs(np.vdot(w, H[:, j])) ** 2 for j in range(ch.K) if j != k)
    den += np.sum(q * np.abs(w) ** 2) + sigma2 * np.vdot(w, w).real
    return sig / den


def test_mmse_single_rrh():
    ch = ChannelMatrix([[0.3 - 2j, 1.0 + 1j, -4.0]])
    np.testing.assert_allclose(mmse_receivers(ch, [1.0, 2.0, 0.5], [0.7], 1.0), [[1.0, 1.0, 1.0]], rtol=1e-15)


def test_mmse_single_user_is_matched_filter(rng):
    ch = random_channel(4, 1, rng)
    w = mmse_receivers(ch, [2.0], np.zeros(4), 1.0)[:, 0]
    h = ch.entries[:, 0] / np.linalg.norm(ch.entries[:, 0])
    assert abs(np.vdot(w, h)) == pytest.approx(1.0, rel=1e-12)


def test_mmse_beats_random_receivers(rng):
    ch = random_channel(2, 2, rng)
    p, q = np.array([1.5, 0.8]), np.array([0.4, 0.9])
    W = mmse_receivers(ch, p, q, 1.0)
    for k in range(2):
        best = _sinr(ch, W[:, k], p, q, k)
        for _ in range(1000):
            u = random_beamformers(2, 1, rng)[:, 0]
            assert _sinr(ch, u, p, q, k) <= best * (1 + 1e-12)


def test_interference_map_scalar(scalar_channel):
    for p in [0.0, 0.5, 1.0, 7.0]:
        # q = (p + 1) / 1, SINR gain 1 / (q + 1)
        got = interference_map(scalar_channel, [p], [R43], [1.0], 1.0)
        assert got[0] == pytest.approx((p + 2) / 3, rel=1e-14)


def test_interference_map_zero_target(rng):
    ch = random_channel(3, 3, rng)
    g = interference_map(ch, rng.uniform(0, 2, 3), [0.0, 1.0, 0.5], [2.0, 2.0, 2.0], 1.0)
    assert g[0] == 0 and np.all(g[1:] > 0)


def test_interference_map_sinr_inversion_oracle(rng):
    for _ in range(20):
        ch, caps = random_instance(rng)
        p = rng.uniform(0.05, 3, ch.K)
        R = rng.uniform(0.1, 2, ch.K)
        q = quantization_from_fronthaul_ul(ch, p, saturation_eta(caps), 1.0)
        W = mmse_receivers(ch, p, q, 1.0)
        gam = 2.0 ** R - 1
        # power that gives user k exactly its target SINR at the current receiver and interference
        expected = [gam[k] * p[k] / _sinr(ch, W[:, k], p, q, k) for k in range(ch.K)]
        np.testing.assert_allclose(interference_map(ch, p, R, caps, 1.0), expected, rtol=1e-10)


def test_interference_map_rejects_dead_user():
    ch = ChannelMatrix([[1.0, 0.0]])
    with pytest.raises(ValueError):
        interference_map(ch, [1.0, 1.0], [0.5, 0.5], [1.0], 1.0)
    interference_map(ch, [1.0, 1.0], [0.5, 0.0], [1.0], 1.0)


@pytest.mark.usefixtures("backend")
class TestFixedPoint:
    def test_scalar_optimum(self, scalar_channel):
        res = fixed_point_solve(scalar_channel, [R43], [1.0], 1.0)
        assert res.converged and not res.infeasible
        assert res.design.powers[0] == pytest.approx(1.0, rel=1e-10)
        assert res.design.quant_noise[0] == pytest.approx(2.0, rel=1e-10)
        assert res.report.sum_power == pytest.approx(1.0, rel=1e-10)

    def test_zero_targets(self, rng):
        ch = random_channel(3, 2, rng)
        res = fixed_point_solve(ch, [0.0, 0.0], [1.0, 1.0, 1.0], 1.0)
        assert res.converged and res.iterations == 0
        assert np.all(res.design.powers == 0)

    def test_infeasible(self, scalar_channel):
        res = fixed_point_solve(scalar_channel, [1.1], [1.0], 1.0)
        assert res.infeasible and not res.converged and res.design is None
        assert "exceeded" in res.diagnostic

    def test_indeterminate(self, scalar_channel):
        res = fixed_point_solve(scalar_channel, [R43], [1.0], 1.0, SolverOptions(max_iters=3))
        assert res.indeterminate

    def test_solution_properties(self, rng):
        for _ in range(10):
            ch, caps = random_instance(rng, max_K=5)
            R = rng.uniform(0.05, 0.6, ch.K)
            res = fixed_point_solve(ch, R, caps, 1.0)
            if not res.converged:
                continue
            d = res.design
            np.testing.assert_allclose(res.report.user_rates, R, atol=1e-6)
            np.testing.assert_allclose(uplink_fronthaul_rates(ch, d.powers, d.quant_noise, 1.0), caps, atol=1e-9)
            # cutting any user's power by 1% breaks some target
            for k in range(ch.K):
                p = d.powers.copy()
                p[k] *= 0.99
                q = quantization_from_fronthaul_ul(ch, p, saturation_eta(caps), 1.0)
                W = mmse_receivers(ch, p, q, 1.0)
                assert np.any(uplink_user_rates(ch, UplinkDesign(p, W, q), 1.0) < R - 1e-9)


def test_monotone_iterates_from_zero(rng):
    ch, caps = random_instance(rng, max_K=5)
    R = RateTargets(rng.uniform(0.05, 0.5, ch.K))
    p = np.zeros(ch.K)
    for _ in range(50):
        nxt = interference_map(ch, p, R, caps, 1.0)
        assert np.all(nxt >= p)
        p = nxt


def test_downlink_solver_scalar(scalar_channel):
    res = solve_downlink_min_power(scalar_channel, [R43], [1.0], 1.0)
    assert res.design.direction == "dl"
    assert res.design.powers[0] == pytest.approx(0.5, rel=1e-10)
    assert res.design.quant_noise[0] == pytest.approx(0.5, rel=1e-10)
    assert res.report.sum_power == pytest.approx(1.0, rel=1e-10)


def test_downlink_solver_zero_and_infeasible(scalar_channel, rng):
    ch = random_channel(2, 2, rng)
    res = solve_downlink_min_power(ch, [0.0, 0.0], [1.0, 1.0], 1.0)
    assert np.all(res.design.powers == 0) and np.all(res.design.quant_noise == 0)
    assert solve_downlink_min_power(scalar_channel, [1.1], [1.0], 1.0).infeasible


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_downlink_matches_uplink_optimum(seed):
    r = np.random.default_rng(seed)
    ch, caps = random_instance(r, max_K=5)
    R = r.uniform(0.05, 0.6, ch.K)
    ul = fixed_point_solve(ch, R, caps, 1.0)
    dl = solve_downlink_min_power(ch, R, caps, 1.0)
    assert ul.converged == dl.converged
    if ul.converged:
        assert dl.report.sum_power == pytest.approx(ul.report.sum_power, rel=1e-8)
        assert np.all(dl.report.user_rates >= R - 1e-6)
        np.testing.assert_allclose(dl.report.fronthaul_rates, caps, atol=1e-9)
