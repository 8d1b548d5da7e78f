import numpy as np
import pytest

from cran_duality.duality import ul_to_dl
from cran_duality.model import ChannelMatrix, DownlinkDesign, SystemParams, UplinkDesign, check_feasible
from cran_duality.optimizer import fixed_point_solve
from cran_duality.verify import (
    brute_force_min_power,
    duality_ensemble,
    interference_function_properties,
    random_channel,
    relative_gap,
    sample_rate_region,
    substreams,
    validate_duality,
)

R43 = np.log2(4 / 3)


def test_relative_gap():
    assert relative_gap(0.0, 0.0) == 0.0
    assert relative_gap(1.0, 2.0) == 0.5
    np.testing.assert_array_equal(relative_gap([1.0, 0.0], [1.0, 1.0]), [0.0, 1.0])


def test_substreams_reproducible():
    a = [g.random() for g in substreams(5, 3)]
    b = [g.random() for g in substreams(5, 3)]
    assert a == b and len(set(a)) == 3


def test_validate_worked_instance(scalar_channel):
    rep = validate_duality(scalar_channel, 1.0, UplinkDesign([1.0], [[1.0]], [2.0]), "ul", tol=1e-12)
    assert rep.passed
    assert max(rep.max_rate_gap, rep.max_fronthaul_gap, rep.power_gap) <= 1e-12
    rep = validate_duality(scalar_channel, 1.0, DownlinkDesign([0.5], [[1.0]], [0.5]), tol=1e-12)
    assert rep.passed


def test_validate_zero_power(rng):
    ch = random_channel(2, 2, rng)
    w = np.eye(2, dtype=complex)
    for d in (UplinkDesign([0.0, 0.0], w, [1.0, 1.0]), DownlinkDesign([0.0, 0.0], w, [0.0, 0.0])):
        rep = validate_duality(ch, 1.0, d)
        assert rep.max_rate_gap == rep.power_gap == rep.max_fronthaul_gap == 0.0
        assert rep.passed


def test_validate_direction_mismatch(scalar_channel):
    with pytest.raises(ValueError):
        validate_duality(scalar_channel, 1.0, UplinkDesign([1.0], [[1.0]], [2.0]), "dl")


def test_duality_ensemble_small():
    s = duality_ensemble(50, seed=3)
    assert s.all_passed and s.max_roundtrip_gap <= 1e-8


def test_properties_scalar_closed_form(scalar_channel):
    v = interference_function_properties(scalar_channel, [R43], [1.0], 1.0, 200, seed=1)
    assert v.holds and v.checked == 200 and v.counterexample is None


def test_properties_random(rng):
    ch = random_channel(3, 3, rng)
    v = interference_function_properties(ch, [0.5, 1.0, 2.0], [2.0, 3.0, 1.0], 1.0, 50, seed=2)
    assert v.holds


def test_properties_report_counterexample(scalar_channel, monkeypatch):
    import cran_duality.verify as vf

    # an affine map with no constant term fails scalability
    monkeypatch.setattr(vf, "interference_map", lambda ch, p, *a: np.asarray(p) * 1.0 + 0.0)
    v = vf.interference_function_properties(scalar_channel, [R43], [1.0], 1.0, 10, seed=0)
    assert not v.holds and v.counterexample["axiom"] == "scalability"


def test_brute_force_scalar(scalar_channel):
    res = brute_force_min_power(scalar_channel, [R43], [1.0], 1.0)
    assert res.feasible
    assert res.sum_power == pytest.approx(1.0, abs=1e-3)
    assert res.sum_power >= 1.0 - 1e-12


def test_brute_force_zero_targets(rng):
    res = brute_force_min_power(random_channel(2, 2, rng), [0.0, 0.0], [1.0, 1.0], 1.0)
    assert res.feasible and res.sum_power == 0.0


def test_brute_force_infeasible(scalar_channel):
    assert not brute_force_min_power(scalar_channel, [1.1], [1.0], 1.0).feasible


def test_brute_force_rejects_three_users(rng):
    with pytest.raises(ValueError):
        brute_force_min_power(random_channel(2, 3, rng), [0.1, 0.1, 0.1], [1.0, 1.0], 1.0)


def test_brute_force_agrees_with_solver(rng):
    ch = random_channel(3, 2, rng)
    R, caps = [0.6, 0.4], [3.0, 2.0, 4.0]
    bf = brute_force_min_power(ch, R, caps, 1.0)
    fp = fixed_point_solve(ch, R, caps, 1.0)
    assert bf.sum_power >= fp.report.sum_power * (1 - 1e-9)
    assert relative_gap(bf.sum_power, fp.report.sum_power) <= 2e-3


@pytest.fixture
def region_setup(rng):
    ch = random_channel(3, 2, rng)
    return ch, SystemParams(1.0, [2.0, 1.5, 3.0], 5.0)


def test_region_rejects_empty(region_setup):
    with pytest.raises(ValueError):
        sample_rate_region(*region_setup, "ul", 0, seed=1)


def test_region_needs_budget(region_setup):
    ch, _ = region_setup
    with pytest.raises(ValueError):
        sample_rate_region(ch, SystemParams(1.0, [2.0, 1.5, 3.0]), "ul", 3, seed=1)


@pytest.mark.parametrize("direction", ["ul", "dl"])
def test_region_recertified(region_setup, direction):
    ch, params = region_setup
    s = sample_rate_region(ch, params, direction, 40, seed=9)
    assert s.count == len(s.rates) == 40
    for r, d in zip(s.rates, s.designs):
        assert np.all(r >= 0)
        assert check_feasible(ch, params, d, direction).feasible
    again = sample_rate_region(ch, params, direction, 40, seed=9)
    assert all(np.array_equal(a, b) for a, b in zip(s.rates, again.rates))


def test_region_cross_direction(region_setup):
    ch, params = region_setup
    s = sample_rate_region(ch, params, "ul", 40, seed=4)
    for d in s.designs:
        dl = ul_to_dl(ch, params.noise_power, d)
        assert check_feasible(ch, params, dl, "dl").feasible
        assert validate_duality(ch, params.noise_power, d).passed
