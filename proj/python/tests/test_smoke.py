import cmath
import math

import pytest

import dwlab


def test_constant_damping_matches_closed_form():
    tau = dwlab.damped_wave_spectrum(dwlab.DampingProfile(mean=0.5), 16)
    ref = dwlab.constant_damping_reference(0.5, 16)
    assert len(tau) == len(ref)
    for t in tau:
        assert min(abs(t - r) for r in ref) < 1e-8


def test_coin_pressure_at_one():
    coin = dwlab.MarkovModel.full_shift_by_target([0.0, 1.0])
    assert dwlab.pressure(coin, 1.0) == pytest.approx(math.log(1 + math.e), abs=1e-12)


def test_rate_function_bernoulli_value():
    coin = dwlab.MarkovModel.full_shift_by_target([0.0, 1.0])
    alphas, values = dwlab.rate_function(coin)
    i = min(range(len(alphas)), key=lambda k: abs(alphas[k] - 0.6))
    a = alphas[i]
    expected = -a * math.log(a) - (1 - a) * math.log(1 - a)
    assert values[i] == pytest.approx(expected, abs=1e-6)


def test_cohomology_residual_small():
    assert dwlab.cohomology_residual(0, 8.0, 1e-4) < 1e-4


def test_lengths_identity():
    x, l = dwlab.xm(7)
    assert l == pytest.approx(2 * math.acosh(7), abs=1e-12)
    assert x == pytest.approx(2 * 49 - 1 + 14 * math.sqrt(48))


def test_r_search_verified():
    ls = [l for _, l in dwlab.lengths(2, 5, 74, 4) if l <= 10]
    R, min_cos = dwlab.r_search(ls, 10.0, 2.0)
    assert R >= 10.0
    assert all(math.cos(R * l) >= 0.5 - 1e-12 for l in ls)


def test_oscillatory_window_at_zero():
    value, ok = dwlab.oscillatory_window(0.0, 10.0, 0.7)
    assert value == pytest.approx(10 ** 0.7)
    assert ok


def test_polynomial_zeros_and_jensen():
    assert dwlab.polynomial_zeros([-1, 0, 0, 1], 0, 2, 2) == 3
    assert dwlab.polynomial_jensen_bound([-0.1, 1], 0, 1, 2) == pytest.approx(
        math.log(2.1 / 0.1) / math.log(2))


def test_deviation_exponent_planted():
    ladder = [(2.0 ** -k, 2.0 ** (0.5 * k)) for k in range(1, 6)]
    slope, residual = dwlab.deviation_exponent(ladder)
    assert slope == pytest.approx(0.5, abs=1e-12)


def test_unknown_config_key_rejected(tmp_path):
    with pytest.raises(ValueError):
        dwlab.run({"kind": "thermo", "output_dir": str(tmp_path), "colour": 1})


def test_run_thermo_report(tmp_path):
    report = dwlab.run({"kind": "thermo", "output_dir": str(tmp_path / "t")})
    assert report["all_passed"]
    assert (tmp_path / "t" / "pressure.csv").exists()
