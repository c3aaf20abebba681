import numpy as np
import pytest

from core.analysis import MONTE_CARLO, evaluate_scheme
from core.constellation import design_constellation
from core.embedding import build_message_based, build_uniform, ratio_upper_bound
from core.simulator import (MonteCarloSimulator, binomial_sigma, block_generator,
                            chi2_statistic_check, draw_channel, received_energy, simulate_ser,
                            wilson_interval)
from core.special_math import DomainError
from tests.conftest import conditional_tag_ser, make_system


def _within(empirical, expected, trials, sigmas=4.0):
    return abs(empirical - expected) <= sigmas * max(binomial_sigma(expected, trials), 1.0 / trials)


def test_wilson_interval():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert 0.5 - low == pytest.approx(high - 0.5)
    low, high = wilson_interval(0, 1000)
    assert low == pytest.approx(0.0, abs=1e-12)
    assert 0 < high < 0.01


def test_binomial_sigma():
    assert binomial_sigma(0.5, 100) == pytest.approx(0.05)
    assert binomial_sigma(0.3, 0) == float("inf")


def test_draw_channel_statistics():
    sample = draw_channel(block_generator(1, 0), 4000, 16, 2.0)
    assert sample.h.shape == (4000, 16)
    assert np.mean(np.abs(sample.h) ** 2) == pytest.approx(1.0, rel=0.02)
    assert np.mean(np.abs(sample.n) ** 2) == pytest.approx(2.0, rel=0.02)
    energy = sample.normalized_energy(np.full(4000, 3.0))
    assert np.mean(energy) == pytest.approx(9.0 + 2.0, rel=0.02)


@pytest.mark.parametrize("model", ["antenna", "gamma"])
def test_received_energy_mean(model):
    A = np.full(50000, 5.0)
    energy = received_energy(block_generator(2, 0), A, 8, 1.0, model)
    assert np.mean(energy) == pytest.approx(5.0, rel=0.01)
    # ||y||^2/N has variance A^2 / N
    assert np.var(energy) == pytest.approx(25.0 / 8, rel=0.05)


def test_received_energy_unknown_model():
    with pytest.raises(DomainError):
        received_energy(block_generator(2, 0), np.ones(3), 8, 1.0, "rician")


def test_simulator_validation():
    with pytest.raises(DomainError):
        MonteCarloSimulator(trials=0)
    with pytest.raises(DomainError):
        MonteCarloSimulator(trials=10, channel_model="rician")


def test_results_do_not_depend_on_worker_count():
    cfg = make_system(n_antennas=32, msg_order=2, tag_order=2)
    scheme = build_message_based(design_constellation(cfg), 2, 1.5)
    # 70000 trials span three blocks at N=32
    serial = MonteCarloSimulator(70000, seed=9, workers=1).run(cfg, scheme)
    parallel = MonteCarloSimulator(70000, seed=9, workers=3).run(cfg, scheme)
    assert serial.to_dict() == parallel.to_dict()
    other = MonteCarloSimulator(70000, seed=10, workers=1).run(cfg, scheme)
    assert other.to_dict() != serial.to_dict()


def test_message_based_binary_matches_theory():
    cfg = make_system(n_antennas=32, msg_order=2, tag_order=2, gamma_m_db=10.0)
    con = design_constellation(cfg)
    scheme = build_message_based(con, 2, 1.5)
    theory = evaluate_scheme(scheme, con, 32)
    result = simulate_ser(cfg, scheme, 100000, seed=21)
    assert _within(result.p_em, theory.p_em, result.frames)
    assert _within(result.p_et, theory.p_et, result.tag_trials)
    assert result.tag_bit_errors == result.tag_errors


def test_uniform_quaternary_matches_theory():
    cfg = make_system(n_antennas=64, msg_order=4, tag_order=2, gamma_m_db=10.0)
    con = design_constellation(cfg)
    scheme = build_uniform(con, 2, 0.3)
    theory = evaluate_scheme(scheme, con, 64)
    result = simulate_ser(cfg, scheme, 100000, seed=22)
    assert _within(result.p_em, theory.p_em, result.frames)
    assert _within(result.p_et, conditional_tag_ser(scheme, 64), result.tag_trials)
    for i in range(4):
        trials = int(result.symbol_trials[i])
        assert _within(result.per_symbol_msg[i], theory.per_symbol_msg[i], trials)


def test_message_based_quaternary_tags_match_theory():
    cfg = make_system(n_antennas=32, msg_order=2, tag_order=4, gamma_m_db=10.0)
    con = design_constellation(cfg)
    scheme = build_message_based(con, 4, [1.3, 1.3])
    theory = evaluate_scheme(scheme, con, 32)
    result = MonteCarloSimulator(100000, seed=23, channel_model="gamma").run(cfg, scheme)
    assert _within(result.p_et, theory.p_et, result.tag_trials)
    assert _within(result.p_em, theory.p_em, result.frames)
    assert result.tag_bit_error_rate <= result.p_et
    assert result.p_et_ci[0] <= result.p_et <= result.p_et_ci[1]


def test_simulator_records_runs():
    cfg = make_system(n_antennas=16, msg_order=2, tag_order=2)
    scheme = build_message_based(design_constellation(cfg), 2, 2.0)
    simulator = MonteCarloSimulator(1000, seed=3)
    simulator.run(cfg, scheme)
    simulator.run(cfg, scheme)
    df = simulator.get_results_dataframe()
    assert len(df) == 2
    assert list(df["frames"]) == [1000, 1000]
    assert df.iloc[0].to_dict() == df.iloc[1].to_dict()


@pytest.mark.parametrize("N", [1, 8, 128])
def test_normalized_energy_follows_chi_squared(N):
    fit = chi2_statistic_check(N, A=4.0, samples=100000, seed=31, level=0.01)
    assert fit.passed
    assert fit.moments["h_power"] == pytest.approx(1.0, rel=0.02)
    assert fit.moments["n_power"] == pytest.approx(1.0, rel=0.02)
    assert fit.moments["energy_mean"] == pytest.approx(4.0, rel=0.02)


def test_chi_squared_check_detects_wrong_power():
    fit = chi2_statistic_check(128, A=4.0, samples=20000, seed=32, normalizer=4.2)
    assert not fit.passed
    assert fit.statistic > fit.critical_value


def _random_scheme(rng):
    cfg = make_system(n_antennas=int(rng.choice([32, 64, 128])), msg_order=int(rng.choice([2, 4])),
                      tag_order=int(rng.choice([2, 4])), gamma_m_db=float(rng.uniform(10.0, 14.0)))
    con = design_constellation(cfg)
    if rng.random() < 0.5:
        return cfg, con, build_uniform(con, cfg.tag_order, float(rng.uniform(0.1, 1.0)))
    # Top tag level at R^u keeps the row clear of the next message threshold
    r = ratio_upper_bound(con, cfg.tag_order) ** float(rng.uniform(0.1, 0.25))
    return cfg, con, build_message_based(con, cfg.tag_order, r)


def test_random_configurations_match_theory():
    rng = np.random.default_rng(2024)
    kinds = set()
    for index in range(24):
        cfg, con, scheme = _random_scheme(rng)
        kinds.add(scheme.kind)
        theory = evaluate_scheme(scheme, con, cfg.n_antennas)
        result = MonteCarloSimulator(100000, seed=100 + index, channel_model="gamma").run(cfg, scheme)
        assert _within(result.p_em, theory.p_em, result.frames)
        assert _within(result.p_et, conditional_tag_ser(scheme, cfg.n_antennas), result.tag_trials)
        # The per-row closed form ignores message errors, which vanish for these rows from N=64
        if scheme.kind == "message_based" and cfg.n_antennas >= 64:
            assert _within(result.p_et, theory.p_et, result.tag_trials)
    assert kinds == {"uniform", "message_based"}


def test_to_error_report():
    cfg = make_system(n_antennas=32, msg_order=4, tag_order=2)
    con = design_constellation(cfg)
    result = simulate_ser(cfg, build_uniform(con, 2, 0.5), 5000, seed=24, channel_model="gamma")
    report = result.to_error_report()
    assert report.source == MONTE_CARLO
    assert report.frames == 5000
    assert report.p_em == result.p_em and report.p_et == result.p_et
    assert report.p_et_ci == result.p_et_ci
    assert len(report.per_symbol_msg) == 4
    data = report.to_dict()
    assert data["tag_trials"] == result.tag_trials
    assert data["p_em_ci_low"] <= data["p_em"] <= data["p_em_ci_high"]
