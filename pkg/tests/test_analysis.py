import numpy as np
import pytest

from core.analysis import (SchemeErrorAnalyzer, bound_error_derivatives, bound_error_term,
                           bound_exponent, evaluate_scheme, message_ser, message_ser_upper_bound,
                           per_symbol_message_ser, tag_error_derivatives, tag_error_term, tag_ser,
                           tag_ser_message_based)
from core.constellation import design_constellation, message_only_ser
from core.embedding import build_message_based, build_uniform, ratio_upper_bound
from core.simulator import MonteCarloSimulator, binomial_sigma, simulate_ser
from core.special_math import DomainError, ratio_v
from tests.conftest import conditional_tag_ser, make_system

BETA_GRID = np.linspace(0.005, 1.0, 200)


def test_uniform_error_floor_above_ten_percent():
    analyzer = SchemeErrorAnalyzer(make_system(n_antennas=128, msg_order=4, tag_order=2))
    analyzer.uniform_sweep(BETA_GRID, [8.0, 10.0, 12.0])
    floors = analyzer.find_error_floor()
    assert set(floors) == {8.0, 10.0, 12.0}
    for beta, p_et in floors.values():
        assert p_et >= 0.10


def test_uniform_error_floor_holds_in_simulation():
    analyzer = SchemeErrorAnalyzer(make_system(n_antennas=128, msg_order=4, tag_order=2))
    analyzer.uniform_sweep(BETA_GRID, [8.0, 10.0, 12.0])
    for seed, (gamma_m_db, (beta, p_et)) in enumerate(sorted(analyzer.find_error_floor().items())):
        cfg = make_system(n_antennas=128, msg_order=4, tag_order=2, gamma_m_db=gamma_m_db)
        scheme = build_uniform(design_constellation(cfg), 2, beta)
        result = simulate_ser(cfg, scheme, 100000, seed=60 + seed)
        exact = conditional_tag_ser(scheme, 128)
        sigma = binomial_sigma(exact, result.tag_trials)
        assert abs(result.p_et - exact) <= 3 * sigma
        assert result.p_et >= 0.10
        # The per-row closed form misses tag cells lost to message errors
        assert result.p_et - p_et > 4 * sigma


def test_uniform_tag_ser_decreases_with_beta(system, constellation):
    values = [tag_ser(build_uniform(constellation, 2, b), constellation, system.n_antennas)[0]
              for b in (0.2, 0.5, 1.0)]
    assert values[0] > values[1] > values[2]


def test_uniform_per_symbol_ordering():
    cfg = make_system(gamma_m_db=10.0)
    con = design_constellation(cfg)
    _, per_symbol = tag_ser(build_uniform(con, 2, 0.5), con, cfg.n_antennas)
    assert per_symbol[3] > per_symbol[2] > per_symbol[1] > per_symbol[0]


@pytest.mark.parametrize("gamma_m_db", range(6, 15))
def test_top_symbol_tag_ser_stays_high(gamma_m_db):
    cfg = make_system(gamma_m_db=float(gamma_m_db))
    con = design_constellation(cfg)
    _, per_symbol = tag_ser(build_uniform(con, 2, 1.0), con, cfg.n_antennas)
    assert per_symbol[3] > 0.2


def test_message_based_tag_ser_closed_form(system, constellation):
    r = [1.2, 1.6, 2.0, 2.4]
    scheme = build_message_based(constellation, 2, r)
    p_et, per_symbol = tag_ser(scheme, constellation, system.n_antennas)
    assert p_et == pytest.approx(tag_ser_message_based(r, 2, system.n_antennas), rel=1e-10)
    # Larger ratios separate the tag levels further
    assert np.all(np.diff(per_symbol) < 0)


def test_message_based_tag_ser_independent_of_message_snr():
    values = []
    for gamma_m_db in (6.0, 10.0, 14.0):
        cfg = make_system(n_antennas=64, msg_order=4, tag_order=4, gamma_m_db=gamma_m_db)
        con = design_constellation(cfg)
        values.append(tag_ser(build_message_based(con, 4, 1.25), con, cfg.n_antennas)[0])
    assert max(values) - min(values) <= 1e-12
    assert values[0] == pytest.approx(tag_ser_message_based([1.25] * 4, 4, 64), abs=1e-12)


def test_tag_ser_message_based_domain():
    with pytest.raises(DomainError):
        tag_ser_message_based([1.0, 1.5], 2, 32)


def test_message_ser_matches_per_symbol_average(system, constellation):
    scheme = build_uniform(constellation, 2, 0.4)
    per_symbol = per_symbol_message_ser(scheme, system.n_antennas)
    assert per_symbol.shape == (4,)
    assert message_ser(scheme, constellation, system.n_antennas) == pytest.approx(np.mean(per_symbol))


def test_upper_bound_dominates_exact_message_ser():
    rng = np.random.default_rng(11)
    violations = 0
    for _ in range(300):
        N = int(rng.choice([8, 32, 128]))
        L_m = int(rng.choice([2, 4]))
        L_t = int(rng.choice([2, 4]))
        cfg = make_system(n_antennas=N, msg_order=L_m, tag_order=L_t,
                          gamma_m_db=float(rng.uniform(0.0, 20.0)))
        con = design_constellation(cfg)
        top = ratio_upper_bound(con, L_t)
        r = np.exp(rng.uniform(1e-3, 0.999, size=L_m) * np.log(top))
        scheme = build_message_based(con, L_t, r)
        exact = message_ser(scheme, con, N)
        bound = message_ser_upper_bound(scheme.r, con.R, L_t, L_m, N)
        violations += bound < exact - 1e-14
    assert violations == 0


def test_upper_bound_reaches_tag_free_ser_as_ratio_vanishes(system, constellation):
    r = np.full(4, 1.0 + 1e-9)
    bound = message_ser_upper_bound(r, constellation.R, 2, 4, system.n_antennas)
    assert bound == pytest.approx(message_only_ser(system, constellation), rel=1e-6)


def test_upper_bound_accepts_reduced_ratio_list(system, constellation):
    full = message_ser_upper_bound([1.5, 1.5, 1.5, 2.5], constellation.R, 2, 4, 128)
    reduced = message_ser_upper_bound([1.5, 1.5, 1.5], constellation.R, 2, 4, 128)
    assert full == reduced
    with pytest.raises(DomainError):
        message_ser_upper_bound([1.5, 1.5], constellation.R, 2, 4, 128)
    with pytest.raises(DomainError):
        message_ser_upper_bound([1.5, 1.5, 1.5, constellation.R], constellation.R, 2, 4, 128)


@pytest.mark.parametrize("N", [8, 32, 128])
def test_tag_error_derivatives_match_finite_differences(N):
    k = np.linspace(0.05, 1.0, 12)
    first, second = tag_error_derivatives(k, N)
    h = 1e-5
    numeric_first = (tag_error_term(k + h, N) - tag_error_term(k - h, N)) / (2 * h)
    assert np.allclose(first, numeric_first, rtol=1e-5, atol=1e-9)
    h = 1e-4
    numeric_second = (tag_error_term(k + h, N) - 2 * tag_error_term(k, N)
                      + tag_error_term(k - h, N)) / h ** 2
    assert np.allclose(second, numeric_second, rtol=1e-4, atol=1e-5)


def test_bound_error_derivatives_match_finite_differences():
    N, R, L_t = 32, 21.0, 4
    k = np.linspace(0.05, 0.9, 10)
    first, second = bound_error_derivatives(k, N, R, L_t)
    h = 1e-5
    numeric_first = (bound_error_term(k + h, N, R, L_t) - bound_error_term(k - h, N, R, L_t)) / (2 * h)
    assert np.allclose(first, numeric_first, rtol=1e-5, atol=1e-9)
    h = 1e-4
    numeric_second = (bound_error_term(k + h, N, R, L_t) - 2 * bound_error_term(k, N, R, L_t)
                      + bound_error_term(k - h, N, R, L_t)) / h ** 2
    assert np.allclose(second, numeric_second, rtol=1e-4, atol=1e-5)


@pytest.mark.parametrize("N", [8, 64, 256])
@pytest.mark.parametrize("L_t", [2, 4, 8])
@pytest.mark.parametrize("R", [3.0, 21.0, 101.0])
def test_error_terms_are_convex(N, L_t, R):
    k_max = np.log(R) / (L_t - 1)
    k = np.linspace(1e-3 * k_max, (1 - 1e-3) * k_max, 1000)
    h = k[1] - k[0]
    for values in (tag_error_term(k, N), bound_error_term(k, N, R, L_t)):
        assert np.all(np.diff(values, 2) / h ** 2 >= -1e-6)
    assert np.all(tag_error_derivatives(k, N)[1] >= 0)
    assert np.all(bound_error_derivatives(k, N, R, L_t)[1] >= 0)


def test_bound_ratio_decreases_to_one():
    R, L_t = 21.0, 2
    k_max = np.log(R) / (L_t - 1)
    k = np.linspace(0.01, k_max, 200)
    g = ratio_v(bound_exponent(k, R, L_t))
    assert np.all(np.diff(g) < 0)
    assert g[-1] == pytest.approx(1.0)


def test_evaluate_scheme(system, constellation):
    uniform = evaluate_scheme(build_uniform(constellation, 2, 0.5), constellation, 128)
    assert uniform.p_em_upper is None
    assert len(uniform.per_symbol_tag) == 4
    based = evaluate_scheme(build_message_based(constellation, 2, 1.5), constellation, 128)
    assert based.p_em <= based.p_em_upper
    row = based.to_dict()
    assert row["source"] == "theory"
    assert "p_et_4" in row and "p_em_1" in row and "tag_power" in row


def test_sweeps_record_invalid_points():
    analyzer = SchemeErrorAnalyzer(make_system(n_antennas=32, msg_order=2, tag_order=2))
    rows = analyzer.uniform_sweep([0.0, 0.5, 1.0], [10.0])
    assert [row["status"] for row in rows] == ["error", "ok", "ok"]
    df = analyzer.get_uniform_dataframe()
    assert list(df["beta"]) == [0.0, 0.5, 1.0]

    rows = analyzer.message_based_sweep([1.0, 1.5, 3.0], [6.0, 10.0])
    assert len(rows) == 6
    assert rows[0]["status"] == "error"
    ok = [row for row in rows if row["status"] == "ok"]
    for row in ok:
        assert row["p_et"] == pytest.approx(row["p_et_closed_form"], rel=1e-10)
        assert row["p_em"] <= row["p_em_upper"]
        assert row["p_em_no_tag"] <= row["p_em_upper"] + 1e-15


def test_find_error_floor_without_sweep():
    analyzer = SchemeErrorAnalyzer(make_system())
    assert "Error" in analyzer.find_error_floor()


def test_sweep_with_monte_carlo_columns():
    simulator = MonteCarloSimulator(trials=4000, seed=5, channel_model="gamma")
    analyzer = SchemeErrorAnalyzer(make_system(n_antennas=32, msg_order=2, tag_order=2), simulator)
    rows = analyzer.message_based_sweep([1.5], [10.0])
    assert rows[0]["frames_mc"] == 4000
    assert 0 <= rows[0]["p_et_mc"] <= 1
    assert "p_em_ci_high_mc" in rows[0]
    assert rows[0]["tag_trials_mc"] <= 4000
    assert {"p_em_1_mc", "p_em_2_mc", "p_et_1_mc"} <= set(rows[0])
    assert "source_mc" not in rows[0]


def test_message_based_tag_ser_limits():
    assert tag_ser_message_based([1 + 1e-9] * 4, 2, 128) == pytest.approx(0.5, abs=1e-6)
    assert tag_ser_message_based([1 + 1e-9] * 2, 4, 32) == pytest.approx(0.75, abs=1e-6)
    assert tag_ser_message_based([1e6] * 4, 2, 32) == pytest.approx(0.0, abs=1e-12)


def test_uniform_message_ser_grows_with_beta(system, constellation):
    values = [message_ser(build_uniform(constellation, 2, b), constellation, system.n_antennas)
              for b in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(a < b for a, b in zip(values[:-1], values[1:]))


def test_vanishing_uniform_step_recovers_message_only(system, constellation):
    scheme = build_uniform(constellation, 2, 1e-6)
    assert message_ser(scheme, constellation, system.n_antennas) == pytest.approx(
        message_only_ser(system, constellation), rel=1e-4)
    assert tag_ser(scheme, constellation, system.n_antennas)[0] == pytest.approx(0.5, abs=1e-3)
