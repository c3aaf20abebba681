import json
import os

import pandas as pd
import pytest

from app import COMMANDS, build_parser, main
from utils.constants import EXIT_CONFIG_ERROR, EXIT_INFEASIBLE, EXIT_OK

BASE = {"n_antennas": 16, "msg_order": 2, "tag_order": 2, "gamma_m_db": 10.0}


def _run(command, config_path, out_dir, *extra):
    return main([command, "--config", config_path, "--out", str(out_dir), "--log-level", "WARNING",
                 *extra])


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_parser_lists_every_command():
    parser = build_parser()
    args = parser.parse_args(["design", "--config", "c.json"])
    assert args.out == "results"
    assert not args.excel
    assert set(COMMANDS) == {"design", "uniform-sweep", "mbased-sweep", "optimize", "tradeoff",
                             "simulate", "auth"}


def test_design_writes_constellation_and_manifest(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("design", write_config(BASE), out) == EXIT_OK
    document = _read_json(out / "constellation.json")
    assert document["constellation"]["R"] == pytest.approx(21.0, abs=1e-9)
    levels = pd.read_csv(out / "constellation.csv")
    assert list(levels["symbol"]) == [1, 2]

    manifest = _read_json(out / "manifest.json")
    assert manifest["command"] == "design"
    assert manifest["seed"] == 2024
    assert manifest["mac_identity"] == "HMAC-SHA256"
    assert set(manifest["outputs"]) == {"constellation.csv", "constellation.json"}
    assert manifest["wall_clock_seconds"] >= 0
    assert manifest["config"]["config"] == BASE


def test_excel_export(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("design", write_config(BASE), out, "--excel") == EXIT_OK
    assert os.path.exists(out / "results.xlsx")
    assert "results.xlsx" in _read_json(out / "manifest.json")["outputs"]


@pytest.mark.parametrize("content", [
    '{"msg_order": 2, "tag_order": 2, "gamma_m_db": 10}',
    '{"n_antennas": 16, "msg_order": 3, "tag_order": 2, "gamma_m_db": 10}',
    '{"n_antennas": 16, "msg_order": 2, "tag_order": 2}',
    'not json',
])
def test_malformed_config_exits_with_config_error(tmp_path, content):
    path = tmp_path / "config.json"
    path.write_text(content, encoding="utf-8")
    assert _run("design", str(path), tmp_path / "out") == EXIT_CONFIG_ERROR


def test_missing_config_file(tmp_path):
    assert _run("design", str(tmp_path / "absent.json"), tmp_path / "out") == EXIT_CONFIG_ERROR
    with pytest.raises(SystemExit) as info:
        main(["design"])
    assert info.value.code == 2


def test_commands_needing_extra_fields(write_config, tmp_path):
    path = write_config(BASE)
    assert _run("mbased-sweep", path, tmp_path / "a") == EXIT_CONFIG_ERROR
    assert _run("simulate", path, tmp_path / "b") == EXIT_CONFIG_ERROR


def test_uniform_sweep_marks_invalid_points(write_config, tmp_path):
    out = tmp_path / "out"
    assert _run("uniform-sweep", write_config({**BASE, "beta_grid": [0.0, 0.5, 1.0]}), out) == EXIT_OK
    df = pd.read_csv(out / "uniform_sweep.csv")
    assert list(df["status"]) == ["error", "ok", "ok"]
    floors = _read_json(out / "error_floor.json")
    assert len(floors) == 1


def test_mbased_sweep(write_config, tmp_path):
    out = tmp_path / "out"
    config = {**BASE, "r_grid": [1.5, 2.0], "gamma_m_db_list": [8.0, 12.0]}
    assert _run("mbased-sweep", write_config(config), out) == EXIT_OK
    df = pd.read_csv(out / "mbased_sweep.csv")
    assert len(df) == 4
    assert (df["p_em"] <= df["p_em_upper"]).all()


def test_optimize_infeasible_exits_with_code_three(write_config, tmp_path):
    config = {"n_antennas": 8, "msg_order": 2, "tag_order": 2, "gamma_tot_db": 0.0,
              "delta": 1e-200, "alpha_grid_points": 4}
    assert _run("optimize", write_config(config), tmp_path / "out") == EXIT_INFEASIBLE


def test_optimize_writes_solution(write_config, tmp_path):
    out = tmp_path / "out"
    config = {"n_antennas": 32, "msg_order": 2, "tag_order": 2, "gamma_tot_db": 15.0,
              "delta": 1e-6, "alpha_grid_points": 4}
    assert _run("optimize", write_config(config), out) == EXIT_OK
    solution = _read_json(out / "solution.json")
    assert solution["p_em_upper_at_opt"] <= 1e-6 * (1 + 1e-8)
    assert len(pd.read_csv(out / "optimized_scheme.csv")) == 2


def test_tradeoff_flags_infeasible_rows(write_config, tmp_path):
    out = tmp_path / "out"
    config = {"n_antennas": 32, "msg_order": 2, "tag_order": 2, "gamma_tot_db": 15.0,
              "delta_list": [1e-200, 1e-6], "alpha_grid_points": 4}
    assert _run("tradeoff", write_config(config), out) == EXIT_OK
    df = pd.read_csv(out / "tradeoff.csv")
    assert df["status"].iloc[0] == "infeasible"
    assert df["status"].iloc[1] in ("optimal", "barrier")


def test_simulate_is_reproducible(write_config, tmp_path):
    config = {**BASE, "embedding": {"kind": "message_based", "r": 1.5}}
    path = write_config(config)
    assert _run("simulate", path, tmp_path / "first", "--trials", "3000", "--seed", "5") == EXIT_OK
    assert _run("simulate", path, tmp_path / "second", "--trials", "3000", "--seed", "5") == EXIT_OK
    for name in ("simulation.csv", "simulation_per_symbol.csv"):
        first = (tmp_path / "first" / name).read_bytes()
        assert first == (tmp_path / "second" / name).read_bytes()
    summary = pd.read_csv(tmp_path / "first" / "simulation.csv")
    assert summary["frames"].iloc[0] == 3000
    assert "p_em_display" in summary.columns
    assert _read_json(tmp_path / "first" / "manifest.json")["seed"] == 5


def test_auth_reports_threshold(write_config, tmp_path):
    out = tmp_path / "out"
    config = {**BASE, "gamma_m_db": 20.0, "mac_len": 16, "fa_budget": 0.01, "frames": 300,
              "embedding": {"kind": "message_based", "r": 2.0}}
    assert _run("auth", write_config(config), out) == EXIT_OK
    df = pd.read_csv(out / "auth.csv")
    assert list(df["attacker"]) == ["legit", "forger"]
    assert {"i_star", "theta0", "acceptance_rate_display"} <= set(df.columns)
    extra = _read_json(out / "manifest.json")["extra"]
    assert extra["i_star"] == int(df["i_star"].iloc[0])
    assert len(extra["key_id"]) == 16
    assert extra["mac_identity"] == "HMAC-SHA256"


def test_manifest_reproduces_the_run(write_config, tmp_path):
    config = {**BASE, "embedding": {"kind": "message_based", "r": 1.5}}
    first = tmp_path / "first"
    assert _run("simulate", write_config(config), first, "--trials", "2000", "--seed", "11") == EXIT_OK
    manifest = _read_json(first / "manifest.json")
    again = tmp_path / "again"
    assert _run("simulate", str(first / "manifest.json"), again) == EXIT_OK
    for name in manifest["outputs"]:
        assert (again / name).read_bytes() == (first / name).read_bytes()
    replayed = _read_json(again / "manifest.json")
    assert replayed["seed"] == 11
    assert replayed["config"]["trials"] == 2000
