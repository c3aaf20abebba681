import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

# Import core modules
from core.analysis import SchemeErrorAnalyzer, evaluate_scheme
from core.auth import AuthenticationExperiment, key_id
from core.constellation import (MessageConstellation, SystemConfig, design_constellation,
                                linear_to_db, message_only_ser, per_symbol_correct)
from core.embedding import EmbeddingScheme, build_message_based, build_uniform
from core.optimizer import InfeasibleError, TagPowerOptimizer
from core.simulator import MonteCarloSimulator
from core.special_math import DomainError

# Import utilities
from utils.config import ConfigError, RunConfig, load_config
from utils.constants import (ATTACKER_MODES, EXCEL_FILENAME, EXIT_CONFIG_ERROR, EXIT_FAILURE,
                             EXIT_INFEASIBLE, EXIT_OK, MAC_IDENTITY, MANIFEST_FILENAME)
from utils.io import RunManifest, export_results_to_excel, write_csv, write_json, write_manifest

# Configure logging
logger = logging.getLogger('pla_tag_tool')

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@dataclass
class CommandResult:
    """Tables (written as CSV) and documents (written as JSON) produced by one command."""
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    documents: Dict[str, Dict] = field(default_factory=dict)
    extra: Dict = field(default_factory=dict)


def _simulator(run: RunConfig) -> MonteCarloSimulator:
    return MonteCarloSimulator(run.trials, run.seed, run.workers, run.channel_model)


def _optimizer(run: RunConfig, cfg: SystemConfig) -> TagPowerOptimizer:
    return TagPowerOptimizer(cfg, run.alpha_grid_points, workers=run.workers)


def build_scheme(run: RunConfig) -> Tuple[EmbeddingScheme, MessageConstellation, SystemConfig]:
    """
    Build the embedding named in the config's `embedding` block.

    Args:
        run: Run configuration

    Returns:
        Tuple (scheme, constellation, system) where system carries the message
        power actually used (alpha* gamma_tot for an optimized scheme)

    Raises:
        ConfigError: If the config has no embedding block
        InfeasibleError: If an optimized scheme cannot meet its delta
    """
    embedding = run.embedding
    if not embedding:
        raise ConfigError("This command needs an embedding block in the config")
    cfg = run.system

    if embedding["kind"] == "optimized":
        solution = _optimizer(run, cfg).solve_power_allocation(float(embedding["delta"]))
        cfg = cfg.with_alpha(solution.alpha_star)
        return solution.scheme, design_constellation(cfg), cfg

    con = design_constellation(cfg)
    if embedding["kind"] == "uniform":
        scheme = build_uniform(con, cfg.tag_order, float(embedding["beta"]))
    else:
        r = embedding["r"]
        scheme = build_message_based(con, cfg.tag_order, r if isinstance(r, list) else float(r))
    return scheme, con, cfg


def cmd_design(run: RunConfig) -> CommandResult:
    """Message constellation for the configured message SNR."""
    cfg = run.system
    if cfg.gamma_m <= 0:
        raise InfeasibleError("power", "Message SNR must be positive to design a constellation")
    con = design_constellation(cfg)
    levels = pd.DataFrame({
        "symbol": np.arange(1, con.order + 1),
        "A": con.A,
        "message_power": con.message_powers,
        "B": list(con.B) + [np.inf],
        "p_correct": per_symbol_correct(cfg.n_antennas, con),
    })
    document = {
        "system": cfg.to_dict(),
        "gamma_m_db": linear_to_db(cfg.gamma_m),
        "constellation": con.to_dict(),
        "p_e_no_tag": message_only_ser(cfg, con),
    }
    logger.info(f"Designed L_m={cfg.msg_order} constellation: R={con.R:.10g}")
    return CommandResult(tables={"constellation": levels}, documents={"constellation": document})


def cmd_uniform_sweep(run: RunConfig) -> CommandResult:
    """Theoretical (and optionally simulated) error rates of uniform embedding over beta."""
    analyzer = SchemeErrorAnalyzer(run.system, _simulator(run) if run.monte_carlo else None)
    analyzer.uniform_sweep(run.beta_grid, run.gamma_m_db_list or None)
    floors = analyzer.find_error_floor()
    return CommandResult(
        tables={"uniform_sweep": analyzer.get_uniform_dataframe()},
        documents={"error_floor": {str(k): v for k, v in floors.items()}},
    )


def cmd_mbased_sweep(run: RunConfig) -> CommandResult:
    """Error rates and message SER bound of message-based embedding over a shared ratio r."""
    if not run.r_grid:
        raise ConfigError("mbased-sweep needs r_grid")
    analyzer = SchemeErrorAnalyzer(run.system, _simulator(run) if run.monte_carlo else None)
    analyzer.message_based_sweep(run.r_grid, run.gamma_m_db_list or None)
    return CommandResult(tables={"mbased_sweep": analyzer.get_message_based_dataframe()})


def _requested_delta(run: RunConfig) -> float:
    if run.delta is not None:
        return run.delta
    if run.embedding.get("kind") == "optimized":
        return float(run.embedding["delta"])
    return run.delta_list[0]


def cmd_optimize(run: RunConfig) -> CommandResult:
    """Optimal power split and per-symbol ratios for one message SER requirement."""
    delta = _requested_delta(run)
    solution = _optimizer(run, run.system).solve_power_allocation(delta)
    scheme = solution.scheme
    rows = pd.DataFrame({
        "symbol": np.arange(1, scheme.msg_order + 1),
        "r": solution.r,
        "k": solution.k,
    })
    for j in range(scheme.tag_order):
        rows[f"A_{j + 1}"] = scheme.A[:, j]
    return CommandResult(
        tables={"optimized_scheme": rows},
        documents={"solution": {**solution.to_dict(), "scheme": scheme.to_dict()}},
    )


def cmd_tradeoff(run: RunConfig) -> CommandResult:
    """Optimal tag SER against the message SER requirement, per gamma_tot and (N, L_m, L_t)."""
    orders = run.orders or [(None, None)]
    rows: List[Dict] = []
    for gamma_tot_db in (run.gamma_tot_db_list or [None]):
        for n_antennas in (run.n_antennas_list or [None]):
            for msg_order, tag_order in orders:
                cfg = run.system_for(n_antennas, msg_order, tag_order, gamma_tot_db)
                rows.extend(_optimizer(run, cfg).tradeoff_curve(run.delta_list))

    df = pd.DataFrame(rows)
    infeasible = int((df["status"] == "infeasible").sum()) if "status" in df else 0
    logger.info(f"Trade-off finished: {len(df)} points, {infeasible} infeasible")
    return CommandResult(tables={"tradeoff": df})


def cmd_simulate(run: RunConfig) -> CommandResult:
    """Monte Carlo error rates of the configured embedding next to the theory."""
    scheme, con, cfg = build_scheme(run)
    simulator = _simulator(run)
    result = simulator.run(cfg, scheme)
    theory = evaluate_scheme(scheme, con, cfg.n_antennas)

    summary = {"kind": scheme.kind, "n_antennas": cfg.n_antennas, "seed": run.seed,
               "p_em_theory": theory.p_em, "p_et_theory": theory.p_et,
               "p_em_upper": theory.p_em_upper}
    summary.update(result.to_dict())
    per_symbol = pd.DataFrame({
        "symbol": np.arange(1, scheme.msg_order + 1),
        "p_em_i_theory": theory.per_symbol_msg,
        "p_em_i_mc": result.per_symbol_msg,
        "p_et_i_theory": theory.per_symbol_tag,
        "p_et_i_mc": result.per_symbol_tag,
        "trials": result.symbol_trials,
    })
    return CommandResult(
        tables={"simulation": pd.DataFrame([summary]), "simulation_per_symbol": per_symbol},
        documents={"scheme": scheme.to_dict()},
    )


def cmd_auth(run: RunConfig) -> CommandResult:
    """Authentication acceptance rates for legitimate and/or forged frames."""
    scheme, _, cfg = build_scheme(run)
    experiment = AuthenticationExperiment(cfg, scheme, run.key, run.seed, run.workers,
                                          run.channel_model)
    attackers = ATTACKER_MODES if run.attacker == "both" else [run.attacker]
    for attacker in attackers:
        experiment.run(run.frames, attacker)
    return CommandResult(
        tables={"auth": experiment.get_report_dataframe()},
        extra={
            "key_id": key_id(run.key),
            "mac_identity": MAC_IDENTITY,
            "mac_len": cfg.mac_len,
            "fa_budget": cfg.fa_budget,
            "i_star": experiment.rule.i_star,
            "theta0": experiment.rule.theta0,
        },
    )


COMMANDS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "design": cmd_design,
    "uniform-sweep": cmd_uniform_sweep,
    "mbased-sweep": cmd_mbased_sweep,
    "optimize": cmd_optimize,
    "tradeoff": cmd_tradeoff,
    "simulate": cmd_simulate,
    "auth": cmd_auth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pla-tag-tool",
        description="Message-based tag embedding for non-coherent massive SIMO authentication",
    )
    parser.add_argument("command", choices=list(COMMANDS), help="Experiment to run")
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="Override the config seed")
    parser.add_argument("--out", default="results", help="Output directory (default: results)")
    parser.add_argument("--trials", type=int, help="Override Monte Carlo trials / frames")
    parser.add_argument("--workers", type=int, help="Override the number of workers")
    parser.add_argument("--excel", action="store_true", help="Also write every table into one workbook")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    return parser


def write_outputs(result: CommandResult, out_dir: str, excel: bool) -> Optional[List[str]]:
    """
    Write the tables and documents of a command.

    Returns:
        List of written paths, or None if any write failed
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    ok = True
    for name, df in result.tables.items():
        path = os.path.join(out_dir, f"{name}.csv")
        ok &= write_csv(df, path)
        written.append(path)
    for name, document in result.documents.items():
        path = os.path.join(out_dir, f"{name}.json")
        ok &= write_json(document, path)
        written.append(path)
    if excel and result.tables:
        path = os.path.join(out_dir, EXCEL_FILENAME)
        ok &= export_results_to_excel(result.tables, path)
        written.append(path)
    return written if ok else None


def run_command(command: str, run: RunConfig, out_dir: str, excel: bool = False,
                argv: Optional[List[str]] = None) -> int:
    """Execute one command and write its artifacts and manifest; returns an exit code."""
    manifest = RunManifest(command=command, config=run.snapshot(), seed=run.seed,
                           extra={"argv": list(argv or [])})
    result = COMMANDS[command](run)
    written = write_outputs(result, out_dir, excel)
    if written is None:
        logger.error(f"Failed to write the outputs of {command} to {out_dir}")
        return EXIT_FAILURE

    manifest.outputs = [os.path.basename(path) for path in written]
    manifest.extra.update(result.extra)
    manifest.finish()
    if not write_manifest(manifest, out_dir, MANIFEST_FILENAME):
        return EXIT_FAILURE
    logger.info(f"{command} finished in {manifest.wall_clock_seconds:.2f}s; outputs in {out_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line entry point."""
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)

    try:
        run = load_config(args.config).with_overrides(args.seed, args.trials, args.workers)
        return run_command(args.command, run, args.out, args.excel, argv)

    except InfeasibleError as e:
        logger.error(f"Infeasible ({e.reason}): {str(e)}")
        return EXIT_INFEASIBLE

    except (ConfigError, DomainError) as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_CONFIG_ERROR

    except Exception as e:
        logger.error(f"Error running {args.command}: {str(e)}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
