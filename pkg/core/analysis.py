import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.constellation import (MessageConstellation, SystemConfig, db_to_linear, linear_to_db,
                                design_constellation, message_only_ser)
from core.embedding import (MESSAGE_BASED, EmbeddingScheme, build_message_based,
                            build_uniform, tag_power)
from core.special_math import (DomainError, chi2_cdf, chi2_pdf, chi2_sf, ratio_u,
                               ratio_v, ratio_v_prime)

# Configure logging
logger = logging.getLogger('pla_tag_tool.analysis')

THEORY = "theory"
MONTE_CARLO = "monte_carlo"


@dataclass
class ErrorReport:
    """Message and tag error rates of one scheme, from theory or simulation."""
    p_em: float
    p_et: float
    per_symbol_tag: Tuple[float, ...]
    p_em_upper: Optional[float] = None
    per_symbol_msg: Tuple[float, ...] = ()
    source: str = THEORY
    frames: Optional[int] = None
    p_em_ci: Optional[Tuple[float, float]] = None
    p_et_ci: Optional[Tuple[float, float]] = None
    extra: Dict = field(default_factory=dict)

    def __post_init__(self):
        values = [self.p_em, self.p_et, *self.per_symbol_tag, *self.per_symbol_msg]
        if self.p_em_upper is not None:
            values.append(self.p_em_upper)
        if any(not -1e-12 <= v <= 1 + 1e-12 for v in values):
            raise DomainError(f"Error rates must lie in [0, 1], got {values}")

    def to_dict(self) -> Dict:
        result = {
            "source": self.source,
            "p_em": self.p_em,
            "p_et": self.p_et,
            "p_em_upper": self.p_em_upper,
            "frames": self.frames,
        }
        for i, value in enumerate(self.per_symbol_tag, start=1):
            result[f"p_et_{i}"] = value
        for i, value in enumerate(self.per_symbol_msg, start=1):
            result[f"p_em_{i}"] = value
        if self.p_em_ci is not None:
            result["p_em_ci_low"], result["p_em_ci_high"] = self.p_em_ci
        if self.p_et_ci is not None:
            result["p_et_ci_low"], result["p_et_ci_high"] = self.p_et_ci
        result.update(self.extra)
        return result


def per_symbol_message_ser(scheme: EmbeddingScheme, N: int) -> np.ndarray:
    """
    Message SER P_{em,i} of every message symbol, averaged over its tag symbols.

    Args:
        scheme: Embedding scheme
        N: Number of receive antennas

    Returns:
        Array of L_m error probabilities
    """
    A = scheme.A
    upper = np.append(scheme.B, np.inf)[:, None]
    lower = np.concatenate(([0.0], scheme.B))[:, None]
    finite = np.isfinite(upper)
    above = np.where(finite, chi2_sf(N, N * np.where(finite, upper, 0.0) / A), 0.0)
    below = np.asarray(chi2_cdf(N, N * lower / A))
    return np.mean(above + below, axis=1)


def message_ser(scheme: EmbeddingScheme, con: Optional[MessageConstellation], N: int) -> float:
    """Average message SER P_em = 1 - (1/L_m) sum_i P_{cm,i}."""
    return float(np.mean(per_symbol_message_ser(scheme, N)))


def tag_ser(scheme: EmbeddingScheme, con: Optional[MessageConstellation], N: int) -> Tuple[float, np.ndarray]:
    """
    Tag SER from per-row tag thresholds, ignoring message errors.

    Each tag cell is scored only against its neighbouring tag thresholds
    C_{i,k}, so this approximates the tag SER conditional on correct message
    detection. The exact conditional rate also accounts for the message
    boundaries B_i and is higher for uniform schemes with few antennas or
    large beta.

    Args:
        scheme: Embedding scheme
        con: Message constellation (not needed by the formula)
        N: Number of receive antennas

    Returns:
        Tuple of (average P_et, per-message-symbol P_{et,i})
    """
    A = scheme.A
    C = scheme.C
    # Tag j errs upward past C_{i,j} or downward past C_{i,j-1}
    up = np.asarray(chi2_sf(N, N * C / A[:, :-1]))
    down = np.asarray(chi2_cdf(N, N * C / A[:, 1:]))
    per_symbol = np.sum(up + down, axis=1) / scheme.tag_order
    return float(np.mean(per_symbol)), per_symbol


def _log_ratios(r: Sequence[float]) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 1.0):
        raise DomainError(f"Row ratios must exceed 1, got {r.tolist()}")
    return np.log(r)


def tag_error_term(k, N: int):
    """F(k) = 1 - G[N v(e^k)] + G[N u(e^k)], one row's tag error per tag gap."""
    k = np.asarray(k, dtype=float)
    return np.asarray(chi2_sf(N, N * np.asarray(ratio_v(k)))) + np.asarray(chi2_cdf(N, N * np.asarray(ratio_u(k))))


def tag_error_derivatives(k, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    First and second derivatives of tag_error_term in k.

    F'(k) = -N v f(N v) and F''(k) = N^2 v'(k) f(N v) (v - 1), f the chi-squared density.
    """
    k = np.asarray(k, dtype=float)
    v = np.asarray(ratio_v(k))
    density = np.asarray(chi2_pdf(N, N * v))
    first = -N * v * density
    second = N * N * np.asarray(ratio_v_prime(k)) * density * (v - 1.0)
    return first, second


def bound_exponent(k, R: float, L_t: int) -> np.ndarray:
    """s = ln(R / r^{L_t-1}), the log gap between a row top and the next row."""
    return math.log(R) - (L_t - 1) * np.asarray(k, dtype=float)


def bound_error_term(k, N: int, R: float, L_t: int):
    """W(k) = 1 - G[N g(e^k)] + G[N h(e^k)], the pairwise message error bound."""
    return tag_error_term(bound_exponent(k, R, L_t), N)


def bound_error_derivatives(k, N: int, R: float, L_t: int) -> Tuple[np.ndarray, np.ndarray]:
    """W'(k) = (L_t-1) N g f(N g) and W''(k) = (L_t-1)^2 F''(s)."""
    first, second = tag_error_derivatives(bound_exponent(k, R, L_t), N)
    return -(L_t - 1) * first, (L_t - 1) ** 2 * second


def tag_ser_message_based(r: Sequence[float], L_t: int, N: int) -> float:
    """
    Closed-form tag SER of a message-based scheme.

    P_et = ((L_t-1)/(L_m L_t)) sum_i {1 - G[N v(r_i)] + G[N u(r_i)]}; it does
    not depend on the message constellation.

    Args:
        r: Row ratios, one per message symbol
        L_t: Tag order
        N: Number of receive antennas

    Returns:
        Average tag SER

    Raises:
        DomainError: If any r_i <= 1
    """
    k = _log_ratios(r)
    return float((L_t - 1) / (k.size * L_t) * np.sum(tag_error_term(k, N)))


def message_ser_upper_bound(r: Sequence[float], R: float, L_t: int, L_m: int, N: int) -> float:
    """
    Upper bound P_em^u = (1/L_m) sum_{i<L_m} {1 - G[N g(r_i)] + G[N h(r_i)]}.

    Args:
        r: Row ratios (L_m values, or the first L_m - 1); the top row never enters
        R: Common ratio of the message constellation
        L_t: Tag order
        L_m: Message order
        N: Number of receive antennas

    Returns:
        Upper bound on the average message SER

    Raises:
        DomainError: If some r_i^{L_t-1} is not in (1, R)
    """
    k = _log_ratios(r)
    if k.size not in (L_m - 1, L_m):
        raise DomainError(f"Expected {L_m} row ratios, got {k.size}")
    if np.any(bound_exponent(k, R, L_t) <= 0):
        raise DomainError(f"Row ratios must satisfy r^(L_t-1) < R = {R}")
    return float(np.sum(bound_error_term(k[:L_m - 1], N, R, L_t)) / L_m)


def evaluate_scheme(scheme: EmbeddingScheme, con: MessageConstellation, N: int) -> ErrorReport:
    """
    Theoretical error report of a scheme.

    Args:
        scheme: Embedding scheme
        con: Message constellation it was built from
        N: Number of receive antennas

    Returns:
        ErrorReport with exact P_em, P_et and per-symbol rates; message-based
        schemes also carry the upper bound
    """
    per_msg = per_symbol_message_ser(scheme, N)
    p_et, per_tag = tag_ser(scheme, con, N)
    upper = None
    if scheme.kind == MESSAGE_BASED:
        upper = message_ser_upper_bound(scheme.r, con.R, scheme.tag_order, scheme.msg_order, N)
    return ErrorReport(
        p_em=float(np.mean(per_msg)),
        p_et=p_et,
        per_symbol_tag=tuple(float(x) for x in per_tag),
        p_em_upper=upper,
        per_symbol_msg=tuple(float(x) for x in per_msg),
        extra={"tag_power": tag_power(scheme)},
    )


class SchemeErrorAnalyzer:
    """
    Analyzer for tag-embedding error rates across parameter sweeps.

    Sweeps the uniform scheme over beta and the message-based scheme over a
    shared ratio r, for several message SNRs, and collects one row per point.
    """

    def __init__(self, cfg: SystemConfig, simulator=None):
        """
        Initialize the analyzer.

        Args:
            cfg: Base system configuration; gamma_m is replaced per sweep value
            simulator: Optional MonteCarloSimulator adding empirical columns
        """
        self.cfg = cfg
        self.simulator = simulator
        self.uniform_rows: List[Dict] = []
        self.message_based_rows: List[Dict] = []

        logger.info(
            f"SchemeErrorAnalyzer initialized with N={cfg.n_antennas}, L_m={cfg.msg_order}, "
            f"L_t={cfg.tag_order}, monte_carlo={simulator is not None}"
        )

    def _config_for(self, gamma_m_db: Optional[float]) -> SystemConfig:
        if gamma_m_db is None:
            return self.cfg
        gamma_m = db_to_linear(gamma_m_db)
        return replace(self.cfg, gamma_m=gamma_m, gamma_tot=max(self.cfg.gamma_tot, gamma_m))

    @staticmethod
    def _label(gamma_m_db: Optional[float], cfg: SystemConfig) -> float:
        return float(gamma_m_db) if gamma_m_db is not None else linear_to_db(cfg.gamma_m)

    def _add_monte_carlo(self, row: Dict, cfg: SystemConfig, scheme: EmbeddingScheme):
        report = self.simulator.run(cfg, scheme).to_error_report()
        empirical = report.to_dict()
        empirical.pop("source")
        empirical.pop("p_em_upper")
        row.update({f"{key}_mc": value for key, value in empirical.items()})

    def _evaluate_point(self, cfg: SystemConfig, con: MessageConstellation,
                        scheme: EmbeddingScheme, row: Dict) -> Dict:
        report = evaluate_scheme(scheme, con, cfg.n_antennas)
        row.update(report.to_dict())
        row.pop("frames", None)
        row.pop("source", None)
        row["p_em_no_tag"] = message_only_ser(cfg, con)
        if self.simulator is not None:
            self._add_monte_carlo(row, cfg, scheme)
        row["status"] = "ok"
        return row

    def uniform_sweep(self, betas: Sequence[float],
                      gamma_m_db_list: Optional[Sequence[float]] = None) -> List[Dict]:
        """
        Evaluate the uniform scheme over a beta grid.

        Args:
            betas: Normalized tag powers, each in (0, 1]
            gamma_m_db_list: Message SNRs in dB (defaults to the base config)

        Returns:
            List of result rows, ordered by (gamma_m, beta)
        """
        self.uniform_rows = []
        for gamma_m_db in (gamma_m_db_list or [None]):
            cfg = self._config_for(gamma_m_db)
            con = design_constellation(cfg)
            for beta in betas:
                row = {"gamma_m_db": self._label(gamma_m_db, cfg), "beta": float(beta)}
                try:
                    scheme = build_uniform(con, cfg.tag_order, float(beta))
                    self._evaluate_point(cfg, con, scheme, row)
                except Exception as e:
                    logger.warning(f"Skipping uniform point beta={beta}: {str(e)}")
                    row.update({"status": "error", "error": str(e)})
                self.uniform_rows.append(row)

        logger.info(f"Uniform sweep completed with {len(self.uniform_rows)} points")
        return self.uniform_rows

    def message_based_sweep(self, r_grid: Sequence[float],
                            gamma_m_db_list: Optional[Sequence[float]] = None) -> List[Dict]:
        """
        Evaluate the message-based scheme with a shared ratio r over a grid.

        Args:
            r_grid: Row ratios, each in (1, R^{1/(L_t-1)})
            gamma_m_db_list: Message SNRs in dB (defaults to the base config)

        Returns:
            List of result rows, ordered by (gamma_m, r)
        """
        self.message_based_rows = []
        for gamma_m_db in (gamma_m_db_list or [None]):
            cfg = self._config_for(gamma_m_db)
            con = design_constellation(cfg)
            for r in r_grid:
                row = {"gamma_m_db": self._label(gamma_m_db, cfg), "r": float(r)}
                try:
                    scheme = build_message_based(con, cfg.tag_order, float(r))
                    self._evaluate_point(cfg, con, scheme, row)
                    row["p_et_closed_form"] = tag_ser_message_based(
                        scheme.r, cfg.tag_order, cfg.n_antennas
                    )
                except Exception as e:
                    logger.warning(f"Skipping message-based point r={r}: {str(e)}")
                    row.update({"status": "error", "error": str(e)})
                self.message_based_rows.append(row)

        logger.info(f"Message-based sweep completed with {len(self.message_based_rows)} points")
        return self.message_based_rows

    def find_error_floor(self) -> Dict:
        """
        Locate the minimum tag SER of the last uniform sweep.

        Returns:
            Dictionary mapping gamma_m_db to (beta, p_et) at the minimum, or
            {"Error": ...} when no sweep has been run
        """
        try:
            df = self.get_uniform_dataframe()
            df = df[df["status"] == "ok"]
            if df.empty:
                return {"Error": "No uniform sweep results available"}
            floors = {}
            for gamma_m_db, group in df.groupby("gamma_m_db"):
                best = group.loc[group["p_et"].idxmin()]
                floors[float(gamma_m_db)] = (float(best["beta"]), float(best["p_et"]))
            return floors
        except Exception as e:
            logger.error(f"Error locating the uniform error floor: {str(e)}")
            return {"Error": f"Floor search failed: {str(e)}"}

    def get_uniform_dataframe(self) -> pd.DataFrame:
        """Uniform sweep results as a DataFrame."""
        return pd.DataFrame(self.uniform_rows)

    def get_message_based_dataframe(self) -> pd.DataFrame:
        """Message-based sweep results as a DataFrame."""
        return pd.DataFrame(self.message_based_rows)
