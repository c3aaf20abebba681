import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Tuple

import numpy as np

from core.special_math import DomainError, chi2_cdf, chi2_sf, solve_monotone
from utils.constants import DEFAULT_SIGMA2, ROOT_TOLERANCE

# Configure logging
logger = logging.getLogger('pla_tag_tool.constellation')


def db_to_linear(value_db: float) -> float:
    """Convert a dB value to linear scale."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear value to dB."""
    return 10.0 * math.log10(value)


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


@dataclass(frozen=True)
class SystemConfig:
    """
    Scenario parameters shared by every module.

    All SNRs are linear; the CLI converts the `_db` fields of a run config.
    """
    n_antennas: int
    msg_order: int
    tag_order: int
    gamma_m: float
    gamma_tot: float
    sigma2: float = DEFAULT_SIGMA2
    mac_len: int = 32
    fa_budget: float = 0.01

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise DomainError(f"n_antennas must be a positive integer, got {self.n_antennas}")
        for name in ("msg_order", "tag_order"):
            order = getattr(self, name)
            if int(order) != order or order < 2 or not _is_power_of_two(int(order)):
                raise DomainError(f"{name} must be a power of two >= 2, got {order}")
        if self.sigma2 <= 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if self.gamma_tot <= 0:
            raise DomainError(f"gamma_tot must be positive, got {self.gamma_tot}")
        if self.gamma_m < 0 or self.gamma_m > self.gamma_tot * (1 + 1e-12):
            raise DomainError(
                f"gamma_m must lie in [0, gamma_tot], got {self.gamma_m} (gamma_tot={self.gamma_tot})"
            )
        if int(self.mac_len) != self.mac_len or self.mac_len < 1:
            raise DomainError(f"mac_len must be a positive integer, got {self.mac_len}")
        if not 0 < self.fa_budget < 1:
            raise DomainError(f"fa_budget must lie in (0, 1), got {self.fa_budget}")

    @property
    def E_m(self) -> float:
        """Average message power."""
        return self.gamma_m * self.sigma2

    @property
    def E_tot(self) -> float:
        """Total average power budget."""
        return self.gamma_tot * self.sigma2

    def with_alpha(self, alpha: float) -> "SystemConfig":
        """Copy with the message power set to alpha * E_tot."""
        return replace(self, gamma_m=alpha * self.gamma_tot)

    def to_dict(self) -> Dict:
        return {
            "n_antennas": self.n_antennas,
            "msg_order": self.msg_order,
            "tag_order": self.tag_order,
            "sigma2": self.sigma2,
            "gamma_m": self.gamma_m,
            "gamma_tot": self.gamma_tot,
            "mac_len": self.mac_len,
            "fa_budget": self.fa_budget,
        }


@dataclass(frozen=True)
class MessageConstellation:
    """Received-power levels A_i = |m_i|^2 + sigma^2 and their ML thresholds B_i."""
    R: float
    A: Tuple[float, ...]
    B: Tuple[float, ...]
    sigma2: float = DEFAULT_SIGMA2

    @property
    def order(self) -> int:
        return len(self.A)

    @property
    def message_powers(self) -> np.ndarray:
        """|m_i|^2 for each level."""
        return np.asarray(self.A) - self.sigma2

    @property
    def average_power(self) -> float:
        return float(np.mean(self.message_powers))

    def to_dict(self) -> Dict:
        return {
            "R": self.R,
            "A": list(self.A),
            "B": list(self.B),
            "sigma2": self.sigma2,
            "message_powers": self.message_powers.tolist(),
            "average_power": self.average_power,
        }


def threshold(A_lo: float, A_hi: float) -> float:
    """
    Non-coherent ML decision threshold between two received-power levels.

    Args:
        A_lo: Lower received power
        A_hi: Higher received power

    Returns:
        A_lo * A_hi * ln(A_hi / A_lo) / (A_hi - A_lo), strictly between the two

    Raises:
        DomainError: If the levels are not strictly increasing and positive
    """
    if not 0 < A_lo < A_hi:
        raise DomainError(f"threshold requires 0 < A_lo < A_hi, got ({A_lo}, {A_hi})")
    gap = A_hi - A_lo
    return A_lo * A_hi * math.log1p(gap / A_lo) / gap


def solve_ratio(msg_order: int, gamma_m: float, tol: float = ROOT_TOLERANCE) -> float:
    """Common ratio R > 1 with sum_{j<L_m} R^j = L_m (gamma_m + 1)."""
    if gamma_m <= 0:
        raise DomainError(f"Message SNR must be positive, got {gamma_m}")
    target = msg_order * (gamma_m + 1.0)
    if msg_order == 2:
        return target - 1.0

    def residual(R: float) -> float:
        return float(np.sum(R ** np.arange(msg_order))) - target

    return solve_monotone(residual, 1.0, target, tol)


def design_constellation(cfg: SystemConfig) -> MessageConstellation:
    """
    Asymptotically optimal non-negative PAM constellation for the message power budget.

    Args:
        cfg: System configuration (uses msg_order, gamma_m, sigma2)

    Returns:
        MessageConstellation with geometric levels and ML thresholds
    """
    R = solve_ratio(cfg.msg_order, cfg.gamma_m)

    # Build levels by repeated multiplication so that A[i+1] == A[i] * R exactly
    levels: List[float] = [cfg.sigma2]
    for _ in range(cfg.msg_order - 1):
        levels.append(levels[-1] * R)
    thresholds = [threshold(lo, hi) for lo, hi in zip(levels[:-1], levels[1:])]

    logger.debug(f"Designed constellation L_m={cfg.msg_order}, gamma_m={cfg.gamma_m:.4g}: R={R:.6g}")
    return MessageConstellation(R=R, A=tuple(levels), B=tuple(thresholds), sigma2=cfg.sigma2)


def per_symbol_correct(N: int, con: MessageConstellation) -> np.ndarray:
    """Correct-detection probabilities P_{c,i} of the message-only detector."""
    A = np.asarray(con.A)
    B = np.asarray(con.B)
    # Symbol error = P(below lower threshold) + P(above upper threshold)
    below = np.asarray(chi2_cdf(N, N * np.concatenate(([0.0], B)) / A))
    above = np.append(np.asarray(chi2_sf(N, N * B / A[:-1])), 0.0)
    return 1.0 - below - above


def message_only_ser(cfg: SystemConfig, con: MessageConstellation) -> float:
    """
    Average message SER P_e when no tag is embedded.

    Args:
        cfg: System configuration (uses n_antennas)
        con: Message constellation

    Returns:
        P_e = 1 - mean_i P_{c,i}
    """
    return float(1.0 - np.mean(per_symbol_correct(cfg.n_antennas, con)))
