import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from core.analysis import MONTE_CARLO, ErrorReport
from core.constellation import SystemConfig
from core.embedding import EmbeddingScheme, detect, gray_encode
from core.special_math import DomainError, chi2_cdf
from utils.constants import (BLOCK_SAMPLES, CHANNEL_MODELS, DEFAULT_SEED, KS_LEVEL,
                             MIN_BLOCK_TRIALS, WILSON_CONFIDENCE)

# Configure logging
logger = logging.getLogger('pla_tag_tool.simulator')


def wilson_interval(successes: int, trials: int,
                    confidence: float = WILSON_CONFIDENCE) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Args:
        successes: Number of counted events
        trials: Number of trials
        confidence: Confidence level

    Returns:
        Tuple (low, high); (0, 1) when there are no trials
    """
    if trials <= 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(
        confidence_level=confidence, method='wilson'
    )
    return float(ci.low), float(ci.high)


def binomial_sigma(p: float, trials: int) -> float:
    """Standard error sqrt(p (1-p) / trials) of an empirical rate."""
    if trials <= 0:
        return float('inf')
    return float(np.sqrt(p * (1.0 - p) / trials))


@dataclass
class ChannelSample:
    """Rayleigh channel gains h and noise n for a batch of trials, shape (trials, N)."""
    h: np.ndarray
    n: np.ndarray

    def received(self, x: np.ndarray) -> np.ndarray:
        """y = h x + n for per-trial real amplitudes x."""
        return self.h * np.asarray(x)[:, None] + self.n

    def normalized_energy(self, x: np.ndarray) -> np.ndarray:
        """||y||^2 / N for each trial."""
        y = self.received(x)
        return np.mean(y.real ** 2 + y.imag ** 2, axis=1)


def draw_channel(rng: np.random.Generator, trials: int, N: int, sigma2: float) -> ChannelSample:
    """
    Draw i.i.d. unit-variance complex Gaussian gains and noise of power sigma2.

    Args:
        rng: Random generator
        trials: Number of channel uses
        N: Number of receive antennas
        sigma2: Noise power per antenna

    Returns:
        ChannelSample with h, n of shape (trials, N)
    """
    h = rng.standard_normal((2, trials, N))
    n = rng.standard_normal((2, trials, N))
    return ChannelSample(
        h=(h[0] + 1j * h[1]) / np.sqrt(2.0),
        n=np.sqrt(sigma2 / 2.0) * (n[0] + 1j * n[1]),
    )


def received_energy(rng: np.random.Generator, A: np.ndarray, N: int, sigma2: float,
                    channel_model: str = "antenna") -> np.ndarray:
    """
    Normalized received energy ||y||^2/N for per-trial received powers A = |x|^2 + sigma2.

    "antenna" draws h and n explicitly; "gamma" draws the equivalent A * Gamma(N, 1) / N.

    Args:
        rng: Random generator
        A: Received power of each trial
        N: Number of receive antennas
        sigma2: Noise power
        channel_model: "antenna" or "gamma"

    Returns:
        Array of normalized energies
    """
    A = np.asarray(A, dtype=float)
    if channel_model == "antenna":
        x = np.sqrt(np.maximum(A - sigma2, 0.0))
        return draw_channel(rng, A.size, N, sigma2).normalized_energy(x)
    if channel_model == "gamma":
        return A * rng.gamma(N, 1.0, size=A.size) / N
    raise DomainError(f"Unknown channel model: {channel_model}")


@dataclass
class SimResult:
    """Monte Carlo tallies of one scheme; rates are derived on demand."""
    frames: int
    msg_errors: int
    tag_trials: int
    tag_errors: int
    tag_bit_errors: int
    tag_bits: int
    symbol_trials: np.ndarray
    symbol_msg_errors: np.ndarray
    symbol_tag_trials: np.ndarray
    symbol_tag_errors: np.ndarray
    confidence: float = WILSON_CONFIDENCE

    @classmethod
    def empty(cls, L_m: int) -> "SimResult":
        zeros = np.zeros(L_m, dtype=np.int64)
        return cls(0, 0, 0, 0, 0, 0, zeros, zeros.copy(), zeros.copy(), zeros.copy())

    def merge(self, other: "SimResult") -> "SimResult":
        return SimResult(
            frames=self.frames + other.frames,
            msg_errors=self.msg_errors + other.msg_errors,
            tag_trials=self.tag_trials + other.tag_trials,
            tag_errors=self.tag_errors + other.tag_errors,
            tag_bit_errors=self.tag_bit_errors + other.tag_bit_errors,
            tag_bits=self.tag_bits + other.tag_bits,
            symbol_trials=self.symbol_trials + other.symbol_trials,
            symbol_msg_errors=self.symbol_msg_errors + other.symbol_msg_errors,
            symbol_tag_trials=self.symbol_tag_trials + other.symbol_tag_trials,
            symbol_tag_errors=self.symbol_tag_errors + other.symbol_tag_errors,
            confidence=self.confidence,
        )

    @property
    def p_em(self) -> float:
        return self.msg_errors / self.frames if self.frames else 0.0

    @property
    def p_et(self) -> float:
        """Tag SER among trials whose message symbol was detected correctly."""
        return self.tag_errors / self.tag_trials if self.tag_trials else 0.0

    @property
    def p_em_ci(self) -> Tuple[float, float]:
        return wilson_interval(self.msg_errors, self.frames, self.confidence)

    @property
    def p_et_ci(self) -> Tuple[float, float]:
        return wilson_interval(self.tag_errors, self.tag_trials, self.confidence)

    @property
    def tag_bit_error_rate(self) -> float:
        return self.tag_bit_errors / self.tag_bits if self.tag_bits else 0.0

    @property
    def per_symbol_msg(self) -> np.ndarray:
        return self.symbol_msg_errors / np.maximum(self.symbol_trials, 1)

    @property
    def per_symbol_tag(self) -> np.ndarray:
        return self.symbol_tag_errors / np.maximum(self.symbol_tag_trials, 1)

    def to_dict(self) -> Dict:
        p_em_low, p_em_high = self.p_em_ci
        p_et_low, p_et_high = self.p_et_ci
        result = {
            "frames": self.frames,
            "msg_errors": self.msg_errors,
            "p_em": self.p_em,
            "p_em_ci_low": p_em_low,
            "p_em_ci_high": p_em_high,
            "tag_trials": self.tag_trials,
            "tag_errors": self.tag_errors,
            "p_et": self.p_et,
            "p_et_ci_low": p_et_low,
            "p_et_ci_high": p_et_high,
            "tag_bit_error_rate": self.tag_bit_error_rate,
        }
        for i, value in enumerate(self.per_symbol_tag, start=1):
            result[f"p_et_{i}"] = float(value)
        return result

    def to_error_report(self) -> ErrorReport:
        """Empirical rates as an ErrorReport with Wilson intervals."""
        return ErrorReport(
            p_em=self.p_em,
            p_et=self.p_et,
            per_symbol_tag=tuple(float(v) for v in self.per_symbol_tag),
            per_symbol_msg=tuple(float(v) for v in self.per_symbol_msg),
            source=MONTE_CARLO,
            frames=self.frames,
            p_em_ci=self.p_em_ci,
            p_et_ci=self.p_et_ci,
            extra={
                "msg_errors": self.msg_errors,
                "tag_trials": self.tag_trials,
                "tag_errors": self.tag_errors,
                "tag_bit_error_rate": self.tag_bit_error_rate,
            },
        )


def _block_sizes(trials: int, N: int) -> List[int]:
    size = max(MIN_BLOCK_TRIALS, BLOCK_SAMPLES // N)
    full, rest = divmod(trials, size)
    return [size] * full + ([rest] if rest else [])


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent substream for one block of trials, keyed by (seed, block)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


class MonteCarloSimulator:
    """
    Link-level Monte Carlo simulator for tag-embedded constellations.

    Trials are split into fixed-size blocks, each with its own substream, so the
    tallies depend only on (seed, trials) and never on the number of workers.
    """

    def __init__(self, trials: int, seed: int = DEFAULT_SEED, workers: int = 1,
                 channel_model: str = "antenna"):
        """
        Initialize the simulator.

        Args:
            trials: Number of channel uses per scheme
            seed: Root seed of the block substreams
            workers: Number of threads running blocks
            channel_model: "antenna" or "gamma"
        """
        if trials < 1:
            raise DomainError(f"trials must be at least 1, got {trials}")
        if channel_model not in CHANNEL_MODELS:
            raise DomainError(f"Unknown channel model: {channel_model}")
        self.trials = int(trials)
        self.seed = int(seed)
        self.workers = max(1, int(workers))
        self.channel_model = channel_model
        self.results: List[Dict] = []

        logger.info(
            f"MonteCarloSimulator initialized with {self.trials} trials, seed={self.seed}, "
            f"workers={self.workers}, channel={self.channel_model}"
        )

    def _run_block(self, cfg: SystemConfig, scheme: EmbeddingScheme,
                   block: int, size: int) -> SimResult:
        rng = block_generator(self.seed, block)
        L_m, L_t = scheme.A.shape
        msg = rng.integers(0, L_m, size=size)
        tag = rng.integers(0, L_t, size=size)
        ynorm = received_energy(rng, scheme.A[msg, tag], cfg.n_antennas, scheme.sigma2,
                                self.channel_model)
        msg_hat, tag_hat = detect(ynorm, scheme)

        msg_ok = msg_hat == msg
        tag_wrong = msg_ok & (tag_hat != tag)
        flipped = gray_encode(tag[msg_ok]) ^ gray_encode(tag_hat[msg_ok])
        bits_per_tag = int(np.log2(L_t))
        bit_errors = sum(int(np.sum((flipped >> b) & 1)) for b in range(bits_per_tag))

        return SimResult(
            frames=size,
            msg_errors=int(size - np.sum(msg_ok)),
            tag_trials=int(np.sum(msg_ok)),
            tag_errors=int(np.sum(tag_wrong)),
            tag_bit_errors=bit_errors,
            tag_bits=int(np.sum(msg_ok)) * bits_per_tag,
            symbol_trials=np.bincount(msg, minlength=L_m),
            symbol_msg_errors=np.bincount(msg[~msg_ok], minlength=L_m),
            symbol_tag_trials=np.bincount(msg[msg_ok], minlength=L_m),
            symbol_tag_errors=np.bincount(msg[tag_wrong], minlength=L_m),
        )

    def run(self, cfg: SystemConfig, scheme: EmbeddingScheme) -> SimResult:
        """
        Simulate the scheme and return aggregated tallies.

        Args:
            cfg: System configuration (uses n_antennas)
            scheme: Embedding scheme to transmit and detect

        Returns:
            SimResult over self.trials channel uses
        """
        sizes = _block_sizes(self.trials, cfg.n_antennas)
        if self.workers == 1:
            parts = [self._run_block(cfg, scheme, b, s) for b, s in enumerate(sizes)]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(lambda item: self._run_block(cfg, scheme, *item),
                                      enumerate(sizes)))

        result = SimResult.empty(scheme.msg_order)
        for part in parts:
            result = result.merge(part)

        row = {"kind": scheme.kind, "n_antennas": cfg.n_antennas, "seed": self.seed}
        row.update(result.to_dict())
        self.results.append(row)
        logger.info(
            f"Simulated {result.frames} trials: P_em={result.p_em:.4e}, P_et={result.p_et:.4e}"
        )
        return result

    def get_results_dataframe(self) -> pd.DataFrame:
        """All simulation runs of this instance as a DataFrame."""
        return pd.DataFrame(self.results)


def simulate_ser(cfg: SystemConfig, scheme: EmbeddingScheme, trials: int,
                 seed: int = DEFAULT_SEED, workers: int = 1,
                 channel_model: str = "antenna") -> SimResult:
    """Monte Carlo message and conditional tag SER of a scheme."""
    return MonteCarloSimulator(trials, seed, workers, channel_model).run(cfg, scheme)


@dataclass
class GoodnessOfFit:
    """Kolmogorov-Smirnov comparison of Z' = ||y||^2 / A against the chi-squared CDF."""
    N: int
    A: float
    normalizer: float
    samples: int
    statistic: float
    critical_value: float
    p_value: float
    level: float
    passed: bool
    moments: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        result = {key: getattr(self, key) for key in (
            "N", "A", "normalizer", "samples", "statistic", "critical_value",
            "p_value", "level", "passed",
        )}
        result.update(self.moments)
        return result


def chi2_statistic_check(N: int, A: float, samples: int, seed: int = DEFAULT_SEED,
                         sigma2: float = 1.0, normalizer: Optional[float] = None,
                         level: float = KS_LEVEL) -> GoodnessOfFit:
    """
    Check that ||y||^2 / A follows the complex chi-squared law of order N.

    Args:
        N: Number of receive antennas
        A: Received power |x|^2 + sigma2 used to generate y
        samples: Number of draws
        seed: Root seed
        sigma2: Noise power
        normalizer: Power used to normalize ||y||^2 (defaults to A; pass a
            wrong value for a negative control)
        level: Significance level of the test

    Returns:
        GoodnessOfFit with the KS statistic and its critical value
    """
    if A < sigma2:
        raise DomainError(f"Received power {A} is below the noise power {sigma2}")
    normalizer = A if normalizer is None else normalizer
    amplitude = np.sqrt(A - sigma2)

    energy_parts = []
    h_sum, h_power, n_power = 0j, 0.0, 0.0
    for block, size in enumerate(_block_sizes(samples, N)):
        sample = draw_channel(block_generator(seed, block), size, N, sigma2)
        energy_parts.append(sample.normalized_energy(np.full(size, amplitude)) * N)
        h_sum += np.sum(sample.h)
        h_power += float(np.sum(np.abs(sample.h) ** 2))
        n_power += float(np.sum(np.abs(sample.n) ** 2))
    energy = np.concatenate(energy_parts)
    z = energy / normalizer

    result = stats.kstest(z, lambda t: chi2_cdf(N, np.maximum(t, 0.0)))
    critical = float(stats.kstwo.ppf(1.0 - level, samples))
    moments = {
        "h_mean_abs": float(abs(h_sum) / (samples * N)),
        "h_power": h_power / (samples * N),
        "n_power": n_power / (samples * N),
        "energy_mean": float(np.mean(energy) / N),
    }
    report = GoodnessOfFit(
        N=N, A=A, normalizer=normalizer, samples=samples,
        statistic=float(result.statistic), critical_value=critical,
        p_value=float(result.pvalue), level=level,
        passed=bool(result.statistic < critical), moments=moments,
    )
    logger.info(f"KS check N={N}, A={A:.4g}: D={report.statistic:.4e}, critical={critical:.4e}")
    return report
