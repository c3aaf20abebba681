import hashlib
import hmac
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional

import numpy as np
import pandas as pd
from scipy import stats

from core.constellation import SystemConfig
from core.embedding import EmbeddingScheme, bits_to_indices, detect, indices_to_bits
from core.simulator import (binomial_sigma, block_generator, received_energy,
                            wilson_interval)
from core.special_math import DomainError
from utils.constants import (ATTACKER_MODES, BLOCK_SAMPLES, CHANNEL_MODELS, DEFAULT_KEY_HEX,
                             DEFAULT_SEED, MAC_IDENTITY, MIN_BLOCK_TRIALS)

# Configure logging
logger = logging.getLogger('pla_tag_tool.auth')

LEGIT = "legit"
FORGER = "forger"


def _bits_per_symbol(order: int) -> int:
    return int(round(math.log2(order)))


def key_id(key: bytes) -> str:
    """Short fingerprint of a key for run manifests."""
    return hashlib.sha256(key).hexdigest()[:16]


def make_mac(bits, key: bytes, l: int) -> np.ndarray:
    """
    Keyed MAC of a bit vector, truncated to l bits.

    HMAC-SHA256 over (counter, bit length, packed bits); blocks with
    increasing counters are concatenated when l exceeds one digest.

    Args:
        bits: Message bit vector
        key: Secret key
        l: MAC length in bits

    Returns:
        Array of l bits (uint8)

    Raises:
        ValueError: If the key is empty
        DomainError: If l < 1
    """
    if not key:
        raise ValueError("MAC key must not be empty")
    if l < 1:
        raise DomainError(f"MAC length must be at least 1, got {l}")
    bits = np.asarray(bits, dtype=np.uint8)
    payload = len(bits).to_bytes(8, 'big') + np.packbits(bits).tobytes()

    stream = b""
    counter = 0
    while len(stream) * 8 < l:
        stream += hmac.new(key, counter.to_bytes(4, 'big') + payload, hashlib.sha256).digest()
        counter += 1
    return np.unpackbits(np.frombuffer(stream, dtype=np.uint8))[:l]


def mac_avalanche(key: bytes, message_len: int, l: int, trials: int,
                  seed: int = DEFAULT_SEED) -> Dict:
    """
    Number of MAC bits that change when one message bit flips.

    Args:
        key: Secret key
        message_len: Message length in bits
        l: MAC length
        trials: Number of random (message, flipped position) pairs
        seed: Random seed

    Returns:
        Dictionary with the per-trial flip counts, their mean and the
        standard error of the mean
    """
    rng = block_generator(seed, 0)
    flips = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        bits = rng.integers(0, 2, size=message_len, dtype=np.uint8)
        flipped = bits.copy()
        flipped[rng.integers(0, message_len)] ^= 1
        flips[t] = int(np.sum(make_mac(bits, key, l) != make_mac(flipped, key, l)))
    return {
        "flips": flips,
        "mean": float(np.mean(flips)),
        "sem": float(np.std(flips, ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf,
        "expected": l / 2,
    }


class NPThreshold(NamedTuple):
    """Neyman-Pearson acceptance rule: accept iff at least i_star MAC bits match."""
    i_star: int
    theta0: float
    achieved_fa: float


def np_threshold(l: int, epsilon: float) -> NPThreshold:
    """
    Smallest matching-bit count whose random-forgery acceptance stays within epsilon.

    Exact integer arithmetic: i* is the smallest c with
    sum_{i>=c} C(l, i) <= epsilon 2^l.

    Args:
        l: MAC length
        epsilon: False-alarm budget in (0, 1)

    Returns:
        NPThreshold(i_star, theta0, achieved_fa); i_star = l + 1 never accepts
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if l < 1:
        raise DomainError(f"MAC length must be at least 1, got {l}")
    budget = Fraction(epsilon) * 2 ** l

    i_star = l + 1
    tail = 0
    while i_star > 0 and tail + math.comb(l, i_star - 1) <= budget:
        i_star -= 1
        tail += math.comb(l, i_star)

    achieved = Fraction(tail, 2 ** l)
    return NPThreshold(i_star=i_star, theta0=(i_star - 1) / l, achieved_fa=float(achieved))


def detection_rate(l: int, i_star: int, p: float) -> float:
    """
    P(accept | legitimate) = sum_{i>=i*} C(l, i) (1-p)^i p^(l-i).

    Args:
        l: MAC length
        i_star: Minimal number of matching bits
        p: MAC bit error rate

    Returns:
        Detection probability
    """
    if not 0 <= p <= 1:
        raise DomainError(f"Bit error rate must lie in [0, 1], got {p}")
    if i_star > l:
        return 0.0
    if i_star <= 0:
        return 1.0
    return float(stats.binom.sf(i_star - 1, l, 1.0 - p))


@dataclass(frozen=True, eq=False)
class Frame:
    """One authenticated frame: message bits, their MAC and the transmitted symbol pairs."""
    message_bits: np.ndarray
    mac: np.ndarray
    msg_indices: np.ndarray
    tag_indices: np.ndarray

    @property
    def symbols(self) -> List[tuple]:
        return list(zip(self.msg_indices.tolist(), self.tag_indices.tolist()))

    @property
    def length(self) -> int:
        return int(self.msg_indices.size)


def frame_layout(cfg: SystemConfig) -> tuple:
    """(symbols per frame, message bits per frame) with s log2(L_t) = l."""
    tag_bits = _bits_per_symbol(cfg.tag_order)
    if cfg.mac_len % tag_bits:
        raise DomainError(f"MAC length {cfg.mac_len} is not a multiple of log2(L_t) = {tag_bits}")
    symbols = cfg.mac_len // tag_bits
    return symbols, symbols * _bits_per_symbol(cfg.msg_order)


def build_frame(message_bits, key: bytes, cfg: SystemConfig) -> Frame:
    """
    Frame a message: MAC it and map bits to (message, tag) symbol pairs.

    Args:
        message_bits: Exactly s log2(L_m) bits
        key: Secret key
        cfg: System configuration (mac_len, msg_order, tag_order)

    Returns:
        Frame with Gray-mapped symbol indices
    """
    symbols, message_len = frame_layout(cfg)
    bits = np.asarray(message_bits, dtype=np.uint8)
    if bits.size != message_len:
        raise DomainError(f"Frame carries {message_len} message bits, got {bits.size}")
    mac = make_mac(bits, key, cfg.mac_len)
    return Frame(
        message_bits=bits,
        mac=mac,
        msg_indices=bits_to_indices(bits, _bits_per_symbol(cfg.msg_order)),
        tag_indices=bits_to_indices(mac, _bits_per_symbol(cfg.tag_order)),
    )


@dataclass
class AuthDecision:
    """Verdict for one received frame."""
    theta: float
    accepted: bool
    theta0: float
    i_star: int
    matches: int


def authenticate(received_mac, expected_mac, rule: NPThreshold) -> AuthDecision:
    """
    Compare the detected tag bits M' with the MAC M_n recomputed from the detected message.

    Args:
        received_mac: Detected MAC bits M'
        expected_mac: Recomputed MAC bits M_n
        rule: Neyman-Pearson acceptance rule

    Returns:
        AuthDecision with theta = l'/l
    """
    received_mac = np.asarray(received_mac)
    matches = int(np.sum(received_mac == np.asarray(expected_mac)))
    return AuthDecision(
        theta=matches / received_mac.size,
        accepted=matches >= rule.i_star,
        theta0=rule.theta0,
        i_star=rule.i_star,
        matches=matches,
    )


@dataclass
class AuthReport:
    """Acceptance statistics of an authentication run."""
    attacker: str
    frames: int
    accepted: int
    mac_len: int
    fa_budget: float
    i_star: int
    theta0: float
    achieved_fa: float
    bit_errors: int
    message_error_frames: int
    theta_sum: float
    theory: float
    key_id: str
    mac_identity: str = MAC_IDENTITY
    extra: Dict = field(default_factory=dict)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.frames if self.frames else 0.0

    @property
    def acceptance_ci(self) -> tuple:
        return wilson_interval(self.accepted, self.frames)

    @property
    def acceptance_sigma(self) -> float:
        return binomial_sigma(self.theory, self.frames)

    @property
    def p_measured(self) -> float:
        """Fraction of mismatching bits between M' and M_n over all frames."""
        return self.bit_errors / (self.frames * self.mac_len) if self.frames else 0.0

    @property
    def mean_theta(self) -> float:
        return self.theta_sum / self.frames if self.frames else 0.0

    def to_dict(self) -> Dict:
        low, high = self.acceptance_ci
        result = {
            "attacker": self.attacker,
            "frames": self.frames,
            "accepted": self.accepted,
            "acceptance_rate": self.acceptance_rate,
            "acceptance_ci_low": low,
            "acceptance_ci_high": high,
            "theory": self.theory,
            "theory_sigma": self.acceptance_sigma,
            "mac_len": self.mac_len,
            "fa_budget": self.fa_budget,
            "i_star": self.i_star,
            "theta0": self.theta0,
            "achieved_fa": self.achieved_fa,
            "p_measured": self.p_measured,
            "mean_theta": self.mean_theta,
            "message_error_frames": self.message_error_frames,
            "mac_identity": self.mac_identity,
            "key_id": self.key_id,
        }
        result.update(self.extra)
        return result


class AuthenticationExperiment:
    """
    End-to-end authentication over the simulated SIMO link.

    Legitimate frames carry the MAC of their message as tag symbols; forged
    frames carry uniformly random tag bits. The receiver detects both layers,
    recomputes M_n from the detected message and applies the Neyman-Pearson
    rule.
    """

    def __init__(self, cfg: SystemConfig, scheme: EmbeddingScheme, key: Optional[bytes] = None,
                 seed: int = DEFAULT_SEED, workers: int = 1, channel_model: str = "antenna"):
        """
        Initialize the experiment.

        Args:
            cfg: System configuration (n_antennas, orders, mac_len, fa_budget)
            scheme: Embedding scheme used by the transmitter
            key: Shared secret key (defaults to the configured test key)
            seed: Root seed of the frame substreams
            workers: Threads running frame blocks
            channel_model: "antenna" or "gamma"
        """
        if scheme.msg_order != cfg.msg_order or scheme.tag_order != cfg.tag_order:
            raise DomainError("Scheme orders do not match the system configuration")
        if channel_model not in CHANNEL_MODELS:
            raise DomainError(f"Unknown channel model: {channel_model}")
        self.cfg = cfg
        self.scheme = scheme
        self.key = bytes.fromhex(DEFAULT_KEY_HEX) if key is None else key
        if not self.key:
            raise ValueError("MAC key must not be empty")
        self.seed = int(seed)
        self.workers = max(1, int(workers))
        self.channel_model = channel_model
        self.rule = np_threshold(cfg.mac_len, cfg.fa_budget)
        self.symbols, self.message_len = frame_layout(cfg)
        self.reports: List[AuthReport] = []

        logger.info(
            f"AuthenticationExperiment initialized with l={cfg.mac_len}, eps={cfg.fa_budget}, "
            f"i*={self.rule.i_star}, {self.symbols} symbols per frame"
        )

    def _block_sizes(self, frames: int) -> List[int]:
        size = max(MIN_BLOCK_TRIALS, BLOCK_SAMPLES // (self.cfg.n_antennas * self.symbols))
        full, rest = divmod(frames, size)
        return [size] * full + ([rest] if rest else [])

    def _run_block(self, attacker: str, block: int, size: int) -> Dict:
        rng = block_generator(self.seed, block)
        cfg = self.cfg
        msg_bits_per_symbol = _bits_per_symbol(cfg.msg_order)
        tag_bits_per_symbol = _bits_per_symbol(cfg.tag_order)

        messages = rng.integers(0, 2, size=(size, self.message_len), dtype=np.uint8)
        if attacker == LEGIT:
            macs = np.array([make_mac(bits, self.key, cfg.mac_len) for bits in messages])
        else:
            macs = rng.integers(0, 2, size=(size, cfg.mac_len), dtype=np.uint8)
        msg = bits_to_indices(messages.reshape(-1), msg_bits_per_symbol)
        tag = bits_to_indices(macs.reshape(-1), tag_bits_per_symbol)

        ynorm = received_energy(rng, self.scheme.A[msg, tag], cfg.n_antennas,
                                self.scheme.sigma2, self.channel_model)
        msg_hat, tag_hat = detect(ynorm, self.scheme)
        detected_bits = indices_to_bits(msg_hat, msg_bits_per_symbol).reshape(size, -1)
        detected_macs = indices_to_bits(tag_hat, tag_bits_per_symbol).reshape(size, -1)
        message_errors = np.any(msg_hat.reshape(size, -1) != msg.reshape(size, -1), axis=1)

        accepted = 0
        bit_errors = 0
        theta_sum = 0.0
        for f in range(size):
            expected = make_mac(detected_bits[f], self.key, cfg.mac_len)
            decision = authenticate(detected_macs[f], expected, self.rule)
            accepted += int(decision.accepted)
            bit_errors += cfg.mac_len - decision.matches
            theta_sum += decision.theta
        return {
            "frames": size,
            "accepted": accepted,
            "bit_errors": bit_errors,
            "theta_sum": theta_sum,
            "message_error_frames": int(np.sum(message_errors)),
        }

    def run(self, frames: int, attacker: str = LEGIT) -> AuthReport:
        """
        Transmit and authenticate a number of frames.

        Args:
            frames: Number of frames
            attacker: "legit" or "forger"

        Returns:
            AuthReport; the theory column holds the detection rate at the
            measured bit error rate (legit) or the achieved false-alarm rate (forger)
        """
        if frames < 1:
            raise DomainError(f"frames must be at least 1, got {frames}")
        if attacker not in ATTACKER_MODES:
            raise DomainError(f"Unknown attacker mode: {attacker}")

        sizes = self._block_sizes(frames)
        if self.workers == 1:
            parts = [self._run_block(attacker, b, s) for b, s in enumerate(sizes)]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(lambda item: self._run_block(attacker, *item),
                                      enumerate(sizes)))
        totals = {key: sum(part[key] for part in parts) for key in parts[0]}

        p_measured = totals["bit_errors"] / (frames * self.cfg.mac_len)
        if attacker == LEGIT:
            theory = detection_rate(self.cfg.mac_len, self.rule.i_star, p_measured)
        else:
            theory = self.rule.achieved_fa

        report = AuthReport(
            attacker=attacker,
            frames=frames,
            accepted=totals["accepted"],
            mac_len=self.cfg.mac_len,
            fa_budget=self.cfg.fa_budget,
            i_star=self.rule.i_star,
            theta0=self.rule.theta0,
            achieved_fa=self.rule.achieved_fa,
            bit_errors=totals["bit_errors"],
            message_error_frames=totals["message_error_frames"],
            theta_sum=totals["theta_sum"],
            theory=theory,
            key_id=key_id(self.key),
        )
        self.reports.append(report)
        logger.info(
            f"Authentication run ({attacker}) over {frames} frames: "
            f"acceptance={report.acceptance_rate:.4e}, theory={theory:.4e}"
        )
        return report

    def get_report_dataframe(self) -> pd.DataFrame:
        """All runs of this experiment as a DataFrame."""
        return pd.DataFrame([report.to_dict() for report in self.reports])


def run_auth_experiment(cfg: SystemConfig, scheme: EmbeddingScheme, frames: int,
                        attacker: str = LEGIT, seed: int = DEFAULT_SEED,
                        key: Optional[bytes] = None, channel_model: str = "antenna",
                        workers: int = 1) -> AuthReport:
    """Authentication rates for legitimate or forged frames (see AuthenticationExperiment)."""
    experiment = AuthenticationExperiment(cfg, scheme, key, seed, workers, channel_model)
    return experiment.run(frames, attacker)
