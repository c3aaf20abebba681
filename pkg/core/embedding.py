import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from core.constellation import MessageConstellation, threshold
from core.special_math import DomainError

# Configure logging
logger = logging.getLogger('pla_tag_tool.embedding')

UNIFORM = "uniform"
MESSAGE_BASED = "message_based"

# Relative gap under which two adjacent powers count as touching
TOUCH_TOLERANCE = 1e-12


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def _boundary_threshold(A_lo: float, A_hi: float) -> float:
    # Touching rows (uniform beta = 1) take the limit of the threshold kernel
    if A_hi - A_lo <= TOUCH_TOLERANCE * A_hi:
        return A_hi
    return threshold(A_lo, A_hi)


@dataclass(frozen=True, eq=False)
class EmbeddingScheme:
    """
    Tag-embedded constellation: the L_m x L_t grid of received powers and its thresholds.

    Row i holds the powers A_{i,j} of message symbol i carrying tag symbol j;
    column 0 is the tag-free message level. B separates adjacent rows, row i
    of C separates the tag symbols inside message row i.
    """
    kind: str
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    sigma2: float
    beta: Optional[float] = None
    r: Optional[Tuple[float, ...]] = None

    @property
    def msg_order(self) -> int:
        return self.A.shape[0]

    @property
    def tag_order(self) -> int:
        return self.A.shape[1]

    @property
    def k(self) -> Optional[np.ndarray]:
        """Log ratios k_i = ln r_i of a message-based scheme."""
        return None if self.r is None else np.log(np.asarray(self.r))

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "msg_order": self.msg_order,
            "tag_order": self.tag_order,
            "sigma2": self.sigma2,
            "beta": self.beta,
            "r": None if self.r is None else list(self.r),
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "tag_power": tag_power(self),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "EmbeddingScheme":
        """
        Rebuild a scheme exported by to_dict.

        Args:
            data: Dictionary with kind, grid, thresholds and parameters

        Returns:
            EmbeddingScheme with the stored values

        Raises:
            DomainError: If the stored arrays have inconsistent shapes
        """
        A = np.asarray(data["A"], dtype=float)
        B = np.asarray(data["B"], dtype=float).reshape(-1)
        C = np.asarray(data["C"], dtype=float)
        if A.ndim != 2 or B.shape != (A.shape[0] - 1,) or C.shape != (A.shape[0], A.shape[1] - 1):
            raise DomainError("Scheme arrays have inconsistent shapes")
        if data.get("kind") not in (UNIFORM, MESSAGE_BASED):
            raise DomainError(f"Unknown embedding kind: {data.get('kind')}")
        r = data.get("r")
        return cls(
            kind=data["kind"],
            A=_frozen(A),
            B=_frozen(B),
            C=_frozen(C),
            sigma2=float(data["sigma2"]),
            beta=data.get("beta"),
            r=None if r is None else tuple(float(x) for x in r),
        )


def _assemble(kind: str, grid: np.ndarray, con: MessageConstellation,
              beta: Optional[float] = None, r: Optional[Sequence[float]] = None) -> EmbeddingScheme:
    L_m, L_t = grid.shape
    B = [_boundary_threshold(grid[i, -1], grid[i + 1, 0]) for i in range(L_m - 1)]
    C = [[threshold(grid[i, j], grid[i, j + 1]) for j in range(L_t - 1)] for i in range(L_m)]
    return EmbeddingScheme(
        kind=kind,
        A=_frozen(grid),
        B=_frozen(B),
        C=_frozen(np.reshape(C, (L_m, L_t - 1))),
        sigma2=con.sigma2,
        beta=beta,
        r=None if r is None else tuple(float(x) for x in r),
    )


def _check_tag_order(L_t: int):
    if int(L_t) != L_t or L_t < 2 or (int(L_t) & (int(L_t) - 1)) != 0:
        raise DomainError(f"Tag order must be a power of two >= 2, got {L_t}")


def uniform_step(con: MessageConstellation, L_t: int, beta: float) -> float:
    """Tag power increment |dt|^2 = beta (A_{2,1} - A_{1,1}) / (L_t - 1)."""
    return beta * (con.A[1] - con.A[0]) / (L_t - 1)


def build_uniform(con: MessageConstellation, L_t: int, beta: float) -> EmbeddingScheme:
    """
    Uniform tag embedding: constant power step between adjacent tag symbols.

    Args:
        con: Message constellation
        L_t: Tag order
        beta: Normalized tag power in (0, 1]; beta = 1 makes the top of
            row 1 touch the bottom of row 2

    Returns:
        EmbeddingScheme of kind "uniform"

    Raises:
        DomainError: If beta lies outside (0, 1]
    """
    _check_tag_order(L_t)
    if not 0 < beta <= 1:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")

    step = uniform_step(con, L_t, beta)
    grid = np.asarray(con.A)[:, None] + step * np.arange(L_t)[None, :]
    if beta == 1:
        grid[0, -1] = con.A[1]

    scheme = _assemble(UNIFORM, grid, con, beta=beta)
    logger.debug(f"Built uniform scheme L_m={con.order}, L_t={L_t}, beta={beta:.4g}, step={step:.6g}")
    return scheme


def ratio_upper_bound(con: MessageConstellation, L_t: int) -> float:
    """Largest admissible row ratio R^{1/(L_t-1)} (exclusive)."""
    return con.R ** (1.0 / (L_t - 1))


def build_message_based(con: MessageConstellation, L_t: int,
                        r: Union[float, Sequence[float]]) -> EmbeddingScheme:
    """
    Message-based tag embedding with a geometric tag row per message symbol.

    Args:
        con: Message constellation
        L_t: Tag order
        r: Row ratios r_i (one per message symbol, or a single shared value)

    Returns:
        EmbeddingScheme of kind "message_based"

    Raises:
        DomainError: If any r_i is outside (1, R^{1/(L_t-1)})
    """
    _check_tag_order(L_t)
    ratios = np.broadcast_to(np.asarray(r, dtype=float), (con.order,)).copy()
    k = np.log(ratios)
    k_max = math.log(con.R) / (L_t - 1)
    bad = (ratios <= 1.0) | (k >= k_max)
    if np.any(bad):
        raise DomainError(
            f"Row ratios must lie in (1, {math.exp(k_max):.6g}), got {ratios[bad].tolist()}"
        )

    grid = np.asarray(con.A)[:, None] * np.exp(np.outer(k, np.arange(L_t)))
    scheme = _assemble(MESSAGE_BASED, grid, con, r=ratios)
    logger.debug(f"Built message-based scheme L_m={con.order}, L_t={L_t}, r={ratios.tolist()}")
    return scheme


def tag_power(scheme: EmbeddingScheme) -> float:
    """Average tag power E_t = (1/(L_m L_t)) sum_i sum_j (A_{i,j} - A_{i,1})."""
    return float(np.mean(scheme.A - scheme.A[:, :1]))


def transmit_amplitudes(scheme: EmbeddingScheme) -> np.ndarray:
    """Transmit amplitudes x_{i,j} = sqrt(|m_i|^2 + |t_{i,j}|^2)."""
    return np.sqrt(np.maximum(scheme.A - scheme.sigma2, 0.0))


def detect(ynorm, scheme: EmbeddingScheme,
           con: Optional[MessageConstellation] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two-stage quantization detector for the normalized energy ||y||^2/N.

    The message index comes from the row thresholds B, the tag index from
    row C[msg] of the detected message. A statistic equal to a threshold
    resolves to the lower index.

    Args:
        ynorm: Normalized received energy (scalar or array)
        scheme: Embedding scheme
        con: Unused; accepted so callers can pass the constellation alongside

    Returns:
        Tuple of 0-based (message index, tag index), same shape as ynorm

    Raises:
        DomainError: If any statistic is negative
    """
    y = np.asarray(ynorm, dtype=float)
    if np.any(y < 0) or np.any(np.isnan(y)):
        raise DomainError("Normalized energy must be non-negative")

    msg = np.searchsorted(scheme.B, y, side='left')
    rows = scheme.C[msg]
    tag = np.sum(rows < y[..., None], axis=-1)
    if y.ndim == 0:
        return int(msg), int(tag)
    return msg, tag


def gray_encode(index):
    """Binary-reflected Gray code of a symbol index."""
    index = np.asarray(index, dtype=np.int64)
    return index ^ (index >> 1)


def gray_decode(code):
    """Symbol index whose Gray code is `code`."""
    code = np.asarray(code, dtype=np.int64)
    index = code.copy()
    shift = code >> 1
    while np.any(shift):
        index ^= shift
        shift >>= 1
    return index


def bits_to_indices(bits, bits_per_symbol: int) -> np.ndarray:
    """
    Map a bit vector onto symbol indices, bits_per_symbol bits each, MSB first, Gray mapped.

    Args:
        bits: Bit vector whose length is a multiple of bits_per_symbol
        bits_per_symbol: log2 of the alphabet size

    Returns:
        Array of symbol indices
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % bits_per_symbol:
        raise DomainError(f"{bits.size} bits do not split into {bits_per_symbol}-bit symbols")
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    codes = bits.reshape(-1, bits_per_symbol) @ weights
    return gray_decode(codes)


def indices_to_bits(indices, bits_per_symbol: int) -> np.ndarray:
    """Inverse of bits_to_indices."""
    codes = gray_encode(np.asarray(indices, dtype=np.int64).reshape(-1))
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((codes[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
