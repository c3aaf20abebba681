import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.analysis import (bound_error_derivatives, bound_error_term, message_ser,
                           message_ser_upper_bound, tag_error_derivatives, tag_error_term)
from core.constellation import MessageConstellation, SystemConfig, design_constellation
from core.embedding import EmbeddingScheme, build_message_based
from core.special_math import DomainError, NoSignChangeError, solve_monotone
from utils.constants import (ALPHA_GRID_POINTS, ALPHA_TOLERANCE, BARRIER_FACTOR, BOX_TOLERANCE,
                             DUALITY_GAP, FEASIBILITY_TOLERANCE, GOLDEN_SECTION_TOLERANCE,
                             KKT_MAX_STEPS, KKT_TOLERANCE, LINE_SEARCH_ALPHA, LINE_SEARCH_BETA,
                             MAX_BARRIER_STAGES, MAX_NEWTON_STEPS, NEWTON_TOLERANCE,
                             UPPER_ACTIVE_TOLERANCE)

# Configure logging
logger = logging.getLogger('pla_tag_tool.optimizer')

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI2 = (3 - math.sqrt(5)) / 2

POWER = "power"
SER = "ser"
DELTA = "delta"


class InfeasibleError(ValueError):
    """Raised when no tag embedding meets the constraints; `reason` is "delta" or "power"."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class OptProblem:
    """
    Inner tag-power problem in k_i = ln r_i for a fixed power split alpha.

    minimize    f0(k) = (L_t-1)/(L_m L_t) sum_i F(k_i)
    subject to  f1(k) = 1/(L_m L_t) sum_i A_i sum_{j<L_t} (e^{j k_i} - 1) - (1-alpha) E_tot <= 0
                f2(k) = (1/L_m) sum_{i<L_m} W(k_i) - delta <= 0
                BOX_TOLERANCE < k_i < ln R / (L_t-1) - BOX_TOLERANCE
    """
    cfg: SystemConfig
    delta: float
    alpha: float
    con: MessageConstellation

    @classmethod
    def build(cls, cfg: SystemConfig, alpha: float, delta: float) -> "OptProblem":
        """
        Validate the inputs and design the message constellation for E_m = alpha E_tot.

        Raises:
            DomainError: If delta is not in (0, 1) or alpha is not positive
            InfeasibleError: If alpha > 1 leaves a negative tag power budget
        """
        if not 0 < delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {delta}")
        if alpha > 1:
            raise InfeasibleError(POWER, f"Tag power budget (1 - alpha) E_tot is negative at alpha={alpha}")
        if alpha <= 0:
            raise DomainError(f"alpha must be positive, got {alpha}")
        scenario = cfg.with_alpha(alpha)
        return cls(cfg=scenario, delta=delta, alpha=alpha, con=design_constellation(scenario))

    @property
    def msg_order(self) -> int:
        return self.cfg.msg_order

    @property
    def tag_order(self) -> int:
        return self.cfg.tag_order

    @property
    def N(self) -> int:
        return self.cfg.n_antennas

    @property
    def R(self) -> float:
        return self.con.R

    @property
    def A(self) -> np.ndarray:
        return np.asarray(self.con.A)

    @property
    def k_max(self) -> float:
        return math.log(self.R) / (self.tag_order - 1)

    @property
    def lower(self) -> float:
        return BOX_TOLERANCE

    @property
    def upper(self) -> float:
        return self.k_max - BOX_TOLERANCE

    @property
    def power_budget(self) -> float:
        return max(self.cfg.E_tot - self.cfg.E_m, 0.0)

    @property
    def _tag_weight(self) -> float:
        return (self.tag_order - 1) / (self.msg_order * self.tag_order)

    @property
    def _power_weight(self) -> float:
        return 1.0 / (self.msg_order * self.tag_order)

    def _bounded(self) -> np.ndarray:
        # W enters only for message symbols that have a neighbour above
        mask = np.ones(self.msg_order)
        mask[-1] = 0.0
        return mask

    def objective(self, k: np.ndarray) -> float:
        return float(self._tag_weight * np.sum(tag_error_term(k, self.N)))

    def objective_gradient(self, k: np.ndarray) -> np.ndarray:
        return self._tag_weight * tag_error_derivatives(k, self.N)[0]

    def objective_hessian(self, k: np.ndarray) -> np.ndarray:
        return np.diag(self._tag_weight * tag_error_derivatives(k, self.N)[1])

    def tag_power_used(self, k: np.ndarray) -> float:
        """Average tag power E_t of the geometric rows e^{k}."""
        j = np.arange(1, self.tag_order)
        return float(self._power_weight * np.sum(self.A[:, None] * np.expm1(np.outer(k, j))))

    def power_constraint(self, k: np.ndarray) -> float:
        return self.tag_power_used(k) - self.power_budget

    def power_gradient(self, k: np.ndarray) -> np.ndarray:
        j = np.arange(1, self.tag_order)
        return self._power_weight * self.A * np.sum(j * np.exp(np.outer(k, j)), axis=1)

    def power_hessian(self, k: np.ndarray) -> np.ndarray:
        j = np.arange(1, self.tag_order)
        return np.diag(self._power_weight * self.A * np.sum(j * j * np.exp(np.outer(k, j)), axis=1))

    def bound_value(self, k: np.ndarray) -> float:
        """Message SER upper bound P_em^u at k."""
        terms = bound_error_term(k, self.N, self.R, self.tag_order)
        return float(np.sum(self._bounded() * terms) / self.msg_order)

    def ser_constraint(self, k: np.ndarray) -> float:
        return self.bound_value(k) - self.delta

    def ser_gradient(self, k: np.ndarray) -> np.ndarray:
        first, _ = bound_error_derivatives(k, self.N, self.R, self.tag_order)
        return self._bounded() * first / self.msg_order

    def ser_hessian(self, k: np.ndarray) -> np.ndarray:
        _, second = bound_error_derivatives(k, self.N, self.R, self.tag_order)
        return np.diag(self._bounded() * second / self.msg_order)

    def constraint(self, name: str) -> Tuple[Callable, Callable, Callable, float]:
        """(value, gradient, hessian, scale) of a named inequality constraint."""
        if name == POWER:
            return (self.power_constraint, self.power_gradient, self.power_hessian,
                    max(self.power_budget, np.finfo(float).tiny))
        return self.ser_constraint, self.ser_gradient, self.ser_hessian, self.delta


@dataclass
class OptSolution:
    """Optimized message-based embedding for one (alpha, delta)."""
    k: np.ndarray
    r: np.ndarray
    p_et_opt: float
    p_em_upper_at_opt: float
    E_t_used: float
    kkt_residual: float
    alpha_star: float
    delta: float
    power_budget: float
    status: str = "optimal"
    alpha0: Optional[float] = None
    p_em: Optional[float] = None
    multipliers: Dict = field(default_factory=dict)
    scheme: Optional[EmbeddingScheme] = None

    def to_dict(self) -> Dict:
        return {
            "delta": self.delta,
            "alpha0": self.alpha0,
            "alpha_star": self.alpha_star,
            "k": self.k.tolist(),
            "r": self.r.tolist(),
            "p_et_opt": self.p_et_opt,
            "p_em_upper_at_opt": self.p_em_upper_at_opt,
            "p_em": self.p_em,
            "E_t_used": self.E_t_used,
            "power_budget": self.power_budget,
            "kkt_residual": self.kkt_residual,
            "status": self.status,
            "multipliers": self.multipliers,
        }


class BarrierSolver:
    """
    Log-barrier interior-point method with damped Newton centering.

    Minimizes a smooth convex objective under smooth convex inequality
    constraints f_s(x) <= 0 and an open box lower < x < upper.
    """

    def __init__(self, objective: Callable, gradient: Callable, hessian: Callable,
                 lower: float, upper: float):
        self.objective = objective
        self.objective_gradient = gradient
        self.objective_hessian = hessian
        self.lower = lower
        self.upper = upper
        self.constraints: List[Tuple[Callable, Callable, Callable]] = []
        self.newton_steps = 0

    def add_constraint(self, value: Callable, gradient: Callable, hessian: Callable):
        self.constraints.append((value, gradient, hessian))

    @property
    def n_inequalities(self) -> int:
        return len(self.constraints)

    def _in_domain(self, x: np.ndarray) -> bool:
        if np.any(x <= self.lower) or np.any(x >= self.upper):
            return False
        return all(value(x) < 0 for value, _, _ in self.constraints)

    def barrier_value(self, x: np.ndarray, t: float) -> float:
        total = t * self.objective(x)
        total -= sum(math.log(-value(x)) for value, _, _ in self.constraints)
        total -= np.sum(np.log(x - self.lower)) + np.sum(np.log(self.upper - x))
        return float(total)

    def barrier_gradient(self, x: np.ndarray, t: float) -> np.ndarray:
        g = t * self.objective_gradient(x)
        for value, gradient, _ in self.constraints:
            g = g - gradient(x) / value(x)
        return g - 1.0 / (x - self.lower) + 1.0 / (self.upper - x)

    def barrier_hessian(self, x: np.ndarray, t: float) -> np.ndarray:
        H = t * self.objective_hessian(x)
        for value, gradient, hessian in self.constraints:
            f = value(x)
            d = gradient(x)
            H = H + np.outer(d, d) / f ** 2 - hessian(x) / f
        return H + np.diag(1.0 / (x - self.lower) ** 2 + 1.0 / (self.upper - x) ** 2)

    def center(self, x: np.ndarray, t: float) -> np.ndarray:
        """Damped Newton minimization of the barrier function at parameter t."""
        for _ in range(MAX_NEWTON_STEPS):
            g = self.barrier_gradient(x, t)
            try:
                step = -np.linalg.solve(self.barrier_hessian(x, t), g)
            except np.linalg.LinAlgError:
                logger.warning("Singular barrier Hessian; stopping centering")
                break
            decrement = -float(g @ step)
            if decrement / 2 <= NEWTON_TOLERANCE:
                break

            size = 1.0
            while size > 1e-20 and not self._in_domain(x + size * step):
                size *= LINE_SEARCH_BETA
            current = self.barrier_value(x, t)
            while size > 1e-20 and (
                self.barrier_value(x + size * step, t) > current - LINE_SEARCH_ALPHA * size * decrement
            ):
                size *= LINE_SEARCH_BETA
            if size <= 1e-20:
                break
            x = x + size * step
            self.newton_steps += 1
        return x

    def solve(self, x0: np.ndarray) -> Tuple[np.ndarray, float]:
        """
        Follow the central path from a strictly feasible point.

        Args:
            x0: Strictly feasible starting point

        Returns:
            Tuple (x, t) of the last central point and barrier parameter
        """
        if not self._in_domain(x0):
            raise ValueError("Barrier start point is not strictly feasible")
        m = self.n_inequalities + 2 * x0.size
        x = np.asarray(x0, dtype=float)
        t = 1.0 / max(self.objective(x), np.finfo(float).tiny)
        for _ in range(MAX_BARRIER_STAGES):
            x = self.center(x, t)
            # Absolute gap, tightened to relative when the objective is below one
            if m / t <= DUALITY_GAP * min(1.0, max(self.objective(x), np.finfo(float).tiny)):
                break
            t *= BARRIER_FACTOR
        return x, t


def golden_section(f: Callable[[float], float], a: float, b: float,
                   tol: float = GOLDEN_SECTION_TOLERANCE) -> Tuple[float, float]:
    """
    Golden-section search for the minimum of a unimodal function on [a, b].

    Args:
        f: Function to minimize
        a: Left end of the bracket
        b: Right end of the bracket
        tol: Final bracket width

    Returns:
        Tuple (x, f(x)) of the best evaluated point
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = (a + b) / 2
        return x, f(x)

    steps = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(steps - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
    return (c, yc) if yc < yd else (d, yd)


def _phase_one(problem: OptProblem) -> np.ndarray:
    """Strictly feasible start on the diagonal k = lower + tau (upper - lower)."""
    span = problem.upper - problem.lower

    def worst(tau: float) -> float:
        k = np.full(problem.msg_order, problem.lower + tau * span)
        return max(problem.power_constraint(k), problem.ser_constraint(k))

    if worst(1.0) < 0:
        tau = 0.5
    else:
        tau = solve_monotone(worst, 0.0, 1.0, tol=1e-14) / 2
    return np.full(problem.msg_order, problem.lower + tau * span)


def _lagrangian_gradient(problem: OptProblem, k: np.ndarray, mu: Dict[str, float]) -> np.ndarray:
    grad = problem.objective_gradient(k)
    for name, value in mu.items():
        grad = grad + value * problem.constraint(name)[1](k)
    return grad


def _kkt_newton(problem: OptProblem, k_start: np.ndarray, active: Tuple[str, ...],
                fixed: Tuple[int, ...], mu_start: Dict[str, float]) -> Optional[Tuple[np.ndarray, Dict[str, float], float]]:
    """
    Newton iteration on the KKT equations of one active set.

    Coordinates in `fixed` sit on the upper box bound, the constraints in
    `active` hold with equality. Returns (k, multipliers, residual) for a valid
    KKT point of the full problem, None otherwise.
    """
    free = np.array([i for i in range(problem.msg_order) if i not in fixed], dtype=int)
    if len(active) > free.size:
        return None
    k = k_start.copy()
    k[list(fixed)] = problem.upper
    mu = np.array([max(mu_start.get(name, 0.0), 0.0) for name in active])
    grad_scale = max(np.max(np.abs(problem.objective_gradient(k))), np.finfo(float).tiny)
    scales = np.concatenate((np.full(free.size, grad_scale),
                             [problem.constraint(name)[3] for name in active]))

    def residual(k: np.ndarray, mu: np.ndarray) -> np.ndarray:
        grad = _lagrangian_gradient(problem, k, dict(zip(active, mu)))
        values = [problem.constraint(name)[0](k) for name in active]
        return np.concatenate((grad[free], values)) / scales

    current = residual(k, mu)
    for _ in range(KKT_MAX_STEPS):
        if current.size == 0 or np.max(np.abs(current)) <= KKT_TOLERANCE:
            break
        hess = problem.objective_hessian(k)
        for name, value in zip(active, mu):
            hess = hess + value * problem.constraint(name)[2](k)
        jac_c = np.array([problem.constraint(name)[1](k)[free] for name in active]).reshape(len(active), free.size)
        system = np.block([
            [hess[np.ix_(free, free)], jac_c.T],
            [jac_c, np.zeros((len(active), len(active)))],
        ])
        try:
            step = np.linalg.solve(system, -current * scales)
        except np.linalg.LinAlgError:
            return None

        size = 1.0
        norm = np.linalg.norm(current)
        while size > 1e-12:
            k_new = k.copy()
            k_new[free] += size * step[:free.size]
            mu_new = mu + size * step[free.size:]
            if np.all(k_new >= problem.lower) and np.all(k_new <= problem.upper):
                trial = residual(k_new, mu_new)
                if np.linalg.norm(trial) < (1 - 1e-4 * size) * norm:
                    break
            size *= 0.5
        if size <= 1e-12:
            break
        k, mu, current = k_new, mu_new, trial

    if current.size and np.max(np.abs(current)) > FEASIBILITY_TOLERANCE:
        return None
    if np.any(mu < -FEASIBILITY_TOLERANCE):
        return None
    multipliers = {name: max(float(value), 0.0) for name, value in zip(active, mu)}

    violation = 0.0
    for name in (POWER, SER):
        if name not in active:
            value, _, _, scale = problem.constraint(name)
            violation = max(violation, value(k) / scale)
    if violation > FEASIBILITY_TOLERANCE:
        return None

    # Coordinates on the upper bound need a non-negative box multiplier
    box = -_lagrangian_gradient(problem, k, multipliers)[list(fixed)] / grad_scale
    if np.any(box < -FEASIBILITY_TOLERANCE):
        return None
    multipliers["box_upper"] = {int(i): float(v * grad_scale) for i, v in zip(fixed, box)}

    kkt_residual = max(
        float(np.max(np.abs(current))) if current.size else 0.0,
        max(violation, 0.0),
        float(max(-np.min(box), 0.0)) if box.size else 0.0,
    )
    return k, multipliers, kkt_residual


def _polish(problem: OptProblem, k_barrier: np.ndarray,
            duals: Dict[str, float]) -> Optional[Tuple[np.ndarray, Dict, float]]:
    """Best valid KKT point over the candidate active sets around the barrier solution."""
    near_top = problem.upper - k_barrier <= UPPER_ACTIVE_TOLERANCE * (problem.upper - problem.lower)
    top = tuple(int(i) for i in np.flatnonzero(near_top))
    last = problem.msg_order - 1
    fixed_sets = {top, tuple(sorted(set(top) | {last})), ()}

    best = None
    for active in ((), (POWER,), (SER,), (POWER, SER)):
        for fixed in sorted(fixed_sets):
            found = _kkt_newton(problem, k_barrier, active, fixed, duals)
            if found is None:
                continue
            if best is None or problem.objective(found[0]) < problem.objective(best[0]):
                best = found
    return best


def _degenerate_solution(problem: OptProblem) -> OptSolution:
    k = np.full(problem.msg_order, problem.lower)
    return _finish(problem, k, 0.0, "degenerate", {})


def _finish(problem: OptProblem, k: np.ndarray, kkt_residual: float, status: str,
            multipliers: Dict) -> OptSolution:
    scheme = build_message_based(problem.con, problem.tag_order, np.exp(k))
    return OptSolution(
        k=k,
        r=np.exp(k),
        p_et_opt=problem.objective(k),
        p_em_upper_at_opt=message_ser_upper_bound(
            scheme.r, problem.R, problem.tag_order, problem.msg_order, problem.N
        ),
        E_t_used=problem.tag_power_used(k),
        kkt_residual=kkt_residual,
        alpha_star=problem.alpha,
        delta=problem.delta,
        power_budget=problem.power_budget,
        status=status,
        p_em=message_ser(scheme, problem.con, problem.N),
        multipliers=multipliers,
        scheme=scheme,
    )


def solve_inner(cfg: SystemConfig, alpha: float, delta: float) -> OptSolution:
    """
    Minimize the message-based tag SER for a fixed power split.

    Args:
        cfg: System configuration (gamma_tot sets E_tot; gamma_m is replaced)
        alpha: Fraction of E_tot given to the message constellation
        delta: Message SER requirement on the upper bound P_em^u

    Returns:
        OptSolution at a KKT point of the convex program

    Raises:
        InfeasibleError: "power" when alpha > 1, "delta" when even k -> 0+
            violates the SER requirement
    """
    problem = OptProblem.build(cfg, alpha, delta)
    floor = np.full(problem.msg_order, problem.lower)
    ser_floor = problem.ser_constraint(floor)
    if ser_floor > FEASIBILITY_TOLERANCE * delta:
        raise InfeasibleError(
            DELTA, f"SER requirement delta={delta:.3e} unreachable at alpha={alpha:.6f} "
                 f"(bound with zero tag power is {ser_floor + delta:.3e})"
        )
    if ser_floor >= 0 or problem.power_constraint(floor) >= 0:
        logger.debug(f"No room for tag power at alpha={alpha:.6f}")
        return _degenerate_solution(problem)

    solver = BarrierSolver(problem.objective, problem.objective_gradient, problem.objective_hessian,
                           problem.lower, problem.upper)
    solver.add_constraint(problem.power_constraint, problem.power_gradient, problem.power_hessian)
    solver.add_constraint(problem.ser_constraint, problem.ser_gradient, problem.ser_hessian)
    try:
        k_barrier, t = solver.solve(_phase_one(problem))
    except ValueError:
        logger.debug(f"Feasible interior too thin at alpha={alpha:.6f}")
        return _degenerate_solution(problem)
    duals = {
        POWER: 1.0 / (-t * problem.power_constraint(k_barrier)),
        SER: 1.0 / (-t * problem.ser_constraint(k_barrier)),
    }

    polished = _polish(problem, k_barrier, duals)
    if polished is not None:
        k, multipliers, residual = polished
        status = "optimal"
    else:
        logger.warning(f"KKT polish failed at alpha={alpha:.6f}; returning the barrier point")
        k = k_barrier
        multipliers = dict(duals)
        grad = _lagrangian_gradient(problem, k, duals)
        grad += 1.0 / (t * (problem.upper - k)) - 1.0 / (t * (k - problem.lower))
        scale = max(np.max(np.abs(problem.objective_gradient(k))), np.finfo(float).tiny)
        residual = float(np.max(np.abs(grad)) / scale)
        status = "barrier"

    logger.debug(f"Inner solve alpha={alpha:.6f}: P_et={problem.objective(k):.6e}, "
                 f"{solver.newton_steps} Newton steps, status={status}")
    return _finish(problem, k, residual, status, multipliers)


def _zero_tag_bound(cfg: SystemConfig, alpha: float) -> float:
    """P_em^u in the limit r -> 1+, i.e. the exact SER without tags at E_m = alpha E_tot."""
    if alpha <= 0:
        return (cfg.msg_order - 1) / cfg.msg_order
    con = design_constellation(cfg.with_alpha(alpha))
    term = float(bound_error_term(0.0, cfg.n_antennas, con.R, cfg.tag_order))
    return (cfg.msg_order - 1) * term / cfg.msg_order


def alpha_floor(cfg: SystemConfig, delta: float) -> float:
    """
    Smallest power split alpha whose tag-free message SER bound meets delta.

    Args:
        cfg: System configuration
        delta: Message SER requirement

    Returns:
        alpha0 in [0, 1], or math.inf when delta cannot be met even at alpha = 1
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if delta >= (cfg.msg_order - 1) / cfg.msg_order:
        return 0.0
    at_full = _zero_tag_bound(cfg, 1.0)
    if at_full > delta:
        return 1.0 if at_full <= delta * (1 + FEASIBILITY_TOLERANCE) else math.inf
    try:
        return solve_monotone(lambda a: _zero_tag_bound(cfg, a) - delta, ALPHA_TOLERANCE, 1.0,
                              tol=ALPHA_TOLERANCE)
    except NoSignChangeError:
        return ALPHA_TOLERANCE


class TagPowerOptimizer:
    """
    Optimizer for the message-based tag embedding.

    Wraps the inner convex solve, the outer search over the power split and
    the trade-off curve over message SER requirements.
    """

    def __init__(self, cfg: SystemConfig, grid_points: int = ALPHA_GRID_POINTS,
                 tolerance: float = GOLDEN_SECTION_TOLERANCE, workers: int = 1):
        """
        Initialize the optimizer.

        Args:
            cfg: System configuration; gamma_tot fixes the total power
            grid_points: Interior alpha grid size of the coarse outer search
            tolerance: Golden-section bracket width
            workers: Processes used for trade-off points
        """
        self.cfg = cfg
        self.grid_points = int(grid_points)
        self.tolerance = tolerance
        self.workers = max(1, int(workers))
        self.tradeoff_rows: List[Dict] = []

        logger.info(
            f"TagPowerOptimizer initialized with N={cfg.n_antennas}, L_m={cfg.msg_order}, "
            f"L_t={cfg.tag_order}, gamma_tot={cfg.gamma_tot:.4g}, grid={self.grid_points}"
        )

    def solve_inner(self, alpha: float, delta: float) -> OptSolution:
        return solve_inner(self.cfg, alpha, delta)

    def alpha_floor(self, delta: float) -> float:
        return alpha_floor(self.cfg, delta)

    def _tag_ser_at(self, alpha: float, delta: float, cache: Dict[float, float]) -> float:
        if alpha not in cache:
            try:
                cache[alpha] = self.solve_inner(alpha, delta).p_et_opt
            except InfeasibleError:
                cache[alpha] = math.inf
        return cache[alpha]

    def solve_power_allocation(self, delta: float) -> OptSolution:
        """
        Optimal power split and tag embedding for a message SER requirement.

        A coarse grid on (alpha0, 1) guards against multiple local minima; the
        best cell is refined by golden-section search.

        Args:
            delta: Message SER requirement

        Returns:
            OptSolution at alpha*, carrying alpha0

        Raises:
            InfeasibleError: If delta cannot be met with all power on the message
        """
        alpha0 = self.alpha_floor(delta)
        if math.isinf(alpha0):
            raise InfeasibleError(DELTA, f"SER requirement delta={delta:.3e} unreachable even at alpha=1")

        cache: Dict[float, float] = {}
        if alpha0 >= 1.0:
            alpha_star = 1.0
        else:
            grid = np.linspace(alpha0, 1.0, self.grid_points + 2)[1:-1]
            values = np.array([self._tag_ser_at(float(a), delta, cache) for a in grid])
            if np.all(np.isinf(values)):
                raise InfeasibleError(DELTA, f"No feasible power split for delta={delta:.3e}")
            best = int(np.argmin(values))
            left = float(grid[best - 1]) if best > 0 else alpha0
            right = float(grid[best + 1]) if best < grid.size - 1 else 1.0
            alpha_star, value = golden_section(lambda a: self._tag_ser_at(a, delta, cache),
                                               left, right, self.tolerance)
            if not value <= values[best]:
                alpha_star = float(grid[best])

        solution = self.solve_inner(alpha_star, delta)
        solution.alpha0 = alpha0
        logger.info(
            f"Power allocation for delta={delta:.3e}: alpha0={alpha0:.6f}, alpha*={alpha_star:.6f}, "
            f"P_et={solution.p_et_opt:.6e}"
        )
        return solution

    def tradeoff_curve(self, delta_list: Sequence[float]) -> List[Dict]:
        """
        Optimal tag SER for each message SER requirement.

        Args:
            delta_list: Message SER requirements

        Returns:
            One row per delta, infeasible points flagged in the status column
        """
        if len(delta_list) == 0:
            raise DomainError("delta_list must not be empty")
        args = [(self.cfg, float(d), self.grid_points, self.tolerance) for d in delta_list]
        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                rows = list(pool.map(_tradeoff_point, args))
        else:
            rows = [_tradeoff_point(a) for a in args]

        self.tradeoff_rows.extend(rows)
        feasible = sum(row["status"] != "infeasible" for row in rows)
        logger.info(f"Trade-off curve completed: {feasible}/{len(rows)} feasible points")
        return rows

    def get_tradeoff_dataframe(self) -> pd.DataFrame:
        """All trade-off rows computed by this optimizer."""
        return pd.DataFrame(self.tradeoff_rows)


def _tradeoff_point(args) -> Dict:
    cfg, delta, grid_points, tolerance = args
    row = {
        "delta": delta,
        "gamma_tot_db": 10 * math.log10(cfg.gamma_tot),
        "n_antennas": cfg.n_antennas,
        "msg_order": cfg.msg_order,
        "tag_order": cfg.tag_order,
    }
    optimizer = TagPowerOptimizer(cfg, grid_points, tolerance)
    try:
        solution = optimizer.solve_power_allocation(delta)
    except InfeasibleError as e:
        logger.warning(f"Infeasible trade-off point delta={delta:.3e}: {str(e)}")
        row.update({"status": "infeasible", "reason": e.reason})
        return row
    except Exception as e:
        logger.error(f"Error solving trade-off point delta={delta:.3e}: {str(e)}")
        row.update({"status": "error", "reason": str(e)})
        return row

    row.update({
        "alpha0": solution.alpha0,
        "alpha_star": solution.alpha_star,
        "p_et_opt": solution.p_et_opt,
        "p_em_upper": solution.p_em_upper_at_opt,
        "p_em": solution.p_em,
        "E_t_used": solution.E_t_used,
        "kkt_residual": solution.kkt_residual,
        "status": solution.status,
    })
    return row


def solve_power_allocation(cfg: SystemConfig, delta: float,
                           grid_points: int = ALPHA_GRID_POINTS) -> OptSolution:
    """Optimal power split for a message SER requirement (see TagPowerOptimizer)."""
    return TagPowerOptimizer(cfg, grid_points).solve_power_allocation(delta)


def tradeoff_curve(cfg: SystemConfig, delta_list: Sequence[float],
                   grid_points: int = ALPHA_GRID_POINTS, workers: int = 1) -> List[Dict]:
    """Trade-off rows (delta, alpha*, P_et) for each requirement (see TagPowerOptimizer)."""
    return TagPowerOptimizer(cfg, grid_points, workers=workers).tradeoff_curve(delta_list)
