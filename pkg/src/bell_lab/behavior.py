"""Bipartite Bell scenarios, behaviors, and local-polytope operations.

A behavior is the conditional table P(a,b|x,y).  Local models are convex
mixtures of deterministic strategies (one outcome per input, chosen
independently on each side); those strategies are the vertices of the local
polytope, and membership is decided by linear feasibility over the vertex
matrix.

Sign convention used for every correlator-style expression in this package:
outcome index 0 maps to +1 and index 1 maps to -1.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, DimensionMismatch, NumericalFailure
from .simplex import solve_equality_feasibility

#: Tolerance for behavior normalization and nonnegativity checks.
NORMALIZATION_TOL = 1e-12
#: Decision tolerance for local-polytope membership.
MEMBERSHIP_TOL = 1e-9
#: Default ceiling on the number of deterministic strategies enumerated.
DEFAULT_STRATEGY_CAP = 10**7

#: Outcome signs: index 0 is +1, index 1 is -1.
OUTCOME_SIGNS = np.array([1.0, -1.0])


@dataclass(frozen=True)
class Scenario:
    """Input/output cardinalities (n_x, n_y Alice/Bob inputs; n_a, n_b outcomes)."""

    n_x: int
    n_y: int
    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("each party needs at least one input")
        if self.n_a < 2 or self.n_b < 2:
            raise ValueError("each party needs at least two outcomes")

    @property
    def table_shape(self) -> tuple[int, int, int, int]:
        return (self.n_x, self.n_y, self.n_a, self.n_b)

    @property
    def strategy_count(self) -> int:
        return self.n_a**self.n_x * self.n_b**self.n_y


CHSH_SCENARIO = Scenario(2, 2, 2, 2)


@dataclass(frozen=True)
class DeterministicStrategy:
    """Local response functions: f_a[x] is Alice's outcome, f_b[y] Bob's."""

    f_a: tuple[int, ...]
    f_b: tuple[int, ...]

    def validate(self, scenario: Scenario) -> None:
        if len(self.f_a) != scenario.n_x or len(self.f_b) != scenario.n_y:
            raise DimensionMismatch("strategy does not cover every input")
        if any(not 0 <= a < scenario.n_a for a in self.f_a):
            raise DimensionMismatch("Alice outcome out of range")
        if any(not 0 <= b < scenario.n_b for b in self.f_b):
            raise DimensionMismatch("Bob outcome out of range")


class Behavior:
    """Conditional distribution table p[x, y, a, b], validated on construction.

    Entries in [-1e-12, 0) are clamped to zero (floating dust from upstream
    arithmetic); anything more negative is rejected.  Each (x, y) slice must
    sum to one within 1e-12.
    """

    __slots__ = ("scenario", "p")

    def __init__(self, scenario: Scenario, p: np.ndarray | Sequence):
        p = np.array(p, dtype=np.float64)
        if p.shape != scenario.table_shape:
            raise DimensionMismatch(
                f"table shape {p.shape} does not match scenario {scenario.table_shape}"
            )
        lowest = p.min()
        if lowest < -NORMALIZATION_TOL:
            raise ValueError(f"negative probability {lowest}")
        np.clip(p, 0.0, None, out=p)
        sums = p.sum(axis=(2, 3))
        worst = np.abs(sums - 1.0).max()
        if worst > NORMALIZATION_TOL:
            raise ValueError(f"normalization off by {worst}")
        p.setflags(write=False)
        self.scenario = scenario
        self.p = p

    def correlator(self, x: int, y: int) -> float:
        """E(x,y) under the +1/-1 outcome convention (binary outcomes only)."""
        if self.scenario.n_a != 2 or self.scenario.n_b != 2:
            raise DimensionMismatch("correlators need binary outcomes")
        signs = np.outer(OUTCOME_SIGNS, OUTCOME_SIGNS)
        return float((self.p[x, y] * signs).sum())

    def marginal_a(self, x: int, y: int) -> np.ndarray:
        return self.p[x, y].sum(axis=1)

    def marginal_b(self, x: int, y: int) -> np.ndarray:
        return self.p[x, y].sum(axis=0)

    def signaling(self) -> float:
        """Largest marginal shift caused by the remote input (0 if no-signaling)."""
        pa = self.p.sum(axis=3)  # (x, y, a)
        pb = self.p.sum(axis=2)  # (x, y, b)
        da = np.abs(pa - pa.mean(axis=1, keepdims=True)).max()
        db = np.abs(pb - pb.mean(axis=0, keepdims=True)).max()
        return float(max(da, db))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Behavior)
            and self.scenario == other.scenario
            and np.array_equal(self.p, other.p)
        )


class BellExpression:
    """Linear functional sum(coeffs * p) with optional attached bounds."""

    __slots__ = ("scenario", "coeffs", "local_bound", "algebraic_bound")

    def __init__(
        self,
        scenario: Scenario,
        coeffs: np.ndarray | Sequence,
        local_bound: float | None = None,
        algebraic_bound: float | None = None,
    ):
        coeffs = np.array(coeffs, dtype=np.float64)
        if coeffs.shape != scenario.table_shape:
            raise DimensionMismatch(
                f"coeff shape {coeffs.shape} does not match scenario {scenario.table_shape}"
            )
        if (
            local_bound is not None
            and algebraic_bound is not None
            and local_bound > algebraic_bound
        ):
            raise ValueError("local bound exceeds algebraic bound")
        coeffs.setflags(write=False)
        self.scenario = scenario
        self.coeffs = coeffs
        self.local_bound = local_bound
        self.algebraic_bound = algebraic_bound


@dataclass(frozen=True)
class LocalMembershipResult:
    """Certificate for local-polytope membership.

    Local: ``weights`` is a convex decomposition over deterministic
    strategies reproducing the behavior.  Not local: ``witness`` is a
    separating Bell expression whose value on the behavior
    (``witness_value``) exceeds its local bound.
    """

    is_local: bool
    weights: Mapping[DeterministicStrategy, float] | None = None
    witness: BellExpression | None = None
    witness_value: float | None = None


def enumerate_strategies(
    scenario: Scenario, cap: int = DEFAULT_STRATEGY_CAP
) -> list[DeterministicStrategy]:
    """All deterministic strategies, lexicographic in (f_a, f_b).

    The order is the mixed-radix count with f_a[0] most significant, then the
    remaining Alice responses, then Bob's.  Raises CapExceeded when the
    scenario holds more than ``cap`` strategies.
    """
    total = scenario.strategy_count
    if total > cap:
        raise CapExceeded(f"{total} strategies exceed cap {cap}")
    return [
        DeterministicStrategy(f_a, f_b)
        for f_a in itertools.product(range(scenario.n_a), repeat=scenario.n_x)
        for f_b in itertools.product(range(scenario.n_b), repeat=scenario.n_y)
    ]


def strategy_behavior(strategy: DeterministicStrategy, scenario: Scenario) -> Behavior:
    """Deterministic behavior: p(a,b|x,y) = [a == f_a(x)][b == f_b(y)]."""
    strategy.validate(scenario)
    p = np.zeros(scenario.table_shape)
    for x, a in enumerate(strategy.f_a):
        for y, b in enumerate(strategy.f_b):
            p[x, y, a, b] = 1.0
    return Behavior(scenario, p)


def evaluate(expr: BellExpression, behavior: Behavior) -> float:
    """sum(coeffs * p); linear in the behavior."""
    if expr.scenario != behavior.scenario:
        raise DimensionMismatch("expression and behavior scenarios differ")
    return float(np.vdot(expr.coeffs, behavior.p))


def local_bound(expr: BellExpression, cap: int = DEFAULT_STRATEGY_CAP) -> float:
    """Maximum of the expression over deterministic strategies.

    Convexity makes this the maximum over the whole local polytope.  Bob's
    best response decouples per input once Alice's strategy is fixed, so the
    scan enumerates Alice's n_a**n_x strategies and optimizes Bob's side in
    closed form; the result equals the brute-force maximum over all strategy
    pairs.
    """
    sc = expr.scenario
    if sc.strategy_count > cap:
        raise CapExceeded(f"{sc.strategy_count} strategies exceed cap {cap}")
    best = -np.inf
    # row[x, a, y, b] groups coefficients for Alice's response scan
    row = expr.coeffs.transpose(0, 2, 1, 3)
    for f_a in itertools.product(range(sc.n_a), repeat=sc.n_x):
        # contrib[y, b] = sum_x coeffs[x, y, f_a[x], b]
        contrib = row[np.arange(sc.n_x), f_a].sum(axis=0)
        value = contrib.max(axis=1).sum()
        if value > best:
            best = value
    return float(best)


def algebraic_bound(expr: BellExpression) -> float:
    """Maximum over all behaviors: per (x,y), take the largest coefficient."""
    return float(expr.coeffs.max(axis=(2, 3)).sum())


@functools.lru_cache(maxsize=32)
def strategy_matrix(
    scenario: Scenario, cap: int = DEFAULT_STRATEGY_CAP
) -> tuple[np.ndarray, list[DeterministicStrategy]]:
    """Vertex matrix V whose columns are flattened strategy behaviors.

    Cached per scenario; the returned array is read-only and shared.
    """
    strategies = enumerate_strategies(scenario, cap)
    dim = int(np.prod(scenario.table_shape))
    V = np.zeros((dim, len(strategies)))
    n_y, n_a, n_b = scenario.n_y, scenario.n_a, scenario.n_b
    xs = np.arange(scenario.n_x)
    ys = np.arange(scenario.n_y)
    for j, s in enumerate(strategies):
        fa = np.asarray(s.f_a)
        fb = np.asarray(s.f_b)
        flat = (
            ((xs[:, None] * n_y + ys[None, :]) * n_a + fa[:, None]) * n_b
            + fb[None, :]
        )
        V[flat.ravel(), j] = 1.0
    V.setflags(write=False)
    return V, strategies


def is_local(
    behavior: Behavior,
    tol: float = MEMBERSHIP_TOL,
    cap: int = DEFAULT_STRATEGY_CAP,
) -> LocalMembershipResult:
    """Decide membership in the local polytope via linear feasibility.

    Solves ``V w = p, w >= 0, sum(w) = 1`` over the strategy-vertex matrix.
    Feasible: returns the convex decomposition and re-verifies that it
    reproduces the behavior within ``tol`` per entry.  Infeasible: the
    phase-1 dual is a Farkas vector, returned as a separating Bell
    expression normalized to unit max coefficient, with its local bound
    recomputed by enumeration.  Raises NumericalFailure when neither
    certificate survives verification at ``tol``.
    """
    sc = behavior.scenario
    V, strategies = strategy_matrix(sc, cap)
    dim = V.shape[0]
    A = np.vstack([V, np.ones((1, len(strategies)))])
    b = np.concatenate([behavior.p.ravel(), [1.0]])

    result = solve_equality_feasibility(A, b, tol=tol)

    if result.feasible:
        w = result.weights
        reproduced = V @ w
        total = w.sum()
        if abs(total - 1.0) > tol or np.abs(reproduced - b[:dim]).max() > tol:
            raise NumericalFailure("decomposition does not reproduce the behavior")
        weights = {
            strategies[j]: float(w[j]) for j in np.nonzero(w > 0.0)[0]
        }
        return LocalMembershipResult(is_local=True, weights=weights)

    # Farkas vector: y.p + y_last > 0 >= y.V_j + y_last for every vertex.
    y = result.certificate[:dim]
    scale = np.abs(y).max()
    if scale <= 0.0:
        raise NumericalFailure("degenerate separating direction")
    y = y / scale
    coeffs = y.reshape(sc.table_shape)
    witness = BellExpression(sc, coeffs)
    bound = local_bound(witness, cap=cap)
    value = float(y @ behavior.p.ravel())
    if value - bound <= tol:
        raise NumericalFailure(
            f"membership indeterminate: witness margin {value - bound} within {tol}"
        )
    witness = BellExpression(sc, coeffs, local_bound=bound, algebraic_bound=algebraic_bound(witness))
    return LocalMembershipResult(is_local=False, witness=witness, witness_value=value)


def chsh_expression() -> BellExpression:
    """CHSH as a coefficient table: E(0,0) + E(0,1) + E(1,0) - E(1,1).

    Correlators use the fixed sign convention (index 0 -> +1, 1 -> -1).
    Local bound 2 and algebraic bound 4 are attached.
    """
    term_signs = np.array([[1.0, 1.0], [1.0, -1.0]])
    outcome_signs = np.outer(OUTCOME_SIGNS, OUTCOME_SIGNS)
    coeffs = term_signs[:, :, None, None] * outcome_signs[None, None, :, :]
    return BellExpression(CHSH_SCENARIO, coeffs, local_bound=2.0, algebraic_bound=4.0)


def uniform_behavior(scenario: Scenario) -> Behavior:
    """The maximally mixed behavior p = 1/(n_a * n_b)."""
    p = np.full(scenario.table_shape, 1.0 / (scenario.n_a * scenario.n_b))
    return Behavior(scenario, p)


def mix_behaviors(behaviors: Iterable[Behavior], weights: Iterable[float]) -> Behavior:
    """Convex combination of behaviors over a common scenario."""
    behaviors = list(behaviors)
    weights = np.asarray(list(weights), dtype=np.float64)
    if len(behaviors) == 0 or len(behaviors) != len(weights):
        raise ValueError("need one weight per behavior")
    if weights.min() < 0 or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability vector")
    scenario = behaviors[0].scenario
    if any(b.scenario != scenario for b in behaviors):
        raise DimensionMismatch("behaviors live in different scenarios")
    p = sum(w * b.p for w, b in zip(weights, behaviors))
    # Renormalize away accumulation dust before the constructor checks.
    p = p / p.sum(axis=(2, 3), keepdims=True)
    return Behavior(scenario, p)


def pr_box() -> Behavior:
    """The Popescu-Rohrlich box: a XOR b = x AND y with uniform marginals."""
    p = np.zeros(CHSH_SCENARIO.table_shape)
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    if (a ^ b) == (x & y):
                        p[x, y, a, b] = 0.5
    return Behavior(CHSH_SCENARIO, p)
