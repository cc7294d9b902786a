"""Frame-indexed deterministic models and the covariance-implies-locality check.

A model assigns outcomes by reference frame.  In the frame where Alice
measures first, her outcome is ``alice_first[x, lam]`` and Bob's may depend
on both inputs: ``bob_second[x, y, lam]``.  In the frame where Bob measures
first the roles swap: ``bob_first[y, lam]`` and ``alice_second[x, y, lam]``.
Covariance demands the outcomes be frame-independent, which strips the
remote-input dependence from the second-measurer tables and collapses the
model to a local one; the operations here make that collapse checkable on
finite alphabets.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .behavior import (
    Behavior,
    CHSH_SCENARIO,
    Scenario,
    chsh_expression,
    evaluate,
    is_local,
)
from .errors import CapExceeded, NotCovariant

#: Prior normalization tolerance.
PRIOR_TOL = 1e-12
#: Table-pair count above which the locality scan falls back to sampling.
EXHAUSTIVE_LIMIT = 1024


@dataclass(frozen=True)
class CovarianceViolation:
    """One frame disagreement, re-verifiable by direct table lookup."""

    x: int
    y: int
    lam: int
    party: str  # "alice" or "bob"
    first_frame_outcome: int
    second_frame_outcome: int


class CovariantModel:
    """Deterministic frame-indexed response tables over a finite lambda alphabet."""

    __slots__ = ("scenario", "prior", "alice_first", "bob_second", "bob_first", "alice_second")

    def __init__(
        self,
        scenario: Scenario,
        prior: Sequence[float] | np.ndarray,
        alice_first: np.ndarray,
        bob_second: np.ndarray,
        bob_first: np.ndarray,
        alice_second: np.ndarray,
    ):
        prior = np.array(prior, dtype=np.float64)
        if prior.ndim != 1 or prior.size < 1:
            raise ValueError("prior must be a nonempty vector")
        if prior.min() < 0.0 or abs(prior.sum() - 1.0) > PRIOR_TOL:
            raise ValueError("prior must be a normalized probability vector")
        n_lam = prior.size

        alice_first = _int_table(alice_first, (scenario.n_x, n_lam), scenario.n_a, "alice_first")
        bob_second = _int_table(
            bob_second, (scenario.n_x, scenario.n_y, n_lam), scenario.n_b, "bob_second"
        )
        bob_first = _int_table(bob_first, (scenario.n_y, n_lam), scenario.n_b, "bob_first")
        alice_second = _int_table(
            alice_second, (scenario.n_x, scenario.n_y, n_lam), scenario.n_a, "alice_second"
        )
        for arr in (prior, alice_first, bob_second, bob_first, alice_second):
            arr.setflags(write=False)
        self.scenario = scenario
        self.prior = prior
        self.alice_first = alice_first
        self.bob_second = bob_second
        self.bob_first = bob_first
        self.alice_second = alice_second

    @property
    def lambda_count(self) -> int:
        return self.prior.size

    @classmethod
    def covariant_completion(
        cls,
        scenario: Scenario,
        prior: Sequence[float] | np.ndarray,
        alice_first: np.ndarray,
        bob_first: np.ndarray,
    ) -> "CovariantModel":
        """Build the unique covariant model extending first-measurer tables."""
        alice_first = np.asarray(alice_first)
        bob_first = np.asarray(bob_first)
        bob_second = np.broadcast_to(
            bob_first[None, :, :], (scenario.n_x, scenario.n_y, bob_first.shape[-1])
        ).copy()
        alice_second = np.broadcast_to(
            alice_first[:, None, :], (scenario.n_x, scenario.n_y, alice_first.shape[-1])
        ).copy()
        return cls(scenario, prior, alice_first, bob_second, bob_first, alice_second)


def _int_table(arr, shape, n_outcomes: int, name: str) -> np.ndarray:
    arr = np.array(arr, dtype=np.int64)
    if arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    if arr.min() < 0 or arr.max() >= n_outcomes:
        raise ValueError(f"{name} contains outcomes outside range(0, {n_outcomes})")
    return arr


def check_covariance(model: CovariantModel) -> tuple[bool, list[CovarianceViolation]]:
    """Frame independence: first-measurer outcomes must match the other frame.

    Covariant iff alice_first(x, lam) == alice_second(x, y, lam) and
    bob_first(y, lam) == bob_second(x, y, lam) for every (x, y, lam).
    """
    violations: list[CovarianceViolation] = []
    a_mismatch = model.alice_second != model.alice_first[:, None, :]
    b_mismatch = model.bob_second != model.bob_first[None, :, :]
    for x, y, lam in zip(*np.nonzero(a_mismatch)):
        violations.append(
            CovarianceViolation(
                int(x), int(y), int(lam), "alice",
                int(model.alice_first[x, lam]),
                int(model.alice_second[x, y, lam]),
            )
        )
    for x, y, lam in zip(*np.nonzero(b_mismatch)):
        violations.append(
            CovarianceViolation(
                int(x), int(y), int(lam), "bob",
                int(model.bob_first[y, lam]),
                int(model.bob_second[x, y, lam]),
            )
        )
    violations.sort(key=lambda v: (v.x, v.y, v.lam, v.party))
    return (not violations), violations


def induced_behavior(model: CovariantModel) -> Behavior:
    """Average the deterministic outcomes over the prior.

    Requires covariance.  Both frame evaluations are formed as exact integer
    indicator tables and compared before any prior weighting; covariance makes
    them identical, so the returned behavior is frame-independent.
    """
    covariant, violations = check_covariance(model)
    if not covariant:
        raise NotCovariant(f"{len(violations)} frame disagreements")
    sc = model.scenario
    counts_ab = _indicator_counts(sc, model.alice_first[:, None, :], model.bob_second)
    counts_ba = _indicator_counts(sc, model.alice_second, model.bob_first[None, :, :])
    if not np.array_equal(counts_ab, counts_ba):
        raise NotCovariant("frame evaluations disagree")  # unreachable when covariant
    p = np.einsum("xyabl,l->xyab", counts_ab.astype(np.float64), model.prior)
    return Behavior(sc, p)


@functools.lru_cache(maxsize=64)
def _index_grids(n_x: int, n_y: int, n_lam: int):
    grids = np.indices((n_x, n_y, n_lam))
    for g in grids:
        g.setflags(write=False)
    return grids[0], grids[1], grids[2]


def _indicator_counts(sc: Scenario, a_table, b_table) -> np.ndarray:
    """Indicator tensor [x, y, a, b, lam] = 1 iff the tables select (a, b)."""
    n_lam = a_table.shape[-1]
    a_full = np.broadcast_to(a_table, (sc.n_x, sc.n_y, n_lam))
    b_full = np.broadcast_to(b_table, (sc.n_x, sc.n_y, n_lam))
    counts = np.zeros((sc.n_x, sc.n_y, sc.n_a, sc.n_b, n_lam), dtype=np.int64)
    x_idx, y_idx, l_idx = _index_grids(sc.n_x, sc.n_y, n_lam)
    counts[x_idx, y_idx, a_full, b_full, l_idx] = 1
    return counts


@dataclass
class ForcesLocalityReport:
    """Outcome of a covariant-model scan: every induced behavior must be local."""

    scenario: Scenario
    lambda_count: int
    exhaustive: bool
    models_checked: int
    locality_failures: int
    chsh_failures: int
    max_chsh: float | None


def random_covariant_model(
    scenario: Scenario, lambda_count: int, rng: np.random.Generator
) -> CovariantModel:
    """Uniform response tables plus a uniform-simplex prior, completed covariantly."""
    alice_first = rng.integers(0, scenario.n_a, size=(scenario.n_x, lambda_count))
    bob_first = rng.integers(0, scenario.n_b, size=(scenario.n_y, lambda_count))
    prior = rng.exponential(size=lambda_count)
    prior /= prior.sum()
    return CovariantModel.covariant_completion(scenario, prior, alice_first, bob_first)


def enumerate_first_measurer_tables(
    scenario: Scenario, lambda_count: int
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """All (alice_first, bob_first) table pairs, lexicographic."""
    n_a_cells = scenario.n_x * lambda_count
    n_b_cells = scenario.n_y * lambda_count
    for a_flat in np.ndindex(*(scenario.n_a,) * n_a_cells):
        a_table = np.asarray(a_flat, dtype=np.int64).reshape(scenario.n_x, lambda_count)
        for b_flat in np.ndindex(*(scenario.n_b,) * n_b_cells):
            b_table = np.asarray(b_flat, dtype=np.int64).reshape(scenario.n_y, lambda_count)
            yield a_table, b_table


def _exhaustive_priors(lambda_count: int) -> np.ndarray:
    """Simplex vertices, edge midpoints, and the uniform prior.

    Any linear functional of the induced behavior (the CHSH value in
    particular) is linear in the prior, so its extrema over all priors are
    attained at the vertices; including them makes the bound scan complete.
    The extra interior points exercise the membership LP on proper mixtures.
    """
    eye = np.eye(lambda_count)
    priors = [eye[i] for i in range(lambda_count)]
    for i in range(lambda_count):
        for j in range(i + 1, lambda_count):
            priors.append((eye[i] + eye[j]) / 2.0)
    if lambda_count > 1:
        priors.append(np.full(lambda_count, 1.0 / lambda_count))
    return np.array(priors)


def covariance_forces_locality(
    scenario: Scenario,
    lambda_count: int,
    trials: int,
    seed: int,
    exhaustive: bool | None = None,
    membership_cap: int | None = None,
) -> ForcesLocalityReport:
    """Scan covariant models and verify every induced behavior is local.

    Exhaustive mode (table-pair count at most EXHAUSTIVE_LIMIT, or forced)
    enumerates all first-measurer tables against a fixed prior grid whose
    vertices make the CHSH bound scan complete; sampling mode draws ``trials``
    random models from ``seed``.  Each behavior goes through the membership
    LP, and in scenarios supporting CHSH the value is checked against 2.
    """
    pair_count = (
        scenario.n_a ** (scenario.n_x * lambda_count)
        * scenario.n_b ** (scenario.n_y * lambda_count)
    )
    if exhaustive is None:
        exhaustive = pair_count <= EXHAUSTIVE_LIMIT
    if exhaustive and pair_count > 10**6:
        raise CapExceeded(f"{pair_count} table pairs is too many to exhaust")

    supports_chsh = scenario == CHSH_SCENARIO
    expr = chsh_expression() if supports_chsh else None

    checked = 0
    locality_failures = 0
    chsh_failures = 0
    max_chsh = -np.inf

    def inspect(model: CovariantModel) -> None:
        nonlocal checked, locality_failures, chsh_failures, max_chsh
        behavior = induced_behavior(model)
        result = is_local(behavior, cap=membership_cap or 10**7)
        if not result.is_local:
            locality_failures += 1
        if expr is not None:
            value = evaluate(expr, behavior)
            if value > 2.0 + 1e-9:
                chsh_failures += 1
            if value > max_chsh:
                max_chsh = value
        checked += 1

    if exhaustive:
        priors = _exhaustive_priors(lambda_count)
        for a_table, b_table in enumerate_first_measurer_tables(scenario, lambda_count):
            for prior in priors:
                inspect(
                    CovariantModel.covariant_completion(scenario, prior, a_table, b_table)
                )
    else:
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            inspect(random_covariant_model(scenario, lambda_count, rng))

    return ForcesLocalityReport(
        scenario=scenario,
        lambda_count=lambda_count,
        exhaustive=exhaustive,
        models_checked=checked,
        locality_failures=locality_failures,
        chsh_failures=chsh_failures,
        max_chsh=None if max_chsh == -np.inf else float(max_chsh),
    )
