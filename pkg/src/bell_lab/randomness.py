"""Randomness-expansion bookkeeping and a seeded Bell-test round simulator.

The certification function maps an observed CHSH value to certified
min-entropy per round; everything downstream is idealized bit accounting
(no finite-statistics penalty, no extractor modeling).  Stage ledgers track
how certified output feeds later stages of a serial composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._mc import batch_means_stderr, chunk_generators, chunk_sizes, map_chunks
from .behavior import OUTCOME_SIGNS
from .errors import OutOfRange, SeedStarvation
from .quantum import MeasurementSettings, TwoQubitState, quantum_behavior

TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)


def minentropy_bound(chsh_value: float) -> float:
    """Certified min-entropy bits per round from a CHSH value S.

    1 - log2(1 + sqrt(2 - S^2/4)) for S in (2, 2*sqrt(2)], clamped to 0 at or
    below the local bound.  Monotone nondecreasing, reaching 1 bit at the
    Tsirelson point.  Super-quantum values are rejected.
    """
    if chsh_value < 0.0 or chsh_value > TSIRELSON_BOUND + 1e-9:
        raise OutOfRange(f"CHSH value {chsh_value} outside [0, 2*sqrt(2)]")
    if chsh_value <= 2.0:
        return 0.0
    s2 = min(chsh_value, TSIRELSON_BOUND) ** 2
    # (2*sqrt(2))**2 overshoots 8 by one ulp; clamp the radicand
    return 1.0 - math.log2(1.0 + math.sqrt(max(0.0, 2.0 - s2 / 4.0)))


@dataclass(frozen=True)
class ExpansionStage:
    """One Bell-test block: alphabets per party, round count, and bit totals.

    ``input_bits_consumed`` is derived: rounds * (log2 of each party's input
    alphabet, summed).  ``certified_bits_produced`` is whatever the stage's
    certification argument supports; :func:`chsh_certified_stage` fills it
    from the CHSH bound.
    """

    input_alphabet: tuple[int, int]
    output_alphabet: tuple[int, int]
    rounds: int
    chsh_value: float
    certified_bits_produced: float
    input_bits_consumed: float = field(init=False)

    def __post_init__(self):
        ax, ay = self.input_alphabet
        if ax < 1 or ay < 1 or self.rounds < 0:
            raise OutOfRange("alphabets must be >= 1 and rounds >= 0")
        if self.certified_bits_produced < 0.0:
            raise OutOfRange("certified bits cannot be negative")
        consumed = self.rounds * (math.log2(ax) + math.log2(ay))
        object.__setattr__(self, "input_bits_consumed", consumed)


def chsh_certified_stage(
    rounds: int,
    chsh_value: float,
    input_alphabet: tuple[int, int] = (2, 2),
    output_alphabet: tuple[int, int] = (2, 2),
) -> ExpansionStage:
    """Stage whose certified output is rounds * minentropy_bound(S)."""
    return ExpansionStage(
        input_alphabet=input_alphabet,
        output_alphabet=output_alphabet,
        rounds=rounds,
        chsh_value=chsh_value,
        certified_bits_produced=rounds * minentropy_bound(chsh_value),
    )


@dataclass
class AccountingReport:
    stage: ExpansionStage
    net_bits: float
    expanding: bool


def expansion_accounting(stage: ExpansionStage) -> AccountingReport:
    """Net gain of a single stage: certified output minus input consumed."""
    net = stage.certified_bits_produced - stage.input_bits_consumed
    return AccountingReport(stage=stage, net_bits=net, expanding=net > 0.0)


@dataclass
class StageLedgerEntry:
    index: int  # 1-based
    consumed: float
    certified: float
    pool_before: float
    pool_after: float


@dataclass
class ChainReport:
    seed_bits: float
    entries: list[StageLedgerEntry]
    total_in: float
    total_out: float
    factor: float


def serial_composition(
    stages: Sequence[ExpansionStage], seed_bits: float
) -> ChainReport:
    """Pure bit-counting ledger for stages run in series.

    Each stage draws its input bits from the pool (initial seed plus all
    certified output so far); a stage whose demand exceeds the pool raises
    SeedStarvation with its 1-based index.  The multiplication factor is
    total certified output over the initial seed.
    """
    if not stages:
        raise OutOfRange("composition needs at least one stage")
    if seed_bits < 0.0:
        raise OutOfRange("seed bits cannot be negative")
    pool = float(seed_bits)
    entries: list[StageLedgerEntry] = []
    total_in = 0.0
    total_out = 0.0
    for k, stage in enumerate(stages, start=1):
        need = stage.input_bits_consumed
        if need > pool + 1e-12:
            raise SeedStarvation(k, needed=need, available=pool)
        before = pool
        pool = pool - need + stage.certified_bits_produced
        entries.append(
            StageLedgerEntry(
                index=k,
                consumed=need,
                certified=stage.certified_bits_produced,
                pool_before=before,
                pool_after=pool,
            )
        )
        total_in += need
        total_out += stage.certified_bits_produced
    if seed_bits > 0.0:
        factor = total_out / seed_bits
    else:
        factor = math.inf if total_out > 0.0 else 0.0
    return ChainReport(
        seed_bits=float(seed_bits),
        entries=entries,
        total_in=total_in,
        total_out=total_out,
        factor=factor,
    )


@dataclass
class QrngRoundsResult:
    """Raw material from simulated Bell rounds.

    ``bitstream`` interleaves Alice's and Bob's outcome bits round by round
    (a_0, b_0, a_1, b_1, ...).
    """

    x_inputs: np.ndarray
    y_inputs: np.ndarray
    alice_bits: np.ndarray
    bob_bits: np.ndarray
    chsh: float
    chsh_stderr: float
    rounds: int

    @property
    def bitstream(self) -> np.ndarray:
        out = np.empty(2 * self.rounds, dtype=np.uint8)
        out[0::2] = self.alice_bits
        out[1::2] = self.bob_bits
        return out


def simulate_qrng_rounds(
    settings: MeasurementSettings,
    state: TwoQubitState,
    rounds: int,
    seed: int,
) -> QrngRoundsResult:
    """Sample Bell-test rounds with uniform inputs from the quantum behavior.

    Outcomes per round follow p(a,b|x,y); the empirical CHSH combines the
    four per-pair correlator estimates, with the standard error propagated
    from per-pair batch means.  Identical seeds give identical bitstreams.
    """
    if rounds < 1:
        raise OutOfRange("need at least one round")
    sc = settings.scenario
    if sc.n_x != 2 or sc.n_y != 2:
        raise OutOfRange("CHSH rounds need two settings per party")
    behavior = quantum_behavior(state, settings)
    # Per input pair: cumulative distribution over the 4 outcome pairs.
    cdf = behavior.p.reshape(sc.n_x, sc.n_y, 4).cumsum(axis=2)

    sizes = chunk_sizes(rounds)
    rngs = chunk_generators(seed, len(sizes))

    def run(rng, n):
        x = rng.integers(0, sc.n_x, size=n)
        y = rng.integers(0, sc.n_y, size=n)
        u = rng.random(n)
        flat = np.empty(n, dtype=np.int64)
        for xi in range(sc.n_x):
            for yi in range(sc.n_y):
                mask = (x == xi) & (y == yi)
                flat[mask] = np.searchsorted(cdf[xi, yi], u[mask], side="right")
        np.clip(flat, 0, 3, out=flat)
        return x, y, flat >> 1, flat & 1

    parts = map_chunks(run, [(rng, n) for rng, n in zip(rngs, sizes)])
    x = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    a = np.concatenate([p[2] for p in parts]).astype(np.uint8)
    b = np.concatenate([p[3] for p in parts]).astype(np.uint8)

    signs = OUTCOME_SIGNS[a.astype(np.int64)] * OUTCOME_SIGNS[b.astype(np.int64)]
    chsh = 0.0
    variance = 0.0
    pair_sign = np.array([[1.0, 1.0], [1.0, -1.0]])
    for xi in range(2):
        for yi in range(2):
            mask = (x == xi) & (y == yi)
            cell = signs[mask]
            if cell.size == 0:
                continue
            chsh += pair_sign[xi, yi] * cell.mean()
            variance += batch_means_stderr(cell) ** 2
    return QrngRoundsResult(
        x_inputs=x,
        y_inputs=y,
        alice_bits=a,
        bob_bits=b,
        chsh=float(chsh),
        chsh_stderr=float(math.sqrt(variance)),
        rounds=rounds,
    )
