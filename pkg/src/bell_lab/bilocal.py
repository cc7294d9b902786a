"""Entanglement swapping with two independent sources and the bilocal test.

Two Werner sources feed the chain Alice - (C1 C2) - Bob: source 1 links
Alice to C1 with visibility v1, source 2 links C2 to Bob with v2.  Charlie
performs a complete Bell-state measurement on C1 C2; his four outcomes are
encoded as two bits (c1, c2) = (c >> 1, c & 1) with the projector order

    c = 0: (|01> - |10>)/sqrt(2)      c = 1: (|00> - |11>)/sqrt(2)
    c = 2: (|00> + |11>)/sqrt(2)      c = 3: (|01> + |10>)/sqrt(2)

chosen so that the product-of-bit-signs variable isolates the z-z channel
and the first-bit sign isolates the x-x channel between Alice and Bob.  The
bilocal quantity is S = sqrt(|I|) + sqrt(|J|) with

    I = (1/4) sum_{x,y} <A_x B0 C_y>,
    J = (1/4) sum_{x,y} (-1)^(x+y) <A_x B1 C_y>,

bounded by 1 for models whose two sources carry independent variables.  For
Werner sources at the standard diagonal settings S = sqrt(2 v1 v2), so the
bound fails exactly when v1*v2 > 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .behavior import Behavior, OUTCOME_SIGNS, Scenario, evaluate, chsh_expression
from .errors import DimensionMismatch, OutOfRange
from .quantum import (
    BlochVector,
    TwoQubitState,
    SINGLET_KET,
    chsh_optimal_settings,
    projector,
    quantum_behavior,
)

#: Bilocal models satisfy sqrt|I| + sqrt|J| <= 1.
BILOCAL_BOUND = 1.0

_SQRT2 = math.sqrt(2.0)

#: Bell kets in the outcome-index order documented above.
BELL_KETS = np.array(
    [
        [0, 1, -1, 0],
        [1, 0, 0, -1],
        [1, 0, 0, 1],
        [0, 1, 1, 0],
    ],
    dtype=complex,
) / _SQRT2

#: Standard two-setting choice for both end parties: (z+x)/sqrt(2), (z-x)/sqrt(2).
DIAGONAL_SETTINGS = (
    BlochVector.unit(1.0, 0.0, 1.0),
    BlochVector.unit(-1.0, 0.0, 1.0),
)


@dataclass(frozen=True)
class SwappingScenario:
    """Source visibilities plus the end parties' measurement directions."""

    v1: float
    v2: float
    alice: tuple[BlochVector, BlochVector]
    bob: tuple[BlochVector, BlochVector]

    def __post_init__(self):
        if not (0.0 <= self.v1 <= 1.0 and 0.0 <= self.v2 <= 1.0):
            raise OutOfRange("visibilities must lie in [0, 1]")

    @classmethod
    def standard(cls, v1: float, v2: float) -> "SwappingScenario":
        return cls(v1=v1, v2=v2, alice=DIAGONAL_SETTINGS, bob=DIAGONAL_SETTINGS)


class TripartiteBehavior:
    """Table p[x, y, a, b, c]: end-party outcomes a, b and Charlie's c in 0..3.

    Charlie's measurement is fixed, so normalization holds per (x, y).
    """

    __slots__ = ("p",)

    def __init__(self, p: np.ndarray):
        p = np.array(p, dtype=np.float64)
        if p.ndim != 5 or p.shape[2:] != (2, 2, 4):
            raise DimensionMismatch(f"expected shape (n_x, n_y, 2, 2, 4), got {p.shape}")
        if p.min() < -1e-12:
            raise ValueError(f"negative probability {p.min()}")
        np.clip(p, 0.0, None, out=p)
        sums = p.sum(axis=(2, 3, 4))
        if np.abs(sums - 1.0).max() > 1e-12:
            raise ValueError("normalization per input pair is off")
        p.setflags(write=False)
        self.p = p

    @property
    def n_x(self) -> int:
        return self.p.shape[0]

    @property
    def n_y(self) -> int:
        return self.p.shape[1]

    def charlie_marginal(self, x: int, y: int) -> np.ndarray:
        return self.p[x, y].sum(axis=(0, 1))

    def conditioned_on_charlie(self, x_outcome: int) -> Behavior:
        """A-B behavior given Charlie's outcome (no-signaling per outcome)."""
        pc = self.p[:, :, :, :, x_outcome]
        totals = pc.sum(axis=(2, 3), keepdims=True)
        return Behavior(Scenario(self.n_x, self.n_y, 2, 2), pc / totals)


def _pair_density(v: float) -> np.ndarray:
    singlet = np.outer(SINGLET_KET, SINGLET_KET.conj())
    return v * singlet + (1.0 - v) * np.eye(4) / 4.0


def swapping_behavior(scenario: SwappingScenario) -> TripartiteBehavior:
    """Born-rule table for the full four-qubit chain (ordered A, C1, C2, B).

    The joint state is the tensor product of the two Werner pairs; outcome
    probabilities are Tr[rho (Pi_a^x  Pi_c^BSM  Pi_b^y)] computed on the
    16-dimensional density matrix.
    """
    rho = np.kron(_pair_density(scenario.v1), _pair_density(scenario.v2))
    proj_a = np.stack([[projector(d, a) for a in range(2)] for d in scenario.alice])
    proj_b = np.stack([[projector(d, b) for b in range(2)] for d in scenario.bob])
    proj_c = np.stack([np.outer(k, k.conj()) for k in BELL_KETS])

    # rho as an 8-index tensor: ket (i1..i4), bra (j1..j4)
    rho_t = rho.reshape(2, 2, 2, 2, 2, 2, 2, 2)
    proj_c_t = proj_c.reshape(4, 2, 2, 2, 2)  # (c, row C1, row C2, col C1, col C2)
    p = np.einsum(
        "iklmjnop,xaji,cnokl,ybpm->xyabc",
        rho_t,
        proj_a,
        proj_c_t,
        proj_b,
    ).real
    return TripartiteBehavior(p)


@dataclass(frozen=True)
class BilocalValue:
    i_term: float
    j_term: float
    value: float
    bound: float = BILOCAL_BOUND

    @property
    def violates(self) -> bool:
        return self.value > self.bound


def bilocal_value(behavior: TripartiteBehavior) -> BilocalValue:
    """S = sqrt|I| + sqrt|J| from the tripartite table (two settings per end)."""
    if behavior.n_x != 2 or behavior.n_y != 2:
        raise DimensionMismatch("bilocal test needs two settings per end party")
    c_bits = np.array([(c >> 1, c & 1) for c in range(4)])
    b0 = (-1.0) ** (c_bits[:, 0] + c_bits[:, 1])  # product of bit signs
    b1 = (-1.0) ** c_bits[:, 0]  # first-bit sign
    sa = OUTCOME_SIGNS
    term_xy = np.einsum("xyabc,a,b->xyc", behavior.p, sa, sa)
    corr0 = term_xy @ b0  # <A_x B0 C_y>
    corr1 = term_xy @ b1
    parity = np.array([[1.0, -1.0], [-1.0, 1.0]])
    i_term = corr0.sum() / 4.0
    j_term = (parity * corr1).sum() / 4.0
    return BilocalValue(
        i_term=float(i_term),
        j_term=float(j_term),
        value=float(math.sqrt(abs(i_term)) + math.sqrt(abs(j_term))),
    )


def conditioned_ab_state(v1: float, v2: float, outcome: int = 0) -> TwoQubitState:
    """Post-measurement A-B state given Charlie's outcome.

    For outcome 0 (the singlet projector) this is exactly the Werner state of
    visibility v1*v2; other outcomes are the same state up to local Pauli
    frames.
    """
    rho = np.kron(_pair_density(v1), _pair_density(v2))
    k = BELL_KETS[outcome]
    P = np.kron(np.kron(np.eye(2), np.outer(k, k.conj())), np.eye(2))
    post = P @ rho @ P.conj().T
    prob = post.trace().real
    t = (post / prob).reshape((2,) * 8)
    t = np.trace(t, axis1=2, axis2=6)  # trace out C2
    t = np.trace(t, axis1=1, axis2=4)  # trace out C1
    return TwoQubitState(t.reshape(4, 4))


@dataclass
class SweepRow:
    v1: float
    v2: float
    product: float
    s_biloc: float
    chsh: float
    violates_bilocal: bool
    violates_chsh: bool


def bilocal_threshold_sweep(
    v1_grid: Sequence[float] | Iterable[float],
    v2_grid: Sequence[float] | Iterable[float] | None = None,
) -> list[SweepRow]:
    """Grid sweep comparing the bilocal test against CHSH on the swapped pair.

    For each (v1, v2): S from the tripartite behavior at the standard
    settings, and the CHSH value of the Charlie-conditioned A-B state at the
    CHSH-optimal settings.  The bilocal-violation region (product > 1/2)
    strictly contains the CHSH-violation region (product > 1/sqrt(2)).
    """
    v1_values = [float(v) for v in v1_grid]
    v2_values = v1_values if v2_grid is None else [float(v) for v in v2_grid]
    chsh_settings = chsh_optimal_settings()
    expr = chsh_expression()
    rows = []
    for v1 in v1_values:
        for v2 in v2_values:
            tri = swapping_behavior(SwappingScenario.standard(v1, v2))
            s = bilocal_value(tri).value
            conditioned = conditioned_ab_state(v1, v2, outcome=0)
            chsh = evaluate(expr, quantum_behavior(conditioned, chsh_settings))
            rows.append(
                SweepRow(
                    v1=v1,
                    v2=v2,
                    product=v1 * v2,
                    s_biloc=s,
                    chsh=chsh,
                    violates_bilocal=s > BILOCAL_BOUND,
                    violates_chsh=chsh > 2.0,
                )
            )
    return rows


def bilocal_threshold(precision: float = 1e-9) -> float:
    """Visibility product where S crosses 1, located by bisection at v1 = 1."""
    def s_at(product: float) -> float:
        tri = swapping_behavior(SwappingScenario.standard(1.0, product))
        return bilocal_value(tri).value

    lo, hi = 0.0, 1.0
    while hi - lo > precision:
        mid = (lo + hi) / 2.0
        if s_at(mid) > BILOCAL_BOUND:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0
