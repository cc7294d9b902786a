"""Two-qubit states and projective measurements producing behaviors.

Measurement directions are Bloch vectors; the two outcomes of a measurement
along n are the projectors (I +/- n.sigma)/2, with outcome index 0 mapped to
the +1 eigenvalue per the package-wide sign convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .behavior import Behavior, Scenario, chsh_expression, evaluate
from .errors import OutOfRange

#: Hermiticity / trace tolerance for density matrices.
STATE_TOL = 1e-12
#: Eigenvalues of a state may undershoot zero by at most this much.
EIGENVALUE_TOL = 1e-10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULIS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])

#: Singlet ket (|01> - |10>)/sqrt(2) in the computational basis.
SINGLET_KET = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class BlochVector:
    """Unit vector on the Bloch sphere (norm checked to 1e-12)."""

    vx: float
    vy: float
    vz: float

    def __post_init__(self):
        norm = math.sqrt(self.vx**2 + self.vy**2 + self.vz**2)
        if abs(norm - 1.0) > STATE_TOL:
            raise ValueError(f"direction norm {norm} is not 1")

    @classmethod
    def unit(cls, vx: float, vy: float, vz: float) -> "BlochVector":
        """Normalize an arbitrary nonzero 3-vector."""
        norm = math.sqrt(vx**2 + vy**2 + vz**2)
        if norm == 0.0:
            raise ValueError("zero vector has no direction")
        return cls(vx / norm, vy / norm, vz / norm)

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vz])

    def dot(self, other: "BlochVector") -> float:
        return self.vx * other.vx + self.vy * other.vy + self.vz * other.vz


Z_DIR = BlochVector(0.0, 0.0, 1.0)
X_DIR = BlochVector(1.0, 0.0, 0.0)


class TwoQubitState:
    """4x4 density matrix, validated Hermitian, unit trace, PSD."""

    __slots__ = ("rho",)

    def __init__(self, rho: np.ndarray):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError("density matrix must be 4x4")
        if np.abs(rho - rho.conj().T).max() > STATE_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(rho.trace() - 1.0) > STATE_TOL:
            raise ValueError("trace is not 1")
        eigenvalues = np.linalg.eigvalsh(rho)
        if eigenvalues.min() < -EIGENVALUE_TOL:
            raise ValueError(f"negative eigenvalue {eigenvalues.min()}")
        rho.setflags(write=False)
        self.rho = rho

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)


@dataclass(frozen=True)
class MeasurementSettings:
    """Measurement directions per input: alice defines n_x, bob defines n_y."""

    alice: tuple[BlochVector, ...]
    bob: tuple[BlochVector, ...]

    def __post_init__(self):
        if not self.alice or not self.bob:
            raise ValueError("each party needs at least one direction")

    @property
    def scenario(self) -> Scenario:
        return Scenario(len(self.alice), len(self.bob), 2, 2)


def projector(direction: BlochVector, outcome: int) -> np.ndarray:
    """Qubit projector (I + s n.sigma)/2 with s = +1 for outcome 0, -1 for 1."""
    sign = 1.0 if outcome == 0 else -1.0
    n_sigma = np.tensordot(direction.as_array(), _PAULIS, axes=1)
    return (np.eye(2, dtype=complex) + sign * n_sigma) / 2.0


def singlet_state() -> TwoQubitState:
    return TwoQubitState(np.outer(SINGLET_KET, SINGLET_KET.conj()))


def werner_state(v: float) -> TwoQubitState:
    """Singlet with visibility v mixed into white noise: v P_singlet + (1-v) I/4."""
    if not 0.0 <= v <= 1.0:
        raise OutOfRange(f"visibility {v} outside [0, 1]")
    rho = v * np.outer(SINGLET_KET, SINGLET_KET.conj()) + (1.0 - v) * np.eye(4) / 4.0
    return TwoQubitState(rho)


def maximally_mixed_state() -> TwoQubitState:
    return TwoQubitState(np.eye(4, dtype=complex) / 4.0)


def quantum_behavior(state: TwoQubitState, settings: MeasurementSettings) -> Behavior:
    """Born-rule behavior p(a,b|x,y) = Tr[rho (Pi_a^x tensor Pi_b^y)]."""
    scenario = settings.scenario
    proj_a = np.stack(
        [[projector(d, a) for a in range(2)] for d in settings.alice]
    )  # (n_x, 2, 2, 2)
    proj_b = np.stack([[projector(d, b) for b in range(2)] for d in settings.bob])
    # Tr[rho (P tensor Q)] = sum rho[(ik),(jl)] P[j,i] Q[l,k]
    rho_t = state.rho.reshape(2, 2, 2, 2)  # indices i, k, j, l
    p = np.einsum("ikjl,xaji,yblk->xyab", rho_t, proj_a, proj_b).real
    return Behavior(scenario, p)


def chsh_optimal_settings() -> MeasurementSettings:
    """Settings maximizing CHSH for the singlet under the fixed conventions.

    Alice measures z and x.  Bob measures -(z+x)/sqrt(2) and (x-z)/sqrt(2);
    with the singlet's E(a,b) = -a.b these give all four correlators the
    signs that push E(0,0)+E(0,1)+E(1,0)-E(1,1) to +2*sqrt(2).
    """
    s = 1.0 / math.sqrt(2.0)
    return MeasurementSettings(
        alice=(Z_DIR, X_DIR),
        bob=(BlochVector.unit(-s, 0.0, -s), BlochVector.unit(s, 0.0, -s)),
    )


def chsh_value(state: TwoQubitState, settings: MeasurementSettings | None = None) -> float:
    """CHSH functional of the state's behavior (optimal settings by default)."""
    if settings is None:
        settings = chsh_optimal_settings()
    return evaluate(chsh_expression(), quantum_behavior(state, settings))


def chsh_violation_threshold(precision: float = 1e-9) -> float:
    """Least visibility at which the Werner state violates CHSH.

    Bisects the visibility against CHSH value 2 at the optimal settings;
    the interval is shrunk below ``precision``.
    """
    settings = chsh_optimal_settings()
    expr = chsh_expression()

    def value(v: float) -> float:
        return evaluate(expr, quantum_behavior(werner_state(v), settings))

    lo, hi = 0.0, 1.0
    while hi - lo > precision:
        mid = (lo + hi) / 2.0
        if value(mid) > 2.0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0
