"""Pydantic request/response models for the HTTP service.

Field names follow the wire formats used on disk (nX, localBound, ...), so
payloads round-trip unchanged through the serialization helpers.
"""
from __future__ import annotations

from pydantic import BaseModel, Field


class ScenarioModel(BaseModel):
    nX: int = Field(ge=1)
    nY: int = Field(ge=1)
    nA: int = Field(ge=2)
    nB: int = Field(ge=2)


class BehaviorModel(BaseModel):
    scenario: ScenarioModel
    p: list[list[list[list[float]]]]


class ExpressionModel(BaseModel):
    scenario: ScenarioModel
    coeffs: list[list[list[list[float]]]]
    localBound: float | None = None
    algebraicBound: float | None = None


class SettingsModel(BaseModel):
    alice: list[list[float]]
    bob: list[list[float]]


class HealthResponse(BaseModel):
    status: str
    version: str


class StateModel(BaseModel):
    rho: list[list[list[float]]]  # 4x4 of [re, im] pairs


class ChshRequest(BaseModel):
    visibility: float = Field(default=1.0, ge=0.0, le=1.0)
    settings: SettingsModel | None = None
    state: StateModel | None = None  # overrides visibility when given


class ChshResponse(BaseModel):
    visibility: float | None
    chsh: float
    verdict: str  # "local" or "nonlocal"
    localBound: float
    violationThreshold: float


class MembershipRequest(BaseModel):
    behavior: BehaviorModel
    tolerance: float = Field(default=1e-9, gt=0.0)
    cap: int = Field(default=10**7, ge=1)


class WeightedStrategy(BaseModel):
    fA: list[int]
    fB: list[int]
    weight: float


class MembershipResponse(BaseModel):
    isLocal: bool
    weights: list[WeightedStrategy] | None = None
    witness: ExpressionModel | None = None
    witnessValue: float | None = None


class LocalBoundRequest(BaseModel):
    expression: ExpressionModel
    cap: int = Field(default=10**7, ge=1)


class LocalBoundResponse(BaseModel):
    localBound: float
    algebraicBound: float


class BilocalRequest(BaseModel):
    v1: float = Field(ge=0.0, le=1.0)
    v2: float = Field(ge=0.0, le=1.0)


class BilocalResponse(BaseModel):
    v1: float
    v2: float
    product: float
    i: float
    j: float
    sBiloc: float
    bilocalBound: float
    chsh: float
    violatesBilocal: bool
    violatesCHSH: bool


class BilocalSweepRequest(BaseModel):
    gridPoints: int = Field(default=21, ge=2)
    v1Values: list[float] | None = None
    v2Values: list[float] | None = None


class SweepRowModel(BaseModel):
    v1: float
    v2: float
    product: float
    sBiloc: float
    chsh: float
    violatesBilocal: bool
    violatesCHSH: bool


class BilocalSweepResponse(BaseModel):
    rows: list[SweepRowModel]


class DeficitRequest(BaseModel):
    n: int = Field(ge=1)
    m: int = Field(ge=1)


class DeficitResponse(BaseModel):
    nChoices: int
    mChoices: int
    bits: float


class DetectionSimRequest(BaseModel):
    samples: int = Field(default=10**6, ge=1)
    seed: int = Field(default=0, ge=0)
    settings: SettingsModel | None = None


class DetectionStats(BaseModel):
    detectionRate: float
    stderr: float


class DetectionSimResponse(BaseModel):
    behavior: BehaviorModel
    stats: DetectionStats
    correlators: list[list[float]]
    correlatorStderr: list[list[float]]
    samplesPerPair: int


class MdSimRequest(BaseModel):
    samples: int = Field(default=10**6, ge=1)
    seed: int = Field(default=0, ge=0)
    aliceDirections: list[list[float]] | None = None
    bobDirections: list[list[float]] | None = None
    entropyGridPoints: int = Field(default=4096, ge=16)


class MdStats(BaseModel):
    deficitBits: float
    entropyGridPoints: int
    chsh: float | None = None
    chshStderr: float | None = None


class MdSimResponse(BaseModel):
    behavior: BehaviorModel
    stats: MdStats
    correlators: list[list[float]]
    correlatorStderr: list[list[float]]
    samplesPerInput: int


class CovariantModelPayload(BaseModel):
    scenario: ScenarioModel
    prior: list[float]
    aliceFirst: list[list[int]]
    bobSecond: list[list[list[int]]]
    bobFirst: list[list[int]]
    aliceSecond: list[list[list[int]]]


class CovarianceCheckRequest(BaseModel):
    model: CovariantModelPayload


class ViolationModel(BaseModel):
    x: int
    y: int
    lam: int
    party: str
    firstFrameOutcome: int
    secondFrameOutcome: int


class CovarianceCheckResponse(BaseModel):
    covariant: bool
    violations: list[ViolationModel]


class ForcesLocalityRequest(BaseModel):
    scenario: ScenarioModel = ScenarioModel(nX=2, nY=2, nA=2, nB=2)
    lambdaCount: int = Field(default=2, ge=1)
    trials: int = Field(default=1000, ge=0)
    seed: int = Field(default=0, ge=0)
    exhaustive: bool | None = None


class ForcesLocalityResponse(BaseModel):
    exhaustive: bool
    modelsChecked: int
    localityFailures: int
    chshFailures: int
    maxChsh: float | None


class StageModel(BaseModel):
    inputAlphabet: tuple[int, int]
    outputAlphabet: tuple[int, int]
    rounds: int = Field(ge=0)
    chshValue: float
    certifiedBitsProduced: float = Field(ge=0.0)


class LedgerRequest(BaseModel):
    stages: list[StageModel]
    seedBits: float = Field(ge=0.0)


class LedgerEntryModel(BaseModel):
    index: int
    consumed: float
    certified: float
    poolBefore: float
    poolAfter: float


class LedgerResponse(BaseModel):
    stages: list[LedgerEntryModel]
    seedBits: float
    totalIn: float
    totalOut: float
    factor: float


class QrngSimRequest(BaseModel):
    rounds: int = Field(default=10**5, ge=1)
    seed: int = Field(default=0, ge=0)
    visibility: float = Field(default=1.0, ge=0.0, le=1.0)
    includeBitstream: bool = False


class QrngSimResponse(BaseModel):
    rounds: int
    chsh: float
    chshStderr: float
    minentropyPerRound: float
    certifiedBits: float
    bitstream: str | None = None


class ErrorResponse(BaseModel):
    error: str
    detail: str
