"""FastAPI service exposing every engine as a stateless endpoint.

All computation is deterministic given the request (seeds included), so the
service can run behind any number of workers.  Errors map to a small tag
vocabulary that clients translate into exit codes: ``usage`` (bad arguments),
``cap_exceeded`` (enumeration guard), ``numerical_failure`` (solver could not
decide).
"""
from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..behavior import (
    is_local,
    local_bound as compute_local_bound,
    algebraic_bound as compute_algebraic_bound,
    chsh_expression,
    evaluate,
)
from ..bilocal import (
    BILOCAL_BOUND,
    SwappingScenario,
    bilocal_threshold_sweep,
    bilocal_value,
    conditioned_ab_state,
    swapping_behavior,
)
from ..covariance import check_covariance, covariance_forces_locality
from ..errors import BellLabError, CapExceeded, NumericalFailure
from ..freewill import (
    MeasurementDependentModel,
    deficit,
    entropy_deficit,
    simulate_detection_model,
    simulate_measurement_dependent,
)
from ..quantum import (
    chsh_optimal_settings,
    chsh_violation_threshold,
    quantum_behavior,
    werner_state,
)
from ..randomness import (
    ExpansionStage,
    minentropy_bound,
    serial_composition,
    simulate_qrng_rounds,
)
from .. import serialization as ser
from . import schemas

app = FastAPI(
    title="bell-lab",
    version=__version__,
    description="Bell nonlocality computations as a service",
)


@app.exception_handler(BellLabError)
async def bell_lab_error_handler(request: Request, exc: BellLabError):
    if isinstance(exc, CapExceeded):
        return JSONResponse(status_code=400, content={"error": "cap_exceeded", "detail": str(exc)})
    if isinstance(exc, NumericalFailure):
        return JSONResponse(
            status_code=500, content={"error": "numerical_failure", "detail": str(exc)}
        )
    return JSONResponse(status_code=400, content={"error": "usage", "detail": str(exc)})


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={"error": "usage", "detail": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


def _settings_from(model: schemas.SettingsModel | None):
    if model is None:
        return chsh_optimal_settings()
    return ser.settings_from_dict(model.model_dump())


@app.post("/chsh", response_model=schemas.ChshResponse)
def chsh_endpoint(req: schemas.ChshRequest) -> schemas.ChshResponse:
    settings = _settings_from(req.settings)
    if req.state is not None:
        state = ser.state_from_dict(req.state.model_dump())
        visibility = None
    else:
        state = werner_state(req.visibility)
        visibility = req.visibility
    behavior = quantum_behavior(state, settings)
    value = evaluate(chsh_expression(), behavior)
    verdict = "local" if is_local(behavior).is_local else "nonlocal"
    return schemas.ChshResponse(
        visibility=visibility,
        chsh=value,
        verdict=verdict,
        localBound=2.0,
        violationThreshold=chsh_violation_threshold(),
    )


@app.post("/membership", response_model=schemas.MembershipResponse)
def membership_endpoint(req: schemas.MembershipRequest) -> schemas.MembershipResponse:
    behavior = ser.behavior_from_dict(req.behavior.model_dump())
    result = is_local(behavior, tol=req.tolerance, cap=req.cap)
    if result.is_local:
        weights = [
            schemas.WeightedStrategy(fA=list(s.f_a), fB=list(s.f_b), weight=w)
            for s, w in sorted(result.weights.items(), key=lambda kv: (kv[0].f_a, kv[0].f_b))
        ]
        return schemas.MembershipResponse(isLocal=True, weights=weights)
    witness = ser.expression_to_dict(result.witness)
    return schemas.MembershipResponse(
        isLocal=False,
        witness=schemas.ExpressionModel(**witness),
        witnessValue=result.witness_value,
    )


@app.post("/local-bound", response_model=schemas.LocalBoundResponse)
def local_bound_endpoint(req: schemas.LocalBoundRequest) -> schemas.LocalBoundResponse:
    expr = ser.expression_from_dict(req.expression.model_dump(exclude_none=True))
    return schemas.LocalBoundResponse(
        localBound=compute_local_bound(expr, cap=req.cap),
        algebraicBound=compute_algebraic_bound(expr),
    )


def _bilocal_point(v1: float, v2: float) -> schemas.BilocalResponse:
    tri = swapping_behavior(SwappingScenario.standard(v1, v2))
    res = bilocal_value(tri)
    conditioned = conditioned_ab_state(v1, v2, outcome=0)
    chsh = evaluate(chsh_expression(), quantum_behavior(conditioned, chsh_optimal_settings()))
    return schemas.BilocalResponse(
        v1=v1,
        v2=v2,
        product=v1 * v2,
        i=res.i_term,
        j=res.j_term,
        sBiloc=res.value,
        bilocalBound=BILOCAL_BOUND,
        chsh=chsh,
        violatesBilocal=res.value > BILOCAL_BOUND,
        violatesCHSH=chsh > 2.0,
    )


@app.post("/bilocal/value", response_model=schemas.BilocalResponse)
def bilocal_endpoint(req: schemas.BilocalRequest) -> schemas.BilocalResponse:
    return _bilocal_point(req.v1, req.v2)


@app.post("/bilocal/sweep", response_model=schemas.BilocalSweepResponse)
def bilocal_sweep_endpoint(req: schemas.BilocalSweepRequest) -> schemas.BilocalSweepResponse:
    if req.v1Values is not None:
        v1_grid = req.v1Values
        v2_grid = req.v2Values if req.v2Values is not None else req.v1Values
    else:
        v1_grid = np.linspace(0.0, 1.0, req.gridPoints).tolist()
        v2_grid = v1_grid
    rows = bilocal_threshold_sweep(v1_grid, v2_grid)
    return schemas.BilocalSweepResponse(
        rows=[
            schemas.SweepRowModel(
                v1=r.v1,
                v2=r.v2,
                product=r.product,
                sBiloc=r.s_biloc,
                chsh=r.chsh,
                violatesBilocal=r.violates_bilocal,
                violatesCHSH=r.violates_chsh,
            )
            for r in rows
        ]
    )


@app.post("/freewill/deficit", response_model=schemas.DeficitResponse)
def deficit_endpoint(req: schemas.DeficitRequest) -> schemas.DeficitResponse:
    d = deficit(req.n, req.m)
    return schemas.DeficitResponse(nChoices=d.n_choices, mChoices=d.m_choices, bits=d.bits)


@app.post("/freewill/detection", response_model=schemas.DetectionSimResponse)
def detection_endpoint(req: schemas.DetectionSimRequest) -> schemas.DetectionSimResponse:
    settings = _settings_from(req.settings)
    res = simulate_detection_model(settings, samples=req.samples, seed=req.seed)
    return schemas.DetectionSimResponse(
        behavior=schemas.BehaviorModel(**ser.behavior_to_dict(res.behavior)),
        stats=schemas.DetectionStats(
            detectionRate=res.detection_rate, stderr=res.detection_rate_stderr
        ),
        correlators=res.correlators.tolist(),
        correlatorStderr=res.correlator_stderr.tolist(),
        samplesPerPair=res.samples_per_pair,
    )


@app.post("/freewill/simulate", response_model=schemas.MdSimResponse)
def md_sim_endpoint(req: schemas.MdSimRequest) -> schemas.MdSimResponse:
    defaults = chsh_optimal_settings()
    alice = (
        tuple(ser.direction_from_list(v) for v in req.aliceDirections)
        if req.aliceDirections
        else defaults.alice
    )
    bob = (
        tuple(ser.direction_from_list(v) for v in req.bobDirections)
        if req.bobDirections
        else defaults.bob
    )
    model = MeasurementDependentModel(input_set=alice)
    res = simulate_measurement_dependent(model, bob, samples=req.samples, seed=req.seed)
    ent = entropy_deficit(model, grid_points=req.entropyGridPoints)
    chsh = None
    chsh_stderr = None
    if len(alice) == 2 and len(bob) == 2:
        chsh = evaluate(chsh_expression(), res.behavior)
        chsh_stderr = float(math.sqrt(float((res.correlator_stderr**2).sum())))
    return schemas.MdSimResponse(
        behavior=schemas.BehaviorModel(**ser.behavior_to_dict(res.behavior)),
        stats=schemas.MdStats(
            deficitBits=ent.bits,
            entropyGridPoints=ent.grid_points,
            chsh=chsh,
            chshStderr=chsh_stderr,
        ),
        correlators=res.correlators.tolist(),
        correlatorStderr=res.correlator_stderr.tolist(),
        samplesPerInput=res.samples_per_input,
    )


@app.post("/covariance/check", response_model=schemas.CovarianceCheckResponse)
def covariance_check_endpoint(
    req: schemas.CovarianceCheckRequest,
) -> schemas.CovarianceCheckResponse:
    payload = req.model.model_dump()
    payload["lambdaCount"] = len(payload["prior"])
    model = ser.covariant_model_from_dict(payload)
    ok, violations = check_covariance(model)
    return schemas.CovarianceCheckResponse(
        covariant=ok,
        violations=[
            schemas.ViolationModel(
                x=v.x,
                y=v.y,
                lam=v.lam,
                party=v.party,
                firstFrameOutcome=v.first_frame_outcome,
                secondFrameOutcome=v.second_frame_outcome,
            )
            for v in violations
        ],
    )


@app.post("/covariance/forces-locality", response_model=schemas.ForcesLocalityResponse)
def forces_locality_endpoint(
    req: schemas.ForcesLocalityRequest,
) -> schemas.ForcesLocalityResponse:
    scenario = ser.scenario_from_dict(req.scenario.model_dump())
    report = covariance_forces_locality(
        scenario,
        lambda_count=req.lambdaCount,
        trials=req.trials,
        seed=req.seed,
        exhaustive=req.exhaustive,
    )
    return schemas.ForcesLocalityResponse(
        exhaustive=report.exhaustive,
        modelsChecked=report.models_checked,
        localityFailures=report.locality_failures,
        chshFailures=report.chsh_failures,
        maxChsh=report.max_chsh,
    )


@app.post("/expand/ledger", response_model=schemas.LedgerResponse)
def ledger_endpoint(req: schemas.LedgerRequest) -> schemas.LedgerResponse:
    stages = [
        ExpansionStage(
            input_alphabet=s.inputAlphabet,
            output_alphabet=s.outputAlphabet,
            rounds=s.rounds,
            chsh_value=s.chshValue,
            certified_bits_produced=s.certifiedBitsProduced,
        )
        for s in req.stages
    ]
    report = serial_composition(stages, seed_bits=req.seedBits)
    return schemas.LedgerResponse(
        stages=[
            schemas.LedgerEntryModel(
                index=e.index,
                consumed=e.consumed,
                certified=e.certified,
                poolBefore=e.pool_before,
                poolAfter=e.pool_after,
            )
            for e in report.entries
        ],
        seedBits=report.seed_bits,
        totalIn=report.total_in,
        totalOut=report.total_out,
        factor=report.factor,
    )


@app.post("/expand/simulate", response_model=schemas.QrngSimResponse)
def qrng_endpoint(req: schemas.QrngSimRequest) -> schemas.QrngSimResponse:
    res = simulate_qrng_rounds(
        chsh_optimal_settings(),
        werner_state(req.visibility),
        rounds=req.rounds,
        seed=req.seed,
    )
    chsh_point = min(max(res.chsh, 0.0), 2.0 * math.sqrt(2.0))
    per_round = minentropy_bound(chsh_point)
    bitstream = None
    if req.includeBitstream:
        bitstream = "".join("01"[b] for b in res.bitstream)
    return schemas.QrngSimResponse(
        rounds=req.rounds,
        chsh=res.chsh,
        chshStderr=res.chsh_stderr,
        minentropyPerRound=per_round,
        certifiedBits=per_round * req.rounds,
        bitstream=bitstream,
    )
