"""JSON wire formats shared by the service, the CLI, and files on disk.

Tables nest row-major in the documented index order: behaviors and
expressions as [x][y][a][b], covariant-model response tables as [x][lam],
[y][lam], or [x][y][lam], measurement settings as lists of 3-vectors, and
two-qubit states as 4x4 nested [re, im] pairs.  Floats pass through Python's
shortest round-trip repr, which preserves every bit of the double.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np

from .behavior import Behavior, BellExpression, Scenario
from .covariance import CovariantModel
from .quantum import BlochVector, MeasurementSettings, TwoQubitState
from .randomness import ExpansionStage


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "nX": scenario.n_x,
        "nY": scenario.n_y,
        "nA": scenario.n_a,
        "nB": scenario.n_b,
    }


def scenario_from_dict(data: dict) -> Scenario:
    return Scenario(
        n_x=int(data["nX"]),
        n_y=int(data["nY"]),
        n_a=int(data["nA"]),
        n_b=int(data["nB"]),
    )


def behavior_to_dict(behavior: Behavior) -> dict:
    return {
        "scenario": scenario_to_dict(behavior.scenario),
        "p": behavior.p.tolist(),
    }


def behavior_from_dict(data: dict) -> Behavior:
    return Behavior(scenario_from_dict(data["scenario"]), np.array(data["p"]))


def expression_to_dict(expr: BellExpression) -> dict:
    out: dict[str, Any] = {
        "scenario": scenario_to_dict(expr.scenario),
        "coeffs": expr.coeffs.tolist(),
    }
    if expr.local_bound is not None:
        out["localBound"] = expr.local_bound
    if expr.algebraic_bound is not None:
        out["algebraicBound"] = expr.algebraic_bound
    return out


def expression_from_dict(data: dict) -> BellExpression:
    return BellExpression(
        scenario_from_dict(data["scenario"]),
        np.array(data["coeffs"]),
        local_bound=data.get("localBound"),
        algebraic_bound=data.get("algebraicBound"),
    )


def direction_to_list(direction: BlochVector) -> list[float]:
    return [direction.vx, direction.vy, direction.vz]


def direction_from_list(values) -> BlochVector:
    vx, vy, vz = (float(v) for v in values)
    return BlochVector(vx, vy, vz)


def settings_to_dict(settings: MeasurementSettings) -> dict:
    return {
        "alice": [direction_to_list(d) for d in settings.alice],
        "bob": [direction_to_list(d) for d in settings.bob],
    }


def settings_from_dict(data: dict) -> MeasurementSettings:
    return MeasurementSettings(
        alice=tuple(direction_from_list(v) for v in data["alice"]),
        bob=tuple(direction_from_list(v) for v in data["bob"]),
    )


def state_to_dict(state: TwoQubitState) -> dict:
    pairs = [[[z.real, z.imag] for z in row] for row in state.rho.tolist()]
    return {"rho": pairs}


def state_from_dict(data: dict) -> TwoQubitState:
    rho = np.array(
        [[complex(re, im) for re, im in row] for row in data["rho"]], dtype=complex
    )
    return TwoQubitState(rho)


def covariant_model_to_dict(model: CovariantModel) -> dict:
    return {
        "scenario": scenario_to_dict(model.scenario),
        "lambdaCount": model.lambda_count,
        "prior": model.prior.tolist(),
        "aliceFirst": model.alice_first.tolist(),
        "bobSecond": model.bob_second.tolist(),
        "bobFirst": model.bob_first.tolist(),
        "aliceSecond": model.alice_second.tolist(),
    }


def covariant_model_from_dict(data: dict) -> CovariantModel:
    return CovariantModel(
        scenario=scenario_from_dict(data["scenario"]),
        prior=np.array(data["prior"], dtype=np.float64),
        alice_first=np.array(data["aliceFirst"]),
        bob_second=np.array(data["bobSecond"]),
        bob_first=np.array(data["bobFirst"]),
        alice_second=np.array(data["aliceSecond"]),
    )


def stage_to_dict(stage: ExpansionStage) -> dict:
    return {
        "inputAlphabet": list(stage.input_alphabet),
        "outputAlphabet": list(stage.output_alphabet),
        "rounds": stage.rounds,
        "chshValue": stage.chsh_value,
        "inputBitsConsumed": stage.input_bits_consumed,
        "certifiedBitsProduced": stage.certified_bits_produced,
    }


def stage_from_dict(data: dict) -> ExpansionStage:
    return ExpansionStage(
        input_alphabet=tuple(int(v) for v in data["inputAlphabet"]),
        output_alphabet=tuple(int(v) for v in data["outputAlphabet"]),
        rounds=int(data["rounds"]),
        chsh_value=float(data["chshValue"]),
        certified_bits_produced=float(data["certifiedBitsProduced"]),
    )


def dumps(data: Any, indent: int | None = None) -> str:
    return json.dumps(data, indent=indent)


def loads(text: str) -> Any:
    return json.loads(text)
