"""Measurement dependence: choice-deficit accounting and hidden-variable models.

Two simulators share one set of response rules over a hidden unit vector
``lam`` drawn from the sphere:

* detection model: Alice outputs sign(x.lam) but registers only with
  probability |x.lam| (one half on average); Bob always outputs -sign(y.lam).
  Conditioned on Alice registering, the pair statistics are exactly the
  singlet's E(x, y) = -x.y.
* measurement-dependent model: the detection filter is traded for input
  conditioning.  For input x, ``lam`` is drawn with density 2|x.lam| on the
  sphere, outcomes are the same deterministic responses with no postselection,
  and the full singlet behavior is reproduced even though each run is a local
  function of (input, lam).

The lack-of-choice bookkeeping is log2(N) - log2(M) bits when only M of N
nominal inputs are available; the 50% detection filter corresponds to one
bit.  For the continuous conditioned model an entropy-based deficit over a
sphere grid is reported instead of being conflated with the support count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._mc import (
    batch_means_stderr,
    chunk_generators,
    chunk_sizes,
    map_chunks,
    uniform_sphere,
)
from .behavior import (
    Behavior,
    BellExpression,
    OUTCOME_SIGNS,
    Scenario,
    algebraic_bound,
)
from .errors import NumericalFailure, OutOfRange
from .quantum import BlochVector, MeasurementSettings

#: Minimum sample count accepted by the simulators.
MIN_SAMPLES = 10**4


@dataclass(frozen=True)
class FreeWillDeficit:
    """Support-measure deficit: bits = log2(n_choices / m_choices)."""

    n_choices: int
    m_choices: int
    bits: float


def deficit(n: int, m: int) -> FreeWillDeficit:
    """Bits of choice lost when only m of n nominal inputs are available."""
    if not 1 <= m <= n:
        raise OutOfRange(f"need 1 <= m <= n, got n={n}, m={m}")
    return FreeWillDeficit(n, m, math.log2(n) - math.log2(m))


def alice_response(lams: np.ndarray, direction: BlochVector) -> np.ndarray:
    """Outcome indices for a = sign(x.lam): 0 on the +hemisphere, else 1."""
    return (lams @ direction.as_array() < 0.0).astype(np.int64)


def bob_response(lams: np.ndarray, direction: BlochVector) -> np.ndarray:
    """Outcome indices for b = -sign(y.lam): 1 on the +hemisphere, else 0."""
    return (lams @ direction.as_array() > 0.0).astype(np.int64)


@dataclass(frozen=True)
class DetectionModel:
    """Detection-loophole response rules (fixed; kept as a named object).

    ``lam`` is uniform on the sphere, Alice registers with probability
    |x.lam|, and outcomes follow :func:`alice_response` / :func:`bob_response`.
    """

    def detection_probability(self, lams: np.ndarray, direction: BlochVector) -> np.ndarray:
        return np.abs(lams @ direction.as_array())


@dataclass
class DetectionSimResult:
    behavior: Behavior  # conditioned on Alice registering
    detection_rate: float
    detection_rate_stderr: float
    correlators: np.ndarray  # (n_x, n_y) conditional E(x, y)
    correlator_stderr: np.ndarray
    samples_per_pair: int


def simulate_detection_model(
    settings: MeasurementSettings, samples: int, seed: int
) -> DetectionSimResult:
    """Monte Carlo over the detection model, ``samples`` runs per input pair."""
    if samples < MIN_SAMPLES:
        raise OutOfRange(f"samples must be at least {MIN_SAMPLES}")
    sc = settings.scenario
    model = DetectionModel()

    counts = np.zeros((sc.n_x, sc.n_y, 2, 2), dtype=np.int64)
    correlators = np.zeros((sc.n_x, sc.n_y))
    corr_stderr = np.zeros((sc.n_x, sc.n_y))
    detect_values = []

    sizes = chunk_sizes(samples)
    for x, a_dir in enumerate(settings.alice):
        for y, b_dir in enumerate(settings.bob):
            stream = x * sc.n_y + y
            rngs = chunk_generators(seed, len(sizes), stream=stream)

            def run(rng, n, a_dir=a_dir, b_dir=b_dir):
                lams = uniform_sphere(rng, n)
                u = rng.random(n)
                detected = u < model.detection_probability(lams, a_dir)
                a_idx = alice_response(lams[detected], a_dir)
                b_idx = bob_response(lams[detected], b_dir)
                cell = np.zeros((2, 2), dtype=np.int64)
                np.add.at(cell, (a_idx, b_idx), 1)
                products = OUTCOME_SIGNS[a_idx] * OUTCOME_SIGNS[b_idx]
                return detected.astype(np.float64), products, cell

            parts = map_chunks(run, [(rng, n) for rng, n in zip(rngs, sizes)])
            detected_all = np.concatenate([p[0] for p in parts])
            products_all = np.concatenate([p[1] for p in parts])
            counts[x, y] = sum(p[2] for p in parts)
            if products_all.size == 0:
                raise NumericalFailure("no detections; increase samples")
            correlators[x, y] = products_all.mean()
            corr_stderr[x, y] = batch_means_stderr(products_all)
            detect_values.append(detected_all)

    detects = np.concatenate(detect_values)
    p = counts / counts.sum(axis=(2, 3), keepdims=True)
    return DetectionSimResult(
        behavior=Behavior(sc, p),
        detection_rate=float(detects.mean()),
        detection_rate_stderr=batch_means_stderr(detects),
        correlators=correlators,
        correlator_stderr=corr_stderr,
        samples_per_pair=samples,
    )


@dataclass(frozen=True)
class MeasurementDependentModel:
    """Input-conditioned hidden-variable model over a finite input set.

    ``input_set`` holds Alice's N nominal directions.  Given input x the
    hidden vector is drawn with density 2|x.lam| (normalized on the sphere);
    responses are the detection-model rules without any postselection.  The
    optional ``support_deficit`` carries a discrete log2(N/M) count when the
    model arises from a restricted-choice story; the continuous conditioning
    is quantified separately by :func:`entropy_deficit`.
    """

    input_set: tuple[BlochVector, ...]
    support_deficit: FreeWillDeficit | None = None

    def __post_init__(self):
        if not self.input_set:
            raise ValueError("input set must be nonempty")


def conditioned_lambda_sample(
    direction: BlochVector, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw n hidden vectors with density 2|x.lam| by rejection.

    Uniform proposals are accepted with probability |x.lam| (the density
    ratio 2|x.lam| divided by its ceiling 2), so the mean acceptance is 1/2.
    """
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        lams = uniform_sphere(rng, n)
        accept = rng.random(n) < np.abs(lams @ direction.as_array())
        kept = lams[accept]
        take = min(n - filled, kept.shape[0])
        out[filled : filled + take] = kept[:take]
        filled += take
    return out


@dataclass
class MeasurementDependentSimResult:
    behavior: Behavior
    correlators: np.ndarray
    correlator_stderr: np.ndarray
    counts: np.ndarray  # (n_x, n_y) runs per input pair
    samples_per_input: int


def simulate_measurement_dependent(
    model: MeasurementDependentModel,
    bob_settings: tuple[BlochVector, ...] | list[BlochVector],
    samples: int,
    seed: int,
) -> MeasurementDependentSimResult:
    """Run the conditioned model: ``samples`` runs per Alice input.

    Bob's input is drawn uniformly and independently of the hidden vector in
    every run, so each (x, y) cell receives about samples/n_y runs.  The
    returned behavior reproduces singlet statistics E(x, y) = -x.y up to
    Monte Carlo error.
    """
    if samples < MIN_SAMPLES:
        raise OutOfRange(f"samples must be at least {MIN_SAMPLES}")
    bob_dirs = tuple(bob_settings)
    n_x, n_y = len(model.input_set), len(bob_dirs)
    sc = Scenario(n_x, n_y, 2, 2)
    bob_matrix = np.stack([d.as_array() for d in bob_dirs])

    counts = np.zeros((n_x, n_y, 2, 2), dtype=np.int64)
    correlators = np.zeros((n_x, n_y))
    corr_stderr = np.zeros((n_x, n_y))

    sizes = chunk_sizes(samples)
    for x, a_dir in enumerate(model.input_set):
        rngs = chunk_generators(seed, len(sizes), stream=x)

        def run(rng, n, a_dir=a_dir):
            lams = conditioned_lambda_sample(a_dir, n, rng)
            y_idx = rng.integers(0, n_y, size=n)
            a_idx = alice_response(lams, a_dir)
            b_proj = np.einsum("ij,ij->i", lams, bob_matrix[y_idx])
            b_idx = (b_proj > 0.0).astype(np.int64)
            cell = np.zeros((n_y, 2, 2), dtype=np.int64)
            np.add.at(cell, (y_idx, a_idx, b_idx), 1)
            products = OUTCOME_SIGNS[a_idx] * OUTCOME_SIGNS[b_idx]
            return cell, y_idx, products

        parts = map_chunks(run, [(rng, n) for rng, n in zip(rngs, sizes)])
        counts[x] = sum(p[0] for p in parts)
        y_all = np.concatenate([p[1] for p in parts])
        products_all = np.concatenate([p[2] for p in parts])
        for y in range(n_y):
            mask = y_all == y
            cell_products = products_all[mask]
            if cell_products.size == 0:
                raise NumericalFailure("empty input pair; increase samples")
            correlators[x, y] = cell_products.mean()
            corr_stderr[x, y] = batch_means_stderr(cell_products)

    pair_totals = counts.sum(axis=(2, 3), keepdims=True)
    p = counts / pair_totals
    return MeasurementDependentSimResult(
        behavior=Behavior(sc, p),
        correlators=correlators,
        correlator_stderr=corr_stderr,
        counts=pair_totals[:, :, 0, 0],
        samples_per_input=samples,
    )


@dataclass
class PredeterminedInputsResult:
    """Algebraic-maximum witness when the hidden variable fixes the inputs too."""

    value: float
    assignment: dict[tuple[int, int], tuple[int, int]]  # (x, y) -> (a, b)


def predetermined_inputs_value(expr: BellExpression) -> PredeterminedInputsResult:
    """Bell value achievable once lambda selects inputs and outcomes.

    With inputs predetermined, each (x, y) cell can be steered to its
    best outcome pair independently, so the achievable maximum is the
    algebraic bound (bit-identical: the value is summed along the same numpy
    path).  Ties resolve to the first index pair.
    """
    sc = expr.scenario
    assignment: dict[tuple[int, int], tuple[int, int]] = {}
    for x in range(sc.n_x):
        for y in range(sc.n_y):
            flat = int(np.argmax(expr.coeffs[x, y]))
            assignment[(x, y)] = divmod(flat, sc.n_b)
    return PredeterminedInputsResult(value=algebraic_bound(expr), assignment=assignment)


@dataclass
class EntropyDeficitResult:
    bits: float
    grid_points: int


def entropy_deficit(
    model: MeasurementDependentModel, grid_points: int = 4096
) -> EntropyDeficitResult:
    """Worst-case entropy shortfall of p(x|lam) across a sphere grid.

    With a uniform nominal choice over N inputs, Bayes gives
    p(x|lam) proportional to |x.lam|.  The deficit is log2(N) minus the
    minimum Shannon entropy of that conditional over a deterministic
    Fibonacci grid of ``grid_points`` hidden vectors.
    """
    dirs = np.stack([d.as_array() for d in model.input_set])
    n = dirs.shape[0]
    if n == 1:
        return EntropyDeficitResult(bits=0.0, grid_points=grid_points)
    lams = _fibonacci_sphere(grid_points)
    weights = np.abs(lams @ dirs.T)  # (grid, N)
    totals = weights.sum(axis=1, keepdims=True)
    # Grid points orthogonal to every input would give 0/0; the Fibonacci
    # grid never hits that set exactly, but guard anyway.
    totals[totals == 0.0] = 1.0
    p = weights / totals
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0.0, p * np.log2(p), 0.0)
    entropies = -plogp.sum(axis=1)
    return EntropyDeficitResult(
        bits=float(math.log2(n) - entropies.min()), grid_points=grid_points
    )


def _fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic near-uniform sphere grid."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    phi = golden * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
