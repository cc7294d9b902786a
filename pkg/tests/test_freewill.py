import math

import numpy as np
import pytest

from bell_lab.behavior import BellExpression, CHSH_SCENARIO, algebraic_bound, evaluate
from bell_lab.errors import OutOfRange
from bell_lab.freewill import (
    FreeWillDeficit,
    MeasurementDependentModel,
    alice_response,
    bob_response,
    conditioned_lambda_sample,
    deficit,
    entropy_deficit,
    predetermined_inputs_value,
    simulate_detection_model,
    simulate_measurement_dependent,
)
from bell_lab.quantum import BlochVector, MeasurementSettings, chsh_optimal_settings


def random_direction(rng) -> BlochVector:
    return BlochVector.unit(*rng.normal(size=3))


def sphere_quadrature(f, n_theta=400, n_phi=800):
    """Independent Gauss-Legendre x midpoint quadrature on the unit sphere.

    The polar integral is split at u = 0 so integrands with an equatorial
    kink (|lam_z| and friends) converge at full order.
    """
    u0, w0 = np.polynomial.legendre.leggauss(n_theta // 2)
    u = np.concatenate([(u0 - 1.0) / 2.0, (u0 + 1.0) / 2.0])
    wu = np.concatenate([w0 / 2.0, w0 / 2.0])
    phi = (np.arange(n_phi) + 0.5) * 2.0 * math.pi / n_phi
    U, PHI = np.meshgrid(u, phi, indexing="ij")
    st = np.sqrt(np.clip(1.0 - U**2, 0.0, None))
    lam = np.stack([st * np.cos(PHI), st * np.sin(PHI), U], axis=-1)
    return float((f(lam) * wu[:, None]).sum() / (2.0 * n_phi))


class TestDeficit:
    def test_paper_example_4_2_is_one_bit(self):
        assert deficit(4, 2).bits == 1.0

    def test_full_freedom_zero_bits(self):
        for n in [1, 2, 7]:
            assert deficit(n, n).bits == 0.0

    def test_4_1_is_two_bits(self):
        assert deficit(4, 1).bits == 2.0

    def test_log_identity(self):
        for n, m in [(4, 2), (8, 3), (1000, 7), (2, 1)]:
            d = deficit(n, m)
            assert abs(d.bits + math.log2(m) - math.log2(n)) <= 1e-12

    def test_range_check(self):
        with pytest.raises(OutOfRange):
            deficit(2, 3)
        with pytest.raises(OutOfRange):
            deficit(2, 0)


class TestSphericalIntegralOracle:
    """The closed forms the simulators rely on, via independent quadrature."""

    def test_detection_probability_integral_is_half(self):
        x = np.array([0.0, 0.0, 1.0])
        value = sphere_quadrature(lambda lam: np.abs(lam @ x))
        assert abs(value - 0.5) < 1e-9

    def test_signed_correlation_integral(self, rng):
        # integral of sign(x.lam) |x.lam| sign(y.lam) over the sphere = (x.y)/2
        for _ in range(3):
            x = random_direction(rng).as_array()
            y = random_direction(rng).as_array()
            value = sphere_quadrature(
                lambda lam: np.sign(lam @ x) * np.abs(lam @ x) * np.sign(lam @ y)
            )
            assert abs(value - (x @ y) / 2.0) < 5e-4

    def test_conditioned_density_normalizes(self, rng):
        x = random_direction(rng).as_array()
        value = sphere_quadrature(lambda lam: 2.0 * np.abs(lam @ x))
        assert abs(value - 1.0) < 1e-4


class TestDetectionModel:
    def test_detection_rate_half(self):
        res = simulate_detection_model(chsh_optimal_settings(), samples=200_000, seed=3)
        assert abs(res.detection_rate - 0.5) < 3.0 * res.detection_rate_stderr

    def test_conditional_correlators_match_singlet(self, rng):
        for trial in range(3):
            a_dir = random_direction(rng)
            b_dir = random_direction(rng)
            settings = MeasurementSettings(alice=(a_dir,), bob=(b_dir,))
            res = simulate_detection_model(settings, samples=200_000, seed=100 + trial)
            target = -a_dir.dot(b_dir)
            gate = 3.0 * max(res.correlator_stderr[0, 0], 1e-12)
            assert abs(res.correlators[0, 0] - target) < gate

    def test_3sigma_coverage_over_100_random_pairs(self):
        # at 1e6 samples per pair, at least 95 of 100 random direction pairs
        # must land within 3 standard errors of the singlet correlator
        rng = np.random.default_rng(2026)
        hits = 0
        for trial in range(100):
            a_dir = random_direction(rng)
            b_dir = random_direction(rng)
            settings = MeasurementSettings(alice=(a_dir,), bob=(b_dir,))
            res = simulate_detection_model(settings, samples=10**6, seed=7000 + trial)
            target = -a_dir.dot(b_dir)
            if abs(res.correlators[0, 0] - target) <= 3.0 * res.correlator_stderr[0, 0]:
                hits += 1
        assert hits >= 95

    def test_same_direction_exactly_anticorrelated(self, rng):
        d = random_direction(rng)
        settings = MeasurementSettings(alice=(d,), bob=(d,))
        res = simulate_detection_model(settings, samples=20_000, seed=5)
        assert res.correlators[0, 0] == -1.0
        assert res.behavior.p[0, 0, 0, 0] == 0.0
        assert res.behavior.p[0, 0, 1, 1] == 0.0

    def test_sample_floor_enforced(self):
        with pytest.raises(OutOfRange):
            simulate_detection_model(chsh_optimal_settings(), samples=100, seed=0)

    def test_reproducible(self):
        a = simulate_detection_model(chsh_optimal_settings(), samples=20_000, seed=42)
        b = simulate_detection_model(chsh_optimal_settings(), samples=20_000, seed=42)
        assert np.array_equal(a.behavior.p, b.behavior.p)
        assert a.detection_rate == b.detection_rate


class TestMeasurementDependent:
    def test_reproduces_singlet_correlators(self):
        settings = chsh_optimal_settings()
        model = MeasurementDependentModel(input_set=settings.alice)
        res = simulate_measurement_dependent(model, settings.bob, samples=200_000, seed=9)
        for x, a_dir in enumerate(settings.alice):
            for y, b_dir in enumerate(settings.bob):
                target = -a_dir.dot(b_dir)
                gate = 3.0 * max(res.correlator_stderr[x, y], 1e-12)
                assert abs(res.correlators[x, y] - target) < gate

    def test_chsh_at_tsirelson(self, chsh):
        settings = chsh_optimal_settings()
        model = MeasurementDependentModel(input_set=settings.alice)
        res = simulate_measurement_dependent(model, settings.bob, samples=400_000, seed=13)
        stderr = math.sqrt(float((res.correlator_stderr**2).sum()))
        assert abs(evaluate(chsh, res.behavior) - 2.0 * math.sqrt(2.0)) < 3.0 * stderr

    def test_alice_marginals_uniform(self):
        settings = chsh_optimal_settings()
        model = MeasurementDependentModel(input_set=settings.alice)
        res = simulate_measurement_dependent(model, settings.bob, samples=200_000, seed=21)
        for x in range(2):
            for y in range(2):
                n = res.counts[x, y]
                marg = res.behavior.marginal_a(x, y)
                assert abs(marg[0] - 0.5) < 3.0 / (2.0 * math.sqrt(n)) + 1e-3

    def test_runs_are_lambda_local(self, rng):
        # outcomes are pointwise functions of (input, lam): recompute and compare
        d = random_direction(rng)
        lams = conditioned_lambda_sample(d, 5_000, rng)
        a1 = alice_response(lams, d)
        a2 = (lams @ d.as_array() < 0.0).astype(int)
        assert np.array_equal(a1, a2)
        y_dir = random_direction(rng)
        b1 = bob_response(lams, y_dir)
        b2 = (lams @ y_dir.as_array() > 0.0).astype(int)
        assert np.array_equal(b1, b2)

    def test_conditioned_sampler_density(self, rng):
        # E[x.lam sign(x.lam)] under q(lam|x) = 2 |x.lam| is
        # integral of 2 |x.lam| * |x.lam| = 2/3; check by Monte Carlo
        d = random_direction(rng)
        lams = conditioned_lambda_sample(d, 200_000, rng)
        proj = np.abs(lams @ d.as_array())
        assert abs(proj.mean() - 2.0 / 3.0) < 3.0 * proj.std() / math.sqrt(proj.size)

    def test_bob_input_independent_of_lambda(self):
        # with seeds fixed, y is drawn uniformly whatever lam was accepted;
        # bin lam by hemisphere and compare conditional y frequencies
        settings = chsh_optimal_settings()
        rng = np.random.default_rng(77)
        d = settings.alice[0]
        lams = conditioned_lambda_sample(d, 100_000, rng)
        y = rng.integers(0, 2, size=100_000)
        north = lams[:, 2] > 0
        f_north = y[north].mean()
        f_south = y[~north].mean()
        gate = 3.0 * math.sqrt(0.25 / north.sum() + 0.25 / (~north).sum())
        assert abs(f_north - f_south) < gate

    def test_no_signaling_within_noise(self):
        settings = chsh_optimal_settings()
        model = MeasurementDependentModel(input_set=settings.alice)
        res = simulate_measurement_dependent(model, settings.bob, samples=200_000, seed=31)
        pa = res.behavior.p.sum(axis=3)
        for x in range(2):
            drift = np.abs(pa[x, 0] - pa[x, 1]).max()
            assert drift < 3.0 / math.sqrt(res.counts[x].min())

    def test_reproducible_bit_identical(self):
        settings = chsh_optimal_settings()
        model = MeasurementDependentModel(input_set=settings.alice)
        r1 = simulate_measurement_dependent(model, settings.bob, samples=20_000, seed=8)
        r2 = simulate_measurement_dependent(model, settings.bob, samples=20_000, seed=8)
        assert np.array_equal(r1.behavior.p, r2.behavior.p)

    def test_worker_count_does_not_change_results(self, monkeypatch):
        # chunked child streams make aggregates identical for any thread cap
        settings = chsh_optimal_settings()
        model = MeasurementDependentModel(input_set=settings.alice)
        monkeypatch.setenv("BELL_LAB_THREADS", "1")
        serial = simulate_measurement_dependent(model, settings.bob, samples=100_000, seed=8)
        monkeypatch.setenv("BELL_LAB_THREADS", "4")
        threaded = simulate_measurement_dependent(model, settings.bob, samples=100_000, seed=8)
        assert np.array_equal(serial.behavior.p, threaded.behavior.p)
        assert np.array_equal(serial.correlators, threaded.correlators)
        det1 = simulate_detection_model(settings, samples=100_000, seed=8)
        monkeypatch.setenv("BELL_LAB_THREADS", "1")
        det2 = simulate_detection_model(settings, samples=100_000, seed=8)
        assert np.array_equal(det1.behavior.p, det2.behavior.p)
        assert det1.detection_rate == det2.detection_rate


class TestPredeterminedInputs:
    def test_chsh_reaches_4(self, chsh):
        res = predetermined_inputs_value(chsh)
        assert res.value == 4.0
        # witness assignment picks the max coefficient of each cell
        for (x, y), (a, b) in res.assignment.items():
            assert chsh.coeffs[x, y, a, b] == chsh.coeffs[x, y].max()

    def test_zero_expression(self):
        expr = BellExpression(CHSH_SCENARIO, np.zeros(CHSH_SCENARIO.table_shape))
        assert predetermined_inputs_value(expr).value == 0.0

    def test_doubled_chsh(self, chsh):
        doubled = BellExpression(CHSH_SCENARIO, 2.0 * chsh.coeffs)
        assert predetermined_inputs_value(doubled).value == 8.0

    def test_equals_algebraic_bound_exactly(self, rng):
        for _ in range(25):
            expr = BellExpression(CHSH_SCENARIO, rng.normal(size=CHSH_SCENARIO.table_shape))
            res = predetermined_inputs_value(expr)
            assert res.value == algebraic_bound(expr)
            # assignment reproduces the value independently
            recomputed = sum(
                float(expr.coeffs[x, y, a, b]) for (x, y), (a, b) in res.assignment.items()
            )
            assert abs(recomputed - res.value) < 1e-12

    def test_tie_breaks_to_first_index(self):
        coeffs = np.zeros(CHSH_SCENARIO.table_shape)
        expr = BellExpression(CHSH_SCENARIO, coeffs)
        res = predetermined_inputs_value(expr)
        assert all(pair == (0, 0) for pair in res.assignment.values())


class TestEntropyDeficit:
    def test_aligned_lambda_gives_positive_deficit(self):
        dirs = (
            BlochVector(1.0, 0.0, 0.0),
            BlochVector(0.0, 1.0, 0.0),
            BlochVector(0.0, 0.0, 1.0),
        )
        res = entropy_deficit(MeasurementDependentModel(input_set=dirs))
        assert res.bits > 0.0
        assert res.grid_points == 4096

    def test_single_input_no_deficit(self):
        res = entropy_deficit(MeasurementDependentModel(input_set=(BlochVector(0, 0, 1.0),)))
        assert res.bits == 0.0

    def test_equidistant_lambda_contributes_zero(self):
        # two antipodal inputs: |x1.lam| == |x2.lam| everywhere, so p(x|lam)
        # is uniform at every grid point and the deficit vanishes
        dirs = (BlochVector(0.0, 0.0, 1.0), BlochVector(0.0, 0.0, -1.0))
        res = entropy_deficit(MeasurementDependentModel(input_set=dirs))
        assert res.bits < 1e-12

    def test_deficit_bounded_by_log_n(self):
        dirs = (
            BlochVector(1.0, 0.0, 0.0),
            BlochVector(0.0, 1.0, 0.0),
            BlochVector(0.0, 0.0, 1.0),
            BlochVector.unit(1.0, 1.0, 1.0),
        )
        res = entropy_deficit(MeasurementDependentModel(input_set=dirs))
        assert 0.0 <= res.bits <= 2.0


class TestSupportDeficitAttachment:
    def test_model_carries_discrete_deficit(self):
        settings = chsh_optimal_settings()
        model = MeasurementDependentModel(
            input_set=settings.alice, support_deficit=deficit(4, 2)
        )
        assert model.support_deficit == FreeWillDeficit(4, 2, 1.0)
