import math

import numpy as np
import pytest

from bell_lab.errors import OutOfRange, SeedStarvation
from bell_lab.quantum import (
    chsh_optimal_settings,
    maximally_mixed_state,
    singlet_state,
)
from bell_lab.randomness import (
    ExpansionStage,
    TSIRELSON_BOUND,
    chsh_certified_stage,
    expansion_accounting,
    minentropy_bound,
    serial_composition,
    simulate_qrng_rounds,
)


class TestMinentropyBound:
    def test_tsirelson_certifies_one_bit(self):
        assert abs(minentropy_bound(TSIRELSON_BOUND) - 1.0) < 1e-9

    def test_local_bound_certifies_nothing(self):
        assert minentropy_bound(2.0) == 0.0
        assert minentropy_bound(1.3) == 0.0
        assert minentropy_bound(0.0) == 0.0

    def test_intermediate_value(self):
        # direct formula evaluation frozen as the expected value
        expected = 1.0 - math.log2(1.0 + math.sqrt(2.0 - 2.5**2 / 4.0))
        got = minentropy_bound(2.5)
        assert abs(got - expected) < 1e-15
        assert 0.0 < got < 1.0

    def test_rejects_super_quantum(self):
        with pytest.raises(OutOfRange):
            minentropy_bound(2.9)
        with pytest.raises(OutOfRange):
            minentropy_bound(-0.1)

    def test_monotone_on_grid(self):
        grid = np.arange(2.0, TSIRELSON_BOUND, 1e-3)
        values = [minentropy_bound(float(s)) for s in grid]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_zero_below_local_bound_exactly(self):
        for s in np.linspace(0.0, 2.0, 21):
            assert minentropy_bound(float(s)) == 0.0


class TestExpansionStage:
    def test_consumed_bits_derived(self):
        stage = chsh_certified_stage(rounds=1000, chsh_value=TSIRELSON_BOUND)
        assert stage.input_bits_consumed == 2000.0
        assert abs(stage.certified_bits_produced - 1000.0) < 1e-6

    def test_asymmetric_alphabets(self):
        stage = ExpansionStage(
            input_alphabet=(4, 2),
            output_alphabet=(2, 2),
            rounds=10,
            chsh_value=2.0,
            certified_bits_produced=0.0,
        )
        assert stage.input_bits_consumed == 30.0

    def test_rejects_negative_certified(self):
        with pytest.raises(OutOfRange):
            ExpansionStage((2, 2), (2, 2), 10, 2.0, certified_bits_produced=-1.0)


class TestAccounting:
    def test_tsirelson_stage_ledger(self):
        stage = chsh_certified_stage(rounds=1000, chsh_value=TSIRELSON_BOUND)
        report = expansion_accounting(stage)
        assert report.net_bits == stage.certified_bits_produced - 2000.0
        assert not report.expanding  # 1 certified bit < 2 consumed bits per round

    def test_zero_rounds_all_zero(self):
        stage = chsh_certified_stage(rounds=0, chsh_value=TSIRELSON_BOUND)
        report = expansion_accounting(stage)
        assert stage.input_bits_consumed == 0.0
        assert stage.certified_bits_produced == 0.0
        assert report.net_bits == 0.0
        assert not report.expanding

    def test_no_violation_no_certification(self):
        stage = chsh_certified_stage(rounds=500, chsh_value=2.0)
        report = expansion_accounting(stage)
        assert stage.certified_bits_produced == 0.0
        assert not report.expanding

    def test_net_linear_in_rounds(self):
        nets = [
            expansion_accounting(chsh_certified_stage(r, 2.6)).net_bits
            for r in (100, 200, 400)
        ]
        assert abs(nets[1] - 2 * nets[0]) < 1e-9
        assert abs(nets[2] - 2 * nets[1]) < 1e-9


def expanding_stage(rounds: int) -> ExpansionStage:
    """Idealized one-binary-input, ternary-outcome device: consumes 1 bit and
    emits log2(3) fully random bits per round."""
    return ExpansionStage(
        input_alphabet=(2, 1),
        output_alphabet=(3, 1),
        rounds=rounds,
        chsh_value=TSIRELSON_BOUND,
        certified_bits_produced=rounds * math.log2(3.0),
    )


class TestSerialComposition:
    def test_three_expanding_stages_multiply(self):
        stages = [expanding_stage(1000), expanding_stage(1000), expanding_stage(1000)]
        report = serial_composition(stages, seed_bits=1000.0)
        assert report.total_out > report.seed_bits
        assert report.factor > 1.0
        assert len(report.entries) == 3
        # conservation: totals are the stage sums, no entry negative
        assert report.total_out == sum(e.certified for e in report.entries)
        assert report.total_in == sum(e.consumed for e in report.entries)
        assert all(e.pool_after >= 0 for e in report.entries)

    def test_single_non_expanding_stage(self):
        stage = chsh_certified_stage(rounds=100, chsh_value=2.0)
        report = serial_composition([stage], seed_bits=200.0)
        assert report.factor <= 1.0

    def test_starved_stage_raises_with_index(self):
        stages = [
            chsh_certified_stage(rounds=1000, chsh_value=TSIRELSON_BOUND),
            chsh_certified_stage(rounds=1000, chsh_value=TSIRELSON_BOUND),
        ]
        # stage 1 consumes the whole seed and certifies ~1000 bits; stage 2
        # demands 2000
        with pytest.raises(SeedStarvation) as err:
            serial_composition(stages, seed_bits=2000.0)
        assert err.value.stage_index == 2

    def test_pool_carries_over(self):
        stages = [expanding_stage(1000), expanding_stage(1500)]
        report = serial_composition(stages, seed_bits=1000.0)
        assert report.entries[0].pool_after == pytest.approx(1000.0 * math.log2(3.0))
        assert report.entries[1].pool_before == report.entries[0].pool_after

    def test_empty_chain_rejected(self):
        with pytest.raises(OutOfRange):
            serial_composition([], seed_bits=10.0)


class TestQrngRounds:
    def test_singlet_empirical_chsh(self):
        res = simulate_qrng_rounds(
            chsh_optimal_settings(), singlet_state(), rounds=200_000, seed=5
        )
        assert abs(res.chsh - TSIRELSON_BOUND) < 3.0 * res.chsh_stderr

    def test_mixed_state_scores_zero_and_unbiased(self):
        res = simulate_qrng_rounds(
            chsh_optimal_settings(), maximally_mixed_state(), rounds=100_000, seed=6
        )
        assert abs(res.chsh) < 3.0 * res.chsh_stderr
        for bits in (res.alice_bits, res.bob_bits):
            rate = bits.mean()
            assert abs(rate - 0.5) < 3.0 * 0.5 / math.sqrt(bits.size)

    def test_identical_seeds_identical_streams(self):
        a = simulate_qrng_rounds(chsh_optimal_settings(), singlet_state(), 50_000, seed=9)
        b = simulate_qrng_rounds(chsh_optimal_settings(), singlet_state(), 50_000, seed=9)
        assert np.array_equal(a.bitstream, b.bitstream)
        assert np.array_equal(a.x_inputs, b.x_inputs)
        assert a.chsh == b.chsh

    def test_bitstream_interleaves(self):
        res = simulate_qrng_rounds(chsh_optimal_settings(), singlet_state(), 1000, seed=2)
        stream = res.bitstream
        assert stream.size == 2000
        assert np.array_equal(stream[0::2], res.alice_bits)
        assert np.array_equal(stream[1::2], res.bob_bits)

    def test_needs_rounds(self):
        with pytest.raises(OutOfRange):
            simulate_qrng_rounds(chsh_optimal_settings(), singlet_state(), 0, seed=1)
