"""Unit tests for the counter-based sampler and empirical estimators."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprb_lab.errors import DistributionError, EmptySampleError
from eprb_lab.quantum import (
    QUADRUPLES,
    GrandJointDistribution,
    Scenario,
    closed_form_correlators,
    grand_joint_quantum,
)
from eprb_lab.sampler import (
    COUNTS_CSV_HEADER,
    OutcomeCounts,
    counts_to_csv,
    empirical_correlators,
    sample,
    sample_sharded,
    uniforms,
)

MASK64 = (1 << 64) - 1


def reference_word(seed: int, index: int) -> int:
    """Independent generator reference: one finalized 64-bit word per counter."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def reference_uniform(seed: int, index: int) -> float:
    return (reference_word(seed, index) >> 11) * 2.0**-53


def point_mass(index: int) -> GrandJointDistribution:
    probs = tuple(1.0 if i == index else 0.0 for i in range(16))
    return GrandJointDistribution(probs)


class TestUniforms:
    def test_frozen_first_words_for_seed_zero(self):
        # Frozen reference values; recomputed independently at freeze time.
        expected_words = [
            16294208416658607535,
            7960286522194355700,
            487617019471545679,
            17909611376780542444,
        ]
        got = uniforms(0, 0, 4)
        want = np.array([w >> 11 for w in expected_words], dtype=np.uint64) * 2.0**-53
        assert np.array_equal(got, want)
        assert got[0] == 0.8833108082136426

    @pytest.mark.parametrize("seed", [0, 1, 12345, MASK64])
    @pytest.mark.parametrize("start", [0, 3, 1000])
    def test_matches_pure_python_reference(self, seed, start):
        got = uniforms(seed, start, 8)
        want = np.array([reference_uniform(seed, start + i) for i in range(8)])
        assert np.array_equal(got, want)

    def test_empty_request(self):
        out = uniforms(7, 0, 0)
        assert out.shape == (0,)

    def test_half_open_unit_interval(self):
        out = uniforms(99, 0, 100_000)
        assert np.all(out >= 0.0)
        assert np.all(out < 1.0)

    def test_streams_are_consistent_across_chunking(self):
        whole = uniforms(5, 0, 64)
        parts = np.concatenate([uniforms(5, 0, 10), uniforms(5, 10, 54)])
        assert np.array_equal(whole, parts)

    @pytest.mark.parametrize("bad", [True, False, -1, 1 << 64, 1.0, "0", None])
    def test_invalid_seed_rejected(self, bad):
        with pytest.raises(DistributionError):
            uniforms(bad, 0, 1)

    def test_negative_start_or_count_rejected(self):
        with pytest.raises(DistributionError):
            uniforms(0, -1, 1)
        with pytest.raises(DistributionError):
            uniforms(0, 0, -1)

    @given(st.integers(min_value=0, max_value=MASK64), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=50)
    def test_any_seed_any_offset_matches_reference(self, seed, start):
        got = uniforms(seed, start, 3)
        want = np.array([reference_uniform(seed, start + i) for i in range(3)])
        assert np.array_equal(got, want)


class TestSample:
    def test_zero_draws(self):
        counts = sample(point_mass(5), 0, seed=0)
        assert counts.counts == (0,) * 16
        assert counts.n == 0

    def test_point_mass_lands_on_one_cell(self):
        counts = sample(point_mass(5), 1000, seed=3)
        assert counts.counts[5] == 1000
        assert sum(counts.counts) == 1000

    def test_counts_sum_to_n(self):
        sc = Scenario(0.3, 1.7, 2.2, 5.1)
        counts = sample(grand_joint_quantum(sc), 10_000, seed=11)
        assert sum(counts.counts) == 10_000
        assert counts.n == 10_000
        assert counts.seed == 11

    def test_support_restriction_is_exact(self):
        # Aligned early analyzers: equal first-round outcomes have exactly
        # zero probability, so no draw may ever land there.
        sc = Scenario(a=0.0, a_prime=1.0, b=0.0, b_prime=2.0)
        d = grand_joint_quantum(sc)
        zero_cells = [i for i, p in enumerate(d.probs) if p == 0.0]
        assert zero_cells  # the scenario really does kill cells
        counts = sample(d, 200_000, seed=4)
        for i in zero_cells:
            assert counts.counts[i] == 0

    def test_bit_exact_reproducibility(self):
        d = grand_joint_quantum(Scenario(0.3, 1.7, 2.2, 5.1))
        assert sample(d, 50_000, seed=7) == sample(d, 50_000, seed=7)

    def test_seed_changes_counts(self):
        d = grand_joint_quantum(Scenario(0.3, 1.7, 2.2, 5.1))
        assert sample(d, 50_000, seed=7) != sample(d, 50_000, seed=8)

    def test_invalid_n_rejected(self):
        d = point_mass(0)
        with pytest.raises(DistributionError):
            sample(d, -1, seed=0)
        with pytest.raises(DistributionError):
            sample(d, True, seed=0)

    def test_frequencies_track_probabilities(self):
        sc = Scenario(0.3, 1.7, 2.2, 5.1)
        d = grand_joint_quantum(sc)
        n = 1_000_000
        counts = sample(d, n, seed=0)
        for i, p in enumerate(d.probs):
            se = math.sqrt(p * (1.0 - p) / n)
            assert abs(counts.counts[i] / n - p) <= 5.0 * se + 1e-12


class TestSampleSharded:
    @pytest.mark.parametrize("workers", [1, 2, 3, 7, 16])
    def test_matches_single_stream(self, workers):
        d = grand_joint_quantum(Scenario(0.3, 1.7, 2.2, 5.1))
        n = 100_003  # deliberately not divisible by most worker counts
        assert sample_sharded(d, n, seed=9, workers=workers) == sample(d, n, seed=9)

    def test_invalid_workers_rejected(self):
        d = point_mass(0)
        with pytest.raises(DistributionError):
            sample_sharded(d, 10, seed=0, workers=0)
        with pytest.raises(DistributionError):
            sample_sharded(d, 10, seed=0, workers=-2)


class TestOutcomeCounts:
    def test_sum_mismatch_rejected(self):
        with pytest.raises(DistributionError):
            OutcomeCounts(counts=(1,) + (0,) * 15, n=2, seed=0)

    def test_negative_count_rejected(self):
        with pytest.raises(DistributionError):
            OutcomeCounts(counts=(-1, 1) + (0,) * 14, n=0, seed=0)


class TestEmpiricalCorrelators:
    def test_point_mass_pins_correlators(self):
        # All mass on (A1,B1,A2,B2) = (+1,-1,+1,-1).
        index = QUADRUPLES.index((1, -1, 1, -1))
        counts = sample(point_mass(index), 1000, seed=0)
        est = empirical_correlators(counts)
        assert est.estimates.e_ab == -1.0
        assert est.estimates.e_ab_prime == -1.0
        assert est.estimates.e_a_prime_b == -1.0
        assert est.estimates.e_a_prime_b_prime == -1.0
        assert est.std_errors == (0.0, 0.0, 0.0, 0.0)
        assert est.n == 1000

    def test_hand_tallied_counts(self):
        # 1,3,3,1 draws on quadruples 0, 5, 10, 15 (n = 8). Each of those
        # quadruples repeats its first-round signs in the second round, so
        # every pair product is +1, -1, -1, +1 respectively and all four
        # correlators equal (1 - 3 - 3 + 1) / 8 = -0.5 exactly.
        counts_tuple = tuple(
            {0: 1, 5: 3, 10: 3, 15: 1}.get(i, 0) for i in range(16)
        )
        counts = OutcomeCounts(counts=counts_tuple, n=8, seed=0)
        est = empirical_correlators(counts)
        assert est.estimates.as_tuple() == (-0.5, -0.5, -0.5, -0.5)

    def test_standard_error_formula(self):
        counts_tuple = tuple(
            {0: 1, 5: 3, 10: 3, 15: 1}.get(i, 0) for i in range(16)
        )
        est = empirical_correlators(OutcomeCounts(counts=counts_tuple, n=8, seed=0))
        want = math.sqrt((1.0 - 0.25) / 8.0)
        assert est.std_errors == (want,) * 4

    def test_large_sample_matches_theory(self):
        sc = Scenario(a=math.pi / 3.0, a_prime=1.0, b=0.0, b_prime=2.0)
        n = 1_000_000
        est = empirical_correlators(sample(grand_joint_quantum(sc), n, seed=42))
        closed = closed_form_correlators(sc)
        for got, want, se in zip(
            est.estimates.as_tuple(), closed.as_tuple(), est.std_errors
        ):
            assert abs(got - want) <= 5.0 * max(se, 1e-9)

    def test_empty_sample_rejected(self):
        with pytest.raises(EmptySampleError):
            empirical_correlators(OutcomeCounts(counts=(0,) * 16, n=0, seed=0))


class TestCountsCsv:
    def test_header_lists_sign_patterns(self):
        cols = COUNTS_CSV_HEADER.split(",")
        assert len(cols) == 17
        assert cols[0] == "++++"
        assert cols[5] == "+-+-"
        assert cols[15] == "----"
        assert cols[16] == "n"

    def test_single_row_round_trip(self):
        counts = sample(grand_joint_quantum(Scenario(0.3, 1.7, 2.2, 5.1)), 5000, seed=1)
        text = counts_to_csv(counts)
        lines = text.strip().splitlines()
        assert lines[0] == COUNTS_CSV_HEADER
        values = [int(v) for v in lines[1].split(",")]
        assert tuple(values[:16]) == counts.counts
        assert values[16] == 5000
