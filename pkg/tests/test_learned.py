import math

import numpy as np
import pytest

from adabloom.bench import measure_fpr
from adabloom.learned import (
    build_lbf,
    build_sandwiched,
    query_lbf,
    query_sandwiched,
    sandwich_allocate,
)
from adabloom.scores import gen_synthetic
from adabloom.standard import OPTIMAL_FPR_BASE, build_standard
from adabloom.tuning import tune_lbf, tune_sandwiched

# mpmath evaluation of the optimal backup size at (f_p=0.01, f_n=0.5)
B2_STAR = 4.782069960036637


class TestLearnedBloom:
    def test_tau_zero_accepts_everything(self, synth_small):
        filt = build_lbf(synth_small, 10_000, 0.0, seed=1)
        assert filt.backup.n_inserted == 0
        for item in synth_small.items[:50]:
            assert query_lbf(filt, item.id, item.score)

    def test_tau_one_equals_standard(self, synth_small):
        # every score is < 1, so all keys go to the backup
        filt = build_lbf(synth_small, 60_000, 1.0, seed=2)
        plain = build_standard([it.id for it in synth_small.keys], 60_000,
                               filt.backup.k, seed=2)
        assert filt.backup.bits.to_bytes() == plain.bits.to_bytes()
        for item in synth_small.items[:300]:
            assert query_lbf(filt, item.id, item.score) == plain.contains(item.id)

    def test_boundary_score_accepted(self, synth_small):
        filt = build_lbf(synth_small, 10_000, 0.6, seed=3)
        assert query_lbf(filt, "never-inserted", 0.6)

    def test_zero_fnr(self, synth_small):
        filt = build_lbf(synth_small, 40_000, 0.7, seed=4)
        a, b = synth_small.key_pairs(4)
        assert filt.contains_batch(a, b, synth_small.key_scores).all()

    def test_nonkey_below_tau_with_empty_backup(self):
        ds = gen_synthetic(50, 50, seed=5)
        filt = build_lbf(ds, 10_000, 0.0, seed=5)
        # backup holds nothing; a below-tau probe cannot collide
        assert not filt.backup.contains("fresh-item")

    def test_score_validation(self, synth_small):
        filt = build_lbf(synth_small, 10_000, 0.5, seed=1)
        with pytest.raises(ValueError):
            filt.contains("x", 1.5)


class TestSandwichAllocate:
    def test_reference_value(self):
        b1, b2 = sandwich_allocate(0.01, 0.5, 8.0)
        assert b2 == pytest.approx(B2_STAR, rel=1e-12)
        assert b1 == pytest.approx(8.0 - B2_STAR, rel=1e-12)

    def test_matches_grid_minimization(self):
        # independent oracle: minimize a^b1 (fp + (1-fp) a^(b2/fn)) on a grid
        fp, fn, budget = 0.01, 0.5, 8.0
        grid = np.linspace(0.0, budget, 400_001)
        objective = OPTIMAL_FPR_BASE ** (budget - grid) * (
            fp + (1 - fp) * OPTIMAL_FPR_BASE ** (grid / fn))
        _, b2 = sandwich_allocate(fp, fn, budget)
        assert abs(grid[objective.argmin()] - b2) < 1e-4

    def test_clamps_to_backup_only_when_budget_small(self):
        b1, b2 = sandwich_allocate(0.01, 0.5, 3.0)  # b2* = 4.78 >= budget
        assert (b1, b2) == (0.0, 3.0)

    def test_clamps_to_initial_only_when_log_arg_at_least_one(self):
        # f_p/((1-f_p)(1/f_n - 1)) >= 1 makes the optimum non-positive
        b1, b2 = sandwich_allocate(0.9, 0.5, 8.0)
        assert (b1, b2) == (8.0, 0.0)

    def test_rejects_degenerate_rates(self):
        for fp, fn in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)]:
            with pytest.raises(ValueError):
                sandwich_allocate(fp, fn, 8.0)


class TestSandwichedBloom:
    def test_zero_fnr(self, synth_small):
        filt = build_sandwiched(synth_small, 80_000, 0.6, seed=6)
        a, b = synth_small.key_pairs(6)
        assert filt.contains_batch(a, b, synth_small.key_scores).all()
        for item in synth_small.keys[:200]:
            assert query_sandwiched(filt, item.id, item.score)

    def test_reduction_matches_lbf_decisions(self, synth_small):
        # a tau with b2* above the per-key budget forces (0, budget)
        tau = 0.97
        tight = 6 * synth_small.n // 2
        sandwich = build_sandwiched(synth_small, tight, tau, seed=7)
        assert sandwich.reduced_to_lbf
        lbf = build_lbf(synth_small, tight, tau, seed=7)
        a, b = synth_small.nonkey_pairs(7)
        scores = synth_small.nonkey_scores
        got = sandwich.contains_batch(a, b, scores)
        want = lbf.contains_batch(a, b, scores)
        assert (got == want).all()

    def test_allocation_splits_when_budget_allows(self, synth_small):
        filt = build_sandwiched(synth_small, 200_000, 0.6, seed=8)
        assert filt.b1_bits > 0 and filt.b2_bits > 0
        assert filt.b1_bits + filt.b2_bits == 200_000

    def test_extreme_tau_falls_back(self, synth_small):
        filt = build_sandwiched(synth_small, 50_000, 0.0, seed=9)
        assert filt.reduced_to_lbf
        assert filt.fallback_reason is not None

    def test_tuned_sandwich_not_worse_than_lbf(self, synth_small):
        budget = 150_000
        lbf = tune_lbf(synth_small, budget, seed=10)
        sandwich = tune_sandwiched(synth_small, budget, seed=10)
        sigma = math.sqrt(max(lbf.fpr, 1e-9) * (1 - lbf.fpr) / synth_small.m)
        assert sandwich.fpr <= lbf.fpr + 3 * sigma


def test_measure_fpr_validates_labels(synth_small):
    filt = build_lbf(synth_small, 10_000, 0.5, seed=1)
    with pytest.raises(ValueError):
        measure_fpr(filt, [])
    with pytest.raises(ValueError):
        measure_fpr(filt, [synth_small.keys[0]])
