import math

import numpy as np
import pytest

import belleval as bv
from belleval.likelihood import combinatorial_constant, log_likelihood_batch

UNIFORM = bv.reconstruct_full(np.array([0.5, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25]))


def test_empty_data_gives_zero():
    counts = bv.EventCounts(np.zeros((4, 4), dtype=int))
    assert bv.log_likelihood(counts, UNIFORM) == 0.0


def test_single_event_closed_form():
    tbl = np.zeros((4, 4), dtype=int)
    tbl[0, 0] = 1
    counts = bv.EventCounts(tbl)
    assert bv.log_likelihood(counts, UNIFORM) == pytest.approx(math.log(1 / 16))


def test_boulder_lhv_mle_value_from_table():
    # LHV-MLE probabilities read off the published comparison table
    # reproduce the quoted maximum 2.29e-58 up to table rounding
    counts = bv.load_dataset("boulder-5").counts
    singles = np.array([43.21, 124.91, 42.31, 135.07]) * 1e-6
    nulls = 1.0 - np.array([27.78 + 15.43 + 14.53, 29.68 + 13.53 + 105.40,
                            28.59 + 96.32 + 13.72, 0.53 + 124.38 + 134.55]) * 1e-6
    p = bv.reconstruct_full(np.concatenate([singles, nulls]))
    assert bv.log_likelihood(counts, p) == pytest.approx(math.log(2.29e-58), abs=2.5)


def test_zero_probability_with_count_is_minus_inf():
    tbl = np.zeros((4, 4), dtype=int)
    tbl[0, 0] = 3
    counts = bv.EventCounts(tbl)
    p = np.full((4, 4), 0.25)
    p[0] = [0.0, 0.5, 0.25, 0.25]
    assert bv.log_likelihood(counts, p) == -np.inf


def test_zero_probability_without_count_is_fine():
    tbl = np.zeros((4, 4), dtype=int)
    tbl[0, 3] = 4
    counts = bv.EventCounts(tbl)
    p = np.zeros((4, 4))
    p[:, 3] = 1.0
    assert np.isfinite(bv.log_likelihood(counts, p))


def test_matches_direct_product_on_small_counts(rng):
    for _ in range(25):
        tbl = rng.integers(0, 4, size=(4, 4))
        counts = bv.EventCounts(tbl)
        n = counts.total
        if n > 50 or n == 0:
            continue
        direct = math.factorial(n) / 4.0**n
        for s in range(4):
            for o in range(4):
                direct *= 0.25 ** tbl[s, o] / math.factorial(tbl[s, o])
        assert bv.log_likelihood(counts, UNIFORM) == pytest.approx(
            math.log(direct), abs=1e-9)


def test_stopping_rule_constant_cancels_in_differences(rng):
    # the combinatorial factor is a p-independent constant: likelihood
    # differences are unchanged when it is dropped
    counts = bv.load_dataset("munich-1").counts
    p1 = bv.reconstruct_full(np.array([0.5, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25]))
    p2 = bv.reconstruct_full(np.array([0.4, 0.5, 0.45, 0.5, 0.3, 0.27, 0.28, 0.25]))
    const = combinatorial_constant(counts)
    full_diff = bv.log_likelihood(counts, p1) - bv.log_likelihood(counts, p2)
    bare1 = bv.log_likelihood(counts, p1) - const
    bare2 = bv.log_likelihood(counts, p2) - const
    assert full_diff == pytest.approx(bare1 - bare2, abs=1e-9)


def test_no_underflow_at_huge_counts():
    tbl = np.full((4, 4), 10**10 // 16, dtype=np.int64)
    counts = bv.EventCounts(tbl)
    val = bv.log_likelihood(counts, UNIFORM)
    assert np.isfinite(val)


def test_batch_agrees_with_scalar(rng):
    counts = bv.load_dataset("delft-1").counts
    from tests_util import random_tables
    tables = random_tables(rng, 64)
    batch = log_likelihood_batch(counts, tables)
    for i in range(0, 64, 7):
        one = bv.log_likelihood(counts, tables[i].reshape(4, 4))
        assert batch[i] == pytest.approx(one, rel=1e-12)
