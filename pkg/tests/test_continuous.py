"""Tests for moment-band membership, anchor sequences, and volume probes."""

import itertools
import math
from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest

from msmi.core import Alphabet, JointProbTensor, Permutation, apply_permutation
from msmi.continuous import (
    MomentWindow,
    VolumeEstimate,
    anchor_inclusion_spot_check,
    joint_moment_membership,
    moment_band_volume_estimate,
    quantile_sequence,
    sym_set_anchored_mc_estimate,
)
from msmi.entropy import (
    DiscreteOnReals,
    MomentOracle,
    ProductOfSpecs,
    TiltedUniformSquare,
    UniformInterval,
)

UNIT = UniformInterval(F(0), F(1))
TILTED_HALF = TiltedUniformSquare(F(1, 2))
FAIR_BIT = DiscreteOnReals((F(0), F(1)), (F(1, 2), F(1, 2)))


def _random_perms(rng, n, count):
    return [Permutation(tuple(int(i) for i in rng.permutation(n))) for _ in range(count)]


# ---------------------------------------------------------------------------
# windows and anchor sequences
# ---------------------------------------------------------------------------


def test_moment_window_validation():
    with pytest.raises(ValueError):
        MomentWindow(0, 0.1)
    with pytest.raises(ValueError):
        MomentWindow(2, 0.0)
    with pytest.raises(ValueError):
        MomentWindow(2, 0.1, R=0.0)
    assert MomentWindow(2, 0.1).R is None


def test_quantile_sequence_uniform_midpoints():
    q = quantile_sequence(UNIT, 4)
    assert q.values.entries == (0.125, 0.375, 0.625, 0.875)
    assert q.N == 4


def test_quantile_sequence_discrete_generalized_inverse():
    q = quantile_sequence(FAIR_BIT, 4)
    assert q.values.entries == (0.0, 0.0, 1.0, 1.0)


def test_quantile_sequence_rejects_joint_specs():
    with pytest.raises(ValueError):
        quantile_sequence(TILTED_HALF, 8)


def test_quantile_sequence_stays_inside_support():
    spec = DiscreteOnReals((F(-2), F(3)), (F(1, 4), F(3, 4)))
    for n_len in (1, 2, 5, 9):
        q = quantile_sequence(spec, n_len)
        assert min(q.values.entries) >= -2.0
        assert max(q.values.entries) <= 3.0
        assert max(abs(e) for e in q.values.entries) <= float(spec.sup_norm())


def test_quantile_moments_converge_at_one_over_n():
    # midpoint sums beat the C_k/N envelope; the measured decay is ~N^-2
    errors = {k: [] for k in (2, 3, 4)}
    sizes = [8, 16, 32, 64, 128, 256]
    for n_len in sizes:
        xi = quantile_sequence(UNIT, n_len).as_array()
        assert abs(float(xi.mean()) - 0.5) < 1e-15
        for k in errors:
            err = abs(float((xi**k).mean()) - 1 / (k + 1))
            assert err <= k / n_len
            errors[k].append(err)
    for k, errs in errors.items():
        slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
        assert slope < -0.9


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


def test_membership_uniform_examples():
    xi = quantile_sequence(UNIT, 4).as_array()
    oracle = MomentOracle(UNIT)
    assert joint_moment_membership([xi], oracle, MomentWindow(1, 0.01))
    assert joint_moment_membership([xi], oracle, MomentWindow(2, 0.01))
    assert not joint_moment_membership([xi], oracle, MomentWindow(2, 0.001))


def test_membership_validates_shapes():
    oracle = MomentOracle(TILTED_HALF)
    xi = quantile_sequence(UNIT, 4).as_array()
    with pytest.raises(ValueError):
        joint_moment_membership([xi], oracle, MomentWindow(1, 0.1))
    with pytest.raises(ValueError):
        joint_moment_membership([xi, xi[:3]], oracle, MomentWindow(1, 0.1))


def test_membership_common_permutation_invariance():
    rng = np.random.Generator(np.random.PCG64(515))
    oracle = MomentOracle(TILTED_HALF)
    window = MomentWindow(2, 0.05)
    xi = [quantile_sequence(v, 8).as_array() for v in TILTED_HALF.variables()]
    for _ in range(1000):
        s1, s2, tau = _random_perms(rng, 8, 3)
        plain = joint_moment_membership(
            [apply_permutation(s1, xi[0]), apply_permutation(s2, xi[1])],
            oracle,
            window,
        )
        shifted = joint_moment_membership(
            [
                apply_permutation(tau.compose(s1), xi[0]),
                apply_permutation(tau.compose(s2), xi[1]),
            ],
            oracle,
            window,
        )
        assert plain == shifted


def test_membership_monotone_in_delta_and_m():
    rng = np.random.Generator(np.random.PCG64(77))
    oracle = MomentOracle(TILTED_HALF)
    xi = [quantile_sequence(v, 12).as_array() for v in TILTED_HALF.variables()]
    for _ in range(200):
        s1, s2 = _random_perms(rng, 12, 2)
        seqs = [apply_permutation(s1, xi[0]), apply_permutation(s2, xi[1])]
        for delta in (0.01, 0.03, 0.1):
            if joint_moment_membership(seqs, oracle, MomentWindow(2, delta)):
                assert joint_moment_membership(
                    seqs, oracle, MomentWindow(2, delta * 3)
                )
            if joint_moment_membership(seqs, oracle, MomentWindow(2, delta)):
                assert joint_moment_membership(
                    seqs, oracle, MomentWindow(1, delta)
                )


# ---------------------------------------------------------------------------
# anchored Monte Carlo
# ---------------------------------------------------------------------------


def test_anchored_mc_single_variable_is_all_or_nothing():
    hit = sym_set_anchored_mc_estimate(UNIT, MomentWindow(2, 0.01), 4, 100, seed=5)
    assert hit.successes == 100
    miss = sym_set_anchored_mc_estimate(UNIT, MomentWindow(2, 0.001), 4, 100, seed=5)
    assert miss.successes == 0
    assert math.isfinite(miss.ci_log_high)


def test_anchored_mc_deterministic_and_thread_invariant():
    window = MomentWindow(2, 0.05)
    a = sym_set_anchored_mc_estimate(TILTED_HALF, window, 16, 8000, seed=31)
    b = sym_set_anchored_mc_estimate(TILTED_HALF, window, 16, 8000, seed=31)
    c = sym_set_anchored_mc_estimate(TILTED_HALF, window, 16, 8000, seed=31, threads=8)
    assert a == b == c


def test_anchored_mc_success_counts_monotone_in_delta_and_m():
    base = dict(N=16, trials=3000, seed=404)
    by_delta = [
        sym_set_anchored_mc_estimate(
            TILTED_HALF, MomentWindow(2, delta), base["N"], base["trials"], base["seed"]
        ).successes
        for delta in (0.01, 0.02, 0.05, 0.1)
    ]
    assert by_delta == sorted(by_delta)
    m2 = sym_set_anchored_mc_estimate(
        TILTED_HALF, MomentWindow(2, 0.02), base["N"], base["trials"], base["seed"]
    )
    m1 = sym_set_anchored_mc_estimate(
        TILTED_HALF, MomentWindow(1, 0.02), base["N"], base["trials"], base["seed"]
    )
    assert m1.successes >= m2.successes


def test_anchored_mc_separates_independence_from_tilt():
    # desk-scale preview of the acceptance comparison, fewer trials
    window = MomentWindow(2, 0.05)
    e0 = sym_set_anchored_mc_estimate(
        TiltedUniformSquare(F(0)), window, 24, 10000, seed=777
    )
    e5 = sym_set_anchored_mc_estimate(TILTED_HALF, window, 24, 10000, seed=777)
    assert e0.successes > e5.successes
    assert e0.ci_log_low > e5.ci_log_high


# ---------------------------------------------------------------------------
# tie to the discrete type-band machinery
# ---------------------------------------------------------------------------

PRODUCT_BITS = ProductOfSpecs((FAIR_BIT, FAIR_BIT))
PRODUCT_TENSOR = JointProbTensor(
    Alphabet(("0", "1")), 2, (F(1, 4), F(1, 4), F(1, 4), F(1, 4))
)


def _joint_type_band_member(y1, y2, delta):
    n_len = len(y1)
    tally = Counter(zip(y1.astype(int), y2.astype(int)))
    cells = list(itertools.product(range(2), repeat=2))
    return all(
        abs(F(int(tally.get(cell, 0)), n_len) - w) < delta
        for cell, w in zip(cells, PRODUCT_TENSOR.weights)
    )


def test_moment_band_equals_type_band_at_even_n():
    # anchors of exact half-half type have zero marginal deviation, so the
    # order-2 moment band and the joint type band coincide cellwise
    oracle = MomentOracle(PRODUCT_BITS)
    for n_len in (2, 4):
        xi = quantile_sequence(FAIR_BIT, n_len).as_array()
        for delta in (F(12, 100), F(3, 10)):
            window = MomentWindow(2, float(delta))
            for images1 in itertools.permutations(range(n_len)):
                for images2 in itertools.permutations(range(n_len)):
                    y1 = apply_permutation(Permutation(images1), xi)
                    y2 = apply_permutation(Permutation(images2), xi)
                    got = joint_moment_membership([y1, y2], oracle, window)
                    want = _joint_type_band_member(y1, y2, delta)
                    assert got == want


def test_moment_band_sandwiches_type_band_at_odd_n():
    # at odd N the anchor marginals deviate by e_i, and the exact relation
    # is type(delta) -> moment(delta) -> type(delta + e_1 + e_2)
    oracle = MomentOracle(PRODUCT_BITS)
    for n_len, delta in ((3, F(3, 10)), (5, F(12, 100)), (5, F(3, 10))):
        xi = quantile_sequence(FAIR_BIT, n_len).as_array()
        e_anchor = abs(F(int(xi.sum()), n_len) - F(1, 2))
        assert e_anchor < delta
        window = MomentWindow(2, float(delta))
        widened = delta + 2 * e_anchor
        for images1 in itertools.permutations(range(n_len)):
            for images2 in itertools.permutations(range(n_len)):
                y1 = apply_permutation(Permutation(images1), xi)
                y2 = apply_permutation(Permutation(images2), xi)
                moment = joint_moment_membership([y1, y2], oracle, window)
                if _joint_type_band_member(y1, y2, delta):
                    assert moment
                if moment:
                    assert _joint_type_band_member(y1, y2, widened)


# ---------------------------------------------------------------------------
# volume probe
# ---------------------------------------------------------------------------


def test_volume_requires_cutoff_dominating_sup_norm():
    with pytest.raises(ValueError):
        moment_band_volume_estimate(UNIT, MomentWindow(2, 0.1), 8, 100, seed=1)
    with pytest.raises(ValueError):
        moment_band_volume_estimate(
            UNIT, MomentWindow(2, 0.1, R=0.5), 8, 100, seed=1
        )
    with pytest.raises(ValueError):
        moment_band_volume_estimate(
            UNIT, MomentWindow(2, 0.1, R=1.0), 8, 100, seed=1, boxes=[(0.0, 1.5)]
        )


def test_volume_huge_delta_is_exact_width_sum():
    est = moment_band_volume_estimate(
        UNIT, MomentWindow(2, 1e12, R=1.0), 8, 2000, seed=9, boxes=[(0.0, 1.0)]
    )
    assert est.successes == 2000
    assert est.log_volume_rate == 0.0
    wide = moment_band_volume_estimate(
        UNIT, MomentWindow(1, 1e12, R=2.0), 8, 500, seed=9
    )
    assert wide.log_volume_rate == pytest.approx(math.log(4.0))


def test_volume_zero_successes_stays_finite_on_top():
    # box and target moments are disjoint, so acceptance is impossible
    far = UniformInterval(F(2), F(3))
    est = moment_band_volume_estimate(
        far, MomentWindow(1, 0.5, R=3.0), 8, 400, seed=2, boxes=[(0.0, 1.0)]
    )
    assert est.successes == 0
    assert est.log_volume_rate == float("-inf")
    assert math.isfinite(est.ci_high)


def test_volume_probe_recovers_zero_entropy_preview():
    est = moment_band_volume_estimate(
        UNIT, MomentWindow(2, 0.1, R=1.0), 24, 20000, seed=606, boxes=[(0.0, 1.0)]
    )
    assert abs(est.log_volume_rate) <= 0.05
    assert est.ci_low <= est.log_volume_rate <= est.ci_high


def test_volume_deterministic_across_threads():
    window = MomentWindow(2, 0.1, R=1.0)
    a = moment_band_volume_estimate(UNIT, window, 12, 4000, seed=3, boxes=[(0.0, 1.0)])
    b = moment_band_volume_estimate(
        UNIT, window, 12, 4000, seed=3, threads=8, boxes=[(0.0, 1.0)]
    )
    assert a == b


def test_volume_estimate_rejects_infinite_ci_high():
    with pytest.raises(ValueError):
        VolumeEstimate(0.0, -1.0, float("inf"), 1, 2)


# ---------------------------------------------------------------------------
# inclusion spot check
# ---------------------------------------------------------------------------


def test_spot_check_is_clean_for_tilted_square():
    report = anchor_inclusion_spot_check(
        TILTED_HALF, MomentWindow(2, 0.05, R=1.0), 16, 2000, seed=42
    )
    assert report.violations == ()
    assert report.tuples_checked == 2000
    assert 0 < report.members <= 2000
    assert not report.r_check_skipped


def test_spot_check_flags_small_cutoff():
    report = anchor_inclusion_spot_check(
        UNIT, MomentWindow(2, 0.05, R=0.25), 8, 50, seed=42
    )
    assert report.r_check_skipped
    report2 = anchor_inclusion_spot_check(
        UNIT, MomentWindow(2, 0.05), 8, 50, seed=42
    )
    assert report2.r_check_skipped
