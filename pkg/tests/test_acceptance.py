"""Acceptance gate: one test per shipped claim, with stated tolerances.

Each test prints a single [PASS] line with the measured quantities when
it succeeds, so a verbose run reads as a checklist.  Reference values
come from the entropy oracles, never from the estimators under test.
"""

import itertools
import math
import time
from collections import Counter
from fractions import Fraction as F
from pathlib import Path

import pytest

from msmi.core import Alphabet, JointProbTensor, Permutation, ProbVector, apply_permutation
from msmi.continuous import (
    MomentWindow,
    moment_band_volume_estimate,
    sym_set_anchored_mc_estimate,
)
from msmi.discrete import (
    BandSpec,
    anchor_inclusion_check,
    stirling_max_excess,
    sym_set_brute_count,
    sym_set_log_lower_bound,
    sym_set_log_upper_bound,
    sym_set_mc_estimate,
    sym_set_membership,
    type_class_bound_violations,
    typical_set_log_count,
)
from msmi.entropy import TiltedUniformSquare, UniformInterval, discrete_mutual_information
from msmi.harness import (
    extrapolate_rate,
    load_config,
    emit_report,
    rows_to_csv,
    run_study,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

BITS = Alphabet(("0", "1"))
FAIR = ProbVector(BITS, (F(1, 2), F(1, 2)))
DIAG = JointProbTensor(BITS, 2, (F(1, 2), F(0), F(0), F(1, 2)))
CORRELATED = JointProbTensor(BITS, 2, (F(2, 5), F(1, 10), F(1, 10), F(2, 5)))
PRODUCT = JointProbTensor(BITS, 2, (F(1, 4), F(1, 4), F(1, 4), F(1, 4)))

# the per-variable band radius that realizes a stated joint tolerance:
# a joint cell moves at most d^(n-1) times the per-cell deviation
JOINT_DELTAS = {F(3, 20): F(3, 40), F(3, 10): F(3, 20)}


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _member_by_definition(sigmas, p, band):
    """Exact-rational unfolding of sym-set membership (unpruned)."""
    n_len, d, n_vars = band.N, p.d, p.arity
    sorted_seqs = []
    for comp in _compositions(n_len, d):
        seq = []
        for sym, count in enumerate(comp):
            seq.extend([sym] * count)
        sorted_seqs.append(tuple(seq))
    cells = list(itertools.product(range(d), repeat=n_vars))
    for combo in itertools.product(sorted_seqs, repeat=n_vars):
        ys = [apply_permutation(sigmas[i], combo[i]) for i in range(n_vars)]
        tally = Counter(zip(*ys))
        if all(
            abs(F(tally.get(cell, 0), n_len) - w) < band.delta
            for cell, w in zip(cells, p.weights)
        ):
            return True
    return False


def test_small_instance_counts_and_membership_match_definition():
    started = time.perf_counter()
    checked = 0
    for p in (DIAG, CORRELATED, PRODUCT):
        for stated in (F(3, 20), F(3, 10)):
            delta = JOINT_DELTAS[stated]
            for n_len in (2, 3, 4, 5):
                band = BandSpec(delta, n_len)
                brute = sym_set_brute_count(p, band)
                lower = sym_set_log_lower_bound(p, band)
                upper = sym_set_log_upper_bound(p, band)
                assert lower.exact and upper.exact and brute.exact
                assert lower.count <= brute.count <= upper.count
                perms = [
                    Permutation(images)
                    for images in itertools.permutations(range(n_len))
                ]
                for s1 in perms:
                    for s2 in perms:
                        got = sym_set_membership((s1, s2), p, band)
                        assert got == _member_by_definition((s1, s2), p, band)
                        checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    print(
        f"\n[PASS] exact oracle equivalence: {checked} sigma-tuples and "
        f"24 count brackets agree, {elapsed:.1f}s"
    )


def test_bound_rates_converge_to_mutual_information():
    started = time.perf_counter()
    config = load_config(str(CONFIG_DIR / "bounds_correlated.json"))
    rows = run_study(config)
    assert emit_report(rows, config) == 0
    reference = next(r.value for r in rows if r.estimator == "reference")
    assert reference == pytest.approx(discrete_mutual_information(CORRELATED))

    upper = [r for r in rows if r.estimator == "upper_count_rate"]
    lower = [r for r in rows if r.estimator == "lower_count_rate"]
    assert [r.N for r in upper] == [64, 128, 256, 512]
    assert abs(upper[-1].value - reference) <= 0.10
    assert abs(lower[-1].value - reference) <= 0.10
    gaps = [abs(u.value - l.value) for u, l in zip(upper, lower)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    fit_upper = extrapolate_rate(upper)
    fit_lower = extrapolate_rate(lower)
    assert abs(fit_upper.a - reference) <= 0.03
    assert abs(fit_lower.a - reference) <= 0.03
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    print(
        f"\n[PASS] bound-rate convergence: final distances "
        f"{abs(upper[-1].value - reference):.4f}/{abs(lower[-1].value - reference):.4f} <= 0.10, "
        f"gaps strictly shrink, intercept distances "
        f"{abs(fit_upper.a - reference):.4f}/{abs(fit_lower.a - reference):.4f} <= 0.03, "
        f"{elapsed:.1f}s"
    )


def test_independent_product_rate_vanishes():
    config = load_config(str(CONFIG_DIR / "bounds_product.json"))
    rows = run_study(config)
    assert emit_report(rows, config) == 0
    certified = [r for r in rows if r.estimator == "lower_count_rate"]
    values = [r.value for r in certified]
    assert [r.N for r in certified] == [64, 128, 256, 512]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] <= 0.06
    print(
        f"\n[PASS] independence limit: certified rate bound falls "
        f"{values[0]:.5f} -> {values[-1]:.5f} <= 0.06"
    )


def test_mc_estimate_matches_brute_force_share():
    started = time.perf_counter()
    n_len, trials = 8, 200000
    band = BandSpec(F(1, 8), n_len)
    brute = sym_set_brute_count(DIAG, band)
    total = math.factorial(n_len) ** 2
    share = brute.count / total
    estimate = sym_set_mc_estimate(DIAG, band, trials, seed=20260819)
    p_hat = estimate.successes / estimate.trials
    se = math.sqrt(share * (1.0 - share) / trials)
    assert abs(p_hat - share) <= 3.0 * se
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(
        f"\n[PASS] mc consistency: |{p_hat:.6f} - {share:.6f}| = "
        f"{abs(p_hat - share):.6f} <= 3se = {3 * se:.6f}, {elapsed:.1f}s"
    )


def test_typical_count_rate_rises_to_shannon_entropy():
    target = math.log(2.0)
    band_delta = F(1, 20)
    grid = list(range(20, 401, 20))
    values = []
    for n_len in grid:
        count = typical_set_log_count(FAIR, BandSpec(band_delta, n_len))
        values.append(count.log_value / n_len)
    assert all(b > a for a, b in zip(values, values[1:]))
    assert abs(values[-1] - target) <= 0.06
    for v, n_len in zip(values, grid):
        assert v <= target + 1e-12
        assert v <= target + (FAIR.d + 2) * math.log(n_len + 1) / n_len
    print(
        f"\n[PASS] typical-count growth: {values[0]:.4f} -> {values[-1]:.6f}, "
        f"final distance {target - values[-1]:.6f} <= 0.06, sup bound holds"
    )


def test_combinatorial_bound_suites_have_zero_violations():
    violations = type_class_bound_violations(4, 20)
    excess = stirling_max_excess(4, 200)
    assert violations == 0
    assert excess < 0.0
    print(
        f"\n[PASS] bound suites: 0 bracket violations (N<=20, d<=4), "
        f"worst correction slack {excess:.4f} < 0 (N<=200, d<=4)"
    )


def test_tilt_separates_moment_band_success_rates():
    window = MomentWindow(2, 0.05)
    n_len, trials, seed = 24, 100000, 20260819
    flat = sym_set_anchored_mc_estimate(
        TiltedUniformSquare(F(0)), window, n_len, trials, seed
    )
    tilted = sym_set_anchored_mc_estimate(
        TiltedUniformSquare(F(1, 2)), window, n_len, trials, seed
    )
    assert flat.successes / trials > tilted.successes / trials
    assert flat.ci_log_low > tilted.ci_log_high
    print(
        f"\n[PASS] tilt separation: success rates "
        f"{flat.successes / trials:.4f} > {tilted.successes / trials:.4f} "
        f"with disjoint 95% CIs"
    )


def test_unit_box_volume_rate_near_zero():
    started = time.perf_counter()
    spec = UniformInterval(F(0), F(1))
    window = MomentWindow(2, 0.1, R=1.0)
    estimate = moment_band_volume_estimate(
        spec, window, 24, 100000, seed=20260819, boxes=[(0.0, 1.0)]
    )
    assert abs(estimate.log_volume_rate - 0.0) <= 0.05
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(
        f"\n[PASS] unit-box volume probe: |{estimate.log_volume_rate:.5f}| "
        f"<= 0.05, {elapsed:.1f}s"
    )


def test_anchor_inclusion_report_is_clean():
    report = anchor_inclusion_check(DIAG, 4, F(9, 10))
    assert report.violations == ()
    assert report.swept == 24
    print(
        f"\n[PASS] anchor inclusion: swept {report.swept} tuples at "
        f"shrunken radius {report.delta_prime}, zero violations"
    )


def test_mc_studies_are_deterministic_and_thread_invariant():
    def stripped(rows):
        text = rows_to_csv(rows)
        out = []
        for line in text.splitlines():
            cells = line.split(",")
            del cells[10]
            out.append(",".join(cells))
        return "\n".join(out)

    checked = []
    for name in ("mc_diag", "cont_tilted", "bg_uniform_unit"):
        config = load_config(str(CONFIG_DIR / f"{name}.json"))
        first = stripped(run_study(config))
        second = stripped(run_study(config))
        threaded = stripped(run_study(config, threads=8))
        assert first == second
        assert first == threaded
        checked.append(name)
    print(
        f"\n[PASS] determinism: byte-identical reruns and serial == 8-thread "
        f"for {', '.join(checked)}"
    )
