"""Moment-band micro-state sets for bounded real random variables.

The continuous analogue of a type band constrains empirical moments: a
tuple of length-N real vectors is in the band when every mixed moment of
order up to m sits strictly within delta of the distribution's moment.
Anchor sequences (midpoint quantile vectors) stand in for sorted
witnesses, permutation tuples are scored by whether the permuted anchors
stay in the band, and a uniform-sampling estimator probes the Lebesgue
volume of the band itself.

Band targets are computed once as exact rationals; the comparisons run
in floating point with strict inequalities in a fixed evaluation order,
so results are deterministic for a given seed and independent of batch
or thread schedule.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from msmi.core import SortedVector, derive_seed
from msmi.discrete import MC_BATCH, LogProbEstimate, clopper_pearson_log
from msmi.entropy import DistributionSpec, MomentOracle

__all__ = [
    "MomentWindow",
    "QuantileSequence",
    "VolumeEstimate",
    "SpotCheckReport",
    "quantile_sequence",
    "joint_moment_membership",
    "sym_set_anchored_mc_estimate",
    "moment_band_volume_estimate",
    "anchor_inclusion_spot_check",
]


@dataclass(frozen=True)
class MomentWindow:
    """Moment-band parameters: max order m, radius delta, optional cutoff R."""

    m: int
    delta: float
    R: Optional[float] = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not float(self.delta) > 0:
            raise ValueError("delta must be positive")
        if self.R is not None and not float(self.R) > 0:
            raise ValueError("R must be positive when present")


@dataclass(frozen=True)
class QuantileSequence:
    """Sorted anchor sequence for one bounded variable at one length N.

    Entries are the inverse CDF at midpoint quantiles, so they are
    nondecreasing, stay inside the support interval, and their sup norm
    never exceeds the variable's.
    """

    spec: DistributionSpec
    values: SortedVector

    def __post_init__(self):
        lo, hi = self.spec.support(0)
        entries = self.values.entries
        if entries and not (
            float(lo) <= min(entries) and max(entries) <= float(hi)
        ):
            raise ValueError("anchor entries leave the support interval")
        sup = float(self.spec.sup_norm())
        if entries and max(abs(e) for e in entries) > sup:
            raise ValueError("anchor sup norm exceeds the variable's")

    @property
    def N(self) -> int:
        return len(self.values.entries)

    def as_array(self) -> np.ndarray:
        return np.array(self.values.entries, dtype=np.float64)


def quantile_sequence(spec: DistributionSpec, N: int) -> QuantileSequence:
    """Anchor sequence xi(N)_j = F^inverse((2j - 1) / (2N)) for one variable.

    Midpoint quantiles keep every entry strictly inside the support and
    drive all empirical moments to the distribution's moments at O(1/N).
    Works for any one-dimensional spec with an inverse_cdf (generalized
    inverse for atomic distributions).
    """
    if spec.arity != 1:
        raise ValueError("quantile sequences are per-variable; arity must be 1")
    if N < 1:
        raise ValueError("N must be >= 1")
    if not hasattr(spec, "inverse_cdf"):
        raise TypeError(
            f"{type(spec).__name__} does not expose a quantile function"
        )
    values = tuple(
        float(spec.inverse_cdf(Fraction(2 * j - 1, 2 * N))) for j in range(1, N + 1)
    )
    return QuantileSequence(spec, SortedVector(values))


def _multisets(n_vars: int, m: int):
    """Variable-index multisets of size 1..m in graded lexicographic order."""
    for k in range(1, m + 1):
        yield from itertools.combinations_with_replacement(range(n_vars), k)


def joint_moment_membership(
    seqs: Sequence[np.ndarray],
    oracle: MomentOracle,
    window: MomentWindow,
) -> bool:
    """Strict moment-band test for an already-permuted tuple of vectors.

    True iff every mixed empirical moment of order 1..m is strictly
    within delta of the oracle moment.  Pointwise products commute, so
    only index multisets are tested; evaluation short-circuits on the
    first violation, in graded lexicographic order.
    """
    n_vars = oracle.spec.arity
    if len(seqs) != n_vars:
        raise ValueError(f"expected {n_vars} vectors, got {len(seqs)}")
    arrays = [np.asarray(s, dtype=np.float64) for s in seqs]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) != 1:
        raise ValueError("all vectors must have the same length")
    delta = float(window.delta)
    for multiset in _multisets(n_vars, window.m):
        target = float(oracle.moment_of_indices(multiset))
        prod = arrays[multiset[0]].copy()
        for i in multiset[1:]:
            prod *= arrays[i]
        if not abs(float(prod.mean()) - target) < delta:
            return False
    return True


class _MomentBandKernel:
    """Precomputed constraint arrays for anchored moment-band membership.

    Single-variable moments are invariant under permuting that variable's
    entries, so they are evaluated once on the anchors; only multisets
    touching two or more variables are re-scored per permutation tuple.
    """

    def __init__(self, spec: DistributionSpec, window: MomentWindow, N: int):
        self.spec = spec
        self.window = window
        self.N = N
        self.n_vars = spec.arity
        self.delta = float(window.delta)
        self.anchors = [
            quantile_sequence(v, N).as_array() for v in spec.variables()
        ]
        oracle = MomentOracle(spec)
        self.invariant_ok = True
        self.cross = []
        for multiset in _multisets(self.n_vars, window.m):
            target = float(oracle.moment_of_indices(multiset))
            if len(set(multiset)) == 1:
                prod = self.anchors[multiset[0]].copy()
                for i in multiset[1:]:
                    prod *= self.anchors[i]
                if not abs(float(prod.mean()) - target) < self.delta:
                    self.invariant_ok = False
            else:
                self.cross.append((multiset, target))

    def batch_membership(
        self, inv_stacks: Sequence[Optional[np.ndarray]], batch: int
    ) -> np.ndarray:
        """Membership for a batch of tuples; inv_stacks[i] is (B, N) or None.

        None marks the identity for that variable.  Row results do not
        depend on how the batch was split.
        """
        if not self.invariant_ok:
            return np.zeros(batch, dtype=bool)
        ok = np.ones(batch, dtype=bool)
        permuted = [
            self.anchors[i][None, :] if inv is None else self.anchors[i][inv]
            for i, inv in enumerate(inv_stacks)
        ]
        for multiset, target in self.cross:
            prod = None
            for i in multiset:
                block = permuted[i]
                prod = block.astype(np.float64) if prod is None else prod * block
            emp = prod.mean(axis=1)
            if emp.shape[0] == 1:
                emp = np.broadcast_to(emp, (batch,))
            ok &= np.abs(emp - target) < self.delta
            if not ok.any():
                break
        return ok


def sym_set_anchored_mc_estimate(
    spec: DistributionSpec,
    window: MomentWindow,
    N: int,
    trials: int,
    seed: int,
    threads: int = 1,
) -> LogProbEstimate:
    """Share of permutation tuples keeping the permuted anchors in the band.

    Builds the per-variable anchor sequences, fixes sigma_1 = identity
    (joint moments are invariant under a common left factor), draws the
    remaining permutations per trial from derive_seed(seed, trial), and
    accumulates successes as exact integers, so the estimate is identical
    for any thread count or batch split.  With one variable, membership
    does not depend on the permutation at all and the success rate is
    exactly 0 or 1.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kernel = _MomentBandKernel(spec, window, N)
    n_vars = spec.arity

    if n_vars == 1:
        member = bool(kernel.batch_membership([None], 1)[0])
        return clopper_pearson_log(trials if member else 0, trials)

    def run_chunk(start: int, stop: int) -> int:
        count = stop - start
        stacks = [np.empty((count, N), dtype=np.int64) for _ in range(n_vars - 1)]
        for row, trial in enumerate(range(start, stop)):
            gen = np.random.Generator(np.random.PCG64(derive_seed(seed, trial)))
            for i in range(n_vars - 1):
                stacks[i][row] = np.argsort(gen.permutation(N))
        ok = kernel.batch_membership([None] + stacks, count)
        return int(ok.sum())

    spans = [
        (start, min(start + MC_BATCH, trials))
        for start in range(0, trials, MC_BATCH)
    ]
    if threads <= 1:
        successes = sum(run_chunk(a, b) for a, b in spans)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            successes = sum(pool.map(lambda s: run_chunk(*s), spans))
    return clopper_pearson_log(successes, trials)


@dataclass(frozen=True)
class VolumeEstimate:
    """(1/N) log Lebesgue volume of the boxed moment band, with CI."""

    log_volume_rate: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("need 0 <= successes <= trials")
        if not math.isfinite(self.ci_high):
            raise ValueError("ci_high must be finite")


def moment_band_volume_estimate(
    spec: DistributionSpec,
    window: MomentWindow,
    N: int,
    trials: int,
    seed: int,
    threads: int = 1,
    boxes: Optional[Sequence[tuple]] = None,
) -> VolumeEstimate:
    """Uniform-sampling estimate of the moment band's log-volume rate.

    Each trial draws one length-N vector per variable uniformly from its
    sampling box and tests all moment constraints up to order m.  The
    returned rate is sum_i log(width_i) + (1/N) log p_hat, the exact
    normalization for the band restricted to the boxes.  Boxes default
    to [-R, R] per variable; passing the known support instead trades the
    full cutoff box for a vastly higher acceptance rate.  Every box must
    sit inside [-R, R] and R must dominate every variable's sup norm, so
    samples always respect the cutoff.  Zero acceptances give a -inf rate
    with a finite upper confidence end.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if window.R is None:
        raise ValueError("volume estimation needs a cutoff R in the window")
    r_cut = float(window.R)
    variables = spec.variables()
    n_vars = spec.arity
    sup = max(float(v.sup_norm()) for v in variables)
    if r_cut < sup:
        raise ValueError(
            f"cutoff R = {r_cut} is below the largest variable sup norm {sup}"
        )
    if boxes is None:
        boxes = [(-r_cut, r_cut)] * n_vars
    if len(boxes) != n_vars:
        raise ValueError(f"expected {n_vars} sampling boxes, got {len(boxes)}")
    lows = [float(a) for a, _ in boxes]
    highs = [float(b) for _, b in boxes]
    for lo, hi in zip(lows, highs):
        if not (-r_cut <= lo < hi <= r_cut):
            raise ValueError("each sampling box must be nondegenerate inside [-R, R]")

    oracle = MomentOracle(spec)
    delta = float(window.delta)
    constraints = [
        (ms, float(oracle.moment_of_indices(ms)))
        for ms in _multisets(n_vars, window.m)
    ]

    def run_chunk(start: int, stop: int) -> int:
        count = stop - start
        xs = [np.empty((count, N), dtype=np.float64) for _ in range(n_vars)]
        for row, trial in enumerate(range(start, stop)):
            gen = np.random.Generator(np.random.PCG64(derive_seed(seed, trial)))
            for i in range(n_vars):
                xs[i][row] = gen.uniform(lows[i], highs[i], N)
        ok = np.ones(count, dtype=bool)
        for multiset, target in constraints:
            prod = xs[multiset[0]].copy()
            for i in multiset[1:]:
                prod *= xs[i]
            ok &= np.abs(prod.mean(axis=1) - target) < delta
            if not ok.any():
                break
        return int(ok.sum())

    spans = [
        (start, min(start + MC_BATCH, trials))
        for start in range(0, trials, MC_BATCH)
    ]
    if threads <= 1:
        successes = sum(run_chunk(a, b) for a, b in spans)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            successes = sum(pool.map(lambda s: run_chunk(*s), spans))

    estimate = clopper_pearson_log(successes, trials)
    width_term = sum(math.log(hi - lo) for lo, hi in zip(lows, highs))
    return VolumeEstimate(
        log_volume_rate=width_term + estimate.log_p_hat / N,
        ci_low=width_term + estimate.ci_log_low / N,
        ci_high=width_term + estimate.ci_log_high / N,
        successes=successes,
        trials=trials,
    )


@dataclass(frozen=True)
class SpotCheckReport:
    """Sampled verification that anchored membership implies witnessed membership.

    An anchored member tuple must itself witness the unconstrained sorted
    variant (the anchors are sorted vectors), and must respect the R
    cutoff when R is usable.  ``violations`` lists offending trial
    indices; ``r_check_skipped`` is set when R is absent or below the
    variables' sup norm, in which case the cutoff leg is not claimed.
    """

    tuples_checked: int
    members: int
    violations: tuple
    r_check_skipped: bool


def anchor_inclusion_spot_check(
    spec: DistributionSpec,
    window: MomentWindow,
    N: int,
    trials: int,
    seed: int,
) -> SpotCheckReport:
    """Sample permutation tuples and verify the forward inclusion on members.

    For each sampled tuple that the batched kernel accepts, the permuted
    anchors are re-tested through the definitional membership path, and
    their sup norms are compared against R.  Any disagreement lands in
    the violation list (none are expected: the anchors are their own
    witnesses).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kernel = _MomentBandKernel(spec, window, N)
    oracle = MomentOracle(spec)
    n_vars = spec.arity
    anchors = kernel.anchors
    sup = max(float(np.abs(a).max()) for a in anchors)
    r_usable = window.R is not None and float(window.R) >= sup

    members = 0
    violations = []
    for start in range(0, trials, MC_BATCH):
        stop = min(start + MC_BATCH, trials)
        count = stop - start
        stacks = [
            np.empty((count, N), dtype=np.int64) for _ in range(max(n_vars - 1, 0))
        ]
        for row, trial in enumerate(range(start, stop)):
            gen = np.random.Generator(np.random.PCG64(derive_seed(seed, trial)))
            for i in range(n_vars - 1):
                stacks[i][row] = np.argsort(gen.permutation(N))
        ok = kernel.batch_membership([None] + stacks, count)
        for row in np.nonzero(ok)[0]:
            members += 1
            permuted = [anchors[0]] + [
                anchors[i + 1][stacks[i][row]] for i in range(n_vars - 1)
            ]
            witnessed = joint_moment_membership(permuted, oracle, window)
            within_cut = (not r_usable) or all(
                float(np.abs(y).max()) <= float(window.R) for y in permuted
            )
            if not (witnessed and within_cut):
                violations.append(start + int(row))
    return SpotCheckReport(
        tuples_checked=trials,
        members=members,
        violations=tuple(violations),
        r_check_skipped=not r_usable,
    )
