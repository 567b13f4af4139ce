"""Type-band micro-state sets over finite alphabets.

A micro-state band around a joint distribution p is the set of joint types
within a strict l-infinity radius delta of p.  The central object is the
"sym set": permutation n-tuples (sigma_1, ..., sigma_n) for which some
tuple of sorted witness sequences lands in the band after permuting.  This
module counts bands exactly, brackets the sym-set cardinality with
certified log-domain upper and lower bounds, estimates its normalized
measure by Monte Carlo, and brute-forces small instances as a ground-truth
oracle.

All band comparisons are strict inequalities decided in exact rational
(then integer) arithmetic; floats appear only in reported log values.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from msmi.core import (
    EXACT_FACTORIAL_THRESHOLD,
    BudgetExceededError,
    JointProbTensor,
    JointType,
    LogCount,
    Permutation,
    ProbVector,
    SortedVector,
    TypeVector,
    derive_seed,
    log_sum_exp,
)

__all__ = [
    "BandSpec",
    "MarginalTypeTuple",
    "LogProbEstimate",
    "NTooSmallError",
    "InclusionReport",
    "enumerate_band_types",
    "typical_set_log_count",
    "sym_set_membership",
    "sym_set_brute_count",
    "sym_set_log_upper_bound",
    "sym_set_log_lower_bound",
    "sym_set_mc_estimate",
    "sym_set_rate",
    "estimate_rate",
    "discrete_quantile_sequence",
    "anchor_inclusion_check",
    "clopper_pearson_log",
    "type_class_bound_violations",
    "stirling_max_excess",
    "log_factorial",
]

DEFAULT_BRUTE_BUDGET = 40_000_000
MC_BATCH = 4096


class NTooSmallError(ValueError):
    """N is too small for the anchor sequences to meet the shrunk band."""


def _as_exact(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError(
            f"band radii must be exact rationals, got float {value!r}"
        )
    return Fraction(value)


@dataclass(frozen=True)
class BandSpec:
    """Strict l-infinity band of rational radius delta at sequence length N."""

    delta: Fraction
    N: int

    def __post_init__(self):
        object.__setattr__(self, "delta", _as_exact(self.delta))
        object.__setattr__(self, "N", int(self.N))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.N < 1:
            raise ValueError("N must be >= 1")


@dataclass(frozen=True)
class MarginalTypeTuple:
    """One type per variable, all of the same sequence length."""

    types: tuple

    def __post_init__(self):
        types = tuple(self.types)
        object.__setattr__(self, "types", types)
        if not types:
            raise ValueError("need at least one type")
        if len({t.N for t in types}) != 1:
            raise ValueError("all types must share one N")


@dataclass(frozen=True)
class LogProbEstimate:
    """Monte Carlo success-probability estimate reported on log scale."""

    successes: int
    trials: int
    log_p_hat: float
    ci_log_low: float
    ci_log_high: float
    confidence: float = 0.95

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("need 0 <= successes <= trials")


def clopper_pearson_log(
    successes: int, trials: int, confidence: float = 0.95
) -> LogProbEstimate:
    """Exact binomial (Clopper-Pearson) interval, transported to log scale.

    Interior cases use the standard two-sided beta quantiles.  At the
    boundaries the interval is one-sided at the same level: zero successes
    report log_p_hat = -inf with ci_high = log(1 - alpha^(1/trials)), and
    all-successes mirrors that with ci_low = log(alpha)/trials.  The
    ci_high value is always finite, so downstream rate arithmetic never
    sees NaN.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    alpha = 1.0 - confidence
    if successes == 0:
        # P(no successes) = (1-p)^T = alpha  =>  p = 1 - alpha^(1/T)
        ci_high = math.log(-math.expm1(math.log(alpha) / trials))
        return LogProbEstimate(
            successes, trials, float("-inf"), float("-inf"), ci_high, confidence
        )
    if successes == trials:
        return LogProbEstimate(
            successes, trials, 0.0, math.log(alpha) / trials, 0.0, confidence
        )
    p_lo = stats.beta.ppf(alpha / 2, successes, trials - successes + 1)
    p_hi = stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes)
    return LogProbEstimate(
        successes,
        trials,
        math.log(successes / trials),
        math.log(p_lo),
        math.log(p_hi),
        confidence,
    )


# ---------------------------------------------------------------------------
# band enumeration and typical-set counting
# ---------------------------------------------------------------------------


def _count_bounds(weights: Sequence[Fraction], band: BandSpec, radius=None):
    """Per-cell integer count bounds for |c/N - p| < radius, strict.

    Returns (lo, hi) int64 arrays; cell z admits counts lo[z]..hi[z]
    inclusive.  lo > hi marks an infeasible cell.
    """
    radius = band.delta if radius is None else radius
    n_len = band.N
    lo = np.empty(len(weights), dtype=np.int64)
    hi = np.empty(len(weights), dtype=np.int64)
    for z, p in enumerate(weights):
        low_edge = n_len * (Fraction(p) - radius)
        high_edge = n_len * (Fraction(p) + radius)
        lo[z] = max(0, math.floor(low_edge) + 1)  # smallest int > low_edge
        hi[z] = min(n_len, math.ceil(high_edge) - 1)  # largest int < high_edge
    return lo, hi


def _enumerate_counts(lo: np.ndarray, hi: np.ndarray, total: int) -> np.ndarray:
    """All integer vectors with lo <= c <= hi (cellwise) and sum(c) = total.

    Depth-first with suffix-sum pruning; returns an (M, len(lo)) int64
    array, possibly with M = 0.
    """
    k = len(lo)
    if np.any(lo > hi):
        return np.empty((0, k), dtype=np.int64)
    suffix_lo = np.concatenate([np.cumsum(lo[::-1])[::-1], [0]])
    suffix_hi = np.concatenate([np.cumsum(hi[::-1])[::-1], [0]])
    out = []
    partial = np.zeros(k, dtype=np.int64)

    def descend(cell: int, remaining: int):
        if cell == k:
            out.append(partial.copy())
            return
        c_min = max(lo[cell], remaining - suffix_hi[cell + 1])
        c_max = min(hi[cell], remaining - suffix_lo[cell + 1])
        for c in range(int(c_min), int(c_max) + 1):
            partial[cell] = c
            descend(cell + 1, remaining - c)

    descend(0, total)
    if not out:
        return np.empty((0, k), dtype=np.int64)
    return np.stack(out)


def enumerate_band_types(p, band: BandSpec):
    """All types strictly within delta of p, cellwise, decided in rationals.

    Accepts a ProbVector (returns TypeVector list) or a JointProbTensor
    (returns JointType list).
    """
    lo, hi = _count_bounds(p.weights, band)
    rows = _enumerate_counts(lo, hi, band.N)
    if isinstance(p, ProbVector):
        return [TypeVector(p.alphabet, tuple(int(c) for c in row)) for row in rows]
    if isinstance(p, JointProbTensor):
        return [
            JointType(p.alphabet, p.arity, tuple(int(c) for c in row))
            for row in rows
        ]
    raise TypeError(f"unsupported distribution object {type(p).__name__}")


def log_factorial(n: int) -> float:
    """log(n!) — exact-integer log below the factorial threshold."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n <= EXACT_FACTORIAL_THRESHOLD:
        return math.log(math.factorial(n)) if n > 1 else 0.0
    return math.lgamma(n + 1)


def _log_factorial_table(n_max: int) -> np.ndarray:
    """log(c!) for c = 0..n_max, exact-integer logs in the small range."""
    table = np.zeros(n_max + 1, dtype=np.float64)
    for c in range(2, n_max + 1):
        table[c] = log_factorial(c)
    return table


def _exact_multinomial(counts) -> int:
    value = math.factorial(int(sum(counts)))
    for c in counts:
        value //= math.factorial(int(c))
    return value


def typical_set_log_count(p: ProbVector, band: BandSpec) -> LogCount:
    """log of the number of length-N sequences whose type is in the band.

    Exact integer summation of multinomial coefficients for N below the
    factorial threshold; log-sum-exp over log-gamma terms above it.  An
    empty band gives a -inf LogCount with exact count 0.
    """
    lo, hi = _count_bounds(p.weights, band)
    rows = _enumerate_counts(lo, hi, band.N)
    if rows.shape[0] == 0:
        return LogCount.from_count(0)
    if band.N <= EXACT_FACTORIAL_THRESHOLD:
        return LogCount.from_count(
            sum(_exact_multinomial(row) for row in rows)
        )
    logfact = _log_factorial_table(band.N)
    log_terms = log_factorial(band.N) - logfact[rows].sum(axis=1)
    return LogCount.from_log(log_sum_exp(log_terms))


# ---------------------------------------------------------------------------
# sym-set membership kernel
# ---------------------------------------------------------------------------


class _SymBandKernel:
    """Precomputed arrays answering sym-set membership at one (p, band).

    Membership asks: do sorted witnesses x_i exist with the joint type of
    (sigma_1(x_1), ..., sigma_n(x_n)) inside the band?  A sorted witness
    is determined by its type, so the search space per variable is a list
    of candidate types; pruning restricts it to types within d^(n-1)*delta
    of the marginal (sound: an in-band joint type forces each marginal
    that close).  The kernel consumes *inverse* permutation arrays because
    the coordinate action reads sequences through sigma^(-1).
    """

    def __init__(
        self,
        p: JointProbTensor,
        band: BandSpec,
        prune: bool = True,
        candidate_types: Optional[Sequence[Sequence[TypeVector]]] = None,
    ):
        self.p = p
        self.band = band
        self.d = p.d
        self.n = p.arity
        self.N = band.N
        self.joint_lo, self.joint_hi = _count_bounds(p.weights, band)
        self.feasible = bool(np.all(self.joint_lo <= self.joint_hi))
        self.powers = [self.d ** (self.n - 1 - i) for i in range(self.n)]
        self.cells = self.d**self.n

        if candidate_types is not None:
            per_var_counts = [
                np.array([t.counts for t in var_types], dtype=np.int64)
                for var_types in candidate_types
            ]
        else:
            per_var_counts = []
            for i in range(self.n):
                marg = p.marginal(i)
                if prune:
                    radius = band.delta * self.d ** (self.n - 1)
                    lo, hi = _count_bounds(marg.weights, band, radius=radius)
                else:
                    lo = np.zeros(self.d, dtype=np.int64)
                    hi = np.full(self.d, self.N, dtype=np.int64)
                per_var_counts.append(_enumerate_counts(lo, hi, self.N))

        # one sorted symbol row per candidate type
        self.candidate_counts = per_var_counts
        self.candidate_syms = []
        for counts in per_var_counts:
            if counts.shape[0] == 0:
                self.feasible = False
                self.candidate_syms.append(
                    np.empty((0, self.N), dtype=np.int64)
                )
                continue
            rows = np.repeat(
                np.tile(np.arange(self.d, dtype=np.int64), (counts.shape[0], 1)),
                counts.reshape(-1),
                axis=None,
            ).reshape(counts.shape[0], self.N)
            self.candidate_syms.append(rows)

    # -- single-tuple queries ------------------------------------------------

    def membership(self, inv_arrays: Sequence[Optional[np.ndarray]]) -> bool:
        return self.membership_witness(inv_arrays) is not None

    def membership_witness(
        self, inv_arrays: Sequence[Optional[np.ndarray]]
    ) -> Optional[MarginalTypeTuple]:
        """First witnessing tuple of marginal types, or None."""
        if not self.feasible:
            return None
        permuted = []
        for i in range(self.n):
            syms = self.candidate_syms[i]
            inv = inv_arrays[i]
            permuted.append(syms if inv is None else syms[:, inv])
        for combo in itertools.product(*(range(s.shape[0]) for s in permuted)):
            code = sum(
                permuted[i][combo[i]] * self.powers[i] for i in range(self.n)
            )
            counts = np.bincount(code, minlength=self.cells)
            if np.all((counts >= self.joint_lo) & (counts <= self.joint_hi)):
                alphabet = self.p.alphabet
                return MarginalTypeTuple(
                    tuple(
                        TypeVector(
                            alphabet,
                            tuple(int(c) for c in self.candidate_counts[i][combo[i]]),
                        )
                        for i in range(self.n)
                    )
                )
        return None

    # -- batched queries -----------------------------------------------------

    def batch_membership(
        self, inv_stacks: Sequence[Optional[np.ndarray]], batch: int
    ) -> np.ndarray:
        """Membership for a batch of tuples; inv_stacks[i] is (B, N) or None.

        None means the identity permutation for that variable across the
        whole batch.  Per-row results are independent of the batch split.
        """
        member = np.zeros(batch, dtype=bool)
        if not self.feasible:
            return member
        permuted = []
        for i in range(self.n):
            syms = self.candidate_syms[i]
            inv = inv_stacks[i]
            if inv is None:
                # (M_i, 1, N) broadcasts against the batch axis
                permuted.append(syms[:, None, :])
            else:
                # fancy-index each candidate row by every tuple's inverse
                permuted.append(syms[:, inv])
        offsets = (np.arange(batch, dtype=np.int64) * self.cells)[:, None]
        for combo in itertools.product(
            *(range(s.shape[0]) for s in self.candidate_syms)
        ):
            code = None
            for i in range(self.n):
                block = permuted[i][combo[i]]
                term = block * self.powers[i]
                code = term if code is None else code + term
            if code.shape[0] == 1:  # every variable was identity
                code = np.broadcast_to(code, (batch, self.N))
            counts = np.bincount(
                (code + offsets).ravel(), minlength=batch * self.cells
            ).reshape(batch, self.cells)
            ok = np.all(
                (counts >= self.joint_lo) & (counts <= self.joint_hi), axis=1
            )
            member |= ok
        return member


def _validate_tuple(p: JointProbTensor, band: BandSpec, sigmas) -> list:
    if len(sigmas) != p.arity:
        raise ValueError(
            f"expected {p.arity} permutations, got {len(sigmas)}"
        )
    inv_arrays = []
    for sigma in sigmas:
        if sigma.n != band.N:
            raise ValueError(
                f"permutation size {sigma.n} does not match N = {band.N}"
            )
        inv_arrays.append(np.array(sigma.inverse_images, dtype=np.int64))
    return inv_arrays


@lru_cache(maxsize=128)
def _cached_kernel(p: JointProbTensor, band: BandSpec, prune: bool) -> _SymBandKernel:
    # kernels are read-only after construction, so sharing them across
    # repeated single-tuple queries (sweeps) is safe
    return _SymBandKernel(p, band, prune=prune)


def sym_set_membership(
    sigmas: Sequence[Permutation],
    p: JointProbTensor,
    band: BandSpec,
    prune: bool = True,
) -> bool:
    """Is (sigma_1, ..., sigma_n) in the sym set of (p, band)?

    True iff sorted witnesses x_i exist whose permuted tuple has joint
    type strictly within delta of p cellwise.  ``prune=False`` disables
    the marginal-band candidate restriction and searches every type (the
    definition-unfolding form; slower, used for cross-validation).
    """
    inv_arrays = _validate_tuple(p, band, sigmas)
    return _cached_kernel(p, band, prune).membership(inv_arrays)


def sym_set_membership_witness(
    sigmas: Sequence[Permutation], p: JointProbTensor, band: BandSpec
) -> Optional[MarginalTypeTuple]:
    """Witnessing marginal types for membership, or None if not a member."""
    inv_arrays = _validate_tuple(p, band, sigmas)
    return _cached_kernel(p, band, True).membership_witness(inv_arrays)


# ---------------------------------------------------------------------------
# brute-force count, bounds, Monte Carlo
# ---------------------------------------------------------------------------


def _perm_tuple_stream(n_vars: int, N: int, chunk: int):
    """Chunks of exhaustive (sigma_2..sigma_n) inverse stacks.

    S_N is closed under inversion, so enumerating all permutation arrays
    and feeding them directly as inverses sweeps exactly the same set of
    tuples; this skips N! argsorts.  Yields lists of (B, N) arrays, one
    per non-identity variable.
    """
    if n_vars == 1:
        yield []
        return
    perm_iter = itertools.permutations(range(N))
    if n_vars == 2:
        while True:
            block = list(itertools.islice(perm_iter, chunk))
            if not block:
                return
            yield [np.array(block, dtype=np.int64)]
    else:
        all_perms = list(perm_iter)
        tuple_iter = itertools.product(all_perms, repeat=n_vars - 1)
        while True:
            block = list(itertools.islice(tuple_iter, chunk))
            if not block:
                return
            stacks = [
                np.array([row[i] for row in block], dtype=np.int64)
                for i in range(n_vars - 1)
            ]
            yield stacks


def sym_set_brute_count(
    p: JointProbTensor,
    band: BandSpec,
    budget: int = DEFAULT_BRUTE_BUDGET,
) -> LogCount:
    """Exact sym-set cardinality by exhaustive enumeration.

    Fixes sigma_1 = identity and multiplies the member count by N!:
    membership is invariant under a common left factor, so the tuples
    with sigma_1 = identity represent every coset exactly once.  Refuses
    (rather than degrades) when (N!)^(n-1) exceeds the budget.
    """
    n_vars, N = p.arity, band.N
    work = math.factorial(N) ** (n_vars - 1)
    if work > budget:
        raise BudgetExceededError(
            f"brute-force enumeration needs {work} membership tests, "
            f"over the budget of {budget}"
        )
    kernel = _SymBandKernel(p, band)
    members = 0
    for stacks in _perm_tuple_stream(n_vars, N, MC_BATCH):
        if not stacks:  # n = 1: single empty tuple, identity only
            members += int(kernel.membership([None]))
            continue
        batch = stacks[0].shape[0]
        ok = kernel.batch_membership([None] + stacks, batch)
        members += int(ok.sum())
    return LogCount.from_count(members * math.factorial(N))


def sym_set_log_upper_bound(p: JointProbTensor, band: BandSpec) -> LogCount:
    """Certified upper bound: band multinomial mass times coset-size maxima.

    Every member tuple factors through a joint type in the band and one
    coset of the per-variable stabilizer subgroups; the bound multiplies
    the total sequence count of in-band joint types by the largest
    possible stabilizer product over marginal candidates.  Exact integer
    when N is below the factorial threshold.
    """
    N = band.N
    joint_rows = _enumerate_counts(*_count_bounds(p.weights, band), N)
    if joint_rows.shape[0] == 0:
        return LogCount.from_count(0)
    radius = band.delta * p.d ** (p.arity - 1)
    marg_rows = [
        _enumerate_counts(
            *_count_bounds(p.marginal(i).weights, band, radius=radius), N
        )
        for i in range(p.arity)
    ]
    if N <= EXACT_FACTORIAL_THRESHOLD:
        joint_sum = sum(_exact_multinomial(row) for row in joint_rows)
        bound = joint_sum
        for rows in marg_rows:
            best = max(
                math.prod(math.factorial(int(c)) for c in row) for row in rows
            )
            bound *= best
        return LogCount.from_count(bound)
    logfact = _log_factorial_table(N)
    log_joint = log_sum_exp(log_factorial(N) - logfact[joint_rows].sum(axis=1))
    total = log_joint
    for rows in marg_rows:
        total += float(logfact[rows].sum(axis=1).max())
    return LogCount.from_log(total)


def _marginal_count_keys(rows: np.ndarray, d: int, n: int) -> np.ndarray:
    """Per-row marginal count vectors, concatenated: (M, n*d)."""
    tensor = rows.reshape(rows.shape[0], *([d] * n))
    outs = []
    for i in range(n):
        axes = tuple(a for a in range(1, n + 1) if a != i + 1)
        outs.append(tensor.sum(axis=axes))
    return np.concatenate(outs, axis=1)


def sym_set_log_lower_bound(p: JointProbTensor, band: BandSpec) -> LogCount:
    """Certified lower bound: best single marginal-type tuple's coset mass.

    For a fixed tuple of marginal types, distinct permutation cosets are
    disjoint, so the sequence count of in-band joint types with exactly
    those marginals, times the stabilizer product, counts distinct member
    tuples.  The bound maximizes over marginal-type tuples.  Exact
    integer when N is below the factorial threshold.
    """
    N, d, n_vars = band.N, p.d, p.arity
    joint_rows = _enumerate_counts(*_count_bounds(p.weights, band), N)
    if joint_rows.shape[0] == 0:
        return LogCount.from_count(0)
    keys = _marginal_count_keys(joint_rows, d, n_vars)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    n_groups = int(inverse.max()) + 1
    if N <= EXACT_FACTORIAL_THRESHOLD:
        best = 0
        for group in range(n_groups):
            rows = joint_rows[inverse == group]
            group_sum = sum(_exact_multinomial(row) for row in rows)
            stabilizer = math.prod(
                math.factorial(int(c)) for c in keys[inverse == group][0]
            )
            best = max(best, group_sum * stabilizer)
        return LogCount.from_count(best)
    logfact = _log_factorial_table(N)
    log_terms = log_factorial(N) - logfact[joint_rows].sum(axis=1)
    best_log = float("-inf")
    for group in range(n_groups):
        mask = inverse == group
        group_log = log_sum_exp(log_terms[mask])
        stab_log = float(logfact[keys[mask][0]].sum())
        best_log = max(best_log, group_log + stab_log)
    return LogCount.from_log(best_log)


def sym_set_rate(log_count: LogCount, N: int, arity: int) -> float:
    """-(1/N) log of the sym-set share of S_N^arity (nats).

    This is the quantity whose large-N limit recovers mutual information;
    a zero count maps to +inf.
    """
    if log_count.log_value == float("-inf"):
        return float("inf")
    return -(log_count.log_value - arity * log_factorial(N)) / N


def estimate_rate(estimate: LogProbEstimate, N: int) -> tuple:
    """(rate, ci_low, ci_high) for -(1/N) log p from a LogProbEstimate.

    The probability interval flips under negation: the rate's lower end
    comes from ci_log_high.  A zero-success estimate has rate +inf with a
    finite lower end from the one-sided probability bound.
    """
    rate = (
        float("inf")
        if estimate.log_p_hat == float("-inf")
        else -estimate.log_p_hat / N
    )
    lo = -estimate.ci_log_high / N
    hi = (
        float("inf")
        if estimate.ci_log_low == float("-inf")
        else -estimate.ci_log_low / N
    )
    return rate, lo, hi


def sym_set_mc_estimate(
    p: JointProbTensor,
    band: BandSpec,
    trials: int,
    seed: int,
    threads: int = 1,
) -> LogProbEstimate:
    """Monte Carlo estimate of the sym set's share of S_N^n.

    sigma_1 is fixed to the identity (common-left invariance makes this
    unbiased) and each trial draws the remaining n-1 permutations from
    its own generator seeded with derive_seed(seed, trial).  Successes
    accumulate as exact integers, so the result is bit-identical for any
    thread count or batch split.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_vars, N = p.arity, band.N
    kernel = _SymBandKernel(p, band)

    def run_chunk(start: int, stop: int) -> int:
        count = stop - start
        if n_vars == 1:
            return count * int(kernel.membership([None]))
        stacks = [
            np.empty((count, N), dtype=np.int64) for _ in range(n_vars - 1)
        ]
        for row, trial in enumerate(range(start, stop)):
            gen = np.random.Generator(np.random.PCG64(derive_seed(seed, trial)))
            for i in range(n_vars - 1):
                images = gen.permutation(N)
                stacks[i][row] = np.argsort(images)
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


# ---------------------------------------------------------------------------
# anchor sequences and the shrunk-band inclusion check
# ---------------------------------------------------------------------------


def discrete_quantile_sequence(p: ProbVector, N: int) -> SortedVector:
    """Sorted length-N sequence whose type is the rounded version of N*p.

    Largest-remainder rounding: floor every N*p(t), then hand the
    leftover units to the cells with the largest remainders (ties to the
    lower symbol index).  The resulting type is within 1/N of p in every
    cell, comfortably inside the d/N contract.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    exact = [N * Fraction(w) for w in p.weights]
    base = [math.floor(e) for e in exact]
    leftover = N - sum(base)
    remainders = sorted(
        range(p.d), key=lambda t: (exact[t] - base[t], -t), reverse=True
    )
    counts = list(base)
    for t in remainders[:leftover]:
        counts[t] += 1
    entries = np.repeat(np.arange(p.d, dtype=np.int64), counts)
    return SortedVector(tuple(int(e) for e in entries), alphabet=p.alphabet)


@dataclass(frozen=True)
class InclusionReport:
    """Outcome of the shrunk-band inclusion sweep.

    ``violations`` holds (sigma_images_tuple, MarginalTypeTuple) pairs for
    any tuple that is in the shrunk-band sym set but fails the anchored
    membership at full radius; empty means the inclusion held everywhere.
    """

    N: int
    delta: Fraction
    delta_prime: Fraction
    swept: int
    members_small: int
    violations: tuple
    anchor_types: tuple


def anchor_inclusion_check(
    p: JointProbTensor,
    N: int,
    delta,
    budget: int = DEFAULT_BRUTE_BUDGET,
) -> InclusionReport:
    """Sweep the shrunk-band sym set and test anchored membership at delta.

    The shrunk radius is delta' = delta / (3 n d^(n+1)).  Anchors are the
    per-marginal quantile sequences; if any anchor's type misses its
    marginal by delta' or more the check refuses with NTooSmallError (the
    sweep would be comparing the wrong objects - this is the finite-N
    entry condition, met for all large N).  Membership on both sides is
    invariant under a common left factor, so the sweep fixes sigma_1 =
    identity; a violation would still be witnessed.
    """
    delta = _as_exact(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    n_vars, d = p.arity, p.d
    delta_prime = delta / (3 * n_vars * d ** (n_vars + 1))
    work = math.factorial(N) ** (n_vars - 1)
    if work > budget:
        raise BudgetExceededError(
            f"inclusion sweep needs {work} membership tests, over the "
            f"budget of {budget}"
        )
    anchors = [
        discrete_quantile_sequence(p.marginal(i), N) for i in range(n_vars)
    ]
    anchor_types = tuple(a.type_of() for a in anchors)
    for i, anchor_type in enumerate(anchor_types):
        marg = p.marginal(i)
        for t in range(d):
            if abs(anchor_type.frequency(t) - marg.weights[t]) >= delta_prime:
                raise NTooSmallError(
                    f"N = {N} is too small for delta = {delta}: anchor type "
                    f"for variable {i} misses its marginal by >= delta' = "
                    f"{delta_prime} at symbol {t}"
                )
    kernel_small = _SymBandKernel(p, BandSpec(delta_prime, N))
    kernel_anchor = _SymBandKernel(
        p, BandSpec(delta, N), candidate_types=[(t,) for t in anchor_types]
    )
    swept = 0
    members_small = 0
    violations = []
    base = list(itertools.permutations(range(N)))
    for tail in itertools.product(base, repeat=n_vars - 1):
        swept += 1
        # exhaustive sweep: permutation arrays are consumed as inverses
        inv_arrays = [None] + [np.array(t, dtype=np.int64) for t in tail]
        witness = kernel_small.membership_witness(inv_arrays)
        if witness is None:
            continue
        members_small += 1
        if not kernel_anchor.membership(inv_arrays):
            sigma_images = tuple(
                tuple(int(j) for j in np.argsort(np.array(t))) for t in tail
            )
            violations.append((sigma_images, witness))
    return InclusionReport(
        N=N,
        delta=delta,
        delta_prime=delta_prime,
        swept=swept,
        members_small=members_small,
        violations=tuple(violations),
        anchor_types=anchor_types,
    )


# ---------------------------------------------------------------------------
# exhaustive property suites (type-class bound, Stirling correction)
# ---------------------------------------------------------------------------


def type_class_bound_violations(d_max: int, n_max: int) -> int:
    """Exact integer check of the type-class cardinality bracket.

    For every type with d <= d_max symbols and length N <= n_max, the
    number of sequences of that type, T = N!/prod(c!), must satisfy
    (N+1)^(-d) * N^N / prod(c^c) <= T <= N^N / prod(c^c) with 0^0 = 1.
    Both comparisons clear denominators and run on exact integers.
    Returns the number of violating types (zero on a correct build).
    """
    violations = 0
    for d in range(1, d_max + 1):
        for n_len in range(1, n_max + 1):
            rows = _enumerate_counts(
                np.zeros(d, dtype=np.int64),
                np.full(d, n_len, dtype=np.int64),
                n_len,
            )
            n_pow = n_len**n_len
            shift = (n_len + 1) ** d
            for row in rows:
                t_count = _exact_multinomial(row)
                c_pow = math.prod(
                    int(c) ** int(c) for c in row if c > 0
                )
                if t_count * c_pow > n_pow:
                    violations += 1
                elif n_pow > shift * t_count * c_pow:
                    violations += 1
    return violations


def _minplus_convolve(a: np.ndarray, b: np.ndarray, maximize: bool) -> np.ndarray:
    size = len(a)
    out = np.full(size, -np.inf if maximize else np.inf)
    combine = np.maximum if maximize else np.minimum
    for j in range(size):
        combine(out[j:], a[j] + b[: size - j], out=out[j:])
    return out


def stirling_max_excess(d_max: int, n_max: int) -> float:
    """Worst slack of the Stirling-correction bound over all types.

    The correction (1/N)(log N! - sum log c_t!) - S(type) equals
    (1/N)(A_N + sum_t g(c_t)) with A_N = log N! - N log N and
    g(c) = c log c - log c!.  Its extremes over all types of a given
    (d, N) are exactly the min/max of sum g(c_t) over compositions,
    computed here by (min,+)/(max,+) convolution powers - an exhaustive
    check of every type without materializing them.  Returns
    max over d <= d_max, 2 <= N <= n_max of |correction| minus the bound
    (d+2) log(N+1)/N; negative iff the suite passes with zero violations.
    """
    logfact = np.array([log_factorial(c) for c in range(n_max + 1)])
    c_vals = np.arange(n_max + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(c_vals > 0, c_vals * np.log(np.maximum(c_vals, 1)), 0.0)
    g -= logfact
    g[0] = 0.0
    min_sum = [None, g.copy()]
    max_sum = [None, g.copy()]
    for _ in range(2, d_max + 1):
        min_sum.append(_minplus_convolve(min_sum[-1], g, maximize=False))
        max_sum.append(_minplus_convolve(max_sum[-1], g, maximize=True))
    worst = float("-inf")
    for d in range(1, d_max + 1):
        for n_len in range(2, n_max + 1):
            a_n = logfact[n_len] - n_len * math.log(n_len)
            corr_lo = (a_n + min_sum[d][n_len]) / n_len
            corr_hi = (a_n + max_sum[d][n_len]) / n_len
            bound = (d + 2) * math.log(n_len + 1) / n_len
            worst = max(worst, abs(corr_lo) - bound, abs(corr_hi) - bound)
    return worst
