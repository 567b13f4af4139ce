"""Value types and sequence primitives shared by every estimator.

Everything downstream manipulates four kinds of objects: finite alphabets
with exact rational probability weights, integer count vectors (types),
permutations of coordinate positions, and sorted witness vectors.  All
band/threshold decisions elsewhere in the package are made in exact integer
or rational arithmetic; floats only ever appear in reported log-scale
values, never in membership decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "BudgetExceededError",
    "Alphabet",
    "ProbVector",
    "JointProbTensor",
    "TypeVector",
    "JointType",
    "Permutation",
    "SortedVector",
    "LogCount",
    "type_of",
    "apply_permutation",
    "sort_to_canonical",
    "empirical_mean",
    "log_multinomial",
    "log_sum_exp",
    "random_permutation",
    "derive_seed",
]

# Largest N for which factorial-based counts are computed as exact integers
# by default.  Above this the log-gamma path is used; 170 is where float
# factorials would overflow, a convenient switch point even though the
# exact path works on Python ints of any size.
EXACT_FACTORIAL_THRESHOLD = 170

Rational = Union[Fraction, int]


class BudgetExceededError(RuntimeError):
    """An operation refused to start or continue past its work budget.

    Raised instead of silently degrading: exhaustive permutation sweeps
    check their size up front, and quadrature wrappers count integrand
    evaluations.  The command-line harness reports this as a refusal
    (exit code 3), distinct from a threshold breach.
    """


def _as_fraction(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError(
            "probability weights must be exact rationals, got float "
            f"{value!r}; pass Fraction or a 'num/den' string"
        )
    return Fraction(value)


@dataclass(frozen=True)
class Alphabet:
    """Finite ordered alphabet of d >= 1 distinct symbols."""

    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(self.symbols) == 0:
            raise ValueError("alphabet must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")

    @property
    def d(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise KeyError(f"symbol {symbol!r} not in alphabet") from None

    def indices_of(self, seq: Sequence) -> np.ndarray:
        """Map a sequence of symbols to an int64 array of alphabet indices."""
        lookup = {s: i for i, s in enumerate(self.symbols)}
        try:
            return np.array([lookup[s] for s in seq], dtype=np.int64)
        except KeyError as exc:
            raise KeyError(f"symbol {exc.args[0]!r} not in alphabet") from None


@dataclass(frozen=True)
class ProbVector:
    """Exact rational probability vector over an alphabet.

    Weights are `fractions.Fraction` and must be nonnegative and sum to 1
    exactly; floats are rejected so that band membership downstream stays
    decidable.
    """

    alphabet: Alphabet
    weights: tuple

    def __post_init__(self):
        weights = tuple(_as_fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if len(weights) != self.alphabet.d:
            raise ValueError(
                f"expected {self.alphabet.d} weights, got {len(weights)}"
            )
        if any(w < 0 for w in weights):
            raise ValueError("probability weights must be nonnegative")
        if sum(weights) != 1:
            raise ValueError(f"weights sum to {sum(weights)}, expected 1")

    @property
    def d(self) -> int:
        return self.alphabet.d

    def as_floats(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=np.float64)


@dataclass(frozen=True)
class JointProbTensor:
    """Exact joint distribution of ``arity`` variables on a common alphabet.

    Weights are stored flat in row-major order: the cell for symbols
    (z_1, ..., z_n) sits at index sum_i z_i * d^(n-1-i) with z_i the
    alphabet index of the i-th coordinate.
    """

    alphabet: Alphabet
    arity: int
    weights: tuple

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be >= 1")
        weights = tuple(_as_fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if len(weights) != self.alphabet.d**self.arity:
            raise ValueError(
                f"expected {self.alphabet.d ** self.arity} weights, "
                f"got {len(weights)}"
            )
        if any(w < 0 for w in weights):
            raise ValueError("probability weights must be nonnegative")
        if sum(weights) != 1:
            raise ValueError(f"weights sum to {sum(weights)}, expected 1")

    @property
    def d(self) -> int:
        return self.alphabet.d

    def cell_index(self, symbols: Sequence) -> int:
        idx = 0
        for s in symbols:
            idx = idx * self.d + self.alphabet.index(s)
        return idx

    def marginal(self, i: int) -> ProbVector:
        """Exact i-th marginal (0-based variable index)."""
        if not 0 <= i < self.arity:
            raise IndexError(f"variable index {i} out of range")
        d, n = self.d, self.arity
        sums = [Fraction(0)] * d
        for flat, w in enumerate(self.weights):
            z_i = (flat // d ** (n - 1 - i)) % d
            sums[z_i] += w
        return ProbVector(self.alphabet, tuple(sums))

    def marginals(self) -> list:
        return [self.marginal(i) for i in range(self.arity)]

    @classmethod
    def from_product(cls, factors: Sequence[ProbVector]) -> "JointProbTensor":
        """Product tensor of independent marginals on a common alphabet."""
        if not factors:
            raise ValueError("need at least one factor")
        alphabet = factors[0].alphabet
        if any(f.alphabet != alphabet for f in factors):
            raise ValueError("all factors must share one alphabet")
        n, d = len(factors), alphabet.d
        weights = []
        for flat in range(d**n):
            w = Fraction(1)
            rest = flat
            for i in reversed(range(n)):
                w *= factors[i].weights[rest % d]
                rest //= d
            weights.append(w)
        return cls(alphabet, n, tuple(weights))


@dataclass(frozen=True)
class TypeVector:
    """Empirical type of a length-N sequence: per-symbol counts."""

    alphabet: Alphabet
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != self.alphabet.d:
            raise ValueError(
                f"expected {self.alphabet.d} counts, got {len(counts)}"
            )
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")

    @property
    def N(self) -> int:
        return sum(self.counts)

    def frequency(self, t: int) -> Fraction:
        """Exact relative frequency of symbol index t."""
        return Fraction(self.counts[t], self.N)


@dataclass(frozen=True)
class JointType:
    """Joint empirical type of n aligned length-N sequences.

    Counts are flat in the same row-major cell order as JointProbTensor.
    """

    alphabet: Alphabet
    arity: int
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != self.alphabet.d**self.arity:
            raise ValueError(
                f"expected {self.alphabet.d ** self.arity} counts, "
                f"got {len(counts)}"
            )
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")

    @property
    def d(self) -> int:
        return self.alphabet.d

    @property
    def N(self) -> int:
        return sum(self.counts)

    def marginal(self, i: int) -> TypeVector:
        if not 0 <= i < self.arity:
            raise IndexError(f"variable index {i} out of range")
        d, n = self.d, self.arity
        sums = [0] * d
        for flat, c in enumerate(self.counts):
            z_i = (flat // d ** (n - 1 - i)) % d
            sums[z_i] += c
        return TypeVector(self.alphabet, tuple(sums))


@dataclass(frozen=True)
class Permutation:
    """Permutation of positions 0..N-1, stored as the image tuple.

    ``images[k]`` is where position k is sent.  The inverse image array is
    precomputed because the coordinate action applied everywhere in this
    package reads through the inverse: position j of the permuted sequence
    receives the entry at ``inverse_images[j]``.
    """

    images: tuple

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        object.__setattr__(self, "images", images)
        n = len(images)
        inverse = [-1] * n
        for k, j in enumerate(images):
            if not 0 <= j < n or inverse[j] != -1:
                raise ValueError("images must be a bijection of 0..N-1")
            inverse[j] = k
        object.__setattr__(self, "inverse_images", tuple(inverse))

    @property
    def n(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    def inverse(self) -> "Permutation":
        return Permutation(self.inverse_images)

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.compose(other))(k) = self(other(k))."""
        if self.n != other.n:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.images[j] for j in other.images))


@dataclass(frozen=True)
class SortedVector:
    """Nondecreasing vector of N entries.

    Entries are floats for sequences on the real line, or alphabet indices
    (stored as ints, with ``alphabet`` set) for sequences over a finite
    alphabet.  Either way the nondecreasing invariant is enforced at
    construction.
    """

    entries: tuple
    alphabet: Optional[Alphabet] = None

    def __post_init__(self):
        if self.alphabet is not None:
            entries = tuple(int(e) for e in self.entries)
            if entries and not all(
                0 <= e < self.alphabet.d for e in entries
            ):
                raise ValueError("entries must be alphabet indices")
        else:
            entries = tuple(float(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if any(a > b for a, b in zip(entries, entries[1:])):
            raise ValueError("entries must be nondecreasing")

    @property
    def N(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        dtype = np.int64 if self.alphabet is not None else np.float64
        return np.array(self.entries, dtype=dtype)

    def type_of(self) -> TypeVector:
        if self.alphabet is None:
            raise ValueError("type_of requires an alphabet-valued vector")
        counts = np.bincount(self.as_array(), minlength=self.alphabet.d)
        return TypeVector(self.alphabet, tuple(int(c) for c in counts))


@dataclass(frozen=True)
class LogCount:
    """A count reported on log scale (natural log).

    ``count`` holds the exact integer whenever ``exact`` is True (small-N
    factorial paths); log_value is then math.log of that integer, or -inf
    for a zero count.  Inexact values come from log-gamma accumulation.
    """

    log_value: float
    exact: bool
    count: Optional[int] = None

    def __post_init__(self):
        if self.exact != (self.count is not None):
            raise ValueError("count must be present exactly when exact=True")

    @classmethod
    def from_count(cls, count: int) -> "LogCount":
        if count < 0:
            raise ValueError("count must be nonnegative")
        log_value = math.log(count) if count > 0 else float("-inf")
        return cls(log_value=log_value, exact=True, count=count)

    @classmethod
    def from_log(cls, log_value: float) -> "LogCount":
        return cls(log_value=log_value, exact=False, count=None)


# ---------------------------------------------------------------------------
# sequence operations
# ---------------------------------------------------------------------------


def type_of(seq: Sequence, alphabet: Alphabet) -> TypeVector:
    """Empirical type (per-symbol counts) of a sequence of symbols.

    Raises KeyError for symbols outside the alphabet.
    """
    counts = [0] * alphabet.d
    lookup = {s: i for i, s in enumerate(alphabet.symbols)}
    for s in seq:
        try:
            counts[lookup[s]] += 1
        except KeyError:
            raise KeyError(f"symbol {s!r} not in alphabet") from None
    return TypeVector(alphabet, tuple(counts))


def apply_permutation(sigma: Permutation, x):
    """Coordinate action of a permutation on a length-N vector.

    Position j of the result receives the entry that was at position
    sigma^{-1}(j), i.e. the entry at position k lands at position
    sigma(k).  The result has the same container kind as ``x`` (ndarray
    in, ndarray out; otherwise a tuple).
    """
    if sigma.n != len(x):
        raise ValueError(
            f"permutation of size {sigma.n} cannot act on length {len(x)}"
        )
    inv = sigma.inverse_images
    if isinstance(x, np.ndarray):
        return x[np.array(inv, dtype=np.intp)]
    seq = list(x) if not isinstance(x, (list, tuple)) else x
    return tuple(seq[k] for k in inv)


def sort_to_canonical(x) -> tuple:
    """Split a real vector into its sorted version and the realigning map.

    Returns (sorted_vector, sigma) with apply_permutation(sigma,
    sorted_vector.entries) == x.  Ties are broken stably: equal entries
    keep their original relative order, so sorting an already-sorted
    vector yields the identity permutation.
    """
    arr = np.asarray(x, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    sigma = Permutation(tuple(int(k) for k in order))
    return SortedVector(tuple(float(v) for v in arr[order])), sigma


def empirical_mean(x) -> float:
    """Mean of the entries of a length-N vector (N >= 1)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empirical_mean of an empty vector")
    return float(arr.mean())


def log_multinomial(
    counts: Sequence[int], exact_threshold: int = EXACT_FACTORIAL_THRESHOLD
) -> LogCount:
    """log of the multinomial coefficient N! / prod_t counts[t]!.

    For N = sum(counts) <= exact_threshold the coefficient is computed as
    an exact Python integer and the LogCount carries it; beyond the
    threshold the value is accumulated with math.lgamma.  The two paths
    agree to float precision at the switch point.
    """
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValueError("counts must be nonnegative")
    n_total = sum(counts)
    if n_total <= exact_threshold:
        value = math.factorial(n_total)
        for c in counts:
            value //= math.factorial(c)
        return LogCount.from_count(value)
    log_value = math.lgamma(n_total + 1)
    for c in counts:
        log_value -= math.lgamma(c + 1)
    return LogCount.from_log(log_value)


def log_sum_exp(values) -> float:
    """log(sum(exp(v))) with the usual max shift; empty input gives -inf."""
    vals = [float(v) for v in values]
    if not vals:
        return float("-inf")
    m = max(vals)
    if math.isinf(m):
        return m
    return m + math.log(sum(math.exp(v - m) for v in vals))


_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)

def derive_seed(master_seed: int, index: int) -> int:
    """Per-trial (or per-grid-point) seed derived from a master seed.

    This is the splitmix64 output stream seeded at ``master_seed``:
    element ``index`` is splitmix64(master + (index + 1) * gamma) with the
    standard gamma 0x9E3779B97F4A7C15, all mod 2^64.  Every Monte Carlo
    trial in this package builds its own generator from derive_seed(seed,
    trial_index), which is what makes results independent of batching,
    thread count, and execution order.
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    z = (int(master_seed) + (index + 1) * _SPLITMIX_GAMMA) & _MASK64
    return _splitmix64(z)


def random_permutation(n: int, seed: int) -> Permutation:
    """Uniform random permutation of 0..n-1, deterministic in (n, seed).

    Drawn as numpy Generator(PCG64(seed)).permutation(n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = np.random.Generator(np.random.PCG64(int(seed)))
    return Permutation(tuple(int(i) for i in gen.permutation(n)))
