"""Analytic reference values: entropies, divergence, and exact moments.

Every estimator in this package is judged against a closed-form or
quadrature reference computed here.  Discrete quantities (Shannon entropy,
relative entropy, mutual information) are evaluated by direct summation
over exact rational weights.  Continuous references come from a small
family of distribution specifications that know their own moments exactly
(as Fractions) and, when a density exists, their Boltzmann-Gibbs entropy
via budgeted adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from scipy import integrate

from msmi.core import (
    BudgetExceededError,
    JointProbTensor,
    ProbVector,
    TypeVector,
)

__all__ = [
    "QuadratureError",
    "DistributionSpec",
    "UniformInterval",
    "TiltedUniformSquare",
    "DiscreteOnReals",
    "ProductOfSpecs",
    "MomentOracle",
    "shannon_entropy",
    "relative_entropy",
    "discrete_mutual_information",
    "analytic_moment",
    "bg_entropy_quadrature",
    "continuous_mi_quadrature",
]

DEFAULT_QUAD_TOL = 1e-8
DEFAULT_QUAD_BUDGET = 10**7


class QuadratureError(RuntimeError):
    """Quadrature could not certify the requested absolute tolerance."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError(
            f"distribution parameters must be exact rationals, got {value!r}"
        )
    return Fraction(value)


class DistributionSpec:
    """A distribution of n real variables with exactly known moments.

    Subclasses provide the joint moment E[prod_i X_i^k_i] as an exact
    Fraction, a per-variable support interval, and (when a density
    exists) enough structure for the quadrature entropies below.
    """

    @property
    def arity(self) -> int:
        raise NotImplementedError

    @property
    def has_density(self) -> bool:
        raise NotImplementedError

    def moment(self, exponents: Sequence[int]) -> Fraction:
        """E[prod_i X_i^exponents[i]] as an exact Fraction."""
        raise NotImplementedError

    def variables(self) -> tuple:
        """Single-variable marginal specs, one per coordinate."""
        raise NotImplementedError

    def support(self, i: int) -> tuple:
        """(lo, hi) Fractions bounding variable i's support."""
        return self.variables()[i].support(0)

    def sup_norm(self) -> Fraction:
        """max_i ||X_i||_inf, the smallest R containing every support."""
        bound = Fraction(0)
        for i in range(self.arity):
            lo, hi = self.support(i)
            bound = max(bound, abs(lo), abs(hi))
        return bound

    def _check_exponents(self, exponents: Sequence[int]) -> tuple:
        exps = tuple(int(k) for k in exponents)
        if len(exps) != self.arity:
            raise ValueError(
                f"expected {self.arity} exponents, got {len(exps)}"
            )
        if any(k < 0 for k in exps):
            raise ValueError("exponents must be nonnegative")
        return exps


@dataclass(frozen=True)
class UniformInterval(DistributionSpec):
    """Uniform distribution on [a, b], a < b, rational endpoints."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", _as_fraction(self.a))
        object.__setattr__(self, "b", _as_fraction(self.b))
        if not self.a < self.b:
            raise ValueError("need a < b")

    @property
    def arity(self) -> int:
        return 1

    @property
    def has_density(self) -> bool:
        return True

    def moment(self, exponents) -> Fraction:
        (k,) = self._check_exponents(exponents)
        # int_a^b x^k dx / (b - a)
        return (self.b ** (k + 1) - self.a ** (k + 1)) / (
            (k + 1) * (self.b - self.a)
        )

    def variables(self) -> tuple:
        return (self,)

    def support(self, i: int) -> tuple:
        if i != 0:
            raise IndexError("single-variable spec")
        return (self.a, self.b)

    def inverse_cdf(self, q: Fraction) -> Fraction:
        if not 0 <= q <= 1:
            raise ValueError("quantile level must lie in [0, 1]")
        return self.a + (self.b - self.a) * Fraction(q)

    def density1(self, x: float) -> float:
        lo, hi = float(self.a), float(self.b)
        return 1.0 / (hi - lo) if lo <= x <= hi else 0.0


@dataclass(frozen=True)
class TiltedUniformSquare(DistributionSpec):
    """Pair on [0,1]^2 with density 1 + rho*(2x-1)*(2y-1), |rho| <= 1.

    Both marginals are uniform on [0,1] for every rho; rho = 0 is the
    independent pair and rho != 0 introduces correlation with mutual
    information growing like rho^2/18 for small rho.
    """

    rho: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rho", _as_fraction(self.rho))
        if abs(self.rho) > 1:
            raise ValueError("need |rho| <= 1 for a nonnegative density")

    @property
    def arity(self) -> int:
        return 2

    @property
    def has_density(self) -> bool:
        return True

    def moment(self, exponents) -> Fraction:
        j, k = self._check_exponents(exponents)
        # int_0^1 x^m dx = 1/(m+1);  int_0^1 x^m (2x-1) dx = m/((m+1)(m+2))
        def c(m: int) -> Fraction:
            return Fraction(m, (m + 1) * (m + 2))

        return Fraction(1, (j + 1) * (k + 1)) + self.rho * c(j) * c(k)

    def variables(self) -> tuple:
        unit = UniformInterval(Fraction(0), Fraction(1))
        return (unit, unit)

    def density2(self, x: float, y: float) -> float:
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            return 0.0
        return 1.0 + float(self.rho) * (2.0 * x - 1.0) * (2.0 * y - 1.0)


@dataclass(frozen=True)
class DiscreteOnReals(DistributionSpec):
    """Atomic distribution on strictly increasing real support points."""

    points: tuple
    probs: tuple

    def __post_init__(self):
        points = tuple(_as_fraction(r) for r in self.points)
        probs = tuple(_as_fraction(p) for p in self.probs)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "probs", probs)
        if len(points) != len(probs) or not points:
            raise ValueError("points and probs must have equal positive length")
        if any(a >= b for a, b in zip(points, points[1:])):
            raise ValueError("support points must be strictly increasing")
        if any(p < 0 for p in probs) or sum(probs) != 1:
            raise ValueError("probs must be nonnegative and sum to 1")

    @property
    def arity(self) -> int:
        return 1

    @property
    def has_density(self) -> bool:
        return False

    def moment(self, exponents) -> Fraction:
        (k,) = self._check_exponents(exponents)
        return sum(p * r**k for p, r in zip(self.probs, self.points))

    def variables(self) -> tuple:
        return (self,)

    def support(self, i: int) -> tuple:
        if i != 0:
            raise IndexError("single-variable spec")
        return (self.points[0], self.points[-1])

    def inverse_cdf(self, q: Fraction) -> Fraction:
        """Generalized inverse: the smallest point with CDF >= q."""
        q = Fraction(q)
        if not 0 <= q <= 1:
            raise ValueError("quantile level must lie in [0, 1]")
        acc = Fraction(0)
        for p, r in zip(self.probs, self.points):
            acc += p
            if acc >= q:
                return r
        return self.points[-1]


@dataclass(frozen=True)
class ProductOfSpecs(DistributionSpec):
    """Independent concatenation of component specs.

    The variable list is the components' variables in order, and every
    joint moment factorizes across components.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("need at least one component")
        if not all(isinstance(c, DistributionSpec) for c in comps):
            raise TypeError("components must be DistributionSpec instances")

    @property
    def arity(self) -> int:
        return sum(c.arity for c in self.components)

    @property
    def has_density(self) -> bool:
        return all(c.has_density for c in self.components)

    def moment(self, exponents) -> Fraction:
        exps = self._check_exponents(exponents)
        out = Fraction(1)
        pos = 0
        for comp in self.components:
            out *= comp.moment(exps[pos : pos + comp.arity])
            pos += comp.arity
        return out

    def variables(self) -> tuple:
        out = []
        for comp in self.components:
            out.extend(comp.variables())
        return tuple(out)


@dataclass(frozen=True)
class MomentOracle:
    """Exact mixed moments of a spec, addressed by variable multi-index."""

    spec: DistributionSpec

    def moment_of_indices(self, indices: Sequence[int]) -> Fraction:
        """E[X_{i_1} * ... * X_{i_k}] for variable indices with repetition."""
        idx = tuple(int(i) for i in indices)
        if not idx:
            raise ValueError("multi-index must have order k >= 1")
        n = self.spec.arity
        if any(not 0 <= i < n for i in idx):
            raise IndexError(f"variable indices must lie in 0..{n - 1}")
        exponents = [0] * n
        for i in idx:
            exponents[i] += 1
        return self.spec.moment(exponents)


def analytic_moment(oracle: MomentOracle, multi_index: Sequence[int]) -> Fraction:
    """Exact moment E[X_{i_1} ... X_{i_k}] for a multi-index of order >= 1.

    Variable indices are 0-based and may repeat; repetition raises the
    exponent of that variable.
    """
    return oracle.moment_of_indices(multi_index)


# ---------------------------------------------------------------------------
# discrete entropies by direct summation
# ---------------------------------------------------------------------------


def _weight_list(p) -> list:
    if isinstance(p, (ProbVector, JointProbTensor)):
        return list(p.weights)
    if isinstance(p, TypeVector):
        n_total = p.N
        if n_total == 0:
            raise ValueError("type of an empty sequence has no entropy")
        return [Fraction(c, n_total) for c in p.counts]
    raise TypeError(f"unsupported distribution object {type(p).__name__}")


def shannon_entropy(p) -> float:
    """Shannon entropy in nats of a ProbVector, JointProbTensor, or type."""
    total = 0.0
    for w in _weight_list(p):
        if w > 0:
            total -= float(w) * math.log(float(w))
    return total


def relative_entropy(p, q) -> float:
    """Relative entropy D(p || q) in nats; +inf when p charges a q-null cell.

    Zero-versus-zero cells contribute nothing.  The result is exactly 0.0
    when p and q are equal as rational vectors.
    """
    pw, qw = _weight_list(p), _weight_list(q)
    if len(pw) != len(qw):
        raise ValueError("p and q must have the same shape")
    total = 0.0
    for a, b in zip(pw, qw):
        if a == 0:
            continue
        if b == 0:
            return float("inf")
        if a != b:
            total += float(a) * math.log(float(a) / float(b))
    return total


def discrete_mutual_information(p: JointProbTensor) -> float:
    """Mutual information in nats: sum of marginal entropies minus joint."""
    marginal_sum = sum(shannon_entropy(p.marginal(i)) for i in range(p.arity))
    return marginal_sum - shannon_entropy(p)


# ---------------------------------------------------------------------------
# quadrature entropies
# ---------------------------------------------------------------------------


class _BudgetedIntegrand:
    """Wrap an integrand, counting evaluations against a shared budget."""

    def __init__(self, fn: Callable, budget: int):
        self.fn = fn
        self.budget = budget
        self.calls = 0

    def __call__(self, *args) -> float:
        self.calls += 1
        if self.calls > self.budget:
            raise BudgetExceededError(
                f"quadrature exceeded its budget of {self.budget} "
                "integrand evaluations"
            )
        return self.fn(*args)


def _neg_f_log_f(f: float) -> float:
    # the integrand of Boltzmann-Gibbs entropy; f log f -> 0 as f -> 0+
    return -f * math.log(f) if f > 0.0 else 0.0


def _certify(value: float, abserr: float, tol: float, what: str) -> float:
    if abserr > tol:
        raise QuadratureError(
            f"{what}: reported absolute error {abserr:.3e} exceeds "
            f"tolerance {tol:.3e}"
        )
    return value


def bg_entropy_quadrature(
    spec: DistributionSpec,
    tol: float = DEFAULT_QUAD_TOL,
    budget: int = DEFAULT_QUAD_BUDGET,
) -> float:
    """Boltzmann-Gibbs (differential) entropy of a spec, in nats.

    Atomic distributions have no density and return -inf.  Products sum
    their components' entropies (and are -inf if any component is).
    Density cases integrate -f log f by adaptive quadrature; a result
    whose reported absolute error exceeds ``tol`` raises QuadratureError
    rather than being returned, and integrand evaluations beyond
    ``budget`` raise BudgetExceededError.
    """
    if isinstance(spec, DiscreteOnReals):
        return float("-inf")
    if isinstance(spec, ProductOfSpecs):
        parts = [
            bg_entropy_quadrature(c, tol=tol, budget=budget)
            for c in spec.components
        ]
        if any(math.isinf(h) and h < 0 for h in parts):
            return float("-inf")
        return float(sum(parts))
    if isinstance(spec, UniformInterval):
        fn = _BudgetedIntegrand(
            lambda x: _neg_f_log_f(spec.density1(x)), budget
        )
        value, abserr = integrate.quad(
            fn, float(spec.a), float(spec.b), epsabs=tol, limit=200
        )
        return _certify(value, abserr, tol, "bg_entropy_quadrature")
    if isinstance(spec, TiltedUniformSquare):
        fn = _BudgetedIntegrand(
            lambda y, x: _neg_f_log_f(spec.density2(x, y)), budget
        )
        value, abserr = integrate.dblquad(
            fn, 0.0, 1.0, 0.0, 1.0, epsabs=tol
        )
        return _certify(value, abserr, tol, "bg_entropy_quadrature")
    raise ValueError(
        f"no entropy rule for spec type {type(spec).__name__}"
    )


def _joint_density2(spec: DistributionSpec) -> Callable:
    """Joint density of a two-variable spec, or raise if none exists."""
    if isinstance(spec, TiltedUniformSquare):
        return spec.density2
    if isinstance(spec, ProductOfSpecs):
        if len(spec.components) == 1:
            return _joint_density2(spec.components[0])
        if len(spec.components) == 2 and all(
            c.arity == 1 for c in spec.components
        ):
            left, right = spec.components
            if not (left.has_density and right.has_density):
                raise ValueError(
                    "continuous_mi_quadrature needs a joint density; "
                    "an atomic component has none"
                )
            return lambda x, y: left.density1(x) * right.density1(y)
    raise ValueError(
        "continuous_mi_quadrature needs a two-variable spec with a density"
    )


def continuous_mi_quadrature(
    spec: DistributionSpec,
    tol: float = DEFAULT_QUAD_TOL,
    budget: int = DEFAULT_QUAD_BUDGET,
) -> float:
    """Mutual information of a two-variable spec with a joint density.

    Computed as H(X) + H(Y) - H(X, Y) with each term evaluated by
    budgeted quadrature.  Specs without a joint density (atoms anywhere)
    are rejected: the differential-entropy route does not apply to them.
    """
    if spec.arity != 2:
        raise ValueError("mutual information needs exactly two variables")
    density = _joint_density2(spec)
    var_x, var_y = spec.variables()
    h_x = bg_entropy_quadrature(var_x, tol=tol, budget=budget)
    h_y = bg_entropy_quadrature(var_y, tol=tol, budget=budget)
    (x_lo, x_hi), (y_lo, y_hi) = spec.support(0), spec.support(1)
    fn = _BudgetedIntegrand(lambda y, x: _neg_f_log_f(density(x, y)), budget)
    h_joint, abserr = integrate.dblquad(
        fn,
        float(x_lo),
        float(x_hi),
        float(y_lo),
        float(y_hi),
        epsabs=tol,
    )
    _certify(h_joint, abserr, tol, "continuous_mi_quadrature")
    return h_x + h_y - h_joint
