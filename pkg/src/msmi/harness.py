"""Study orchestration: config parsing, grid runs, CSV emission, reporting.

A study sweeps a grid of (N, delta) points for one distribution, computes
the configured estimators at each point, appends a reference value from
the entropy oracles, and writes the rows as CSV under a frozen column
contract.  Everything is deterministic for a fixed config: per-point
seeds derive from the master seed, rows sort by (estimator, N, delta),
and only the wall_ms column is allowed to differ between reruns.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from msmi.core import (
    Alphabet,
    BudgetExceededError,
    JointProbTensor,
    ProbVector,
    derive_seed,
)
from msmi.continuous import (
    MomentWindow,
    moment_band_volume_estimate,
    sym_set_anchored_mc_estimate,
)
from msmi.discrete import (
    DEFAULT_BRUTE_BUDGET,
    BandSpec,
    estimate_rate,
    stirling_max_excess,
    sym_set_brute_count,
    sym_set_log_lower_bound,
    sym_set_log_upper_bound,
    sym_set_mc_estimate,
    sym_set_rate,
    type_class_bound_violations,
    typical_set_log_count,
)
from msmi.entropy import (
    DiscreteOnReals,
    DistributionSpec,
    ProductOfSpecs,
    TiltedUniformSquare,
    UniformInterval,
    bg_entropy_quadrature,
    continuous_mi_quadrature,
    discrete_mutual_information,
    shannon_entropy,
)

__all__ = [
    "StudyConfig",
    "StudyRow",
    "ExtrapolationResult",
    "parse_config",
    "load_config",
    "run_study",
    "rows_to_csv",
    "write_csv",
    "extrapolate_rate",
    "emit_report",
    "CSV_HEADER",
    "STUDY_KINDS",
]

CSV_HEADER = (
    "study,N,delta,m,estimator,value,ci_low,ci_high,"
    "successes,trials,wall_ms,seed,status"
)

STUDY_KINDS = (
    "discrete-bounds",
    "discrete-mc",
    "discrete-brute",
    "continuous-mc",
    "bg-volume",
    "typical-count",
    "verify-suite",
)

REFERENCE = "reference"


def _parse_rational(value, what: str) -> Fraction:
    """Exact rational from a JSON value: int, or a "num/den" / "num" string.

    Floats are rejected: every numeric that feeds a band test must survive
    the trip through the config byte-exactly.
    """
    if isinstance(value, bool):
        raise ValueError(f"{what} must be a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ValueError(
            f"{what} must be written as an exact rational string "
            f'like "1/100", got float {value!r}'
        )
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"{what}: cannot parse rational {value!r}") from exc
    raise ValueError(f"{what}: expected rational, got {type(value).__name__}")


def _build_distribution(obj: dict, what: str = "distribution"):
    """Tagged JSON object to a distribution value.

    Kinds: prob_vector, joint_tensor, uniform_interval,
    tilted_uniform_square, discrete_on_reals, product.
    """
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"{what} must be a tagged object with a 'kind'")
    kind = obj["kind"]
    if kind == "prob_vector":
        alphabet = Alphabet(tuple(obj["alphabet"]))
        weights = tuple(
            _parse_rational(w, f"{what}.weights") for w in obj["weights"]
        )
        return ProbVector(alphabet, weights)
    if kind == "joint_tensor":
        alphabet = Alphabet(tuple(obj["alphabet"]))
        weights = tuple(
            _parse_rational(w, f"{what}.weights") for w in obj["weights"]
        )
        return JointProbTensor(alphabet, int(obj["arity"]), weights)
    if kind == "uniform_interval":
        return UniformInterval(
            _parse_rational(obj["a"], f"{what}.a"),
            _parse_rational(obj["b"], f"{what}.b"),
        )
    if kind == "tilted_uniform_square":
        return TiltedUniformSquare(_parse_rational(obj["rho"], f"{what}.rho"))
    if kind == "discrete_on_reals":
        points = tuple(_parse_rational(p, f"{what}.points") for p in obj["points"])
        probs = tuple(_parse_rational(p, f"{what}.probs") for p in obj["probs"])
        return DiscreteOnReals(points, probs)
    if kind == "product":
        return ProductOfSpecs(
            tuple(
                _build_distribution(c, f"{what}.components")
                for c in obj["components"]
            )
        )
    raise ValueError(f"{what}: unknown distribution kind {kind!r}")


@dataclass(frozen=True)
class StudyConfig:
    """One study: kind, distribution, grids, sampling budget, seed, output."""

    study: str
    distribution: object = None
    n_grid: tuple = ()
    delta_grid: tuple = ()
    coupled_delta_c: Optional[Fraction] = None
    m: Optional[int] = None
    trials: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    budget: int = DEFAULT_BRUTE_BUDGET
    cutoff: Optional[Fraction] = None
    boxes: Optional[tuple] = None
    thresholds: tuple = ()
    d_max: int = 4
    type_class_n_max: int = 20
    stirling_n_max: int = 200

    def __post_init__(self):
        if self.study not in STUDY_KINDS:
            raise ValueError(
                f"unknown study kind {self.study!r}; expected one of {STUDY_KINDS}"
            )
        if self.study != "verify-suite":
            if self.distribution is None:
                raise ValueError(f"study {self.study} needs a distribution")
            if not self.n_grid:
                raise ValueError("N grid must be nonempty")
            if any(n < 1 for n in self.n_grid):
                raise ValueError("N values must be >= 1")
            if not self.delta_grid and self.coupled_delta_c is None:
                raise ValueError("delta grid (or coupled schedule) required")
            if self.delta_grid and self.coupled_delta_c is not None:
                raise ValueError("give either a delta grid or a coupled schedule")
        if self.study in ("discrete-mc", "continuous-mc", "bg-volume"):
            if self.trials is None or self.trials < 1:
                raise ValueError(f"study {self.study} needs trials >= 1")
        if self.study in ("continuous-mc", "bg-volume"):
            if self.m is None or self.m < 1:
                raise ValueError(f"study {self.study} needs m >= 1")
            if not isinstance(self.distribution, DistributionSpec):
                raise ValueError(
                    f"study {self.study} needs a continuous distribution spec"
                )
        if self.study in ("discrete-bounds", "discrete-mc", "discrete-brute"):
            if not isinstance(self.distribution, JointProbTensor):
                raise ValueError(f"study {self.study} needs a joint_tensor")
        if self.study == "typical-count":
            if not isinstance(self.distribution, ProbVector):
                raise ValueError("typical-count needs a prob_vector")
        if self.study == "bg-volume" and self.cutoff is None:
            raise ValueError("bg-volume needs a cutoff R in the config")


def parse_config(doc: dict) -> StudyConfig:
    """StudyConfig from a decoded JSON document (exact-rational fields)."""
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    study = doc.get("study")
    if not isinstance(study, str):
        raise ValueError("config needs a 'study' string")
    known = {
        "study",
        "distribution",
        "n_grid",
        "delta_grid",
        "coupled_delta",
        "m",
        "trials",
        "seed",
        "out",
        "budget",
        "R",
        "boxes",
        "thresholds",
        "d_max",
        "type_class_n_max",
        "stirling_n_max",
    }
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    distribution = (
        _build_distribution(doc["distribution"]) if "distribution" in doc else None
    )
    delta_grid = tuple(
        _parse_rational(d, "delta_grid") for d in doc.get("delta_grid", ())
    )
    coupled = None
    if "coupled_delta" in doc:
        coupled = _parse_rational(doc["coupled_delta"]["c"], "coupled_delta.c")
    boxes = None
    if "boxes" in doc:
        boxes = tuple(
            (
                _parse_rational(lo, "boxes"),
                _parse_rational(hi, "boxes"),
            )
            for lo, hi in doc["boxes"]
        )
    cutoff = _parse_rational(doc["R"], "R") if "R" in doc else None
    thresholds = tuple(doc.get("thresholds", ()))
    if study == "verify-suite" and not thresholds:
        thresholds = ({"kind": "zero-violations"},)
    return StudyConfig(
        study=study,
        distribution=distribution,
        n_grid=tuple(int(n) for n in doc.get("n_grid", ())),
        delta_grid=delta_grid,
        coupled_delta_c=coupled,
        m=int(doc["m"]) if "m" in doc else None,
        trials=int(doc["trials"]) if "trials" in doc else None,
        seed=int(doc.get("seed", 0)),
        out=doc.get("out"),
        budget=int(doc.get("budget", DEFAULT_BRUTE_BUDGET)),
        cutoff=cutoff,
        boxes=boxes,
        thresholds=thresholds,
        d_max=int(doc.get("d_max", 4)),
        type_class_n_max=int(doc.get("type_class_n_max", 20)),
        stirling_n_max=int(doc.get("stirling_n_max", 200)),
    )


def load_config(path: str) -> StudyConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(json.load(fh))


@dataclass(frozen=True)
class StudyRow:
    """One CSV row: an estimator value at a grid point, or a reference."""

    study: str
    N: Optional[int]
    delta: Optional[Fraction]
    m: Optional[int]
    estimator: str
    value: Optional[float]
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    successes: Optional[int] = None
    trials: Optional[int] = None
    wall_ms: int = 0
    seed: Optional[int] = None
    status: str = "ok"


def _coupled_delta(c: Fraction, n_len: int) -> Fraction:
    """Exploratory schedule delta(N) = c * N^(-1/4), snapped to a rational.

    The snap keeps the band contract exact: the printed delta is the one
    actually used.  This mode is diagnostics-only and is never part of an
    acceptance run.
    """
    return Fraction(float(c) * n_len ** (-1 / 4)).limit_denominator(10**9)


def _grid(config: StudyConfig):
    deltas = config.delta_grid
    points = []
    for n_len in config.n_grid:
        if config.coupled_delta_c is not None:
            points.append((n_len, _coupled_delta(config.coupled_delta_c, n_len)))
        else:
            points.extend((n_len, d) for d in deltas)
    return points


def _point_seed(config: StudyConfig, index: int, n_points: int) -> int:
    # a one-point study consumes the master seed directly, so any row's
    # seed can be replayed in isolation through a one-point config
    if n_points == 1:
        return config.seed
    return derive_seed(config.seed, index)


def _rate_rows_for_point(config, n_len, delta, seed, threads) -> list:
    study = config.study
    p = config.distribution
    rows = []

    def add(estimator, value, **kw):
        rows.append(
            StudyRow(
                study=study,
                N=n_len,
                delta=delta,
                m=config.m,
                estimator=estimator,
                value=value,
                seed=seed,
                **kw,
            )
        )

    if study == "discrete-bounds":
        band = BandSpec(delta, n_len)
        add("upper_count_rate", sym_set_rate(sym_set_log_upper_bound(p, band), n_len, p.arity))
        add("lower_count_rate", sym_set_rate(sym_set_log_lower_bound(p, band), n_len, p.arity))
    elif study == "discrete-mc":
        est = sym_set_mc_estimate(p, BandSpec(delta, n_len), config.trials, seed, threads=threads)
        rate, lo, hi = estimate_rate(est, n_len)
        add("mc_rate", rate, ci_low=lo, ci_high=hi, successes=est.successes, trials=est.trials)
    elif study == "discrete-brute":
        count = sym_set_brute_count(p, BandSpec(delta, n_len), budget=config.budget)
        add("brute_rate", sym_set_rate(count, n_len, p.arity))
    elif study == "typical-count":
        lc = typical_set_log_count(p, BandSpec(delta, n_len))
        value = (
            float("-inf") if lc.log_value == float("-inf") else lc.log_value / n_len
        )
        add("typical_rate", value)
    elif study == "continuous-mc":
        window = MomentWindow(config.m, float(delta))
        est = sym_set_anchored_mc_estimate(
            p, window, n_len, config.trials, seed, threads=threads
        )
        rate, lo, hi = estimate_rate(est, n_len)
        add("anchored_mc_rate", rate, ci_low=lo, ci_high=hi, successes=est.successes, trials=est.trials)
    elif study == "bg-volume":
        window = MomentWindow(config.m, float(delta), R=float(config.cutoff))
        boxes = None
        if config.boxes is not None:
            boxes = [(float(a), float(b)) for a, b in config.boxes]
        est = moment_band_volume_estimate(
            p, window, n_len, config.trials, seed, threads=threads, boxes=boxes
        )
        add(
            "volume_rate",
            est.log_volume_rate,
            ci_low=est.ci_low,
            ci_high=est.ci_high,
            successes=est.successes,
            trials=est.trials,
        )
    else:
        raise ValueError(f"study kind {study} has no per-point estimators")
    return rows


def _reference_row(config: StudyConfig) -> Optional[StudyRow]:
    """Reference value from the entropy oracles, with a provenance note.

    Returned as a row with estimator "reference" and no grid coordinates;
    the provenance string travels in emit_report, not the CSV.
    """
    study, p = config.study, config.distribution
    if study in ("discrete-bounds", "discrete-mc", "discrete-brute"):
        value = discrete_mutual_information(p)
    elif study == "typical-count":
        value = shannon_entropy(p)
    elif study == "continuous-mc":
        try:
            value = continuous_mi_quadrature(p)
        except ValueError:
            return None
    elif study == "bg-volume":
        value = bg_entropy_quadrature(p)
    else:
        return None
    return StudyRow(
        study=study,
        N=None,
        delta=None,
        m=None,
        estimator=REFERENCE,
        value=value,
        seed=config.seed,
    )


def _reference_provenance(study: str) -> str:
    return {
        "discrete-bounds": "direct summation over the distribution's atoms",
        "discrete-mc": "direct summation over the distribution's atoms",
        "discrete-brute": "direct summation over the distribution's atoms",
        "typical-count": "closed-form Shannon entropy",
        "continuous-mc": "certified quadrature of the joint density",
        "bg-volume": "certified quadrature of the component densities",
    }.get(study, "none")


def _verify_rows(config: StudyConfig) -> list:
    violations = type_class_bound_violations(config.d_max, config.type_class_n_max)
    excess = stirling_max_excess(config.d_max, config.stirling_n_max)
    return [
        StudyRow(
            study="verify-suite",
            N=config.type_class_n_max,
            delta=None,
            m=None,
            estimator="type_class_violations",
            value=float(violations),
            seed=config.seed,
        ),
        StudyRow(
            study="verify-suite",
            N=config.stirling_n_max,
            delta=None,
            m=None,
            estimator="stirling_max_excess",
            value=excess,
            seed=config.seed,
        ),
    ]


def run_study(config: StudyConfig, threads: int = 1) -> list:
    """All rows for one study, sorted for the CSV contract.

    Grid points run in a worker pool when threads > 1 and the grid has
    several points; a single-point grid instead hands the thread budget
    to the operation itself.  Either way the values are identical to a
    serial run: seeds are per-point, successes are exact integers, and
    the final sort removes any scheduling order.  A grid point refused
    for budget reasons becomes a "skipped" row and the run continues.
    """
    if config.study == "verify-suite":
        return sorted(_verify_rows(config), key=_row_sort_key)

    points = _grid(config)
    n_points = len(points)

    def run_point(index: int) -> list:
        n_len, delta = points[index]
        seed = _point_seed(config, index, n_points)
        op_threads = threads if n_points == 1 else 1
        started = time.perf_counter()
        try:
            rows = _rate_rows_for_point(config, n_len, delta, seed, op_threads)
        except BudgetExceededError:
            return [
                StudyRow(
                    study=config.study,
                    N=n_len,
                    delta=delta,
                    m=config.m,
                    estimator=_skipped_estimator(config.study),
                    value=None,
                    seed=seed,
                    status="skipped",
                )
            ]
        wall_ms = int(round((time.perf_counter() - started) * 1000))
        return [replace(r, wall_ms=wall_ms) for r in rows]

    if threads > 1 and n_points > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run_point, range(n_points)))
    else:
        chunks = [run_point(i) for i in range(n_points)]

    rows = [row for chunk in chunks for row in chunk]
    ref = _reference_row(config)
    if ref is not None:
        rows.append(ref)
    return sorted(rows, key=_row_sort_key)


def _skipped_estimator(study: str) -> str:
    return {
        "discrete-bounds": "upper_count_rate",
        "discrete-mc": "mc_rate",
        "discrete-brute": "brute_rate",
        "typical-count": "typical_rate",
        "continuous-mc": "anchored_mc_rate",
        "bg-volume": "volume_rate",
    }[study]


def _row_sort_key(row: StudyRow):
    return (
        row.estimator,
        row.N if row.N is not None else 0,
        row.delta if row.delta is not None else Fraction(0),
    )


# ---------------------------------------------------------------------------
# CSV contract
# ---------------------------------------------------------------------------


def _fmt_value(v: Optional[float]) -> str:
    if v is None:
        return ""
    if v == float("inf"):
        return "inf"
    if v == float("-inf"):
        return "-inf"
    if v == 0.0:
        v = 0.0
    return f"{v:.9g}"


def _fmt_delta(d: Optional[Fraction]) -> str:
    if d is None:
        return ""
    return f"{d.numerator}/{d.denominator}"


def _fmt_int(x: Optional[int]) -> str:
    return "" if x is None else str(int(x))


def rows_to_csv(rows: Sequence[StudyRow]) -> str:
    """Frozen-format CSV text (the exact byte contract, reruns included)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for row in rows:
        writer.writerow(
            [
                row.study,
                _fmt_int(row.N),
                _fmt_delta(row.delta),
                _fmt_int(row.m),
                row.estimator,
                _fmt_value(row.value),
                _fmt_value(row.ci_low),
                _fmt_value(row.ci_high),
                _fmt_int(row.successes),
                _fmt_int(row.trials),
                str(int(row.wall_ms)),
                _fmt_int(row.seed),
                row.status,
            ]
        )
    return out.getvalue()


def write_csv(rows: Sequence[StudyRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


# ---------------------------------------------------------------------------
# extrapolation and reporting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtrapolationResult:
    """Least-squares fit of rate(N) = a + b*log(N)/N over one series."""

    a: float
    b: float
    max_residual: float
    points_used: int
    excluded: int


def extrapolate_rate(rows: Sequence[StudyRow]) -> ExtrapolationResult:
    """Fit a + b*log(N)/N to one estimator's finite-rate series.

    Rows with infinite or missing values are excluded (their count is
    reported); fewer than 3 finite points at distinct N is a refusal.
    """
    finite = [
        (r.N, r.value)
        for r in rows
        if r.value is not None and math.isfinite(r.value) and r.N
    ]
    excluded = len(rows) - len(finite)
    distinct = sorted({n for n, _ in finite})
    if len(distinct) < 3:
        raise ValueError(
            f"extrapolation needs >= 3 distinct N with finite rates, "
            f"got {len(distinct)} ({excluded} row(s) excluded)"
        )
    design = np.array([[1.0, math.log(n) / n] for n, _ in finite])
    target = np.array([v for _, v in finite])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residuals = target - design @ coef
    return ExtrapolationResult(
        a=float(coef[0]),
        b=float(coef[1]),
        max_residual=float(np.max(np.abs(residuals))) if len(finite) else 0.0,
        points_used=len(finite),
        excluded=excluded,
    )


def _threshold_number(obj, key, what) -> float:
    if key not in obj:
        raise ValueError(f"threshold {what} needs a {key!r} field")
    value = obj[key]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return float(_parse_rational(value, f"{what}.{key}"))


def _series(rows, estimator, delta):
    picked = [
        r
        for r in rows
        if r.estimator == estimator
        and r.status == "ok"
        and (delta is None or r.delta == delta)
    ]
    return sorted(picked, key=lambda r: r.N or 0)


def _deltas_of(rows, estimator):
    return sorted(
        {r.delta for r in rows if r.estimator == estimator and r.delta is not None}
    )


def _check_threshold(spec_obj: dict, rows, reference) -> tuple:
    """(passed, description) for one configured threshold."""
    kind = spec_obj.get("kind")
    if kind in ("final-within", "intercept-within"):
        estimator = spec_obj["estimator"]
        tol = _threshold_number(spec_obj, "tol", kind)
        if reference is None:
            return False, f"{kind}[{estimator}]: no reference value available"
        results = []
        for delta in _deltas_of(rows, estimator) or [None]:
            series = _series(rows, estimator, delta)
            if not series:
                return False, f"{kind}[{estimator}]: empty series"
            if kind == "final-within":
                got = abs(series[-1].value - reference)
            else:
                got = abs(extrapolate_rate(series).a - reference)
            results.append((got <= tol, got, delta))
        ok = all(r[0] for r in results)
        detail = "; ".join(
            f"delta={_fmt_delta(d) or '-'} dist={g:.6f}" for _, g, d in results
        )
        return ok, f"{kind}[{estimator}] tol={tol:g}: {detail}"
    if kind in ("decreasing", "increasing"):
        estimator = spec_obj["estimator"]
        for delta in _deltas_of(rows, estimator) or [None]:
            series = [r.value for r in _series(rows, estimator, delta)]
            if kind == "decreasing":
                ok = all(b < a for a, b in zip(series, series[1:]))
            else:
                ok = all(b > a for a, b in zip(series, series[1:]))
            if not ok:
                return False, f"{kind}[{estimator}]: series {series} not {kind}"
        return True, f"{kind}[{estimator}]: monotone as required"
    if kind == "gap-decreasing":
        upper, lower = spec_obj["upper"], spec_obj["lower"]
        for delta in _deltas_of(rows, upper) or [None]:
            ups = _series(rows, upper, delta)
            los = _series(rows, lower, delta)
            if len(ups) != len(los):
                return False, "gap-decreasing: mismatched series lengths"
            gaps = [abs(u.value - l.value) for u, l in zip(ups, los)]
            if not all(b < a for a, b in zip(gaps, gaps[1:])):
                return False, f"gap-decreasing: gaps {gaps} not strictly decreasing"
        return True, "gap-decreasing: gap shrinks at every N"
    if kind == "final-below":
        estimator = spec_obj["estimator"]
        bound = _threshold_number(spec_obj, "bound", kind)
        for delta in _deltas_of(rows, estimator) or [None]:
            series = _series(rows, estimator, delta)
            if not series:
                return False, f"final-below[{estimator}]: empty series"
            if not series[-1].value <= bound:
                return (
                    False,
                    f"final-below[{estimator}]: {series[-1].value:.6f} > {bound:g}",
                )
        return True, f"final-below[{estimator}]: final value under {bound:g}"
    if kind == "ref-margin-bound":
        estimator = spec_obj["estimator"]
        coeff = _threshold_number(spec_obj, "coefficient", kind)
        if reference is None:
            return False, "ref-margin-bound: no reference value available"
        for delta in _deltas_of(rows, estimator) or [None]:
            for r in _series(rows, estimator, delta):
                margin = reference + coeff * math.log(r.N + 1) / r.N
                if not r.value <= margin:
                    return (
                        False,
                        f"ref-margin-bound[{estimator}]: value {r.value:.6f} "
                        f"exceeds {margin:.6f} at N={r.N}",
                    )
        return True, f"ref-margin-bound[{estimator}]: under the margin at every N"
    if kind == "zero-violations":
        bad = [
            r
            for r in rows
            if r.estimator == "type_class_violations" and r.value != 0.0
        ]
        bad += [
            r for r in rows if r.estimator == "stirling_max_excess" and r.value >= 0.0
        ]
        if bad:
            return False, f"zero-violations: {len(bad)} suite check(s) failed"
        return True, "zero-violations: all suite checks clean"
    raise ValueError(f"unknown threshold kind {kind!r}")


def emit_report(rows: Sequence[StudyRow], config: StudyConfig, out=None) -> int:
    """Print the study summary; return 0 iff every threshold passes."""
    import sys

    stream = out if out is not None else sys.stdout

    def emit(line=""):
        print(line, file=stream)

    emit(f"study: {config.study}")
    if config.coupled_delta_c is not None:
        emit(
            "NOTE: coupled delta schedule delta(N) = c*N^(-1/4) is an "
            "exploratory, non-rigorous diagnostic mode"
        )
    skipped = [r for r in rows if r.status == "skipped"]
    if skipped:
        emit(f"skipped grid points (budget refusals): {len(skipped)}")

    reference = None
    for r in rows:
        if r.estimator == REFERENCE:
            reference = r.value
            emit(
                f"reference value: {_fmt_value(reference)} "
                f"({_reference_provenance(config.study)})"
            )

    estimators = sorted(
        {r.estimator for r in rows if r.estimator != REFERENCE and r.status == "ok"}
    )
    for estimator in estimators:
        for delta in _deltas_of(rows, estimator) or [None]:
            series = _series(rows, estimator, delta)
            label = f" delta={_fmt_delta(delta)}" if delta is not None else ""
            emit(f"{estimator}{label}:")
            for r in series:
                emit(f"  N={_fmt_int(r.N):>5}  value={_fmt_value(r.value)}")
            finite = [
                r for r in series if r.value is not None and math.isfinite(r.value)
            ]
            if len({r.N for r in finite}) >= 3:
                fit = extrapolate_rate(series)
                note = f", {fit.excluded} point(s) excluded" if fit.excluded else ""
                emit(
                    f"  extrapolated intercept a={fit.a:.9g} "
                    f"(slope b={fit.b:.9g}, max residual {fit.max_residual:.2g}"
                    f"{note})"
                )

    failures = 0
    for spec_obj in config.thresholds:
        ok, description = _check_threshold(spec_obj, rows, reference)
        emit(f"[{'PASS' if ok else 'FAIL'}] {description}")
        failures += 0 if ok else 1
    if config.thresholds:
        emit(f"thresholds: {len(config.thresholds) - failures}/{len(config.thresholds)} passed")
    return 0 if failures == 0 else 1
