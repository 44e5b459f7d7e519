"""Hitting-time bounds from fitness levels.

Every bound is a vector ``d`` of length ``K`` with ``d[k-1]`` bounding the
expected number of generations to reach level 0 from level ``k``.  Metric
bounds solve the drift recursion at equality; linear bounds weight the
reciprocal improvement probabilities of the levels passed on the way down
with coefficients ``c[k, l]`` chosen by a scheme.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .levelmodel import LevelModel, StartDistribution, ratio_side
from .oracle import MAX_PATH_K, path_sum_coefficient

DRIFT_TOL = 1e-9
CLAMP_TOL = 1e-12
DEFAULT_EPSILON = 1e-3


class NumericError(RuntimeError):
    """A computed quantity is unusable (infinite, unsound or inconsistent)."""


class Direction(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


class Scheme(str, enum.Enum):
    TYPE0 = "type0"
    TYPE1 = "type1"
    C = "c"
    CL = "cl"
    CKL = "ckl"
    PRODUCT = "product"
    PATHSUM = "pathsum"


_LEGAL = {
    Scheme.TYPE0: (Direction.LOWER,),
    Scheme.TYPE1: (Direction.UPPER,),
    Scheme.PRODUCT: (Direction.LOWER,),
}


def legal_directions(scheme) -> tuple:
    return _LEGAL.get(Scheme(scheme), (Direction.LOWER, Direction.UPPER))


@dataclass(frozen=True)
class BoundVector:
    """Distances ``d_1..d_K``; ``direction`` is None for exact hitting times."""

    d: np.ndarray
    direction: Optional[Direction]
    tag: str
    label: str = ""

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        d.flags.writeable = False
        object.__setattr__(self, "d", d)

    @property
    def K(self) -> int:
        return self.d.size

    def at(self, k: int) -> float:
        return float(self.d[k - 1])

    def scaled(self, factor: float) -> "BoundVector":
        return BoundVector(self.d * factor, self.direction, f"{self.tag}*{factor:g}", self.label)


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of a linear bound.

    ``values`` is a 0-d array for ``form == "scalar"``, ``c_1..c_{K-1}`` for
    ``"per_level"`` and a ``(K+1, K+1)`` strictly lower-triangular matrix
    (column 0 unused) for ``"full"``.  ``flagged`` lists pairs whose
    denominator vanished on the lower side and so were set conservatively;
    ``clamped`` counts values pushed back into ``[0, 1]``.
    """

    form: str
    values: np.ndarray
    direction: Direction
    scheme: Scheme
    K: int
    flagged: tuple = ()
    clamped: int = 0

    def full(self) -> np.ndarray:
        """Expand to ``c[k, l]`` for ``1 <= l < k <= K``."""
        K = self.K
        mask = np.tril(np.ones((K + 1, K + 1), dtype=bool), -1)
        mask[:, 0] = False
        if self.form == "scalar":
            return np.where(mask, float(self.values), 0.0)
        if self.form == "per_level":
            cols = np.zeros(K + 1)
            cols[1:K] = self.values
            return np.where(mask, cols[None, :], 0.0)
        return np.where(mask, self.values, 0.0)


@dataclass(frozen=True)
class DriftReport:
    """Per-level drift of a bound; for bounded models the adversarial estimate."""

    drift: np.ndarray
    direction: Optional[Direction]
    passed: np.ndarray

    @property
    def ok(self) -> bool:
        return bool(self.passed.all())

    @property
    def failing_levels(self) -> list:
        return [int(k) + 1 for k in np.flatnonzero(~self.passed)]


@dataclass(frozen=True)
class ShortcutReport:
    """Level pairs ``(k, l, ratio)`` whose skip ratio falls below ``epsilon``."""

    pairs: tuple
    epsilon: float
    undefined: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def __bool__(self) -> bool:
        return bool(self.pairs)

    @property
    def keys(self) -> set:
        return {(k, l) for k, l, _ in self.pairs}


def _improve(model: LevelModel, direction: Direction) -> np.ndarray:
    # lower bounds use the largest escape probability, upper bounds the smallest
    P = model.improve_hi if direction is Direction.LOWER else model.improve_lo
    if np.any(P[1:] <= 0.0):
        k = int(np.flatnonzero(P[1:] <= 0.0)[0]) + 1
        raise NumericError(f"level {k} has zero improvement probability bound; no {direction.value} bound")
    return P


def exact_hitting_time(model: LevelModel) -> BoundVector:
    """Expected hitting time of every level of an exact level chain."""
    if not model.is_exact:
        raise ValueError("exact hitting times need an exact model")
    q = model.q
    m = np.zeros(model.K + 1)
    for k in range(1, model.K + 1):
        escape = math.fsum(q[k, :k])
        m[k] = (1.0 + math.fsum(q[k, 1:k] * m[1:k])) / escape
    return BoundVector(m[1:], None, "exact", model.label)


def metric_bound(model: LevelModel, direction=Direction.LOWER) -> BoundVector:
    """Tightest distance satisfying the drift condition, by forward substitution."""
    direction = Direction(direction)
    upper = direction is Direction.UPPER
    P = _improve(model, direction)
    r = ratio_side(model, upper)
    d = np.zeros(model.K + 1)
    for k in range(1, model.K + 1):
        d[k] = 1.0 / P[k] + math.fsum(r[k, 1:k] * d[1:k])
    return BoundVector(d[1:], direction, "metric", model.label)


def _check_legal(scheme: Scheme, direction: Direction) -> None:
    if direction not in legal_directions(scheme):
        raise ValueError(f"scheme {scheme.value} has no {direction.value} bound")


def _clamp(values: np.ndarray) -> tuple[np.ndarray, int]:
    events = int(np.count_nonzero((values < -CLAMP_TOL) | (values > 1.0 + CLAMP_TOL)))
    return np.clip(values, 0.0, 1.0), events


def _skip_ratios(model: LevelModel, direction: Direction):
    """Ratio ``p(k, l) / p(k, [0, l])`` at the side that keeps the coefficient valid.

    Returns the ratio matrix (NaN where the pair is vacuous because even the
    upper bound on the denominator is 0) and the pairs whose denominator is
    only 0 on the lower side; those are forced to 1 for upper bounds.
    """
    K = model.K
    den_hi = np.cumsum(model.q_hi, axis=1)
    den_lo = np.cumsum(model.q_lo, axis=1)
    pairs = np.tril(np.ones((K + 1, K + 1), dtype=bool), -1)
    pairs[:, 0] = False
    vacuous = pairs & (den_hi <= 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if direction is Direction.LOWER:
            ratio = model.q_lo / den_hi
            forced = np.zeros_like(pairs)
        else:
            ratio = model.q_hi / den_lo
            forced = pairs & ~vacuous & (den_lo <= 0.0)
            ratio = np.where(forced, 1.0, ratio)
    ratio = np.where(pairs & ~vacuous, ratio, np.nan)
    flagged = tuple((int(k), int(l)) for k, l in np.argwhere(forced))
    return ratio, flagged


def _extremize(values: np.ndarray, direction: Direction, axis=None):
    empty = np.all(np.isnan(values), axis=axis)
    fill = 0.0 if direction is Direction.LOWER else 1.0
    reduce = np.fmin.reduce if direction is Direction.LOWER else np.fmax.reduce
    flat = values if axis is not None else values.ravel()
    out = reduce(flat, axis=axis or 0)
    return np.where(empty, fill, out)


def _recursive(r: np.ndarray, K: int) -> tuple[np.ndarray, int]:
    C = np.zeros((K + 1, K + 1))
    events = 0
    for k in range(2, K + 1):
        row = r[k, 1:k] + r[k, 1:k] @ C[1:k, 1:k]
        C[k, 1:k], n = _clamp(row)
        events += n
    return C, events


def _product(model: LevelModel) -> np.ndarray:
    K = model.K
    # S[i, l] = sum_{j=l}^{i-1} q_lo(i, j)
    S = np.cumsum(model.q_lo[:, ::-1], axis=1)[:, ::-1]
    P = model.improve_hi.copy()
    P[0] = 1.0
    A = S / P[:, None]
    i, l = np.indices((K + 1, K + 1))
    A[i <= l] = 1.0
    C = np.cumprod(A, axis=0)
    C[i <= l] = 0.0
    C[:, 0] = 0.0
    return C


def scheme_coefficients(model: LevelModel, scheme, direction=Direction.LOWER) -> CoefficientSet:
    """Coefficients of one linear-bound scheme in one direction."""
    scheme, direction = Scheme(scheme), Direction(direction)
    _check_legal(scheme, direction)
    K = model.K
    upper = direction is Direction.UPPER
    if scheme in (Scheme.TYPE0, Scheme.TYPE1):
        return CoefficientSet("scalar", np.array(1.0 if upper else 0.0), direction, scheme, K)
    if scheme in (Scheme.C, Scheme.CL):
        ratio, flagged = _skip_ratios(model, direction)
        if scheme is Scheme.C:
            c, events = _clamp(_extremize(ratio, direction))
            return CoefficientSet("scalar", np.asarray(c), direction, scheme, K, flagged, events)
        per_level = _extremize(ratio[:, 1:K], direction, axis=0) if K > 1 else np.zeros(0)
        c, events = _clamp(per_level)
        return CoefficientSet("per_level", c, direction, scheme, K, flagged, events)
    if scheme is Scheme.CKL:
        C, events = _recursive(ratio_side(model, upper), K)
        return CoefficientSet("full", C, direction, scheme, K, (), events)
    if scheme is Scheme.PRODUCT:
        C, events = _clamp(_product(model))
        return CoefficientSet("full", C, direction, scheme, K, (), events)
    if K > MAX_PATH_K:
        raise ValueError(f"path-sum coefficients are limited to K <= {MAX_PATH_K}, got K={K}")
    C = np.zeros((K + 1, K + 1))
    for k in range(2, K + 1):
        for l in range(1, k):
            C[k, l] = path_sum_coefficient(model, k, l, direction)
    C, events = _clamp(C)
    return CoefficientSet("full", C, direction, scheme, K, (), events)


def linear_bound_from(model: LevelModel, coefficients: CoefficientSet) -> BoundVector:
    """Linear bound for a given coefficient set."""
    direction = coefficients.direction
    P = _improve(model, direction)
    C = coefficients.full()
    inv = 1.0 / P[1:]
    d = np.array(
        [inv[k - 1] + math.fsum(C[k, 1:k] * inv[: k - 1]) for k in range(1, model.K + 1)]
    )
    return BoundVector(d, direction, coefficients.scheme.value, model.label)


def linear_bound(model: LevelModel, scheme, direction=Direction.LOWER) -> BoundVector:
    """``d_k = 1/P_k + sum_l c[k, l] / P_l`` with the scheme's coefficients."""
    return linear_bound_from(model, scheme_coefficients(model, scheme, direction))


def _drift_estimates(model: LevelModel, d: np.ndarray, upper_side: bool) -> np.ndarray:
    """Worst-case drift per level: an upper estimate if ``upper_side`` else a lower one."""
    K = model.K
    full = np.concatenate(([0.0], d))
    out = np.empty(K)
    r = None
    try:
        r = ratio_side(model, upper=not upper_side)
    except ValueError:
        pass
    for k in range(1, K + 1):
        if model.is_exact:
            q = model.q[k, :k]
            out[k - 1] = math.fsum(np.concatenate((q * full[k], -q[1:] * full[1:k])))
            continue
        pos = model.q_hi[k, :k] if upper_side else model.q_lo[k, :k]
        neg = model.q_lo[k, 1:k] if upper_side else model.q_hi[k, 1:k]
        est = math.fsum(np.concatenate((pos * full[k], -neg * full[1:k])))
        if r is not None:
            # drift = P(x) * (d_k - sum_l r(x, l) d_l) with P(x) in [improve_lo, improve_hi]
            bracket = full[k] - math.fsum(r[k, 1:k] * full[1:k])
            big, small = model.improve_hi[k], model.improve_lo[k]
            if upper_side:
                alt = (big if bracket >= 0 else small) * bracket
                est = min(est, alt)
            else:
                alt = (small if bracket >= 0 else big) * bracket
                est = max(est, alt)
        out[k - 1] = est
    return out


def verify_drift(model: LevelModel, bound: BoundVector) -> DriftReport:
    """Check the drift condition that certifies ``bound``.

    Lower bounds need drift at most 1 at every level, upper bounds at least 1,
    exact hitting times both.  Bounded models use the worst case over their
    probability intervals, so the check is sound but may reject valid bounds.
    """
    if bound.K != model.K:
        raise ValueError(f"bound has {bound.K} levels, model has {model.K}")
    direction = bound.direction
    if direction is Direction.LOWER:
        drift = _drift_estimates(model, bound.d, upper_side=True)
        passed = drift <= 1.0 + DRIFT_TOL
    elif direction is Direction.UPPER:
        drift = _drift_estimates(model, bound.d, upper_side=False)
        passed = drift >= 1.0 - DRIFT_TOL
    else:
        hi = _drift_estimates(model, bound.d, upper_side=True)
        lo = _drift_estimates(model, bound.d, upper_side=False)
        drift = hi if model.is_exact else np.where(np.abs(hi - 1) > np.abs(lo - 1), hi, lo)
        passed = (hi <= 1.0 + DRIFT_TOL) & (lo >= 1.0 - DRIFT_TOL)
    return DriftReport(drift, direction, passed)


def detect_shortcuts(model: LevelModel, epsilon: float = DEFAULT_EPSILON) -> ShortcutReport:
    """Pairs ``1 <= l < k`` whose chance of landing on ``l`` rather than above it is below ``epsilon``."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    den = np.cumsum(model.q_lo, axis=1)
    pairs, undefined = [], 0
    for k in range(2, model.K + 1):
        for l in range(1, k):
            if den[k, l] <= 0.0:
                undefined += 1
                continue
            ratio = model.q_hi[k, l] / den[k, l]
            if ratio < epsilon:
                pairs.append((k, l, float(ratio)))
    return ShortcutReport(tuple(pairs), float(epsilon), undefined)


def aggregate_start(bound: BoundVector, start: StartDistribution) -> float:
    """Bound on the expected hitting time from a random initial level."""
    w = start.weights
    if w.size != bound.K + 1:
        raise ValueError(f"start has {w.size} levels, bound needs {bound.K + 1}")
    return math.fsum(w[1:] * bound.d)


# -- comparison -----------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    direction: str
    level: int
    bound: float
    exact: Optional[float]


@dataclass
class SchemeComparison:
    """All bounds of one model, one row per (scheme, direction, level)."""

    label: str
    K: int
    bounds: dict = field(default_factory=dict)
    exact: Optional[BoundVector] = None

    @property
    def rows(self) -> list:
        out = []
        for (tag, direction), vec in self.bounds.items():
            for k in range(1, self.K + 1):
                ex = self.exact.at(k) if self.exact is not None else None
                out.append(ComparisonRow(tag, direction, k, vec.at(k), ex))
        return out

    def final(self) -> dict:
        """``d_K`` for every (scheme, direction)."""
        return {key: vec.at(self.K) for key, vec in self.bounds.items()}

    def sandwich_violations(self, rtol: float = 1e-9) -> list:
        """(tag, direction, level) triples that break lower <= exact <= upper.

        Without an exact solution, lower bounds are compared with the metric
        upper bound instead.
        """
        if self.exact is not None:
            ref_lo = ref_hi = self.exact.d
        else:
            ref_lo = self.bounds[("metric", "upper")].d
            ref_hi = self.bounds[("metric", "lower")].d
        bad = []
        for (tag, direction), vec in self.bounds.items():
            if direction == "lower":
                viol = vec.d > ref_lo * (1 + rtol)
            elif direction == "upper":
                viol = vec.d < ref_hi * (1 - rtol)
            else:
                continue
            bad += [(tag, direction, int(k) + 1) for k in np.flatnonzero(viol)]
        return bad


def bound_for(model: LevelModel, tag: str, direction=Direction.LOWER) -> BoundVector:
    """Dispatch on ``tag``: ``"exact"``, ``"metric"`` or a scheme name."""
    if tag == "exact":
        return exact_hitting_time(model)
    if tag == "metric":
        return metric_bound(model, direction)
    return linear_bound(model, tag, direction)


def compare_schemes(model: LevelModel) -> SchemeComparison:
    """Exact (when available), metric and every legal scheme/direction bound."""
    table = SchemeComparison(model.label, model.K)
    if model.is_exact:
        table.exact = exact_hitting_time(model)
        table.bounds[("exact", "")] = table.exact
    for direction in Direction:
        table.bounds[("metric", direction.value)] = metric_bound(model, direction)
    for scheme in Scheme:
        if scheme is Scheme.PATHSUM and model.K > MAX_PATH_K:
            continue
        for direction in legal_directions(scheme):
            table.bounds[(scheme.value, direction.value)] = linear_bound(model, scheme, direction)
    return table
