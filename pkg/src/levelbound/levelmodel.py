"""Fitness-level transition models.

A model with ``K`` non-optimal levels stores, for every ``1 <= k <= K`` and
``0 <= l < k``, an interval ``[q_lo[k, l], q_hi[k, l]]`` for the probability
of one generation moving a state of level ``k`` into level ``l``.  Level 0 is
the optimal set.  Matrices are ``(K+1, K+1)`` arrays indexed by level; row 0
and every entry with ``l >= k`` are zero.  The probability of staying put is
the row residual and is never stored.

Optional ratio matrices ``r_lo``/``r_hi`` bound the conditional probability
of landing in level ``l`` given that the step improves at all.
"""
from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernel import transition_matrix

SUM_TOL = 1e-12


class Kind(str, enum.Enum):
    EXACT = "exact"
    BOUNDED = "bounded"


class ModelError(ValueError):
    """An invariant of a level model is violated.

    ``entry`` holds the offending ``(k, l)`` pair, or ``(k, None)`` for a
    row-level violation, when one can be named.
    """

    def __init__(self, message: str, entry: Optional[tuple] = None):
        if entry is not None:
            message = f"{message} at entry {entry}"
        super().__init__(message)
        self.entry = entry


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LevelModel:
    """Immutable fitness-level model; see the module docstring for layout.

    Build instances through :meth:`exact`, :meth:`bounded`, the generators or
    :func:`load_model` rather than the raw constructor.
    """

    K: int
    kind: Kind
    q_lo: np.ndarray
    q_hi: np.ndarray
    r_lo: Optional[np.ndarray] = None
    r_hi: Optional[np.ndarray] = None
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        for name in ("q_lo", "q_hi", "r_lo", "r_hi"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _frozen(val))
        _validate(self)

    # -- construction -----------------------------------------------------
    @classmethod
    def exact(cls, q, label: str = "", meta: Optional[dict] = None) -> "LevelModel":
        """Exact model from a ``(K+1, K+1)`` matrix or ragged rows ``k = 1..K``."""
        q = _as_matrix(q)
        return cls(q.shape[0] - 1, Kind.EXACT, q, q.copy(), label=label, meta=meta or {})

    @classmethod
    def bounded(cls, q_lo, q_hi, label: str = "", meta: Optional[dict] = None) -> "LevelModel":
        q_lo, q_hi = _as_matrix(q_lo), _as_matrix(q_hi)
        if q_lo.shape != q_hi.shape:
            raise ModelError("q_lo and q_hi differ in shape")
        return cls(q_lo.shape[0] - 1, Kind.BOUNDED, q_lo, q_hi, label=label, meta=meta or {})

    # -- derived quantities -----------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.kind is Kind.EXACT

    @property
    def has_ratios(self) -> bool:
        return self.r_lo is not None

    @property
    def improve_lo(self) -> np.ndarray:
        """Lower bound on the probability of leaving level ``k`` upward; index 0 unused."""
        return self.q_lo.sum(axis=1)

    @property
    def improve_hi(self) -> np.ndarray:
        return self.q_hi.sum(axis=1)

    @property
    def q(self) -> np.ndarray:
        """Exact transition matrix; only defined for exact models."""
        if not self.is_exact:
            raise ValueError("q is only defined for exact models; use q_lo/q_hi")
        return self.q_lo

    def to_dict(self) -> dict:
        rows = lambda a: [a[k, :k].tolist() for k in range(1, self.K + 1)]
        out = {"label": self.label, "K": self.K, "kind": self.kind.value, "q_lo": rows(self.q_lo)}
        if not self.is_exact:
            out["q_hi"] = rows(self.q_hi)
        if self.has_ratios:
            out["r_lo"] = [self.r_lo[k, 1:k].tolist() for k in range(1, self.K + 1)]
            out["r_hi"] = [self.r_hi[k, 1:k].tolist() for k in range(1, self.K + 1)]
        return out


def _as_matrix(q) -> np.ndarray:
    if isinstance(q, np.ndarray) and q.ndim == 2 and q.shape[0] == q.shape[1]:
        return np.array(q, dtype=float)
    rows = list(q)
    K = len(rows)
    mat = np.zeros((K + 1, K + 1))
    for k, row in enumerate(rows, start=1):
        row = list(row)
        if len(row) != k:
            raise ModelError(f"row for level {k} must have {k} entries, got {len(row)}", (k, None))
        mat[k, :k] = row
    return mat


def _first(mask: np.ndarray) -> Optional[tuple]:
    """First ``(k, l)`` with ``l < k`` where ``mask`` is set."""
    hits = np.argwhere(np.tril(mask, -1))
    return (int(hits[0][0]), int(hits[0][1])) if hits.size else None


def _validate(model: LevelModel) -> None:
    K = model.K
    if not isinstance(K, (int, np.integer)) or K < 1:
        raise ModelError(f"K must be a positive integer, got {K!r}")
    shape = (K + 1, K + 1)
    for name in ("q_lo", "q_hi"):
        a = getattr(model, name)
        if a.shape != shape:
            raise ModelError(f"{name} has shape {a.shape}, expected {shape} for K={K}")
        if not np.all(np.isfinite(a)):
            k, l = np.argwhere(~np.isfinite(a))[0]
            raise ModelError(f"{name} is not finite", (int(k), int(l)))
        if np.any(np.triu(a) != 0):
            k, l = np.argwhere(np.triu(a) != 0)[0]
            raise ModelError(f"{name} must be strictly lower triangular", (int(k), int(l)))
    lo, hi = model.q_lo, model.q_hi
    bad = _first(~((lo >= 0.0) & (lo <= hi) & (hi <= 1.0)))
    if bad is not None:
        k, l = bad
        raise ModelError(f"need 0 <= q_lo <= q_hi <= 1, got [{lo[k, l]!r}, {hi[k, l]!r}]", bad)
    over = np.flatnonzero(lo[1:].sum(axis=1) > 1.0 + SUM_TOL)
    if over.size:
        raise ModelError("improvement mass q_lo exceeds 1", (int(over[0]) + 1, None))
    stuck = np.flatnonzero(~(hi[1:].sum(axis=1) > 0.0))
    if stuck.size:
        raise ModelError("level cannot improve (chain not absorbing)", (int(stuck[0]) + 1, None))
    if model.is_exact and not np.array_equal(lo, hi):
        k, l = np.argwhere(lo != hi)[0]
        raise ModelError("exact model needs q_lo == q_hi", (int(k), int(l)))
    if (model.r_lo is None) != (model.r_hi is None):
        raise ModelError("r_lo and r_hi must be given together")
    if model.r_lo is not None:
        _validate_ratios(model)


def _validate_ratios(model: LevelModel) -> None:
    K = model.K
    r_lo, r_hi = model.r_lo, model.r_hi
    for name, a in (("r_lo", r_lo), ("r_hi", r_hi)):
        if a.shape != (K + 1, K + 1):
            raise ModelError(f"{name} has shape {a.shape}, expected {(K + 1, K + 1)}")
    bad = _first(~((r_lo >= 0.0) & (r_lo <= r_hi) & (r_hi <= 1.0)))
    if bad is not None:
        raise ModelError("need 0 <= r_lo <= r_hi <= 1", bad)
    for k in range(1, K + 1):
        if model.is_exact:
            want = model.q_lo[k, :k] / model.q_lo[k, :k].sum()
            bad = np.abs(r_lo[k, :k] - want) > SUM_TOL
            if np.any(bad) or not np.array_equal(r_lo[k], r_hi[k]):
                l = int(np.argmax(bad))
                raise ModelError("exact ratio disagrees with q", (k, l))
            if abs(r_lo[k, :k].sum() - 1.0) > SUM_TOL:
                raise ModelError("exact ratios do not sum to 1", (k, None))
        elif model.q_lo[k, :k].sum() > 0:
            if r_lo[k, :k].sum() > 1.0 + SUM_TOL or r_hi[k, :k].sum() < 1.0 - SUM_TOL:
                raise ModelError("ratio intervals do not bracket 1", (k, None))


def _lower_ratios(q_lo: np.ndarray, q_hi: np.ndarray) -> np.ndarray:
    s_hi = q_hi.sum(axis=1, keepdims=True)
    s_hi[0] = 1.0
    return q_lo / s_hi


def _upper_ratios(q_lo: np.ndarray, q_hi: np.ndarray, kind: Kind) -> np.ndarray:
    s_lo = q_lo.sum(axis=1, keepdims=True)
    s_lo[0] = 1.0
    zero = np.flatnonzero(s_lo[:, 0] == 0.0)
    if zero.size:
        raise ModelError(
            "improvement lower bound is 0, so the ratio upper bound is undefined",
            (int(zero[0]), None),
        )
    r = q_hi / s_lo
    return r if kind is Kind.EXACT else np.minimum(1.0, r)


def _ratio_bounds(q_lo: np.ndarray, q_hi: np.ndarray, kind: Kind):
    if kind is Kind.EXACT:
        r = _lower_ratios(q_lo, q_hi)
        return r, r.copy()
    return _lower_ratios(q_lo, q_hi), _upper_ratios(q_lo, q_hi, kind)


def derive_ratios(model: LevelModel) -> LevelModel:
    """Return a copy of ``model`` carrying conditional-ratio matrices.

    Exact models get ``r = q / sum(q)`` row by row.  Bounded models get the
    conservative quotient of opposite-side bounds, with the upper side capped
    at 1.
    """
    if model.has_ratios:
        raise ValueError("model already carries ratio matrices")
    r_lo, r_hi = _ratio_bounds(model.q_lo, model.q_hi, model.kind)
    return LevelModel(
        model.K, model.kind, model.q_lo, model.q_hi, r_lo, r_hi, model.label, dict(model.meta)
    )


def ratios(model: LevelModel) -> tuple[np.ndarray, np.ndarray]:
    """``(r_lo, r_hi)`` of ``model``, derived on the fly when absent."""
    if model.has_ratios:
        return model.r_lo, model.r_hi
    return _ratio_bounds(model.q_lo, model.q_hi, model.kind)


def ratio_side(model: LevelModel, upper: bool) -> np.ndarray:
    """One side of :func:`ratios`; the lower side never needs ``q_lo`` row sums."""
    if model.has_ratios:
        return model.r_hi if upper else model.r_lo
    if upper:
        if model.is_exact:
            return _lower_ratios(model.q_lo, model.q_hi)
        return _upper_ratios(model.q_lo, model.q_hi, model.kind)
    return _lower_ratios(model.q_lo, model.q_hi)


@dataclass(frozen=True)
class StartDistribution:
    """Initial distribution over levels ``0..K``."""

    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("start weights must be a vector over levels 0..K")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("start weights must be finite and non-negative")
        if abs(w.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"start weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def point(cls, level: int, K: int) -> "StartDistribution":
        w = np.zeros(K + 1)
        w[level] = 1.0
        return cls(w)


# -- generators -----------------------------------------------------------

def _check_n(n: int, low: int, even: bool = False) -> None:
    if not isinstance(n, (int, np.integer)) or n < low or n > 1024:
        raise ValueError(f"n must be an integer in [{low}, 1024], got {n!r}")
    if even and n % 2:
        raise ValueError(f"n must be even, got {n}")


def onemax_level_weights(n: int) -> list[list[int]]:
    """Hamming weights making up each OneMax level; level ``k`` has ``k`` zero-bits."""
    return [[n - k] for k in range(n + 1)]


def twomax1_level_weights(n: int) -> list[list[int]]:
    """Hamming weights making up each TwoMax1 level ``0..n-1``."""
    half = n // 2
    levels = [[0, n]]
    levels += [[n - k] for k in range(1, half + 1)]
    levels += [[k - half] for k in range(half + 1, n)]
    return levels


def _from_weight_levels(n: int, levels: list[list[int]], label: str, meta: dict) -> LevelModel:
    kern = np.asarray(transition_matrix(n))
    K = len(levels) - 1
    q = np.zeros((K + 1, K + 1))
    for k in range(1, K + 1):
        (src,) = levels[k]
        for l in range(k):
            q[k, l] = kern[src, levels[l]].sum()
    return LevelModel.exact(q, label=label, meta=meta)


def onemax_model(n: int) -> LevelModel:
    """Exact level model of the (1+1) EA on OneMax with ``K = n``."""
    _check_n(n, 2)
    return _from_weight_levels(
        n, onemax_level_weights(n), f"onemax(n={n})", {"problem": "onemax", "n": int(n)}
    )


def twomax1_model(n: int) -> LevelModel:
    """Exact level model of the (1+1) EA on TwoMax1 with ``K = n - 1``."""
    _check_n(n, 4, even=True)
    return _from_weight_levels(
        n, twomax1_level_weights(n), f"twomax1(n={n})", {"problem": "twomax1", "n": int(n)}
    )


# -- file I/O -------------------------------------------------------------

def model_from_dict(data: dict) -> LevelModel:
    try:
        K = data["K"]
        kind = Kind(data["kind"])
        q_lo = _as_matrix(data["q_lo"])
    except KeyError as exc:
        raise ModelError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"malformed model: {exc}") from None
    if not isinstance(K, int) or isinstance(K, bool):
        raise ModelError(f"K must be an integer, got {K!r}")
    if q_lo.shape[0] - 1 != K:
        raise ModelError(f"K={K} but q_lo has {q_lo.shape[0] - 1} rows")
    if "q_hi" in data:
        q_hi = _as_matrix(data["q_hi"])
        if q_hi.shape != q_lo.shape:
            raise ModelError(f"K={K} but q_hi has {q_hi.shape[0] - 1} rows")
    elif kind is Kind.EXACT:
        q_hi = q_lo.copy()
    else:
        raise ModelError("bounded model needs q_hi")
    r_lo = r_hi = None
    if "r_lo" in data or "r_hi" in data:
        if "r_lo" not in data or "r_hi" not in data:
            raise ModelError("r_lo and r_hi must be given together")
        # column 0 is not serialized; refill it from q
        r_lo = _lower_ratios(q_lo, q_hi)
        if kind is Kind.EXACT:
            r_hi = r_lo.copy()
        else:
            s_lo = q_lo.sum(axis=1, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                r_hi = np.where(s_lo > 0, np.minimum(1.0, q_hi / s_lo), 1.0)
            r_hi = np.tril(r_hi, -1)
        for name, target in (("r_lo", r_lo), ("r_hi", r_hi)):
            rows = data[name]
            if len(rows) != K:
                raise ModelError(f"{name} must have {K} rows")
            for k, row in enumerate(rows, start=1):
                if len(row) != k - 1:
                    raise ModelError(f"{name} row for level {k} must have {k - 1} entries", (k, None))
                target[k, 1:k] = row
    return LevelModel(K, kind, q_lo, q_hi, r_lo, r_hi, str(data.get("label", "")))


def load_model(path: str | os.PathLike) -> LevelModel:
    """Read and validate a model JSON file."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ModelError(f"{path}: top level must be a JSON object")
    return model_from_dict(data)


def save_model(model: LevelModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1)
        fh.write("\n")
