"""Ground-truth engines for checking level bounds.

``enumerate_chain`` builds the exact elitist chain of the (1+1) EA over all
``2**n`` bit strings and solves it level by level.  ``path_sum_coefficient``
expands linear-bound coefficients as an explicit sum over descending level
paths.  ``monte_carlo`` simulates the algorithm bit by bit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .levelmodel import LevelModel, ratio_side

MAX_CHAIN_N = 14
MAX_PATH_K = 12
MAX_GENERATIONS = 10**9
_CHUNK = 512


@dataclass(frozen=True)
class Problem:
    """A pseudo-Boolean benchmark whose fitness depends on the Hamming weight only."""

    name: str
    n: int

    def __post_init__(self):
        if self.name == "onemax":
            if self.n < 2:
                raise ValueError(f"OneMax needs n >= 2, got {self.n}")
        elif self.name == "twomax1":
            if self.n < 4 or self.n % 2:
                raise ValueError(f"TwoMax1 needs even n >= 4, got {self.n}")
        else:
            raise ValueError(f"unknown problem {self.name!r}")

    @classmethod
    def onemax(cls, n: int) -> "Problem":
        return cls("onemax", n)

    @classmethod
    def twomax1(cls, n: int) -> "Problem":
        return cls("twomax1", n)

    def fitness_of_weight(self, w):
        w = np.asarray(w)
        n = self.n
        if self.name == "onemax":
            return w.copy()
        return np.where((w == 0) | (w == n), n, np.where(w >= n // 2, w, n // 2 - w))

    @property
    def f_max(self) -> int:
        return int(self.fitness_of_weight(np.arange(self.n + 1)).max())

    def weight_levels(self) -> np.ndarray:
        """Level index of every weight ``0..n``; levels rank fitness from best (0) down."""
        f = self.fitness_of_weight(np.arange(self.n + 1))
        distinct = np.unique(f)[::-1]
        return np.searchsorted(-distinct, -f)

    @property
    def K(self) -> int:
        return int(self.weight_levels().max())


@dataclass(frozen=True)
class ChainOracleResult:
    """Exact solution of the full chain.

    ``level_q[k, l]`` is the mean over states of level ``k`` of the one-step
    probability of entering level ``l``; ``level_q_spread`` is the max-min of
    that probability within the level.  ``level_hitting``/``level_hitting_spread``
    summarize ``hitting`` the same way.
    """

    problem: Problem
    hitting: np.ndarray
    level_of: np.ndarray
    level_q: np.ndarray
    level_q_spread: np.ndarray
    level_hitting: np.ndarray
    level_hitting_spread: np.ndarray

    @property
    def K(self) -> int:
        return self.level_q.shape[0] - 1


def _popcount_table(n: int) -> np.ndarray:
    table = np.zeros(1 << n, dtype=np.int64)
    for bit in range(n):
        table += (np.arange(1 << n) >> bit) & 1
    return table


def enumerate_chain(problem: Problem) -> ChainOracleResult:
    """Solve the elitist chain of the (1+1) EA on all ``2**n`` states.

    Offspring ``y`` of ``x`` is accepted iff ``f(y) >= f(x)``.  Levels are the
    distinct fitness values ranked from best.  Because no accepted move lowers
    fitness, the hitting-time system is block triangular and is solved one
    level at a time, best level first.
    """
    n = problem.n
    if n > MAX_CHAIN_N:
        raise ValueError(f"state space too large: n={n} > {MAX_CHAIN_N}")
    N = 1 << n
    pop = _popcount_table(n)
    f = problem.fitness_of_weight(pop)
    distinct = np.unique(f)[::-1]
    level_of = np.searchsorted(-distinct, -f)
    K = len(distinct) - 1
    onehot = np.zeros((N, K + 1))
    onehot[np.arange(N), level_of] = 1.0
    p = 1.0 / n
    by_distance = np.array([p**h * (1.0 - p) ** (n - h) for h in range(n + 1)])
    states = np.arange(N)

    hitting = np.zeros(N)
    level_q = np.zeros((K + 1, K + 1))
    spread = np.zeros((K + 1, K + 1))
    level_hit = np.zeros(K + 1)
    hit_spread = np.zeros(K + 1)
    for k in range(1, K + 1):
        idx = np.flatnonzero(level_of == k)
        better, worse = level_of < k, level_of > k
        pos = np.full(N, -1)
        pos[idx] = np.arange(idx.size)
        A = np.eye(idx.size)
        rhs = np.ones(idx.size)
        agg = np.empty((idx.size, K + 1))
        for start in range(0, idx.size, _CHUNK):
            rows = idx[start : start + _CHUNK]
            P = by_distance[pop[rows[:, None] ^ states[None, :]]]
            agg[start : start + rows.size] = P @ onehot
            rejected = P[:, worse].sum(axis=1)
            rhs[start : start + rows.size] += P[:, better] @ hitting[better]
            same = P[:, idx]
            block = A[start : start + rows.size]
            block -= same
            block[np.arange(rows.size), start + np.arange(rows.size)] -= rejected
        m = scipy.linalg.solve(A, rhs)
        hitting[idx] = m
        level_q[k, :k] = agg[:, :k].mean(axis=0)
        spread[k, :k] = agg[:, :k].max(axis=0) - agg[:, :k].min(axis=0)
        level_hit[k] = m.mean()
        hit_spread[k] = m.max() - m.min()
    return ChainOracleResult(problem, hitting, level_of, level_q, spread, level_hit, hit_spread)


def path_sum_coefficient(model: LevelModel, k: int, l: int, direction) -> float:
    """Coefficient ``c[k, l]`` as an explicit sum over descending level paths.

    Every path ``k = j0 > j1 > ... > jm = l`` contributes the product of the
    conditional ratios along it (lower ratios for a lower bound, upper ratios
    for an upper bound).  There are ``2**(k-l-1)`` paths, so ``K`` is capped.
    """
    from .bounds import Direction

    direction = Direction(direction)
    if model.K > MAX_PATH_K:
        raise ValueError(f"path sums are limited to K <= {MAX_PATH_K}, got K={model.K}")
    if not 1 <= l < k <= model.K:
        raise ValueError(f"need 1 <= l < k <= K, got k={k}, l={l}")
    r = ratio_side(model, upper=direction is Direction.UPPER)
    total = []
    between = range(l + 1, k)
    for size in range(len(between) + 1):
        for stops in itertools.combinations(between, size):
            path = (k,) + tuple(reversed(stops)) + (l,)
            prod = 1.0
            for a, b in zip(path, path[1:]):
                prod *= r[a, b]
            total.append(prod)
    return math.fsum(total)


@dataclass(frozen=True)
class SimulationResult:
    """Sample statistics of simulated hitting times."""

    problem: Problem
    start_level: int
    runs: int
    seed: int
    samples: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def std(self) -> float:
        return float(self.samples.std(ddof=1)) if self.runs > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.runs)


def run_stream(seed: int, run: int) -> np.random.Generator:
    """Independent PCG64 stream for one run, keyed by ``(seed, run)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run,))))


def _one_run(problem: Problem, weights: np.ndarray, rng: np.random.Generator) -> int:
    n = problem.n
    p = 1.0 / n
    table = problem.fitness_of_weight(np.arange(n + 1))
    f_max = table.max()
    # uniform state of the level: pick a weight in proportion to its class size
    sizes = np.array([math.comb(n, int(w)) for w in weights], dtype=float)
    w = int(weights[rng.choice(len(weights), p=sizes / sizes.sum())])
    x = np.zeros(n, dtype=bool)
    x[rng.permutation(n)[:w]] = True
    fx = table[w]
    t = 0
    while fx != f_max:
        if t >= MAX_GENERATIONS:
            raise RuntimeError(
                f"{problem.name}(n={n}) run exceeded {MAX_GENERATIONS} generations at fitness {fx}"
            )
        t += 1
        flips = rng.random(n) < p
        if not flips.any():
            continue
        y = x ^ flips
        fy = table[int(y.sum())]
        if fy >= fx:
            x, fx = y, fy
    return t


def monte_carlo(
    problem: Problem, start_level: int, runs: int, seed: int, workers: Optional[int] = None
) -> SimulationResult:
    """Simulate the (1+1) EA from a uniform state of ``start_level`` until optimal.

    Run ``i`` draws from ``run_stream(seed, i)``, so results do not depend on
    ``workers`` or execution order.
    """
    levels = problem.weight_levels()
    if not 0 <= start_level <= levels.max():
        raise ValueError(f"start level {start_level} outside [0, {levels.max()}]")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    weights = np.flatnonzero(levels == start_level)
    if start_level == 0:
        return SimulationResult(problem, 0, runs, seed, np.zeros(runs))

    def job(i):
        return _one_run(problem, weights, run_stream(seed, i))

    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            samples = list(pool.map(job, range(runs)))
    else:
        samples = [job(i) for i in range(runs)]
    return SimulationResult(problem, start_level, runs, seed, np.asarray(samples, dtype=float))
