import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from levelbound import LevelModel

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# -- brute-force oracles, independent of the package ------------------------

def mask_kernel(n):
    """Weight-class kernel by enumerating every mutation mask of every source weight."""
    masks = np.arange(1 << n)
    bits = (masks[:, None] >> np.arange(n)) & 1
    flips = bits.sum(axis=1)
    prob = (1.0 / n) ** flips * (1.0 - 1.0 / n) ** (n - flips)
    out = np.zeros((n + 1, n + 1))
    for m in range(n + 1):
        # representative source: the lowest m bits set
        ones_flipped = bits[:, :m].sum(axis=1)
        zeros_flipped = flips - ones_flipped
        target = m - ones_flipped + zeros_flipped
        np.add.at(out[m], target, prob)
    return out


def onemax_fitness(x, n):
    return sum(x)


def twomax1_fitness(x, n):
    w = sum(x)
    if w in (0, n):
        return n
    return w if w >= n // 2 else n // 2 - w


def fraction_level_q(fitness, n):
    """Exact rational level probabilities of the (1+1) EA, by enumerating states and masks.

    Returns ``{(k, l): Fraction}`` averaged over the states of level ``k`` together
    with the set of distinct per-state values, so callers can check level-basedness.
    """
    states = list(itertools.product((0, 1), repeat=n))
    f = {x: fitness(x, n) for x in states}
    values = sorted(set(f.values()), reverse=True)
    level = {x: values.index(f[x]) for x in states}
    p = Fraction(1, n)
    per_state = {}
    for x in states:
        k = level[x]
        if k == 0:
            continue
        acc = {}
        for mask in states:
            y = tuple(a ^ b for a, b in zip(x, mask))
            h = sum(mask)
            l = level[y]
            if l < k:
                acc[l] = acc.get(l, 0) + p**h * (1 - p) ** (n - h)
        for l in range(k):
            per_state.setdefault((k, l), set()).add(acc.get(l, Fraction(0)))
    return {key: next(iter(vals)) for key, vals in per_state.items()}, per_state


# -- model strategies ---------------------------------------------------------

@st.composite
def exact_models(draw, min_K=1, max_K=8):
    K = draw(st.integers(min_K, max_K))
    q = np.zeros((K + 1, K + 1))
    for k in range(1, K + 1):
        raw = draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k))
        mass = draw(st.floats(0.01, 1.0))
        raw = np.array(raw) + 1e-3
        q[k, :k] = raw / raw.sum() * mass
    return LevelModel.exact(q, label=f"random(K={K})")


def random_state_chain(rng, K, per_level):
    """Non-level-based elitist chain with several states per level.

    Returns per-state level probabilities ``probs[k][s, l]`` and exact hitting
    times ``m[k][s]`` for every state ``s`` of level ``k``.  Within-level moves
    are allowed and make the state-wise times differ.
    """
    sizes = [1] + [per_level] * K
    offsets = np.cumsum([0] + sizes)
    N = offsets[-1]
    T = np.zeros((N, N))
    for k in range(1, K + 1):
        for s in range(per_level):
            i = offsets[k] + s
            improve = rng.uniform(0.05, 0.9)
            same = rng.uniform(0.0, 1.0 - improve)
            w = rng.uniform(0.05, 1.0, size=offsets[k])
            T[i, : offsets[k]] = improve * w / w.sum()
            u = rng.uniform(0.0, 1.0, size=per_level)
            T[i, offsets[k] : offsets[k + 1]] = same * u / u.sum()
            T[i, i] += 1.0 - T[i].sum()
    T[0, 0] = 1.0
    Q = T[1:, 1:]
    m = np.linalg.solve(np.eye(N - 1) - Q, np.ones(N - 1))
    m = np.concatenate(([0.0], m))
    probs, times = {}, {}
    for k in range(1, K + 1):
        rows = range(offsets[k], offsets[k + 1])
        probs[k] = np.array([[T[i, offsets[l] : offsets[l + 1]].sum() for l in range(k)] for i in rows])
        times[k] = m[offsets[k] : offsets[k + 1]]
    return probs, times


def bounded_from_states(probs, K, label="states"):
    q_lo = np.zeros((K + 1, K + 1))
    q_hi = np.zeros((K + 1, K + 1))
    for k in range(1, K + 1):
        q_lo[k, :k] = probs[k].min(axis=0)
        q_hi[k, :k] = probs[k].max(axis=0)
    return LevelModel.bounded(q_lo, q_hi, label=label)


@pytest.fixture
def onemax2():
    from levelbound import onemax_model

    return onemax_model(2)
