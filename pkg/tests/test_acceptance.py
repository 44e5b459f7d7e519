"""Acceptance criteria.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
every criterion is one test and its PASS/FAIL line is printed in the terminal
summary; ``python tests/test_acceptance.py`` prints the same lines directly.
"""
import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from levelbound import (  # noqa: E402
    Direction,
    Problem,
    compare_schemes,
    enumerate_chain,
    exact_hitting_time,
    linear_bound,
    metric_bound,
    monte_carlo,
    onemax_model,
    scheme_coefficients,
    transition_matrix,
    twomax1_model,
    verify_drift,
    weight_transition,
)
from conftest import ACCEPTANCE_LINES, mask_kernel  # noqa: E402

ONEMAX_N = range(2, 65)
TWOMAX1_N = range(4, 65, 2)
CASE_GRID = (8, 16, 32, 64)


def exact_models_up_to_64():
    for n in ONEMAX_N:
        yield onemax_model(n)
    for n in TWOMAX1_N:
        yield twomax1_model(n)


def c1_oracle_agreement():
    start = time.perf_counter()
    worst_q = worst_m = 0.0
    for problem, gen in [(Problem.onemax, onemax_model), (Problem.twomax1, twomax1_model)]:
        for n in range(2, 13):
            if gen is twomax1_model and (n < 4 or n % 2):
                continue
            chain = enumerate_chain(problem(n))
            model = gen(n)
            worst_q = max(worst_q, float(np.abs(chain.level_q - model.q).max()))
            exact = exact_hitting_time(model).d
            worst_m = max(worst_m, float(np.max(np.abs(chain.level_hitting[1:] - exact) / exact)))
    elapsed = time.perf_counter() - start
    ok = worst_q <= 1e-12 and worst_m <= 1e-10 and elapsed < 30
    return ok, f"max |dq|={worst_q:.2e}, max rel dm={worst_m:.2e}, {elapsed:.1f}s"


def c2_metric_equals_exact():
    worst = 0.0
    for model in exact_models_up_to_64():
        exact = exact_hitting_time(model).d
        for direction in Direction:
            d = metric_bound(model, direction).d
            worst = max(worst, float(np.max(np.abs(d - exact) / exact)))
    return worst <= 1e-9, f"max rel diff={worst:.2e}"


def c3_drift_equivalence():
    failures, undetected = [], []
    for model in exact_models_up_to_64():
        for (tag, direction), vec in compare_schemes(model).bounds.items():
            if tag == "exact":
                continue
            if not verify_drift(model, vec).ok:
                failures.append((model.label, tag, direction))
        inflated = metric_bound(model, "lower").scaled(1.01)
        if verify_drift(model, inflated).ok:
            undetected.append(model.label)
    ok = not failures and not undetected
    return ok, f"uncertified bounds={len(failures)}, undetected 1% inflations={len(undetected)}"


def _slope(ns, values):
    return float(np.polyfit(np.log(ns), values, 1)[0])


def c4_case_study_typec():
    d = [linear_bound(twomax1_model(n), "c", "lower").at(n - 1) for n in CASE_GRID]
    c = {n: float(scheme_coefficients(twomax1_model(n), "c", "lower").values) for n in CASE_GRID if n >= 10}
    bounded = max(d) <= 10
    slope = _slope(CASE_GRID, d)
    trend = slope <= 0.0
    tiny = all(v < 1e-6 for v in c.values())
    detail = (
        f"d_(n-1)={[round(v, 4) for v in d]}, slope vs ln n={slope:.4f}, "
        f"c={{{', '.join(f'{n}: {v:.2e}' for n, v in c.items())}}}"
    )
    return bounded and trend and tiny, detail


def c5_case_study_typecl():
    d = [linear_bound(twomax1_model(n), "cl", "lower").at(n - 1) for n in CASE_GRID]
    return max(d) <= 10, f"d_(n-1)={[round(v, 4) for v in d]}"


def c6_case_study_ckl():
    grid = (16, 32, 64, 128)
    scaled, rel = [], []
    for n in grid:
        model = twomax1_model(n)
        d = linear_bound(model, "ckl", "lower").at(n - 1)
        scaled.append(d / (n * math.log(n)))
        rel.append(d / exact_hitting_time(model).at(n - 1))
    spread = max(scaled) / min(scaled)
    floor = 0.8 * rel[0]
    ok = min(scaled) > 0 and spread < 3 and all(v >= floor for v in rel)
    return ok, f"d/(n ln n)={[round(v, 4) for v in scaled]}, spread={spread:.3f}, d/exact={[round(v, 6) for v in rel]}"


def c7_case_study_onemax():
    cs = {n: float(scheme_coefficients(onemax_model(n), "c", "lower").values) for n in range(8, 65)}
    worst = 0.0
    for n in range(8, 65):
        model = onemax_model(n)
        exact = exact_hitting_time(model).d
        d = linear_bound(model, "ckl", "lower").d
        worst = max(worst, float(np.max(np.abs(d - exact) / exact)))
    ok = min(cs.values()) >= math.exp(-1) and worst <= 1e-9
    return ok, f"min c={min(cs.values()):.4f} (e^-1={math.exp(-1):.4f}), ckl max rel diff={worst:.2e}"


def c8_dominance():
    lower = ["type0", "c", "cl", "ckl"]
    upper = ["type1", "c", "cl", "ckl"]
    bad = []
    for model in exact_models_up_to_64():
        table = compare_schemes(model)
        f = {key: vec.d for key, vec in table.bounds.items()}
        exact = table.exact.d
        lo = [f[(s, "lower")] for s in lower] + [exact]
        hi = [f[(s, "upper")] for s in upper] + [exact]
        for a, b in zip(lo, lo[1:]):
            if np.any(a > b * (1 + 1e-12)):
                bad.append(model.label)
        for a, b in zip(hi, hi[1:]):
            if np.any(a < b * (1 - 1e-12)):
                bad.append(model.label)
    return not bad, f"violating models={sorted(set(bad))}"


def c9_pathsum():
    models = [onemax_model(n) for n in range(2, 9)] + [twomax1_model(n) for n in (4, 6, 8)]
    worst = 0.0
    for model in models:
        for direction in Direction:
            a = scheme_coefficients(model, "ckl", direction).full()
            b = scheme_coefficients(model, "pathsum", direction).full()
            scale = np.maximum(np.abs(b), 1e-300)
            diff = np.where(b != 0, np.abs(a - b) / scale, np.abs(a - b))
            worst = max(worst, float(diff.max()))
    return worst <= 1e-10, f"max rel diff={worst:.2e} over {len(models)} models"


def c10_shortcuts():
    from levelbound import detect_shortcuts

    expected = {(6, 1), (6, 2), (6, 3), (6, 4), (6, 5), (9, 6)}
    got = detect_shortcuts(twomax1_model(10), 1e-3).keys
    none = detect_shortcuts(onemax_model(10), 1e-3).keys
    ok = got == expected and not none
    return ok, f"twomax1(10) pairs={sorted(got)}, expected={sorted(expected)}, onemax(10) pairs={sorted(none)}"


def c11_monte_carlo():
    start = time.perf_counter()
    sim = monte_carlo(Problem.onemax(16), 16, 10**4, 12345, workers=os.cpu_count())
    elapsed = time.perf_counter() - start
    exact = exact_hitting_time(onemax_model(16)).at(16)
    z = (sim.mean - exact) / sim.stderr
    ok = abs(z) <= 3 and elapsed < 60
    return ok, f"mean={sim.mean:.3f}, exact={exact:.3f}, z={z:.2f}, {elapsed:.1f}s"


def c12_kernel():
    worst_sum = 0.0
    symmetric = True
    for n in range(1, 65):
        M = transition_matrix(n)
        worst_sum = max(worst_sum, float(max(abs(math.fsum(row) - 1) for row in M)))
        for m in range(n + 1):
            scalar = [weight_transition(n, m, w) for w in range(n + 1)]
            worst_sum = max(worst_sum, abs(math.fsum(scalar) - 1))
            mirror = [weight_transition(n, n - m, n - w) for w in range(n + 1)]
            symmetric &= scalar == mirror
    agree = all(
        np.allclose(transition_matrix(n), mask_kernel(n), rtol=1e-12, atol=1e-15) for n in range(1, 13)
    )
    ok = worst_sum <= 1e-12 and symmetric and agree
    return ok, f"max |row sum - 1|={worst_sum:.1e}, complement symmetric={symmetric}, enumeration agrees={agree}"


CRITERIA = [
    ("1 oracle agreement", c1_oracle_agreement),
    ("2 metric bound equals exact", c2_metric_equals_exact),
    ("3 drift equivalence", c3_drift_equivalence),
    ("4 TwoMax1 Type-c lower bound", c4_case_study_typec),
    ("5 TwoMax1 Type-c_l lower bound", c5_case_study_typecl),
    ("6 TwoMax1 Type-c_kl growth", c6_case_study_ckl),
    ("7 OneMax coefficients", c7_case_study_onemax),
    ("8 scheme dominance", c8_dominance),
    ("9 path-sum oracle", c9_pathsum),
    ("10 shortcut detection", c10_shortcuts),
    ("11 Monte Carlo", c11_monte_carlo),
    ("12 kernel properties", c12_kernel),
]


def evaluate(name, fn):
    ok, detail = fn()
    line = f"{'PASS' if ok else 'FAIL'} criterion {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok, line


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[name.split()[0] for name, _ in CRITERIA])
def test_criterion(name, fn):
    ok, line = evaluate(name, fn)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(name, fn)[0] for name, fn in CRITERIA]
    sys.exit(0 if all(results) else 1)
