"""
Simulated runs against the exact hitting time
=============================================

Seeded runs of the (1+1) EA on OneMax(16) from the all-zeros level.
"""
import os

from levelbound import Problem, exact_hitting_time, monte_carlo, onemax_model

n = 16
exact = exact_hitting_time(onemax_model(n)).at(n)

# each run has its own stream, so more runs extend rather than reshuffle the sample
for runs in (100, 1000, 10000):
    sim = monte_carlo(Problem.onemax(n), n, runs, seed=12345, workers=os.cpu_count())
    z = (sim.mean - exact) / sim.stderr
    print(f"runs={runs:6d} mean={sim.mean:9.3f} +- {sim.stderr:.3f}  exact={exact:.3f}  z={z:+.2f}")
