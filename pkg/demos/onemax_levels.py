"""
Fitness levels of OneMax
========================

Build the exact level chain of the (1+1) EA on OneMax, solve it, and check
the answer against the full 2^n chain.
"""
import numpy as np

from levelbound import Problem, enumerate_chain, exact_hitting_time, onemax_model

n = 10
model = onemax_model(n)

# level k holds the strings with k zero-bits; row k of q is where one step lands
print(model.label, "K =", model.K)
print("improvement probability per level:", np.round(model.improve_lo[1:], 4))

# expected generations to the optimum from every level
m = exact_hitting_time(model)
print("m_k:", np.round(m.d, 3))

# the full chain over all 1024 strings gives the same numbers
chain = enumerate_chain(Problem.onemax(n))
print("max |model - chain| on q:", np.abs(chain.level_q - model.q).max())
print("max relative gap on m:", np.max(np.abs(chain.level_hitting[1:] - m.d) / m.d))
