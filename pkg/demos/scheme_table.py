"""
Comparing coefficient schemes
=============================

Every lower and upper bound on the final level, next to the exact answer.
"""
from levelbound import compare_schemes, onemax_model, twomax1_model

for model in (onemax_model(16), twomax1_model(16), twomax1_model(64)):
    table = compare_schemes(model)
    exact = table.exact.at(model.K)
    print(f"\n{model.label}  exact m_K = {exact:.4f}")
    for (tag, direction), value in table.final().items():
        if tag == "exact":
            continue
        print(f"  {tag:8s} {direction:5s} {value:14.4f}  ratio {value / exact:.4f}")
