"""
Shortcuts on TwoMax1
====================

TwoMax1 has two optima.  From the deceptive branch the EA tends to jump
straight to an optimum, so some intermediate levels are almost never
visited.  Such skipped levels drag simple linear bounds down.
"""
from levelbound import detect_shortcuts, linear_bound, scheme_coefficients, twomax1_model

model = twomax1_model(10)

# pairs (k, l) where, having reached l or better, landing exactly on l is rare
for eps in (1e-3, 1e-2):
    report = detect_shortcuts(model, eps)
    print(f"eps={eps:g}:", [(k, l, f"{r:.2e}") for k, l, r in report.pairs])

# the single Type-c coefficient is bounded by every shortcut ratio
c = scheme_coefficients(model, "c", "lower")
print("Type-c coefficient:", float(c.values))

# which is why Type-c gives an O(1) lower bound while the recursive scheme does not
for n in (16, 32, 64):
    m = twomax1_model(n)
    print(n, "type-c:", round(linear_bound(m, "c", "lower").at(n - 1), 3),
          "type-ckl:", round(linear_bound(m, "ckl", "lower").at(n - 1), 3))
