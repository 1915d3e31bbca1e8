"""
A small replication table
=========================

Repeat simulate-then-fit many times and report how often the selected number
of factors equals the truth. Replicate seeds derive from one master seed, so
the table does not depend on the number of worker processes.
"""

from factorreg.simulate import SimScenario, probability_table, replicate

reports = [
    replicate(SimScenario(p=50, T=T, delta1=d1, delta2=d2, seed=2024), n_reps=40)
    for d1, d2 in ((0.0, 0.0), (0.4, 0.5))
    for T in (300, 600)
]
for row in probability_table(reports):
    print(row)

s = reports[-1].summary()
print(f"median ||Bhat - B||_F: {s['b_error_median']:.3f}  median loading distance: {s['dbar_median']:.4f}")
