"""
Critical values from alpha-spending functions
=============================================

A group sequential design spends its Type I error across the looks. Here we
compare the Pocock-type and O'Brien-Fleming-type spending functions and the
critical values they produce for the classical normal test.
"""

import numpy as np

from gsperm import CovarianceSchedule, SpendingFunction, normal_boundaries, spend

# How much alpha each function has used by a given information fraction
alpha = 0.025
pocock = SpendingFunction("pocock", alpha)
obf = SpendingFunction("obrien-fleming", alpha)
for t in (0.2, 0.5, 0.8, 1.0):
    print(f"t={t:.1f}  pocock={spend(pocock, t):.5f}  obrien-fleming={spend(obf, t):.6f}")

# With a single look both reduce to the one-sided normal quantile
single = normal_boundaries(CovarianceSchedule([1.0]), pocock)
print("K=1 critical value:", single.values[0])

# Five equally spaced looks: Pocock keeps the bar flat, O'Brien-Fleming starts high
looks = CovarianceSchedule(np.linspace(0.2, 1.0, 5))
for sf in (pocock, obf):
    b = normal_boundaries(looks, sf)
    print(sf.kind, np.round(b.values, 3), "attained:", np.round(b.attained_spend, 5))
