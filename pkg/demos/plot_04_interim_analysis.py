"""
Analysing a trial look by look
==============================

In practice the boundary for look k is computed when the look happens, and
earlier boundaries stay frozen. The interim state is an explicit value passed
from one look to the next.
"""

from pathlib import Path

from gsperm import DesignSpec
from gsperm.decision import AnalysisOptions, analyze_interim
from gsperm.io import ingest_trial_csv

here = Path(__file__).parent
data = ingest_trial_csv(here / "data" / "trial_k2.csv")
spec = DesignSpec.load(here / "data" / "design_k2.json")

for method in ("normal", "t-approx", "permutation"):
    state = None
    for k in range(1, data.n_stages + 1):
        trace, state = analyze_interim(data.through(k), spec, method, state,
                                       AnalysisOptions(B=2000, seed=1))
        last = trace.looks[-1]
        print(f"{method:12s} look {k}: S={last.s:.3f} c={last.c:.3f} crossed={last.crossed}")
        if trace.rejected:
            break
