"""
Choosing the envelope dimension from data
=========================================

The true dimension is rarely known.  Two selectors are compared on one
dataset: an information criterion built on the fitted objective, and
cross-validated prediction error.
"""

import math

from envest import simulate
from envest.estimators import select_dimension_bic, select_dimension_cv

inst = simulate.generate_instance(d=10, u=3, seed=42)
data = simulate.sample_data(inst, n=800, seed=9000)
print("true dimension: 3\n")

bic = select_dimension_bic(data, "response", u_max=6)
print("   u        BIC")
for i, score in enumerate(bic.scores):
    mark = "  <-- selected" if i + 1 == bic.u else ""
    print("   %d   %10.2f%s" % (i + 1, score, mark))

cv = select_dimension_cv(data, "response", u_max=6, folds=5, seed=44)
print("\n   u   CV prediction error")
for i, score in enumerate(cv.scores):
    if math.isnan(score):
        continue
    mark = "  <-- selected" if i + 1 == cv.u else ""
    print("   %d   %10.4f%s" % (i + 1, score, mark))

print("\npast the true dimension the CV curve flattens: extra directions")
print("neither help nor hurt prediction, so small wobbles decide the pick.")
print("when the two disagree, prefer the smaller answer or inspect both fits.")
