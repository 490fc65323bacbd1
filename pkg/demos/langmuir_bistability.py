"""Langmuir configurations appear in pairs once the field passes a threshold.

Sweeps the scaled field at fixed omega, prints the cubic roots, and checks
each against a full force-balance refinement.
"""

import math

import numpy as np

from trojan2e import equilibria as eqm
from trojan2e.units import FieldParams

OMEGA, BRANCH = 0.5, -1
EPS_C = 3 * math.sqrt(3) * 16 ** (1 / 3) / 16  # k = -1/4 at omega 0.5 on branch -1

print(f"threshold field for omega={OMEGA}, branch={BRANCH}: {EPS_C:.6f}")
print(f"{'epsilon':>8} {'roots':>5}  side lengths (refined)")
for eps in np.linspace(0.75, 1.2, 10):
    p = FieldParams(OMEGA, eps, BRANCH)
    roots = eqm.langmuir_cubic(p)
    refined = [eqm.refine(eqm.langmuir_config(a, p).config * 1.01, p).side_length for a in roots]
    print(f"{eps:8.4f} {len(roots):5d}  " + ", ".join(f"{a:.5f} ({r:.5f})"
                                                     for a, r in zip(roots, refined)))
