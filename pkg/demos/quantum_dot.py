"""Two electrons in a GaAs-like dot with a displaced impurity, mapped to scaled units."""

import numpy as np

from trojan2e import equilibria as eqm
from trojan2e import stability as stab
from trojan2e.units import DotParams, dot_effective_units

dot = DotParams(b_field=5.0, effective_mass=0.067, dielectric_constant=12.4,
                confinement_radius=40.0, impurity_charge=0.008, impurity_displacement=98.0)
params, report = dot_effective_units(dot)
print(f"scaled omega={params.omega:.4f} epsilon={params.epsilon:.4f} branch={params.branch:+d}")
print(f"length unit {report.scaled_length_nm:.3f} nm")
for e in eqm.collinear_equilibria(params, eqm.TYPE_IIIA):
    nm = e.config * report.scaled_length_nm
    rep = stab.equilibrium_stability(e)
    print(f"Type IIIa electrons at x = {np.round(nm[:, 0], 2).tolist()} nm, stable={rep.stable}")
