"""Short DMC run at the two-lobe parameters; prints the x-z density of electron 1.

Walkers cross between the mirror lobes slowly, so a run this short leaves them
unequal; the lobe heights equalize over longer runs.  A production run is
``trojan2e dmc --config demos/two_lobe.cfg --hbar physical``.
"""

import numpy as np

from trojan2e import dmc
from trojan2e.units import LabParams, to_scaled

params = to_scaled(LabParams(0.0185, 0.1235, 0.0370))
cfg = dmc.DmcConfig(walker_target=4000, time_step=0.4, equilibration_steps=3000,
                    accumulation_steps=6000, record_every=5, bins=40)
r = dmc.run_dmc(params, cfg)
print(f"E = {r.energy:.4f} +- {r.energy_error:.4f}")
print(f"lobe centers (electron 1): {np.round(r.lobe_centers[0], 2).tolist()}")
print(f"matched cubic root: {r.matched_root['root_index']} a = {r.matched_root['side_length']:.3f}")
h = r.density["xz"][0]
shades = " .:-=+*#%@"
c = h.counts / h.counts.max()
for j in reversed(range(c.shape[1])):
    print("".join(shades[min(9, int(9.999 * v))] for v in c[:, j]))
