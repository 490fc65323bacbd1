"""Perturbed stable and unstable equilibria followed for 100 rotation periods."""

import numpy as np

from trojan2e import dynamics as dyn
from trojan2e import equilibria as eqm
from trojan2e import model
from trojan2e import stability as stab
from trojan2e.units import FieldParams

rng = np.random.default_rng(0)
cases = [(FieldParams(1.2, 1.5, -1), "trojan"), (FieldParams(1.0, 0.5, 1), "outward")]
for p, side in cases:
    eqs = eqm.langmuir_equilibria(p, side)
    e = min(eqs, key=lambda x: stab.equilibrium_stability(x).max_real_part)
    rep = stab.equilibrium_stability(e)
    d = rng.standard_normal(e.config.shape)
    q = e.config + 1e-4 * d / np.abs(d).max()
    tr = dyn.integrate(model.PhaseState(q, model.zero_velocity_momenta(q, p)), p,
                       100 * dyn.rotation_period(p), reference=e.config, deviation_limit=1e-2)
    print(f"omega={p.omega} eps={p.epsilon} branch={p.branch:+d} {side}: "
          f"a={e.side_length:.4f} stable={rep.stable} max Re={rep.max_real_part:.3g}")
    print(f"  ran to t={tr.times[-1]:.1f} ({tr.stop_reason or 'full length'}), "
          f"max deviation {tr.deviation(e.config).max():.2e}, energy drift {tr.energy_drift:.1e}")
