import math

import numpy as np
import pytest

from trojan2e import dynamics as dyn
from trojan2e import equilibria as eqm
from trojan2e import model
from trojan2e import stability as stab
from trojan2e.errors import CollisionError
from trojan2e.units import FieldParams

P = FieldParams(1.3, 0.5, -1)


def perturbed_langmuir(params=P, delta=1e-3):
    e = eqm.langmuir_equilibria(params, "trojan")[0]
    q = e.config + delta
    return e, model.PhaseState(q, model.zero_velocity_momenta(q, params))


def test_equilibrium_stays_put():
    e = eqm.langmuir_equilibria(P)[0]
    tr = dyn.integrate(e.state, P, 5 * dyn.rotation_period(P))
    assert np.max(tr.deviation(e.config)) < 1e-8


def test_energy_conservation_and_sampling():
    _, s = perturbed_langmuir()
    t = 10 * dyn.rotation_period(P)
    tr = dyn.integrate(s, P, t)
    assert tr.energy_drift < 1e-10
    assert tr.times[0] == 0 and tr.times[-1] == pytest.approx(t)
    assert len(tr) == 10 * dyn.SAMPLES_PER_PERIOD + 1
    assert tr.stop_reason is None


def test_time_reversal_round_trip():
    _, s = perturbed_langmuir()
    t = 5 * dyn.rotation_period(P)
    fwd = dyn.integrate(s, P, t)
    back = dyn.integrate(fwd.final, P, 0.0, t_start=t)
    assert back.times[-1] == 0.0
    np.testing.assert_allclose(back.final.q, s.q, atol=1e-8)
    np.testing.assert_allclose(back.final.p, s.p, atol=1e-8)


def test_deviation_limit_stops_unstable_run():
    p = FieldParams(1.0, 0.5, 1)  # outward family, never stable on this branch
    e = eqm.langmuir_equilibria(p)[0]
    assert not stab.equilibrium_stability(e).stable
    q = e.config + 1e-4
    tr = dyn.integrate(model.PhaseState(q, model.zero_velocity_momenta(q, p)), p,
                       200 * dyn.rotation_period(p), reference=e.config, deviation_limit=1e-2)
    assert tr.stop_reason == "deviation_limit"
    assert tr.deviation(e.config)[-1] == pytest.approx(1e-2, rel=1e-6)


def test_head_on_fall_into_nucleus_is_a_collision():
    p = FieldParams(1.0, 0.0, 1)
    q = np.array([[0.0, 0.0, 0.3], [0.0, 0.0, -5.0]])
    with pytest.raises(CollisionError) as info:
        dyn.integrate(model.PhaseState(q, np.zeros((2, 3))), p, 10.0)
    assert 0 < info.value.time < 10.0


def test_zero_duration_rejected():
    _, s = perturbed_langmuir()
    with pytest.raises(ValueError):
        dyn.integrate(s, P, 0.0)


def test_lab_frame_round_trip_and_invariants():
    _, s = perturbed_langmuir()
    tr = dyn.integrate(s, P, 2 * dyn.rotation_period(P))
    lab = dyn.to_lab_frame(tr, P.omega)
    assert lab.frame == "lab"
    np.testing.assert_allclose(np.linalg.norm(lab.q, axis=2), np.linalg.norm(tr.q, axis=2),
                               rtol=1e-13)
    np.testing.assert_allclose(lab.q[:, :, 2], tr.q[:, :, 2])
    back = dyn.to_lab_frame(lab, -P.omega)
    assert back.frame == "rotating"
    np.testing.assert_allclose(back.q, tr.q, atol=1e-12)
    # a rotating-frame fixed point circles the nucleus once per period in the lab
    e = eqm.langmuir_equilibria(P)[0]
    fixed = dyn.to_lab_frame(dyn.integrate(e.state, P, dyn.rotation_period(P)), P.omega)
    np.testing.assert_allclose(fixed.q[-1], fixed.q[0], atol=1e-8)
    phase = math.atan2(fixed.q[50, 0, 1], fixed.q[50, 0, 0]) - math.atan2(e.config[0, 1],
                                                                          e.config[0, 0])
    assert (phase % (2 * math.pi)) == pytest.approx(2 * math.pi * 50 / 200, abs=1e-6)


def test_csv_rows():
    _, s = perturbed_langmuir()
    tr = dyn.integrate(s, P, 1.0, stride=0.25)
    rows = tr.csv_rows()
    assert rows[0] == "t,x1,y1,z1,x2,y2,z2,px1,py1,pz1,px2,py2,pz2,energy"
    assert len(rows) == 6
    assert [float(r.split(",")[0]) for r in rows[1:]] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_two_dimensional_runs():
    p = FieldParams(1.3, 0.2, -1, dims=2)
    e = eqm.type3_config(p, eqm.TYPE_IIIB)
    tr = dyn.integrate(e.state, p, dyn.rotation_period(p))
    assert tr.q.shape[1:] == (2, 2) and tr.energy_drift < 1e-10
