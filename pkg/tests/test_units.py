import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import constants as sc

from trojan2e import model
from trojan2e.errors import InvalidParameterError
from trojan2e.units import (
    BOHR_RADIUS_M,
    DotParams,
    FieldParams,
    LabParams,
    ScaleFactors,
    dot_effective_units,
    dot_potential_si,
    from_scaled,
    lab_hamiltonian,
    scale_state,
    to_scaled,
    unscale_state,
)

LOBE_EPSILON = 0.1235 / 0.0370 ** (4 / 3)


def test_two_lobe_case_lab_parameters_map_to_half_omega():
    p = to_scaled(LabParams(0.0370 / 2, 0.1235, 0.0370))
    assert p.omega == pytest.approx(0.5, rel=1e-15)
    assert p.branch == -1
    assert p.epsilon == pytest.approx(10.02, abs=5e-3)
    assert p.epsilon == pytest.approx(LOBE_EPSILON, rel=1e-14)
    assert p.angular == pytest.approx(0.0, abs=1e-15)


def test_unit_cyclotron_frequency_is_identity():
    p = to_scaled(LabParams(0.3, 0.2, 1.0))
    assert (p.omega, p.epsilon) == (0.3, 0.2)


def test_negative_cyclotron_frequency_selects_upper_branch():
    assert to_scaled(LabParams(0.3, 0.2, -1.0)).branch == 1


def test_from_scaled_two_lobe_values():
    lab = from_scaled(FieldParams(0.5, LOBE_EPSILON, -1), 0.0370)
    assert lab.cp_frequency == pytest.approx(0.0185, rel=1e-14)
    assert lab.cp_strength == pytest.approx(0.1235, rel=1e-14)


def test_from_scaled_trivial():
    lab = from_scaled(FieldParams(1.0, 0.0, -1), 1.0)
    assert (lab.cp_frequency, lab.cp_strength) == (1.0, 0.0)


def test_from_scaled_rejects_sign_mismatch_and_zero():
    with pytest.raises(InvalidParameterError):
        from_scaled(FieldParams(1.0, 0.0, 1), 0.5)
    with pytest.raises(InvalidParameterError):
        from_scaled(FieldParams(1.0, 0.0, -1), 0.0)


@pytest.mark.parametrize("kwargs", [
    dict(omega=0.0, epsilon=1.0), dict(omega=-1.0, epsilon=1.0), dict(omega=1.0, epsilon=math.nan),
    dict(omega=1.0, epsilon=0.0, branch=0), dict(omega=1.0, epsilon=0.0, dims=1),
    dict(omega=1.0, epsilon=0.0, charge=0.0),
])
def test_field_params_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        FieldParams(**kwargs)


def test_lab_params_validation():
    with pytest.raises(InvalidParameterError):
        LabParams(0.1, 0.1, 0.0)
    with pytest.raises(InvalidParameterError):
        LabParams(0.0, 0.1, 1.0)


omegas = st.floats(1e-3, 10.0)
fields = st.floats(-20.0, 20.0)
cyclotrons = st.floats(1e-4, 10.0)


@given(omegas, fields, st.sampled_from([1, -1]), cyclotrons)
def test_round_trip_scaled_lab_scaled(omega, eps, branch, oc):
    p = FieldParams(omega, eps, branch)
    q = to_scaled(from_scaled(p, -branch * oc))
    assert q.omega == pytest.approx(omega, rel=1e-12)
    assert q.epsilon == pytest.approx(eps, rel=1e-12, abs=1e-300)
    assert q.branch == branch


@given(st.floats(1e-4, 5.0), fields, st.floats(1e-4, 5.0), st.sampled_from([1, -1]))
def test_round_trip_lab_scaled_lab(cp, e, oc, sign):
    lab = LabParams(cp, e, sign * oc)
    back = from_scaled(to_scaled(lab), lab.cyclotron_frequency)
    assert back.cp_frequency == pytest.approx(cp, rel=1e-12)
    assert back.cp_strength == pytest.approx(e, rel=1e-12, abs=1e-300)


@given(st.floats(1e-3, 3.0), st.floats(0.05, 4.0), fields, st.sampled_from([1, -1]),
       st.integers(0, 2**31 - 1))
def test_scaling_reproduces_scaled_hamiltonian(oc, omega_ratio, eps, sign, seed):
    """Lab-frame atomic-unit energy equals energy unit times the scaled energy."""
    rng = np.random.default_rng(seed)
    oc = sign * oc
    lab = LabParams(omega_ratio * abs(oc), eps * abs(oc) ** (4 / 3), oc)
    params = to_scaled(lab)
    q = rng.uniform(-3, 3, (2, 3))
    p = rng.uniform(-3, 3, (2, 3))
    q_au, p_au = unscale_state(q, p, oc)
    e_lab = lab_hamiltonian(q_au, p_au, lab)
    e_scaled = model.hamiltonian(model.PhaseState(q, p), params)
    assert e_lab / ScaleFactors(oc).energy == pytest.approx(e_scaled, rel=1e-10, abs=1e-10)


def test_scale_state_inverse():
    q = np.arange(6.0).reshape(2, 3) + 1
    p = -q
    q2, p2 = unscale_state(*scale_state(q, p, 0.037), 0.037)
    np.testing.assert_allclose(q2, q, rtol=1e-14)
    np.testing.assert_allclose(p2, p, rtol=1e-14)


def test_scale_factors_are_consistent_powers():
    f = ScaleFactors(0.037)
    assert f.action == pytest.approx(0.037 ** (-1 / 3))  # not canonical
    assert f.hbar == pytest.approx(0.037 ** (1 / 3))
    assert f.energy * f.time == pytest.approx(f.action)
    assert f.field * f.length == pytest.approx(f.energy)


def test_identity_material_gives_vacuum_units():
    dot = DotParams(1.0, 1.0, 1.0, 50.0, 1.0, 10.0)
    _, report = dot_effective_units(dot)
    assert report.length_unit_nm == pytest.approx(BOHR_RADIUS_M * 1e9, rel=1e-12)
    hartree_mev = sc.physical_constants["Hartree energy in eV"][0] * 1e3
    assert report.energy_unit_meV == pytest.approx(hartree_mev, rel=1e-9)


def test_identity_dot_mapping_with_unit_hybrid_frequency_is_identity():
    """Unit material and a hybrid frequency of 1 a.u. leave (omega, epsilon) unscaled."""
    dot = DotParams(1.0, 1.0, 1.0, 50.0, 1.0, 10.0)
    p0, r0 = dot_effective_units(dot)
    # rebuild with the field chosen so that the hybrid frequency is exactly 1 a.u.
    wc_per_tesla = r0.cyclotron_eff / dot.b_field
    w0 = r0.confinement_eff
    b = math.sqrt(1.0 - 4 * w0**2) / wc_per_tesla
    p, r = dot_effective_units(DotParams(b, 1.0, 1.0, 50.0, 1.0, 10.0))
    assert r.hybrid_eff == pytest.approx(1.0, rel=1e-12)
    assert p.omega == pytest.approx(r.rotation_eff, rel=1e-12)
    assert p.epsilon == pytest.approx(r.field_eff, rel=1e-12)


def test_dot_requires_displacement():
    with pytest.raises(InvalidParameterError):
        dot_effective_units(DotParams(5.0, 0.067, 12.4, 40.0, 0.008, 0.0))


def test_dot_params_validation():
    with pytest.raises(InvalidParameterError):
        DotParams(-1.0, 0.067, 12.4, 40.0, 0.008, 98.0)


def test_dot_report_renders():
    _, report = dot_effective_units(DotParams(5.0, 0.067, 12.4, 40.0, 0.008, 98.0))
    text = str(report)
    assert "kV/m" in text and "GHz" in text


def test_dot_zvs_matches_si_potential():
    """The scaled ZVS and the SI potential differ by a constant and the energy unit."""
    dot = DotParams(5.0, 0.067, 12.4, 40.0, 0.008, 98.0)
    p, r = dot_effective_units(dot)
    rng = np.random.default_rng(3)
    unit_j = r.energy_unit_meV * 1e-3 * sc.e * ScaleFactors(r.hybrid_eff).energy
    diffs = []
    for _ in range(5):
        q = rng.uniform(-15, 15, (2, 2))
        diffs.append(dot_potential_si(q * r.scaled_length_nm, dot) / unit_j - model.zvs(q, p))
    np.testing.assert_allclose(diffs, diffs[0], rtol=1e-9)
