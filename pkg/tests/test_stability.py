import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import numerical_jacobian
from trojan2e import equilibria as eqm
from trojan2e import model
from trojan2e import stability as stab
from trojan2e.errors import NotAnEquilibriumError, Trojan2eError
from trojan2e.units import FieldParams


def flow(params):
    def f(z):
        s = model.PhaseState.from_flat(z, params.dims)
        d = model.equations_of_motion(s, params)
        return np.concatenate([d.p.ravel(), d.q.ravel()])
    return f


def sample_equilibria():
    out = []
    for br in (1, -1):
        for side in eqm.SIDES:
            for w, e in [(0.5, 1.0), (1.3, 0.4), (2.0, 1.5)]:
                out += eqm.langmuir_equilibria(FieldParams(w, e, br), side)
    out.append(eqm.type2_config(FieldParams(1.3, 0.0, -1, dims=2), math.pi))
    out += eqm.collinear_equilibria(FieldParams(0.5, 2.0, -1, dims=2))
    out += eqm.collinear_equilibria(FieldParams(1.3, 0.2, -1, dims=2))
    return out


@pytest.mark.parametrize("eq", sample_equilibria(), ids=lambda e: f"{e.eq_class.variant}")
def test_linearization_matches_finite_difference_flow_jacobian(eq):
    s = stab.linearization(eq).entries
    fd = numerical_jacobian(flow(eq.params), eq.state.flat())
    np.testing.assert_allclose(s, fd, atol=1e-6, rtol=1e-6)


def test_linearization_is_symplectic_times_phase_hessian():
    eq = eqm.langmuir_equilibria(FieldParams(1.3, 0.4, 1))[0]
    n = 2 * eq.params.dims
    j = np.block([[np.zeros((n, n)), -np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    np.testing.assert_allclose(stab.linearization(eq).entries,
                               j @ stab.phase_space_hessian(eq, eq.params), atol=1e-12)


def test_block_accessors():
    eq = eqm.langmuir_equilibria(FieldParams(1.0, 0.0, 1))[0]
    s = stab.linearization(eq)
    np.testing.assert_array_equal(s.block(2, 0), np.eye(3))
    np.testing.assert_array_equal(s.block(0, 0), stab.angular_block(eq.params))
    assert s.coordinate_hessian_block.shape == (6, 6)


@given(st.floats(0.2, 3.0), st.floats(0.05, 2.0), st.sampled_from([1, -1]),
       st.sampled_from(eqm.SIDES))
def test_spectrum_has_hamiltonian_quartet_symmetry(omega, eps, branch, side):
    for e in eqm.langmuir_equilibria(FieldParams(omega, eps, branch), side):
        rep = stab.equilibrium_stability(e)
        assert rep.symmetric
        assert rep.max_real_part >= 0


def test_classify_known_spectra():
    rot = np.array([[0.0, -2.0], [2.0, 0.0]])
    saddle = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert stab.classify(rot).stable
    r = stab.classify(saddle)
    assert not r.stable and r.max_real_part == pytest.approx(1.0)


def test_zero_field_rotation_zero_modes_are_excluded():
    e = eqm.langmuir_equilibria(FieldParams(1.0, 0.0, 1))[0]
    rep = stab.equilibrium_stability(e)
    assert rep.zero_modes >= 2


def test_classify_rejects_non_finite():
    with pytest.raises(Trojan2eError):
        stab.classify(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_linearization_rejects_non_equilibrium():
    e = eqm.langmuir_equilibria(FieldParams(1.0, 0.0, 1))[0]
    moved = eqm.Equilibrium(e.config * 1.01, e.momenta, e.eq_class, e.params, 0.0)
    with pytest.raises(NotAnEquilibriumError):
        stab.linearization(moved)


def test_report_serializes():
    rep = stab.equilibrium_stability(eqm.langmuir_equilibria(FieldParams(1.3, 1.0, -1))[0])
    d = rep.to_dict()
    assert len(d["eigenvalues"]) == 12 and isinstance(d["stable"], bool)


def test_grid_validation():
    np.testing.assert_allclose(stab.grid(0, 1, 3), [0, 0.5, 1])
    with pytest.raises(ValueError):
        stab.grid(0, 1, 1)
    with pytest.raises(ValueError):
        stab.grid(1, 0, 5)


def test_scan_layout_and_csv():
    m = stab.scan((0.5, 2.0), (0.0, 1.0), (4, 3), branch=-1)
    assert len(m.cells) == 12 and m.stable_mask().shape == (4, 3)
    c = m.cell(1, 2)
    assert (c["omega"], c["epsilon"]) == (pytest.approx(1.0), pytest.approx(1.0))
    rows = m.csv_rows()
    assert rows[0] == stab.StabilityMap.CSV_HEADER
    n_roots = sum(max(1, len(c["roots"])) for c in m.cells)
    assert len(rows) == 1 + n_roots
    assert all(len(r.split(",")) == 7 for r in rows)
    s = m.summary()
    assert s["cells"] == 12 and s["cells_stable"] == int(m.stable_mask().sum())


def test_scan_empty_cells_have_empty_root_fields():
    # branch -1, omega 0.5, tiny field: below the bistability threshold, no root
    m = stab.scan((0.5, 0.6), (0.0, 0.1), 2, branch=-1)
    assert not m.cell(0, 0)["found"]
    assert m.csv_rows()[1].endswith(",-1,,,,")


def test_scan_parallel_matches_serial():
    a = stab.scan((0.5, 2.5), (0.0, 2.0), 5, branch=-1, side="trojan")
    b = stab.scan((0.5, 2.5), (0.0, 2.0), 5, branch=-1, side="trojan", workers=2)
    assert a.csv_rows() == b.csv_rows()


@pytest.mark.parametrize("variant, dims", [(eqm.TYPE_II, 2), (eqm.TYPE_IIIA, 2)])
def test_scan_other_classes(variant, dims):
    m = stab.scan((0.6, 1.5), (0.5, 2.0), 3, branch=-1, eq_class=variant, dims=dims)
    assert len(m.cells) == 9
    assert any(c["found"] for c in m.cells)
