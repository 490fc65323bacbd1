import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import numerical_gradient, numerical_jacobian
from trojan2e import model
from trojan2e.errors import SingularConfigurationError
from trojan2e.units import FieldParams


def params_strategy(dims=None):
    return st.builds(
        FieldParams,
        omega=st.floats(0.05, 3.0),
        epsilon=st.floats(-3.0, 3.0),
        branch=st.sampled_from([1, -1]),
        dims=st.sampled_from([2, 3]) if dims is None else st.just(dims),
        charge=st.sampled_from([2.0, 1.0, 0.5]),
    )


def config_for(params, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-3, 3, (2, params.dims))


def well_separated(q):
    r1, r2 = np.linalg.norm(q, axis=1)
    return min(r1, r2, np.linalg.norm(q[0] - q[1])) > 0.3


def zvs_reference(q, p: FieldParams):
    """Term-by-term transcription of the ZVS, independent of the model module."""
    total = 0.0
    k = p.omega**2 + p.branch * p.omega
    for qi in q:
        total += -p.charge / np.sqrt(np.sum(qi**2)) + p.epsilon * qi[0] - 0.5 * k * (qi[0]**2 + qi[1]**2)
    return total + 1.0 / np.sqrt(np.sum((q[0] - q[1]) ** 2))


@given(params_strategy(), st.integers(0, 10**6))
def test_zvs_matches_reference(p, seed):
    q = config_for(p, seed)
    assume(well_separated(q))
    assert model.zvs(q, p) == pytest.approx(zvs_reference(q, p), rel=1e-12, abs=1e-12)


@given(params_strategy(), st.integers(0, 10**6))
def test_zvs_gradient_matches_finite_differences(p, seed):
    q = config_for(p, seed)
    assume(well_separated(q))
    g = numerical_gradient(lambda x: model.zvs(x, p), q)
    np.testing.assert_allclose(model.zvs_gradient(q, p), g, rtol=1e-6, atol=1e-6)


@given(params_strategy(), st.integers(0, 10**6))
def test_zvs_hessian_matches_finite_differences(p, seed):
    q = config_for(p, seed)
    assume(well_separated(q))
    h = numerical_jacobian(lambda x: model.zvs_gradient(x.reshape(q.shape), p).ravel(), q.ravel())
    hess = model.zvs_hessian(q, p)
    np.testing.assert_allclose(hess, h, rtol=1e-5, atol=1e-5)
    np.testing.assert_allclose(hess, hess.T, atol=1e-12)


@given(params_strategy(), st.integers(0, 10**6))
def test_potential_hessian_matches_finite_differences(p, seed):
    q = config_for(p, seed)
    assume(well_separated(q))
    h = numerical_jacobian(lambda x: model.potential_gradient(x.reshape(q.shape), p).ravel(),
                           q.ravel())
    np.testing.assert_allclose(model.potential_hessian(q, p), h, rtol=1e-5, atol=1e-5)


@given(params_strategy(), st.integers(0, 10**6))
def test_hamilton_equations_follow_from_the_hamiltonian(p, seed):
    """dq/dt = dH/dp and dp/dt = -dH/dq by finite differences of H."""
    rng = np.random.default_rng(seed)
    q = config_for(p, seed)
    assume(well_separated(q))
    mom = rng.uniform(-2, 2, q.shape)
    d = model.equations_of_motion(model.PhaseState(q, mom), p)
    dh_dp = numerical_gradient(lambda x: model.hamiltonian(model.PhaseState(q, x), p), mom)
    dh_dq = numerical_gradient(lambda x: model.hamiltonian(model.PhaseState(x, mom), p), q)
    np.testing.assert_allclose(d.q, dh_dp, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(d.p, -dh_dq, rtol=1e-6, atol=1e-6)


@given(params_strategy(), st.integers(0, 10**6))
def test_energy_splits_into_kinetic_plus_zvs(p, seed):
    rng = np.random.default_rng(seed)
    q = config_for(p, seed)
    assume(well_separated(q))
    s = model.PhaseState(q, rng.uniform(-2, 2, q.shape))
    v = model.velocities(s, p)
    assert model.hamiltonian(s, p) == pytest.approx(0.5 * np.sum(v**2) + model.zvs(q, p),
                                                    rel=1e-10, abs=1e-10)


@given(params_strategy(), st.integers(0, 10**6))
def test_zero_velocity_momenta_give_zero_velocity_and_zvs(p, seed):
    q = config_for(p, seed)
    assume(well_separated(q))
    s = model.PhaseState(q, model.zero_velocity_momenta(q, p))
    np.testing.assert_allclose(model.velocities(s, p), 0.0, atol=1e-14)
    assert model.hamiltonian(s, p) == pytest.approx(model.zvs(q, p), rel=1e-12, abs=1e-12)


def test_zvs_reduces_to_potential_at_zero_angular_coefficient():
    p = FieldParams(0.5, 1.3, -1)
    q = np.array([[0.3, -1.0, 0.7], [-1.2, 0.4, -0.5]])
    assert model.zvs(q, p) == pytest.approx(model.potential(q, p), rel=1e-14)


def test_batch_potential_matches_scalar_and_flags_singularities():
    p = FieldParams(0.5, 2.0, -1)
    rng = np.random.default_rng(0)
    w = rng.normal(size=(20, 2, 3))
    w[3, 0] = 0.0  # electron on the nucleus
    w[5, 1] = w[5, 0]  # coincident electrons
    v = model.batch_potential(w, p)
    assert np.isinf(v[3]) and np.isinf(v[5])
    for i in (0, 1, 7, 19):
        assert v[i] == pytest.approx(model.potential(w[i], p), rel=1e-13)
    no_pair = model.batch_potential(w[:2], p, interaction=False)
    r12 = np.linalg.norm(w[:2, 0] - w[:2, 1], axis=1)
    np.testing.assert_allclose(v[:2] - no_pair, 1.0 / r12, rtol=1e-12)


@pytest.mark.parametrize("q", [
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
])
def test_singular_configurations_raise(q):
    p = FieldParams(1.0, 0.0, 1)
    with pytest.raises(SingularConfigurationError):
        model.zvs(q, p)
    with pytest.raises(SingularConfigurationError):
        model.zvs_gradient(q, p)


def test_phase_state_flat_round_trip_and_validation():
    s = model.PhaseState(np.arange(6.0).reshape(2, 3), -np.arange(6.0).reshape(2, 3))
    z = s.flat()
    np.testing.assert_array_equal(z[:6], s.p.ravel())
    back = model.PhaseState.from_flat(z, 3)
    np.testing.assert_array_equal(back.q, s.q)
    with pytest.raises(ValueError):
        model.PhaseState(np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        model.PhaseState([[np.nan, 0, 0], [1, 0, 0]], np.zeros((2, 3)))


def test_config_dimension_must_match_params():
    with pytest.raises(ValueError):
        model.zvs(np.ones((2, 3)), FieldParams(1.0, 0.0, 1, dims=2))


@given(params_strategy(dims=3), st.integers(0, 10**6))
def test_exchange_and_z_mirror_symmetry(p, seed):
    q = config_for(p, seed)
    assume(well_separated(q))
    mirrored = q * np.array([1.0, 1.0, -1.0])
    assert model.zvs(q[::-1], p) == pytest.approx(model.zvs(q, p), rel=1e-13, abs=1e-13)
    assert model.zvs(mirrored, p) == pytest.approx(model.zvs(q, p), rel=1e-13, abs=1e-13)
