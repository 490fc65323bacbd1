"""Rotating-frame two-electron Hamiltonian, its flow and zero-velocity surface.

In scaled units, with the Coulomb center of charge ``Z`` at the origin, the
CP field along +x and the magnetic field along z,

    H = sum_i [ p_i**2/2 - Z/r_i - c (x_i p_yi - y_i p_xi) + rho_i**2/8
                + epsilon x_i ] + 1/r_12,

where ``c = omega + branch/2`` and ``rho_i**2 = x_i**2 + y_i**2``.
Substituting the velocities ``xdot = p_x + c y``, ``ydot = p_y - c x`` gives

    H = sum_i v_i**2 / 2 + ZVS(q),
    ZVS = sum_i [ -Z/r_i + epsilon x_i - k/2 rho_i**2 ] + 1/r_12,

with ``k = omega**2 + branch*omega`` (``c**2 - 1/4``).  Equilibria of the
rotating-frame motion are the critical points of the ZVS.

Positions and momenta are ``(2, dims)`` arrays, one row per electron.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularConfigurationError
from .units import FieldParams

__all__ = [
    "PhaseState",
    "as_config",
    "distances",
    "hamiltonian",
    "potential",
    "potential_gradient",
    "potential_hessian",
    "equations_of_motion",
    "zero_velocity_momenta",
    "velocities",
    "zvs",
    "zvs_gradient",
    "zvs_hessian",
    "batch_potential",
]

# Distances below this are treated as coincident particles.
MIN_DISTANCE = 1e-12


@dataclass
class PhaseState:
    """Positions ``q`` and canonical momenta ``p``, both ``(2, dims)``."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.array(self.q, dtype=float)
        self.p = np.array(self.p, dtype=float)
        if self.q.shape != self.p.shape or self.q.shape[0] != 2 or self.q.shape[1] not in (2, 3):
            raise ValueError(f"expected matching (2, dims) arrays, got {self.q.shape}, {self.p.shape}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("phase state has non-finite entries")

    @property
    def dims(self) -> int:
        return self.q.shape[1]

    def flat(self) -> np.ndarray:
        """Phase vector ordered momenta first, ``(p1, p2, q1, q2)``."""
        return np.concatenate([self.p.ravel(), self.q.ravel()])

    @classmethod
    def from_flat(cls, z, dims: int) -> "PhaseState":
        z = np.asarray(z, dtype=float)
        n = 2 * dims
        return cls(q=z[n:].reshape(2, dims), p=z[:n].reshape(2, dims))

    def swapped(self) -> "PhaseState":
        return PhaseState(self.q[::-1].copy(), self.p[::-1].copy())


def as_config(q, params: FieldParams | None = None) -> np.ndarray:
    q = np.array(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != 2:
        raise ValueError(f"configuration must have shape (2, dims), got {q.shape}")
    if params is not None and q.shape[1] != params.dims:
        raise ValueError(f"configuration has {q.shape[1]} coordinates, params.dims = {params.dims}")
    return q


def distances(q):
    """Return ``(r1, r2, r12)`` and raise on coincident particles."""
    q = np.asarray(q, dtype=float)
    r1 = np.linalg.norm(q[0])
    r2 = np.linalg.norm(q[1])
    r12 = np.linalg.norm(q[0] - q[1])
    if min(r1, r2, r12) < MIN_DISTANCE:
        raise SingularConfigurationError(
            f"coincident particles: r1={r1:.3g}, r2={r2:.3g}, r12={r12:.3g}"
        )
    return r1, r2, r12


def _rot(v):
    """``(y, -x, 0)`` pattern of the angular term, applied row-wise."""
    out = np.zeros_like(v)
    out[:, 0] = v[:, 1]
    out[:, 1] = -v[:, 0]
    return out


def _coulomb_hessian(v, r, charge):
    """Hessian of ``-charge/|v|``."""
    d = len(v)
    return charge * (np.eye(d) / r**3 - 3.0 * np.outer(v, v) / r**5)


def _pair_hessian(d, r12):
    """Hessian of ``1/|d|`` with respect to ``d``."""
    return 3.0 * np.outer(d, d) / r12**5 - np.eye(len(d)) / r12**3


def _common_gradient(q, params, r1, r2, r12):
    """Gradient of the Coulomb, pair and field terms (shared by ZVS and U)."""
    z = params.charge
    g = np.empty_like(q)
    g[0] = z * q[0] / r1**3
    g[1] = z * q[1] / r2**3
    d = q[0] - q[1]
    pair = -d / r12**3
    g[0] += pair
    g[1] -= pair
    g[:, 0] += params.epsilon
    return g


def _common_hessian(q, params, r1, r2, r12):
    n = params.dims
    h = np.zeros((2 * n, 2 * n))
    h[:n, :n] = _coulomb_hessian(q[0], r1, params.charge)
    h[n:, n:] = _coulomb_hessian(q[1], r2, params.charge)
    m = _pair_hessian(q[0] - q[1], r12)
    h[:n, :n] += m
    h[n:, n:] += m
    h[:n, n:] -= m
    h[n:, :n] -= m
    return h


def _transverse_diag(params, coefficient):
    """Diagonal of ``coefficient * (x1, y1, [0], x2, y2, [0])``."""
    unit = np.zeros(params.dims)
    unit[:2] = coefficient
    return np.diag(np.concatenate([unit, unit]))


def potential(q, params: FieldParams) -> float:
    """Coordinate-only part ``U`` of the canonical Hamiltonian.

    ``U = sum_i [-Z/r_i + rho_i**2/8 + epsilon x_i] + 1/r_12``.  When the
    angular coefficient vanishes (``omega = 1/2``, ``branch = -1``) this is
    the full potential of a real Schrodinger operator, and it equals the ZVS.
    """
    q = as_config(q, params)
    r1, r2, r12 = distances(q)
    rho2 = np.sum(q[:, :2] ** 2)
    return (-params.charge * (1.0 / r1 + 1.0 / r2) + rho2 / 8.0
            + params.epsilon * (q[0, 0] + q[1, 0]) + 1.0 / r12)


def potential_gradient(q, params: FieldParams) -> np.ndarray:
    q = as_config(q, params)
    r1, r2, r12 = distances(q)
    g = _common_gradient(q, params, r1, r2, r12)
    g[:, :2] += q[:, :2] / 4.0
    return g


def potential_hessian(q, params: FieldParams) -> np.ndarray:
    q = as_config(q, params)
    r1, r2, r12 = distances(q)
    return _common_hessian(q, params, r1, r2, r12) + _transverse_diag(params, 0.25)


def hamiltonian(state: PhaseState, params: FieldParams) -> float:
    """Rotating-frame energy of a phase state (scaled units)."""
    q, p = state.q, state.p
    as_config(q, params)
    lz = q[:, 0] * p[:, 1] - q[:, 1] * p[:, 0]
    return 0.5 * np.sum(p**2) - params.angular * np.sum(lz) + potential(q, params)


def velocities(state: PhaseState, params: FieldParams) -> np.ndarray:
    """Rotating-frame velocities ``dq/dt = p + c (y, -x, 0)``."""
    return state.p + params.angular * _rot(state.q)


def zero_velocity_momenta(q, params: FieldParams) -> np.ndarray:
    """Canonical momenta for which every rotating-frame velocity is zero."""
    q = as_config(q, params)
    return -params.angular * _rot(q)


def equations_of_motion(state: PhaseState, params: FieldParams) -> PhaseState:
    """Hamilton's equations; returns ``PhaseState(q=dq/dt, p=dp/dt)``."""
    c = params.angular
    qdot = state.p + c * _rot(state.q)
    pdot = c * _rot(state.p) - potential_gradient(state.q, params)
    return PhaseState(qdot, pdot)


def zvs(q, params: FieldParams) -> float:
    """Zero-velocity surface: ``H`` with all rotating-frame velocities zero."""
    q = as_config(q, params)
    r1, r2, r12 = distances(q)
    rho2 = np.sum(q[:, :2] ** 2)
    return (-params.charge * (1.0 / r1 + 1.0 / r2)
            + params.epsilon * (q[0, 0] + q[1, 0])
            - 0.5 * params.centrifugal * rho2
            + 1.0 / r12)


def zvs_gradient(q, params: FieldParams) -> np.ndarray:
    """Gradient of :func:`zvs`, shape ``(2, dims)``."""
    q = as_config(q, params)
    r1, r2, r12 = distances(q)
    g = _common_gradient(q, params, r1, r2, r12)
    g[:, :2] -= params.centrifugal * q[:, :2]
    return g


def zvs_hessian(q, params: FieldParams) -> np.ndarray:
    """Hessian of :func:`zvs` over ``(q1, q2)``, shape ``(2 dims, 2 dims)``."""
    q = as_config(q, params)
    r1, r2, r12 = distances(q)
    return _common_hessian(q, params, r1, r2, r12) + _transverse_diag(params, -params.centrifugal)


def batch_potential(walkers, params: FieldParams, interaction: bool = True) -> np.ndarray:
    """Vectorized :func:`potential` over walkers of shape ``(n, 2, dims)``.

    Returns ``inf`` for walkers sitting on a singularity instead of raising.
    """
    w = np.asarray(walkers, dtype=float)
    r = np.sqrt(np.sum(w**2, axis=2))
    rho2 = np.sum(w[:, :, :2] ** 2, axis=(1, 2))
    with np.errstate(divide="ignore"):
        v = -params.charge * np.sum(1.0 / r, axis=1) + rho2 / 8.0 + params.epsilon * w[:, :, 0].sum(axis=1)
        if interaction:
            r12 = np.sqrt(np.sum((w[:, 0] - w[:, 1]) ** 2, axis=1))
            v = v + 1.0 / r12
    v[~np.isfinite(v)] = np.inf
    return v
