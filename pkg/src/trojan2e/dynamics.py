"""Trajectory integration in the rotating frame and transformation to the lab."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import model
from .errors import CollisionError, IntegrationError
from .units import FieldParams

__all__ = [
    "Trajectory",
    "integrate",
    "to_lab_frame",
    "rotation_period",
    "COLLISION_DISTANCE",
]

COLLISION_DISTANCE = 1e-6
SAMPLES_PER_PERIOD = 200


def rotation_period(params: FieldParams) -> float:
    return 2.0 * math.pi / params.omega


@dataclass
class Trajectory:
    """Time-sampled phase states.

    ``q`` and ``p`` have shape ``(n_samples, 2, dims)``.  ``energies`` holds
    the rotating-frame Hamiltonian at each sample and ``energy_drift`` its
    largest deviation from the first sample, relative to ``|H(0)|`` (or
    absolute when ``H(0) == 0``).
    """

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energies: np.ndarray
    params: FieldParams
    frame: str = "rotating"
    stop_reason: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        for t, q, p in zip(self.times, self.q, self.p):
            yield t, model.PhaseState(q, p)

    @property
    def energy_drift(self) -> float:
        e0 = self.energies[0]
        dev = float(np.max(np.abs(self.energies - e0)))
        return dev / abs(e0) if e0 != 0 else dev

    @property
    def final(self) -> model.PhaseState:
        return model.PhaseState(self.q[-1], self.p[-1])

    def deviation(self, reference) -> np.ndarray:
        """Max-norm distance of each sample's positions from ``reference``."""
        ref = np.asarray(reference, dtype=float)
        return np.max(np.abs(self.q - ref), axis=(1, 2))

    def csv_header(self) -> str:
        axes = "xyz"[: self.params.dims]
        cols = ["t"]
        cols += [f"{a}{i}" for i in (1, 2) for a in axes]
        cols += [f"p{a}{i}" for i in (1, 2) for a in axes]
        cols.append("energy")
        return ",".join(cols)

    def csv_rows(self) -> list[str]:
        rows = [self.csv_header()]
        for t, q, p, e in zip(self.times, self.q, self.p, self.energies):
            values = [t, *q.ravel(), *p.ravel(), e]
            rows.append(",".join(repr(float(v)) for v in values))
        return rows


def _rhs(params, dims):
    def f(t, z):
        s = model.PhaseState.from_flat(z, dims)
        d = model.equations_of_motion(s, params)
        return np.concatenate([d.p.ravel(), d.q.ravel()])
    return f


def _collision_event(dims):
    def ev(t, z):
        q = z[2 * dims:].reshape(2, dims)
        return min(np.linalg.norm(q[0]), np.linalg.norm(q[1]),
                   np.linalg.norm(q[0] - q[1])) - COLLISION_DISTANCE
    ev.terminal = True
    ev.direction = -1
    return ev


def _deviation_event(dims, reference, limit):
    ref = np.asarray(reference, dtype=float).ravel()

    def ev(t, z):
        return limit - np.max(np.abs(z[2 * dims:] - ref))
    ev.terminal = True
    ev.direction = -1
    return ev


def integrate(initial: model.PhaseState, params: FieldParams, t_final: float, *,
              rel_tol: float = 1e-12, abs_tol: float = 1e-12,
              stride: Optional[float] = None, t_start: float = 0.0,
              reference=None, deviation_limit: Optional[float] = None,
              method: str = "DOP853") -> Trajectory:
    """Integrate Hamilton's equations from ``t_start`` to ``t_final``.

    ``t_final < t_start`` integrates backward in time.  ``stride`` is the
    sampling interval (default: 200 samples per rotation period).  When both
    ``reference`` and ``deviation_limit`` are given, integration stops as
    soon as a position strays farther than ``deviation_limit`` (max-norm)
    from ``reference``.

    Raises
    ------
    CollisionError
        A pair distance fell below ``COLLISION_DISTANCE``.
    IntegrationError
        The solver could not meet the tolerances.
    """
    if t_final == t_start:
        raise ValueError("t_final must differ from t_start")
    model.distances(initial.q)
    dims = params.dims
    if stride is None:
        stride = rotation_period(params) / SAMPLES_PER_PERIOD
    span = t_final - t_start
    n = int(math.floor(abs(span) / stride + 1e-9))
    t_eval = t_start + np.sign(span) * stride * np.arange(n + 1)
    t_eval = t_eval[np.sign(span) * (t_final - t_eval) > 1e-12 * max(1.0, abs(t_final))]
    t_eval = np.append(t_eval, t_final)
    events = [_collision_event(dims)]
    if reference is not None and deviation_limit is not None:
        events.append(_deviation_event(dims, reference, deviation_limit))
    sol = solve_ivp(_rhs(params, dims), (t_start, t_final), initial.flat(), method=method,
                    t_eval=t_eval, rtol=rel_tol, atol=abs_tol, events=events)
    if sol.status == -1:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else t_start}: "
                               f"{sol.message}")
    stop_reason = None
    if sol.status == 1:
        if sol.t_events[0].size:
            raise CollisionError(f"collision at t={sol.t_events[0][0]:.6g}",
                                 time=float(sol.t_events[0][0]))
        stop_reason = "deviation_limit"
        # append the event state so the excursion is recorded
        t_ev = sol.t_events[1][0]
        z_ev = sol.y_events[1][0]
        ts = np.append(sol.t, t_ev)
        ys = np.hstack([sol.y, z_ev[:, None]])
    else:
        ts, ys = sol.t, sol.y
    n2 = 2 * dims
    p = ys[:n2].T.reshape(-1, 2, dims)
    q = ys[n2:].T.reshape(-1, 2, dims)
    energies = np.array([model.hamiltonian(model.PhaseState(qi, pi), params)
                         for qi, pi in zip(q, p)])
    return Trajectory(ts, q, p, energies, params, stop_reason=stop_reason,
                      meta={"nfev": int(sol.nfev), "method": method,
                            "rel_tol": rel_tol, "abs_tol": abs_tol})


def _rotate(v: np.ndarray, angles: np.ndarray) -> np.ndarray:
    c = np.cos(angles)[:, None]
    s = np.sin(angles)[:, None]
    out = v.copy()
    out[..., 0] = c * v[..., 0] - s * v[..., 1]
    out[..., 1] = s * v[..., 0] + c * v[..., 1]
    return out


def to_lab_frame(traj: Trajectory, omega: float) -> Trajectory:
    """Rotate positions and momenta by ``omega * t`` about z.

    Canonical momenta transform as vectors under the frame rotation, so the
    same rotation applies to both.  ``omega = -params.omega`` undoes the
    transformation.
    """
    angles = omega * traj.times
    frame = "lab" if traj.frame == "rotating" else "rotating"
    if omega == 0:
        frame = traj.frame
    return Trajectory(traj.times.copy(), _rotate(traj.q, angles), _rotate(traj.p, angles),
                      traj.energies.copy(), traj.params, frame=frame,
                      stop_reason=traj.stop_reason, meta=dict(traj.meta))
