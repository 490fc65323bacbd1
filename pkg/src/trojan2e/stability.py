"""Linear stability of rotating-frame equilibria.

The linearized canonical flow about an equilibrium, ``d(dz)/dt = S dz`` with
phase vector ``z = (p1, p2, q1, q2)``, has the block form

    S = [[ A,  0, -U11, -U12],
         [ 0,  A, -U21, -U22],
         [ I,  0,  A,    0  ],
         [ 0,  I,  0,    A  ]]

where ``A = [[0, c, 0], [-c, 0, 0], [0, 0, 0]]`` (``c = omega + branch/2``)
and ``U`` is the Hessian of the coordinate part of the Hamiltonian.  In terms
of the ZVS Hessian, ``U = ZVS'' + c**2 P`` with ``P`` the projector onto the
transverse (x, y) coordinates.  Equivalently ``S = J H_e`` with ``H_e`` the
phase-space Hessian of ``H`` and ``J = [[0, -I], [I, 0]]``, so the spectrum
comes in ``(lambda, -lambda, conj(lambda), -conj(lambda))`` quartets.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import equilibria as eqm
from . import model
from .errors import NotAnEquilibriumError, Trojan2eError
from .units import FieldParams

__all__ = [
    "LinearizationMatrix",
    "StabilityReport",
    "StabilityMap",
    "angular_block",
    "linearization",
    "phase_space_hessian",
    "classify",
    "equilibrium_stability",
    "scan",
    "grid",
]

LINEARIZATION_TOL = 1e-8


def angular_block(params: FieldParams) -> np.ndarray:
    """The ``A`` block: Jacobian of ``c (y, -x, 0)``."""
    a = np.zeros((params.dims, params.dims))
    a[0, 1] = params.angular
    a[1, 0] = -params.angular
    return a


@dataclass
class LinearizationMatrix:
    """Flow Jacobian at an equilibrium, momenta blocks first."""

    entries: np.ndarray
    dims: int

    @property
    def n(self) -> int:
        return 2 * self.dims

    def block(self, i: int, j: int) -> np.ndarray:
        """``dims x dims`` block; indices 0, 1 are momenta, 2, 3 coordinates."""
        d = self.dims
        return self.entries[i * d:(i + 1) * d, j * d:(j + 1) * d]

    @property
    def coordinate_hessian_block(self) -> np.ndarray:
        """Upper-right ``(2 dims)^2`` block, ``-U''``."""
        return self.entries[:self.n, self.n:]


@dataclass
class StabilityReport:
    eigenvalues: np.ndarray
    max_real_part: float
    stable: bool
    tolerance: float
    symmetry_error: float
    symmetric: bool
    zero_modes: int = 0

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "max_real_part": self.max_real_part,
            "stable": self.stable,
            "tolerance": self.tolerance,
            "symmetry_error": self.symmetry_error,
            "symmetric": self.symmetric,
            "zero_modes": self.zero_modes,
        }


def phase_space_hessian(eq_or_q, params: FieldParams) -> np.ndarray:
    """Hessian of ``H`` over ``(p1, p2, q1, q2)`` at a configuration."""
    q = eq_or_q.config if isinstance(eq_or_q, eqm.Equilibrium) else np.asarray(eq_or_q, float)
    n = 2 * params.dims
    a = angular_block(params)
    a2 = np.kron(np.eye(2), a)
    he = np.zeros((2 * n, 2 * n))
    he[:n, :n] = np.eye(n)
    he[:n, n:] = a2
    he[n:, :n] = a2.T
    he[n:, n:] = model.potential_hessian(q, params)
    return he


def linearization(eq: eqm.Equilibrium, params: Optional[FieldParams] = None,
                  tol: float = LINEARIZATION_TOL) -> LinearizationMatrix:
    """Assemble the flow Jacobian ``S`` at an equilibrium.

    Raises :class:`NotAnEquilibriumError` when the ZVS gradient at
    ``eq.config`` exceeds ``tol``.
    """
    params = params or eq.params
    q = eq.config
    residual = float(np.max(np.abs(model.zvs_gradient(q, params))))
    if residual > tol:
        raise NotAnEquilibriumError(f"residual {residual:.3g} exceeds {tol:g}", residual=residual)
    d = params.dims
    n = 2 * d
    a2 = np.kron(np.eye(2), angular_block(params))
    transverse = np.zeros(n)
    for i in range(2):
        transverse[i * d:i * d + 2] = 1.0
    u = model.zvs_hessian(q, params) + params.angular**2 * np.diag(transverse)
    s = np.zeros((2 * n, 2 * n))
    s[:n, :n] = a2
    s[:n, n:] = -u
    s[n:, :n] = np.eye(n)
    s[n:, n:] = a2
    return LinearizationMatrix(s, d)


def _symmetry_error(ev: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(ev))))
    err = 0.0
    for lam in ev:
        err = max(err, float(np.min(np.abs(ev + lam))))
        err = max(err, float(np.min(np.abs(ev - np.conj(lam)))))
    return err / scale


def classify(S, tolerance: float = 1e-8, zero_mode_tol: float = 1e-6) -> StabilityReport:
    """Classify linear stability from the spectrum of ``S``.

    Stable means every eigenvalue has ``|Re| < tolerance``.  Eigenvalues of
    modulus below ``zero_mode_tol`` are symmetry zero modes (a defective
    pair at ``epsilon = 0``, whose computed members scatter like
    ``sqrt(machine eps)``); they are counted in ``zero_modes`` and excluded
    from ``max_real_part``.
    """
    m = S.entries if isinstance(S, LinearizationMatrix) else np.asarray(S, dtype=float)
    if not np.all(np.isfinite(m)):
        raise Trojan2eError("linearization matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(m)  # LAPACK geev balances the matrix first
    except np.linalg.LinAlgError as exc:
        raise Trojan2eError(f"eigenvalue solver failed (cond={np.linalg.cond(m):.3g})") from exc
    ev = ev[np.lexsort((ev.imag, ev.real))]
    zero = np.abs(ev) < zero_mode_tol
    rest = ev[~zero]
    max_re = float(np.max(np.abs(rest.real))) if rest.size else 0.0
    sym = _symmetry_error(ev)
    return StabilityReport(
        eigenvalues=ev,
        max_real_part=max_re,
        stable=max_re < tolerance,
        tolerance=tolerance,
        symmetry_error=sym,
        symmetric=sym <= max(tolerance, 1e-8),
        zero_modes=int(np.count_nonzero(zero)),
    )


def equilibrium_stability(eq: eqm.Equilibrium, tolerance: float = 1e-8) -> StabilityReport:
    return classify(linearization(eq), tolerance)


def grid(start: float, stop: float, count: int) -> np.ndarray:
    """Inclusive, strictly increasing grid."""
    if count < 2:
        raise ValueError("grid needs at least two points")
    if not stop > start:
        raise ValueError("grid must be strictly increasing")
    return np.linspace(start, stop, count)


@dataclass
class StabilityMap:
    omega_axis: np.ndarray
    epsilon_axis: np.ndarray
    branch: int
    eq_class: str
    dims: int
    side: str
    cells: list = field(default_factory=list)

    CSV_HEADER = "omega,epsilon,branch,root_index,side_length,max_real_part,stable"

    def cell(self, i: int, j: int) -> dict:
        return self.cells[i * len(self.epsilon_axis) + j]

    def stable_mask(self) -> np.ndarray:
        """Boolean ``(n_omega, n_epsilon)`` array: any stable root in the cell."""
        m = np.array([c["any_stable"] for c in self.cells], dtype=bool)
        return m.reshape(len(self.omega_axis), len(self.epsilon_axis))

    def stable_points(self):
        return [(c["omega"], c["epsilon"]) for c in self.cells if c["any_stable"]]

    def csv_rows(self) -> list[str]:
        rows = [self.CSV_HEADER]
        for c in self.cells:
            if not c["roots"]:
                rows.append(f"{c['omega']!r},{c['epsilon']!r},{self.branch},,,,")
                continue
            for k, r in enumerate(c["roots"]):
                if r.get("error"):
                    rows.append(f"{c['omega']!r},{c['epsilon']!r},{self.branch},{k},"
                                f"{_fmt(r.get('side_length'))},,")
                    continue
                rows.append(
                    f"{c['omega']!r},{c['epsilon']!r},{self.branch},{k},"
                    f"{_fmt(r['side_length'])},{r['max_real_part']!r},{int(r['stable'])}"
                )
        return rows

    def summary(self) -> dict:
        n_found = sum(1 for c in self.cells if c["found"])
        n_stable = sum(1 for c in self.cells if c["any_stable"])
        return {
            "omega_axis": {"start": float(self.omega_axis[0]), "stop": float(self.omega_axis[-1]),
                           "count": len(self.omega_axis)},
            "epsilon_axis": {"start": float(self.epsilon_axis[0]),
                             "stop": float(self.epsilon_axis[-1]),
                             "count": len(self.epsilon_axis)},
            "branch": self.branch,
            "class": self.eq_class,
            "dims": self.dims,
            "side": self.side,
            "cells": len(self.cells),
            "cells_with_equilibrium": n_found,
            "cells_stable": n_stable,
        }


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _cell_equilibria(params: FieldParams, eq_class: str, side: str, angle: float):
    if eq_class == eqm.TYPE_I:
        return [eqm.refine(e.config, params) for e in eqm.langmuir_equilibria(params, side)]
    if eq_class == eqm.TYPE_II:
        return [eqm.type2_config(params, angle)]
    if eq_class in (eqm.TYPE_IIIA, eqm.TYPE_IIIB):
        return eqm.collinear_equilibria(params, eq_class)
    raise ValueError(f"unsupported class {eq_class!r}")


def _scan_cell(args) -> dict:
    omega, epsilon, branch, eq_class, dims, side, charge, angle, tolerance = args
    cell = {"omega": float(omega), "epsilon": float(epsilon), "found": False,
            "any_stable": False, "roots": [], "error": None}
    try:
        params = FieldParams(omega, epsilon, branch, dims, charge)
        eqs = _cell_equilibria(params, eq_class, side, angle)
    except eqm.EquilibriumNotFoundError:
        return cell
    except Trojan2eError as exc:
        cell["error"] = f"{type(exc).__name__}: {exc}"
        return cell
    for e in eqs:
        rec = {"side_length": e.side_length, "radii": e.radii.tolist(),
               "residual": e.residual, "error": None}
        if e.side_length is None and eq_class != eqm.TYPE_I:
            rec["side_length"] = None
        try:
            rep = classify(linearization(e, params), tolerance)
            rec.update(max_real_part=rep.max_real_part, stable=rep.stable,
                       zero_modes=rep.zero_modes, symmetric=rep.symmetric)
        except Trojan2eError as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        cell["roots"].append(rec)
    cell["found"] = bool(cell["roots"])
    cell["any_stable"] = any(r.get("stable") for r in cell["roots"])
    return cell


def scan(omega_range, epsilon_range, resolution, branch: int, eq_class: str = eqm.TYPE_I,
         dims: int = 3, *, side: str = "outward", charge: float = 2.0,
         angle: float = math.pi / 2, tolerance: float = 1e-8,
         workers: Optional[int] = None) -> StabilityMap:
    """Stability verdicts on an inclusive ``(omega, epsilon)`` grid.

    ``resolution`` is a count or a pair of counts.  Cells are laid out
    row-major (omega outer, epsilon inner) regardless of ``workers``; a cell
    whose construction fails carries the error instead of aborting the scan.
    """
    if np.isscalar(resolution):
        n_w = n_e = int(resolution)
    else:
        n_w, n_e = (int(r) for r in resolution)
    w_axis = grid(*omega_range, n_w)
    e_axis = grid(*epsilon_range, n_e)
    jobs = [(w, e, branch, eq_class, dims, side, charge, angle, tolerance)
            for w in w_axis for e in e_axis]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_scan_cell, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        cells = [_scan_cell(j) for j in jobs]
    return StabilityMap(w_axis, e_axis, branch, eq_class, dims, side, cells)
