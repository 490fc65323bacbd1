"""Equilibrium configurations of the rotating-frame two-electron problem.

Four families are constructed:

* Type I (Langmuir): the nucleus and the two electrons form an equilateral
  triangle of side ``a``, with the electrons at ``z = +-a/2``.  With Z = 2 the
  axial forces cancel identically and the in-plane balance reduces to a cubic
  in ``a``.  The triangle may sit on either side of the nucleus along the
  field axis:

  - ``side="outward"``: the field pushes the electrons away from the nucleus
    (``x0 = -sqrt(3) a / 2`` for ``epsilon > 0``); the cubic is
    ``k a**3 / 2 + |epsilon| a**2 / sqrt(3) - 1 = 0``;
  - ``side="trojan"``: the field pulls the electrons toward the nucleus
    (``x0 = +sqrt(3) a / 2`` for ``epsilon > 0``); the cubic is
    ``k a**3 / 2 - |epsilon| a**2 / sqrt(3) - 1 = 0``.

  Here ``k = omega**2 + branch*omega``.
* Type II (transverse, planar): both electrons at the same radius, mirror
  images across the field axis.
* Type IIIa / IIIb (collinear): both electrons on the field axis, on the same
  side (a) or on opposite sides (b) of the nucleus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from . import model
from .errors import (
    ConvergenceError,
    EquilibriumNotFoundError,
    InvalidParameterError,
    NotAnEquilibriumError,
    RankDeficiencyError,
    SingularConfigurationError,
)
from .units import FieldParams

__all__ = [
    "TYPE_I",
    "TYPE_II",
    "TYPE_IIIA",
    "TYPE_IIIB",
    "UNCLASSIFIED",
    "EquilibriumClass",
    "Equilibrium",
    "langmuir_cubic",
    "langmuir_config",
    "langmuir_equilibria",
    "type2_field",
    "type2_config",
    "type3_config",
    "collinear_equilibria",
    "refine",
    "classify_geometry",
    "SIDES",
]

TYPE_I = "TypeI_Langmuir"
TYPE_II = "TypeII_Transverse"
TYPE_IIIA = "TypeIIIa_Collinear"
TYPE_IIIB = "TypeIIIb_Collinear"
UNCLASSIFIED = "unclassified"

SIDES = ("outward", "trojan")

EQUILIBRIUM_TOL = 1e-10
GEOMETRY_TOL = 1e-8
LOCAL_STEP = 0.05  # relative step size below which Newton runs undamped
SOFT_MODE_RCOND = 1e-8  # relative Hessian eigenvalues treated as zero modes
WATCHDOG_STEPS = 4  # non-monotone Newton steps allowed before backing off
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class EquilibriumClass:
    variant: str
    angle: Optional[float] = None  # Type II only, radians in (0, pi]

    def __str__(self) -> str:
        if self.variant == TYPE_II and self.angle is not None:
            return f"{self.variant}(angle={self.angle:.6g})"
        return self.variant


@dataclass
class Equilibrium:
    """A refined equilibrium together with its zero-velocity momenta."""

    config: np.ndarray
    momenta: np.ndarray
    eq_class: EquilibriumClass
    params: FieldParams
    residual: float
    side_length: Optional[float] = None
    side: Optional[str] = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def state(self) -> model.PhaseState:
        return model.PhaseState(self.config.copy(), self.momenta.copy())

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.config, axis=1)

    def swapped(self) -> "Equilibrium":
        q = self.config[::-1].copy()
        return Equilibrium(
            config=q,
            momenta=self.momenta[::-1].copy(),
            eq_class=self.eq_class,
            params=self.params,
            residual=float(np.max(np.abs(model.zvs_gradient(q, self.params)))),
            side_length=self.side_length,
            side=self.side,
        )

    def to_record(self) -> dict:
        return {
            "class": str(self.eq_class),
            "positions": self.config.tolist(),
            "momenta": self.momenta.tolist(),
            "side_length": self.side_length,
            "side": self.side,
            "residual": self.residual,
            "radii": self.radii.tolist(),
        }


def _side_sign(side: str) -> int:
    if side not in SIDES:
        raise InvalidParameterError(f"side must be one of {SIDES}, got {side!r}")
    return 1 if side == "outward" else -1


def _cubic_coefficients(params: FieldParams, side: str):
    """Coefficients ``(c3, c2, c0)`` of ``c3 a**3 + c2 a**2 + c0``."""
    s = _side_sign(side)
    return 0.5 * params.centrifugal, s * abs(params.epsilon) / SQRT3, -1.0


def cubic_residual(a: float, params: FieldParams, side: str = "outward") -> float:
    """Residual of the Langmuir cubic, relative to the size of its terms."""
    c3, c2, c0 = _cubic_coefficients(params, side)
    value = c3 * a**3 + c2 * a**2 + c0
    scale = abs(c3) * a**3 + abs(c2) * a**2 + abs(c0)
    return abs(value) / scale


def langmuir_cubic(params: FieldParams, side: str = "outward") -> list[float]:
    """Positive real roots of the Langmuir cubic, ascending.

    Requires ``charge == 2``: only then does the equilateral triangle balance
    the axial forces.  Returns an empty list when no positive root exists.

    Examples
    --------
    >>> langmuir_cubic(FieldParams(omega=1.0, epsilon=0.0, branch=1))
    [1.0]
    """
    if params.charge != 2:
        raise InvalidParameterError("the equilateral Langmuir geometry requires charge = 2")
    c3, c2, c0 = _cubic_coefficients(params, side)
    coeffs = [c3, c2, 0.0, c0]
    while coeffs and coeffs[0] == 0.0:
        coeffs = coeffs[1:]
    if len(coeffs) < 2:
        return []
    candidates = np.roots(coeffs)
    roots = []
    for z in candidates:
        if abs(z.imag) > 1e-7 * max(1.0, abs(z)) or z.real <= 0:
            continue
        a = _polish_root(z.real, c3, c2, c0)
        if a > 0 and not any(abs(a - b) <= 1e-9 * b for b in roots):
            roots.append(a)
    return sorted(roots)


def _polish_root(a, c3, c2, c0, iterations=8):
    for _ in range(iterations):
        f = c3 * a**3 + c2 * a**2 + c0
        df = 3 * c3 * a**2 + 2 * c2 * a
        if df == 0:
            break
        step = f / df
        a -= step
        if abs(step) <= 1e-16 * abs(a):
            break
    return a


def langmuir_config(a: float, params: FieldParams, side: str = "outward") -> Equilibrium:
    """Equilateral Langmuir configuration of side ``a``.

    Raises :class:`NotAnEquilibriumError` if ``a`` does not solve the cubic
    (checked through the ZVS gradient).
    """
    if params.dims != 3:
        raise InvalidParameterError("the Langmuir configuration is three-dimensional")
    if not a > 0:
        raise InvalidParameterError(f"side length must be positive, got {a}")
    s = _side_sign(side)
    field_sign = 1.0 if params.epsilon >= 0 else -1.0
    x0 = -s * field_sign * SQRT3 * a / 2.0
    q = np.array([[x0, 0.0, a / 2.0], [x0, 0.0, -a / 2.0]])
    residual = float(np.max(np.abs(model.zvs_gradient(q, params))))
    if residual > EQUILIBRIUM_TOL * max(1.0, abs(params.epsilon)):
        raise NotAnEquilibriumError(
            f"a = {a!r} is not a root of the Langmuir cubic (residual {residual:.3g})",
            residual=residual,
        )
    return Equilibrium(
        config=q,
        momenta=model.zero_velocity_momenta(q, params),
        eq_class=EquilibriumClass(TYPE_I),
        params=params,
        residual=residual,
        side_length=a,
        side=side,
    )


def langmuir_equilibria(params: FieldParams, side: str = "outward") -> list[Equilibrium]:
    """One Langmuir equilibrium per positive cubic root."""
    return [langmuir_config(a, params, side) for a in langmuir_cubic(params, side)]


def type2_field(params: FieldParams, angle: float):
    """Field strength and radius at which a Type II pair subtending ``angle``
    is an equilibrium.

    For mirror-image electrons at radius ``r`` and half-angle ``t = angle/2``
    measured from the -x axis (for ``epsilon >= 0``) the force balance gives

        k r**3 = Z - 1 / (4 sin(t)**3),
        epsilon = cos(t) / (4 r**2 sin(t)**3).

    Returns ``(epsilon, r)``; raises :class:`EquilibriumNotFoundError` when
    no positive radius exists for the given ``k``.
    """
    if not 0 < angle <= math.pi:
        raise InvalidParameterError(f"angle must lie in (0, pi], got {angle}")
    k = params.centrifugal
    s = math.sin(angle / 2.0)
    num = params.charge - 1.0 / (4.0 * s**3)
    if k == 0 or num / k <= 0:
        raise EquilibriumNotFoundError(
            f"no Type II radius for angle={angle:.6g}: k r^3 = {num:.6g} with k = {k:.6g}"
        )
    r = (num / k) ** (1.0 / 3.0)
    eps = math.cos(angle / 2.0) / (4.0 * r**2 * s**3)
    return eps, r


def _symmetric_residual(u, params):
    x0, y0 = u
    q = np.zeros((2, params.dims))
    q[0, :2] = x0, y0
    q[1, :2] = x0, -y0
    g = model.zvs_gradient(q, params)
    return g[0, :2]


def type2_config(params: FieldParams, angle: float, radius_bracket=(1e-3, 1e4)) -> Equilibrium:
    """Type II equilibrium with electrons at ``(x0, +-y0)``.

    The subtended angle of the result is fixed by ``params``; ``angle`` seeds
    the search.  Use :func:`type2_field` to obtain the field strength at which
    a prescribed angle is an equilibrium.
    """
    if not 0 < angle <= math.pi:
        raise InvalidParameterError(f"angle must lie in (0, pi], got {angle}")
    try:
        _, r_seed = type2_field(params, angle)
    except EquilibriumNotFoundError:
        r_seed = None
    lo, hi = radius_bracket
    seeds = [r_seed] if r_seed is not None else []
    seeds += list(np.geomspace(lo, hi, 25))
    field_sign = 1.0 if params.epsilon >= 0 else -1.0
    for r in seeds:
        if r is None or not lo <= r <= hi:
            continue
        t = angle / 2.0
        guess = (-field_sign * r * math.cos(t), r * math.sin(t))
        try:
            sol = optimize.root(_symmetric_residual, guess, args=(params,), method="hybr",
                                tol=1e-14)
        except SingularConfigurationError:  # the search wandered onto y0 = 0
            continue
        x0, y0 = sol.x
        if not sol.success or abs(y0) < 1e-9 or not lo <= math.hypot(x0, y0) <= hi:
            continue
        q = np.zeros((2, params.dims))
        q[0, :2] = x0, abs(y0)
        q[1, :2] = x0, -abs(y0)
        try:
            eq = refine(q, params)
        except (ConvergenceError, RankDeficiencyError):
            continue
        if eq.eq_class.variant == TYPE_II:
            return eq
        r1, r2 = eq.radii
        if eq.eq_class.variant == TYPE_IIIB and abs(r1 - r2) <= GEOMETRY_TOL * max(r1, r2):
            # antipodal pair: the collinear rule takes precedence in
            # classify_geometry, but this is the angle = pi member of Type II
            eq.eq_class = EquilibriumClass(TYPE_II, math.pi)
            return eq
    raise EquilibriumNotFoundError(
        f"no Type II equilibrium near angle={angle:.6g} with radius in [{lo:g}, {hi:g}]"
    )


def _axis_residual(u, params):
    q = np.zeros((2, params.dims))
    q[:, 0] = u
    return model.zvs_gradient(q, params)[:, 0]


def _single_axis_roots(params):
    """Axis equilibria of one electron with the nucleus alone."""
    k, eps, z = params.centrifugal, params.epsilon, params.charge
    out = []
    for sign in (1.0, -1.0):
        # sign*Z/x^2 + eps - k x = 0  ->  -k x^3 + eps x^2 + sign*Z = 0
        for x in np.roots([-k, eps, 0.0, sign * z]) if k != 0 else np.roots([eps, 0.0, sign * z]):
            if abs(x.imag) < 1e-9 and x.real != 0 and np.sign(x.real) == sign:
                out.append(x.real)
    return out


def collinear_equilibria(params: FieldParams, variant: Optional[str] = None) -> list[Equilibrium]:
    """All collinear (Type III) equilibria reached from a deterministic set of seeds.

    Results are ordered by the x coordinate of the electron nearest the
    nucleus; duplicates related by electron exchange are removed.
    """
    scales = _single_axis_roots(params)
    if not scales:
        scales = [1.0, -1.0]
    factors = (0.25, 0.5, 0.8, 1.0, 1.25, 2.0, 4.0)
    seeds = set()
    for base in scales:
        for f1 in factors:
            for f2 in factors:
                if f1 < f2:
                    seeds.add((base * f1, base * f2))
    for b1 in scales:
        for b2 in scales:
            if np.sign(b1) != np.sign(b2):
                seeds.add((b1, b2))
    # pairs straddling each center at the spacing where repulsion meets the curvature
    spacing = abs(params.centrifugal) ** (-1.0 / 3.0) if params.centrifugal else 1.0
    for c in list(scales) + [0.0]:
        for f in (0.25, 0.5, 1.0, 2.0, 4.0):
            seeds.add((c - 0.5 * f * spacing, c + 0.5 * f * spacing))
    found: list[Equilibrium] = []
    for guess in sorted(seeds):
        sol = optimize.root(_axis_residual, guess, args=(params,), method="hybr", tol=1e-14)
        if not sol.success:
            continue
        x = np.sort(sol.x)
        if np.min(np.abs(x)) < 1e-9 or x[1] - x[0] < 1e-9:
            continue
        q = np.zeros((2, params.dims))
        q[:, 0] = x
        try:
            eq = refine(q, params)
        except (ConvergenceError, RankDeficiencyError, NotAnEquilibriumError):
            continue
        if eq.eq_class.variant not in (TYPE_IIIA, TYPE_IIIB):
            continue
        xs = np.sort(eq.config[:, 0])
        if any(np.allclose(xs, np.sort(o.config[:, 0]), rtol=1e-7, atol=1e-9) for o in found):
            continue
        found.append(eq)
    if variant is not None:
        found = [e for e in found if e.eq_class.variant == variant]
    found.sort(key=lambda e: e.config[np.argmin(np.abs(e.config[:, 0])), 0])
    return found


def type3_config(params: FieldParams, variant: str = TYPE_IIIA, side: Optional[int] = None) -> Equilibrium:
    """A collinear equilibrium of the requested variant.

    ``side`` picks the half-axis (sign of x) for Type IIIa; by default the
    side the field pushes toward (``-sign(epsilon)``).  Among several
    candidates the most compact one (smallest outer radius) is returned.
    """
    if variant not in (TYPE_IIIA, TYPE_IIIB):
        raise InvalidParameterError(f"variant must be {TYPE_IIIA} or {TYPE_IIIB}")
    candidates = collinear_equilibria(params, variant)
    if variant == TYPE_IIIA:
        if side is None:
            side = -1 if params.epsilon >= 0 else 1
        candidates = [e for e in candidates if np.sign(e.config[0, 0]) == side]
    if not candidates:
        raise EquilibriumNotFoundError(f"no {variant} equilibrium found for {params}")
    return min(candidates, key=lambda e: float(np.max(e.radii)))


def classify_geometry(q, tol: float = GEOMETRY_TOL) -> EquilibriumClass:
    """Classify a configuration by its shape."""
    q = np.asarray(q, dtype=float)
    r1, r2, r12 = model.distances(q)
    planar = q.shape[1] == 2 or np.all(np.abs(q[:, 2]) <= tol * max(r1, r2))
    equilateral = abs(r1 - r12) <= tol * r12 and abs(r2 - r12) <= tol * r12
    if equilateral and not planar:
        return EquilibriumClass(TYPE_I)
    if planar:
        cross = q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0]
        dot = float(q[0] @ q[1])
        if abs(cross) <= tol * r1 * r2:
            return EquilibriumClass(TYPE_IIIA if dot > 0 else TYPE_IIIB)
        if abs(r1 - r2) <= tol * max(r1, r2):
            angle = math.acos(max(-1.0, min(1.0, dot / (r1 * r2))))
            return EquilibriumClass(TYPE_II, angle)
    return EquilibriumClass(UNCLASSIFIED)


def _line_search(q, step, res, params, max_halvings):
    """Halve ``step`` until the gradient max-norm drops below ``res``."""
    lam = 1.0
    for _ in range(max_halvings + 1):
        trial = q + lam * step
        try:
            g_trial = model.zvs_gradient(trial, params)
        except SingularConfigurationError:  # collision along the step
            g_trial = None
        if g_trial is not None and np.max(np.abs(g_trial)) < res:
            return trial, g_trial
        lam *= 0.5
    return None, None


def refine(guess, params: FieldParams, *, tol: float = EQUILIBRIUM_TOL, max_iter: int = 100,
           max_halvings: int = 30) -> Equilibrium:
    """Damped Newton iteration on the ZVS gradient.

    The step solves ``H dq = -g`` in the least-squares sense so that exact
    symmetry zero modes (rotation about z at ``epsilon = 0``) do not stall
    the iteration; Hessian eigenvalues below ``SOFT_MODE_RCOND`` times the
    largest are dropped.  Steps shorter than ``LOCAL_STEP`` times the
    configuration size are taken in full, even when the gradient max-norm
    rises, for up to ``WATCHDOG_STEPS`` steps; if the residual has not then
    fallen below its value before the excursion, the iteration returns there.
    Longer steps are halved until the gradient max-norm decreases.  After
    convergence up to three more Newton steps are taken while they still
    reduce the residual.

    Raises
    ------
    SingularConfigurationError
        If the guess (or an iterate) puts two particles on top of each other.
    RankDeficiencyError
        If the Hessian is singular and no step reduces the gradient.
    ConvergenceError
        If ``max_iter`` iterations do not reach ``tol``.
    """
    q = model.as_config(guess, params)
    n = q.size
    g = model.zvs_gradient(q, params)
    res = float(np.max(np.abs(g)))
    it = 0
    anchor = None  # state before a non-monotone step (watchdog)
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(f"refine did not converge in {max_iter} iterations "
                                   f"(residual {res:.3g})", residual=res)
        h = model.zvs_hessian(q, params)
        step, _, rank, _ = np.linalg.lstsq(h, -g.ravel(), rcond=SOFT_MODE_RCOND)
        step = step.reshape(q.shape)
        trial = g_trial = None
        r_full = math.inf
        local = np.max(np.abs(step)) < LOCAL_STEP * np.max(np.abs(q))
        if local:
            # inside the local region try the undamped step: along a soft mode
            # the residual may rise for a few steps before converging
            try:
                g_full = model.zvs_gradient(q + step, params)
                r_full = float(np.max(np.abs(g_full)))
            except SingularConfigurationError:
                pass
        if anchor is None:
            if r_full < res:
                trial, g_trial = q + step, g_full
            elif math.isfinite(r_full):
                anchor = (q, g, res, WATCHDOG_STEPS)
                trial, g_trial = q + step, g_full
        elif r_full < anchor[2]:
            trial, g_trial = q + step, g_full
            anchor = None
        elif anchor[3] > 1 and math.isfinite(r_full):
            trial, g_trial = q + step, g_full
            anchor = anchor[:3] + (anchor[3] - 1,)
        else:  # the excursion did not pay off: back off and damp
            q, g, res, _ = anchor
            anchor = None
            h = model.zvs_hessian(q, params)
            step = np.linalg.lstsq(h, -g.ravel(), rcond=SOFT_MODE_RCOND)[0].reshape(q.shape)
        if trial is None:
            trial, g_trial = _line_search(q, step, res, params, max_halvings)
        if trial is None:
            # truncate soft modes before giving up
            step = np.linalg.lstsq(h, -g.ravel(), rcond=1e-6)[0].reshape(q.shape)
            trial, g_trial = _line_search(q, step, res, params, max_halvings)
        if trial is None:
            if rank < n:
                raise RankDeficiencyError(
                    f"Hessian rank {rank} < {n} and no descent step (residual {res:.3g})")
            raise ConvergenceError(f"line search failed (residual {res:.3g})", residual=res)
        q = trial
        g = g_trial
        res = float(np.max(np.abs(g)))
        it += 1
    # polish: on flat (large-scale) configurations a gradient below tol can
    # still leave the positions visibly off, so keep taking Newton steps
    # while they help
    for _ in range(3):
        h = model.zvs_hessian(q, params)
        step = np.linalg.lstsq(h, -g.ravel(), rcond=SOFT_MODE_RCOND)[0].reshape(q.shape)
        try:
            g_new = model.zvs_gradient(q + step, params)
        except SingularConfigurationError:
            break
        r_new = float(np.max(np.abs(g_new)))
        if not r_new < res:
            break
        q, g, res = q + step, g_new, r_new
        it += 1
    eq_class = classify_geometry(q)
    side_length = None
    if eq_class.variant == TYPE_I:
        side_length = float(np.linalg.norm(q[0] - q[1]))
    side = None
    if eq_class.variant == TYPE_I:
        field_sign = 1.0 if params.epsilon >= 0 else -1.0
        side = "outward" if np.mean(q[:, 0]) * field_sign < 0 else "trojan"
    return Equilibrium(
        config=q,
        momenta=model.zero_velocity_momenta(q, params),
        eq_class=eq_class,
        params=params,
        residual=res,
        side_length=side_length,
        side=side,
        iterations=it,
    )
