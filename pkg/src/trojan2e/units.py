"""Unit systems and field-parameter bookkeeping.

Three unit systems appear in this package:

* atomic units (a.u.) for the laboratory description of a helium-like atom
  in a circularly polarized (CP) field and a static magnetic field;
* scaled units, in which the cyclotron frequency has magnitude one.  With
  ``Oc = |cyclotron_frequency|`` the scaled units are

  ======== =====================
  time     ``1 / Oc``
  length   ``Oc ** (-2/3)``
  momentum ``Oc ** (1/3)``
  energy   ``Oc ** (2/3)``
  field    ``Oc ** (4/3)``
  ======== =====================

  This is the only power-law rescaling that sends the cyclotron frequency to
  ``+-1`` while leaving the kinetic, Coulomb and dipole terms of the
  Hamiltonian in their atomic-unit form;
* effective atomic units of a semiconductor quantum dot (electron mass and
  Coulomb coupling renormalized by the material).

Sign convention
---------------
``FieldParams.branch`` selects the sign in the angular coefficient
``-(omega + branch / 2) L_z``.  In the laboratory a positive cyclotron
frequency (magnetic field along +z, the rotation axis of the CP field) gives
``branch = -1``; a negative one gives ``branch = +1``.  Equivalently
``branch = -sign(cyclotron_frequency)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as sc

from .errors import InvalidParameterError

__all__ = [
    "LabParams",
    "FieldParams",
    "DotParams",
    "ScaleFactors",
    "DotReport",
    "to_scaled",
    "from_scaled",
    "lab_hamiltonian",
    "scale_state",
    "unscale_state",
    "dot_effective_units",
    "dot_potential_si",
]

BOHR_RADIUS_M = sc.physical_constants["Bohr radius"][0]
HARTREE_J = sc.physical_constants["Hartree energy"][0]
ATOMIC_TIME_S = sc.hbar / HARTREE_J


@dataclass(frozen=True)
class LabParams:
    """Field parameters in atomic units.

    Attributes
    ----------
    cp_frequency : float
        Angular frequency of the CP field, ``Omega > 0``.
    cp_strength : float
        Electric field amplitude of the CP field.
    cyclotron_frequency : float
        Signed cyclotron frequency ``Omega_c``; positive when the magnetic
        field points along the CP rotation axis.
    """

    cp_frequency: float
    cp_strength: float
    cyclotron_frequency: float

    def __post_init__(self):
        if not self.cp_frequency > 0:
            raise InvalidParameterError(f"cp_frequency must be > 0, got {self.cp_frequency}")
        if self.cyclotron_frequency == 0 or not math.isfinite(self.cyclotron_frequency):
            raise InvalidParameterError("cyclotron_frequency must be finite and nonzero")
        if not math.isfinite(self.cp_strength):
            raise InvalidParameterError("cp_strength must be finite")


@dataclass(frozen=True)
class FieldParams:
    """Dimensionless parameters of the rotating-frame Hamiltonian.

    Attributes
    ----------
    omega : float
        Scaled CP frequency.
    epsilon : float
        Scaled CP field strength; the field term is ``epsilon * x_i``.
    branch : int
        ``+1`` or ``-1``, the sign in ``omega + branch / 2``.  ``+1`` is the
        anti-centrifugal Lorentz force (scaled cyclotron frequency -1),
        ``-1`` the co-centrifugal one (+1).
    dims : int
        Spatial dimension, 2 (quantum dot) or 3 (atom).
    charge : float
        Charge of the Coulomb center.  2 for helium.
    """

    omega: float
    epsilon: float
    branch: int = -1
    dims: int = 3
    charge: float = 2.0

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise InvalidParameterError(f"omega must be > 0, got {self.omega}")
        if not math.isfinite(self.epsilon):
            raise InvalidParameterError("epsilon must be finite")
        if self.branch not in (1, -1):
            raise InvalidParameterError(f"branch must be +1 or -1, got {self.branch}")
        if self.dims not in (2, 3):
            raise InvalidParameterError(f"dims must be 2 or 3, got {self.dims}")
        if not self.charge > 0:
            raise InvalidParameterError(f"charge must be > 0, got {self.charge}")

    @property
    def angular(self) -> float:
        """Coefficient ``omega + branch/2`` of ``-L_z`` in the Hamiltonian."""
        return self.omega + 0.5 * self.branch

    @property
    def centrifugal(self) -> float:
        """``omega**2 + branch*omega``; the ZVS carries ``-centrifugal/2 * rho**2``."""
        return self.omega * (self.omega + self.branch)

    @property
    def cyclotron_sign(self) -> int:
        """Sign of the scaled cyclotron frequency (``-branch``)."""
        return -self.branch

    def with_(self, **changes) -> "FieldParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DotParams:
    """Quantum-dot description in laboratory units.

    ``confinement_radius`` is the oscillator length ``sqrt(hbar / (m* w0))``
    of the parabolic confinement.  The impurity sits on the x axis a distance
    ``impurity_displacement`` from the dot center.
    """

    b_field: float  # tesla
    effective_mass: float  # units of m_e
    dielectric_constant: float
    confinement_radius: float  # nm
    impurity_charge: float  # units of e
    impurity_displacement: float  # nm

    def __post_init__(self):
        for name in ("b_field", "effective_mass", "dielectric_constant",
                     "confinement_radius", "impurity_charge"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be positive, got {value}")
        if not (self.impurity_displacement >= 0 and math.isfinite(self.impurity_displacement)):
            raise InvalidParameterError("impurity_displacement must be non-negative")


@dataclass(frozen=True)
class ScaleFactors:
    """Atomic-unit size of one scaled unit, for a given ``|Omega_c|``."""

    cyclotron: float

    @property
    def time(self) -> float:
        return 1.0 / abs(self.cyclotron)

    @property
    def length(self) -> float:
        return abs(self.cyclotron) ** (-2.0 / 3.0)

    @property
    def momentum(self) -> float:
        return abs(self.cyclotron) ** (1.0 / 3.0)

    @property
    def energy(self) -> float:
        return abs(self.cyclotron) ** (2.0 / 3.0)

    @property
    def field(self) -> float:
        return abs(self.cyclotron) ** (4.0 / 3.0)

    @property
    def action(self) -> float:
        return self.length * self.momentum

    @property
    def hbar(self) -> float:
        """Planck's constant in scaled units, ``Oc ** (1/3)``.

        The scaling preserves the classical equations of motion but is not
        canonical, so quantum calculations in scaled units carry this
        effective Planck constant.
        """
        return 1.0 / self.action


def to_scaled(lab: LabParams, *, dims: int = 3, charge: float = 2.0) -> FieldParams:
    """Convert atomic-unit field parameters to scaled units.

    Examples
    --------
    >>> p = to_scaled(LabParams(0.0185, 0.1235, 0.0370))
    >>> p.omega, p.branch
    (0.5, -1)
    """
    oc = abs(lab.cyclotron_frequency)
    branch = -1 if lab.cyclotron_frequency > 0 else 1
    return FieldParams(
        omega=lab.cp_frequency / oc,
        epsilon=lab.cp_strength / oc ** (4.0 / 3.0),
        branch=branch,
        dims=dims,
        charge=charge,
    )


def from_scaled(params: FieldParams, cyclotron_frequency: float) -> LabParams:
    """Inverse of :func:`to_scaled` for a chosen signed cyclotron frequency."""
    if cyclotron_frequency == 0:
        raise InvalidParameterError("cyclotron_frequency must be nonzero")
    if np.sign(cyclotron_frequency) != params.cyclotron_sign:
        raise InvalidParameterError(
            f"cyclotron_frequency sign {np.sign(cyclotron_frequency):+.0f} inconsistent "
            f"with branch {params.branch:+d} (expected sign {params.cyclotron_sign:+d})"
        )
    oc = abs(cyclotron_frequency)
    return LabParams(
        cp_frequency=params.omega * oc,
        cp_strength=params.epsilon * oc ** (4.0 / 3.0),
        cyclotron_frequency=cyclotron_frequency,
    )


def lab_hamiltonian(q, p, lab: LabParams, charge: float = 2.0) -> float:
    """Rotating-frame Hamiltonian in atomic units.

    Written in laboratory form: symmetric-gauge magnetic terms
    ``(Omega_c/2) L_z + Omega_c**2 rho**2 / 8`` plus the frame rotation
    ``-Omega L_z`` and the CP dipole ``E x``.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    oc = lab.cyclotron_frequency
    total = 0.0
    for qi, pi in zip(q, p):
        lz = qi[0] * pi[1] - qi[1] * pi[0]
        rho2 = qi[0] ** 2 + qi[1] ** 2
        total += (
            0.5 * pi @ pi
            - charge / np.linalg.norm(qi)
            + (0.5 * oc - lab.cp_frequency) * lz
            + oc**2 * rho2 / 8.0
            + lab.cp_strength * qi[0]
        )
    return total + 1.0 / np.linalg.norm(q[0] - q[1])


def scale_state(q, p, cyclotron_frequency: float):
    """Atomic-unit positions and momenta to scaled units."""
    f = ScaleFactors(cyclotron_frequency)
    return np.asarray(q, dtype=float) / f.length, np.asarray(p, dtype=float) / f.momentum


def unscale_state(q, p, cyclotron_frequency: float):
    """Scaled positions and momenta to atomic units."""
    f = ScaleFactors(cyclotron_frequency)
    return np.asarray(q, dtype=float) * f.length, np.asarray(p, dtype=float) * f.momentum


@dataclass(frozen=True)
class DotReport:
    """Intermediate quantities of the quantum-dot mapping."""

    length_unit_nm: float  # effective Bohr radius
    energy_unit_meV: float  # effective Hartree
    time_unit_s: float
    field_unit_V_per_m: float
    cyclotron_eff: float  # effective a.u.
    confinement_eff: float  # w0, effective a.u.
    hybrid_eff: float  # sqrt(wc^2 + 4 w0^2), effective a.u.
    rotation_eff: float  # effective CP angular frequency, effective a.u.
    field_eff: float  # effective CP field, effective a.u.
    rotation_GHz: float  # cyclic frequency Omega / 2pi
    rotation_angular_Grad_s: float
    field_kV_per_m: float
    scaled_length_nm: float  # one scaled length unit in nm
    lab: LabParams

    def __str__(self) -> str:
        return "\n".join([
            f"effective Bohr radius     {self.length_unit_nm:.4f} nm",
            f"effective Hartree         {self.energy_unit_meV:.4f} meV",
            f"cyclotron frequency       {self.cyclotron_eff:.6g} a.u.*",
            f"confinement frequency     {self.confinement_eff:.6g} a.u.*",
            f"hybrid frequency          {self.hybrid_eff:.6g} a.u.*",
            f"effective CP frequency    {self.rotation_GHz:.4g} GHz "
            f"({self.rotation_angular_Grad_s:.4g} Grad/s)",
            f"effective CP field        {self.field_kV_per_m:.4g} kV/m",
            f"scaled length unit        {self.scaled_length_nm:.4f} nm",
        ])


def _effective_units(dot: DotParams):
    a_star = BOHR_RADIUS_M * dot.dielectric_constant / dot.effective_mass
    e_star = HARTREE_J * dot.effective_mass / dot.dielectric_constant**2
    t_star = sc.hbar / e_star
    f_star = e_star / (sc.e * a_star)
    return a_star, e_star, t_star, f_star


def dot_effective_units(dot: DotParams, *, dims: int = 2):
    """Map a quantum dot with an off-center impurity onto :class:`FieldParams`.

    The impurity is the Coulomb center (charge ``impurity_charge``) and the
    origin; the parabolic confinement ``w0**2 |r - r_c|**2 / 2`` is centered
    at ``r_c = (-d, 0)``.  Expanding the square about the impurity,

    * the linear part ``w0**2 d x`` is an exact uniform field
      ``E = w0**2 d`` along +x;
    * the quadratic part adds to the diamagnetic term, so the effective
      cyclotron frequency is the hybrid ``W = sqrt(wc**2 + 4 w0**2)``;
    * matching the paramagnetic term ``(wc/2) L_z`` to
      ``-(Omega - W/2) L_z`` gives the stationary-frame rotation rate
      ``Omega = (W - wc) / 2``.

    All quantities are in effective atomic units (mass ``m* m_e``, Coulomb
    coupling ``e**2 / (4 pi eps0 eps_r)``) before :func:`to_scaled` is
    applied.

    Returns
    -------
    params : FieldParams
    report : DotReport
    """
    if dot.impurity_displacement == 0:
        raise InvalidParameterError(
            "impurity_displacement = 0 leaves no field direction (degenerate dot)"
        )
    a_star, e_star, t_star, f_star = _effective_units(dot)
    wc = sc.e * dot.b_field / (dot.effective_mass * sc.m_e) * t_star
    r_conf = dot.confinement_radius * 1e-9 / a_star
    w0 = 1.0 / r_conf**2
    d = dot.impurity_displacement * 1e-9 / a_star
    hybrid = math.hypot(wc, 2.0 * w0)
    rotation = 0.5 * (hybrid - wc)
    field = w0**2 * d
    lab = LabParams(cp_frequency=rotation, cp_strength=field, cyclotron_frequency=hybrid)
    params = to_scaled(lab, dims=dims, charge=dot.impurity_charge)
    rotation_si = rotation / t_star
    report = DotReport(
        length_unit_nm=a_star * 1e9,
        energy_unit_meV=e_star / sc.e * 1e3,
        time_unit_s=t_star,
        field_unit_V_per_m=f_star,
        cyclotron_eff=wc,
        confinement_eff=w0,
        hybrid_eff=hybrid,
        rotation_eff=rotation,
        field_eff=field,
        rotation_GHz=rotation_si / (2 * math.pi) * 1e-9,
        rotation_angular_Grad_s=rotation_si * 1e-9,
        field_kV_per_m=field * f_star * 1e-3,
        scaled_length_nm=ScaleFactors(hybrid).length * a_star * 1e9,
        lab=lab,
    )
    return params, report


def dot_potential_si(positions_nm, dot: DotParams):
    """Static potential energy (joules) of two electrons in the dot.

    Works directly in SI with the impurity at the origin and the dot center at
    ``(-d, 0)``; independent of the scaled-unit pipeline.  The magnetic field
    does not enter: at zero velocity the Lorentz force vanishes.
    """
    q = np.asarray(positions_nm, dtype=float) * 1e-9
    m = dot.effective_mass * sc.m_e
    w0 = sc.hbar / (m * (dot.confinement_radius * 1e-9) ** 2)
    kappa = sc.e**2 / (4 * math.pi * sc.epsilon_0 * dot.dielectric_constant)
    center = np.zeros(q.shape[1])
    center[0] = -dot.impurity_displacement * 1e-9
    total = 0.0
    for qi in q:
        total += 0.5 * m * w0**2 * np.sum((qi - center) ** 2)
        total -= kappa * dot.impurity_charge / np.linalg.norm(qi)
    total += kappa / np.linalg.norm(q[0] - q[1])
    return total
