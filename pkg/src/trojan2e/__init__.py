"""Two-electron Trojan states of helium-like systems in rotating fields.

Modules
-------
units        unit systems, field parameters, quantum-dot mapping
model        rotating-frame Hamiltonian, flow and zero-velocity surface
equilibria   Langmuir, transverse and collinear equilibria
stability    linearized flow, stability verdicts and parameter scans
dynamics     trajectory integration and lab-frame transformation
dmc          diffusion Monte Carlo at zero angular coefficient
cli          command-line interface
"""

from .errors import (
    CollisionError,
    ConvergenceError,
    EquilibriumNotFoundError,
    IntegrationError,
    InvalidParameterError,
    NotAnEquilibriumError,
    PopulationControlError,
    RankDeficiencyError,
    SingularConfigurationError,
    Trojan2eError,
    UnsupportedRegimeError,
)
from .units import DotParams, FieldParams, LabParams, from_scaled, to_scaled
from .model import PhaseState

__version__ = "0.1.0"
