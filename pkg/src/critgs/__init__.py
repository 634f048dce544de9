"""Radial ground states of ``-Δu + ωu = u^p + u^{(d+2)/(d-2)}`` in R^d.

Submodules
----------
domain        grids, profiles, quadrature, the Talenti bubble and the functionals
radial_ode    shooting on the central height and the ground-state census
rescale       critical rescaling, Kelvin inversion, distances to the bubble
asymptotics   large-ω sweeps and the cut-off bubble expansion
spectral      radial linearized operators and their low spectrum
pucci_serrin  the uniqueness condition g ≥ 0 and its certificates
cli           command-line front end
"""

__version__ = "0.1.0"

from .domain import FunctionalReport, ProblemParams, RadialGrid, RadialProfile, functionals
from .errors import CritGSError
from .radial_ode import ShootingResult, ground_state_census, shoot
from .rescale import kelvin, rescale, talenti_distance

__all__ = [
    "CritGSError",
    "FunctionalReport",
    "ProblemParams",
    "RadialGrid",
    "RadialProfile",
    "ShootingResult",
    "functionals",
    "ground_state_census",
    "kelvin",
    "rescale",
    "shoot",
    "talenti_distance",
    "__version__",
]
