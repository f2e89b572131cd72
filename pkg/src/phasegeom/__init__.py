"""Contact and Jacobi structures on the phase space of a curved spacetime, checked numerically.

The package builds spacetime metrics and linear connections, lifts them to
the 7-dimensional phase space of first jets of timelike motions, constructs
the induced phase 2-form, 2-vector, time form and dynamical connection, and
verifies the identities relating them with exact forward-mode derivatives.
"""

from .config import RunConfig
from .kinematics import PhasePoint, PhaseQuantities, sample_phase_points
from .metrics import build_metric, minkowski, schwarzschild, tilted, wavy
from .perturbations import (
    EMField,
    SigmaTensor,
    connection_from_sigma,
    em_structure,
    invariance_of_regular_volume,
    sigma_to_Sigma,
    split_connection,
)
from .report import Report, emit
from .runner import run
from .spacetime import LinearConnection, levi_civita
from .structures import (
    PhaseConnection,
    PhaseStructures,
    StructureVerdict,
    chi,
    classify_phase_structure,
)

__version__ = "0.1.0"

__all__ = [
    "EMField",
    "LinearConnection",
    "PhaseConnection",
    "PhasePoint",
    "PhaseQuantities",
    "PhaseStructures",
    "Report",
    "RunConfig",
    "SigmaTensor",
    "StructureVerdict",
    "build_metric",
    "chi",
    "classify_phase_structure",
    "connection_from_sigma",
    "em_structure",
    "emit",
    "invariance_of_regular_volume",
    "levi_civita",
    "minkowski",
    "run",
    "sample_phase_points",
    "schwarzschild",
    "sigma_to_Sigma",
    "split_connection",
    "tilted",
    "wavy",
]
