"""DC boundary-element solver for conductor capacitance and resistance.

Charge, applied-potential and Thevenin-circuit excitations are combined in one
linear system; the surface potential of every conductor is an unknown rather
than an assumption.
"""

__version__ = "0.1.0"

from .formulation import (  # noqa: E402
    AppliedPotential,
    ChargeSpec,
    ExcitationSpec,
    PointCharge,
    Port,
    formulate,
)
from .kernels import BACKEND  # noqa: E402
from .mesh import SurfaceMesh, build_mesh, tag_terminal, tag_terminal_patch  # noqa: E402
from .formats import load_mesh  # noqa: E402
from .operators import assemble  # noqa: E402
from .postproc import capacitance_matrix, reconstruct_fields  # noqa: E402
from .solver import solve  # noqa: E402

__all__ = [
    "AppliedPotential", "BACKEND", "ChargeSpec", "ExcitationSpec", "PointCharge", "Port", "SurfaceMesh",
    "assemble", "build_mesh", "capacitance_matrix", "formulate", "load_mesh", "reconstruct_fields", "solve",
    "tag_terminal", "tag_terminal_patch",
]
