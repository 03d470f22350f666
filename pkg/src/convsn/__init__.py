"""Structured-grid multigroup SN neutron transport built from stencil filters.

Discrete ordinates on an octahedron quadrature, ConvFEM filter
discretisations of order 1/2/3/5 with a non-linear anisotropic
Petrov-Galerkin stabilisation, a 4D space-angle sawtooth multigrid and a
power iteration for k-effective, plus dense brute-force oracles for
verification.
"""

__version__ = "0.1.0"

from .discretisation import (PGConfig, jacobi_diagonal,
                             pg_anisotropic_diffusivities, pg_residual,
                             residual_alternatives, upwind_residual)
from .eigen import (EigenState, SolverOptions, assemble_group_source,
                    power_iteration, solve_fixed_source)
from .filters import (FilterSet, UpwindFilterSet, build_convfem_filters,
                      build_upwind_filters, mixed_mass_filter)
from .grid import Field, GridSpec, apply_boundary, convolve, scalar_flux
from .materials import CrossSectionLibrary, CrossSections, MaterialField
from .multigrid import (MultigridHierarchy, build_hierarchy, jacobi_sweep,
                        prolong, restrict, sawtooth_cycle)
from .problems import ProblemSpec, build_fuel_assembly, build_straight_duct, synthetic_xs_path
from .quadrature import AngularQuadrature, build_quadrature, coarsen_quadrature

__all__ = [
    "AngularQuadrature", "CrossSectionLibrary", "CrossSections", "EigenState",
    "Field", "FilterSet", "GridSpec", "MaterialField", "MultigridHierarchy",
    "PGConfig", "ProblemSpec", "SolverOptions", "UpwindFilterSet",
    "apply_boundary", "assemble_group_source", "build_convfem_filters",
    "build_fuel_assembly", "build_hierarchy", "build_quadrature",
    "build_straight_duct", "build_upwind_filters", "coarsen_quadrature",
    "convolve", "jacobi_diagonal", "jacobi_sweep", "mixed_mass_filter",
    "pg_anisotropic_diffusivities", "pg_residual", "power_iteration",
    "prolong", "residual_alternatives", "restrict", "sawtooth_cycle",
    "scalar_flux", "solve_fixed_source", "synthetic_xs_path",
    "upwind_residual",
]
