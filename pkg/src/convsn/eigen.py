"""Multigroup source assembly, fixed-source solves and power iteration.

Group coupling is lagged Jacobi-style: every multigrid iteration rebuilds
the in-scatter source from the latest scalar flux of the other groups, so
all groups advance together as channels of one field.  The eigenvalue
outer loop freezes the fission source, runs a block of multigrid
iterations, then updates k with the fission-production ratio and rescales
the iterate so production is one.

Scalar flux convention: phi = sum_n p_n psi_n (weights sum to 4*pi), and
isotropic emission enters every direction with the full magnitude
``sum_scatter + lambda chi F + s`` without a 1/(4*pi) split.  A uniform
pure absorber therefore equilibrates at psi = s / sigma_a, i.e. the
scalar flux carries a 4*pi factor relative to the per-steradian picture.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .discretisation import PGConfig
from .filters import build_convfem_filters
from .grid import Field, GridSpec, apply_boundary, scalar_flux
from .multigrid import PGState, build_hierarchy, max_levels, sawtooth_cycle
from .quadrature import build_quadrature


@dataclass
class SolverOptions:
    """Everything the transport drivers need besides the problem itself."""

    scheme: str = "pg"            # "pg" or "upwind"
    order: int = 2                # ConvFEM filter order (pg scheme)
    n_a: int = 4                  # angular patches per octahedron face side
    n_levels: int | None = None   # None = deepest legal hierarchy
    mg_iters: int = 100           # multigrid iterations per (outer) solve
    jacobi_sweeps: int = 3        # upwind sweeps per level per cycle
    pg_sweeps: int = 1            # finest-level PG relaxations per cycle
    outer_iters: int = 100        # power-iteration outer loop length
    tol_rel: float = 0.0          # fixed-source convergence target (0 = off)
    bootstrap_cycles: int | None = None   # upwind warm-start cycles
    k_avg_theta: float = 0.2      # iterate averaging for the diffusivities
    pg: PGConfig = field(default_factory=PGConfig)

    def bootstrap(self):
        # warming the PG solve up with a few cheap upwind cycles gives the
        # non-linear diffusivities a physical iterate to start from
        if self.bootstrap_cycles is not None:
            return self.bootstrap_cycles
        return 20 if self.scheme == "pg" else 0

    def filter_halo(self):
        # the PG pipeline nests three stencil applications (gradient,
        # mixed mass, diffusion), each of half-width equal to the order
        if self.scheme == "upwind":
            return 1
        return 3 * self.order


@dataclass
class TransportSetup:
    """Assembled solver pieces for one problem/options pair."""

    grid: GridSpec
    quad: object
    filters: object
    mat: object
    hierarchy: object
    options: SolverOptions


@dataclass
class FixedSourceResult:
    psi: Field
    phi: np.ndarray
    residual_history: list
    converged: bool
    bootstrap_history: list = field(default_factory=list)


@dataclass
class EigenState:
    """Power iteration state and k-effective history."""

    psi: Field
    phi: np.ndarray
    k_eff: float
    iteration: int
    history: list
    residual_history: list = field(default_factory=list)

    @property
    def lam(self):
        return 1.0 / self.k_eff


def setup_transport(problem, options):
    """Build grid, quadrature, filters, materials and hierarchy."""
    if options.scheme not in ("pg", "upwind"):
        raise ValueError(f"unknown scheme {options.scheme!r}")
    halo = options.filter_halo()
    grid = GridSpec(problem.nx, problem.ny, problem.dx, problem.dy, halo)
    quad = build_quadrature(options.n_a)
    fs = None
    if options.scheme == "pg":
        fs = build_convfem_filters(options.order, problem.dx, problem.dy)
    mat = problem.material_field()
    n_levels = options.n_levels
    if n_levels is None:
        n_levels = max_levels(grid.nx, grid.ny)
    hier = build_hierarchy(grid, quad, mat.sigma_t, n_levels)
    return TransportSetup(grid=grid, quad=quad, filters=fs, mat=mat,
                          hierarchy=hier, options=options)


def assemble_group_source(phi, mat, lam=0.0):
    """Isotropic source per cell and group, identical for every direction.

    ``q_g = sum_{g' != g} sigma_s[g'->g] phi_g' + lam chi_g sum_g' nu
    sigma_f_g' phi_g' + s_g``.  Returns an (nx, ny, 1, ng) array ready to
    broadcast over the direction axis.
    """
    scatter_in = np.einsum("xyab,xya->xyb", mat.sigma_s, phi)
    scatter_in -= np.einsum("xygg,xyg->xyg", mat.sigma_s, phi)
    q = scatter_in + mat.source
    if lam != 0.0:
        production = np.einsum("xyg,xyg->xy", mat.nu_sigma_f, phi)
        q = q + lam * mat.chi * production[:, :, None]
    return q[:, :, None, :]


def fission_production(phi, mat, dx, dy):
    """Volume-integrated fission neutron production rate."""
    return float(np.einsum("xyg,xyg->", mat.nu_sigma_f, phi) * dx * dy)


def _run_cycles(psi, setup, n_iters, fission_frozen=None, pg_state=None,
                scheme=None):
    """n_iters multigrid iterations with lagged scatter sources."""
    opts = setup.options
    scheme = scheme or opts.scheme
    history = []
    for _ in range(n_iters):
        phi = scalar_flux(psi, setup.quad)
        q = assemble_group_source(phi, setup.mat, lam=0.0)
        if fission_frozen is not None:
            q = q + fission_frozen
        psi, res = sawtooth_cycle(psi, q, setup.hierarchy, fs=setup.filters,
                                  cfg=opts.pg, scheme=scheme,
                                  n_sweeps=opts.jacobi_sweeps,
                                  pg_sweeps=opts.pg_sweeps, pg_state=pg_state)
        history.append(res)
        if not math.isfinite(res):
            break
    return psi, history


def solve_fixed_source(problem, options=None):
    """Converge a source-driven (non-fissile) problem with multigrid.

    Runs ``options.mg_iters`` sawtooth cycles with the in-scatter source
    lagged one iteration.  Non-convergence against ``tol_rel`` (when set)
    is reported through the ``converged`` flag, not raised.
    """
    options = options or SolverOptions()
    setup = setup_transport(problem, options)
    if setup.mat.fissile:
        raise ValueError("problem has fission; use power_iteration")
    if not setup.mat.source.any():
        return FixedSourceResult(
            psi=Field(setup.grid, setup.quad.n_dir, setup.mat.n_groups),
            phi=np.zeros((setup.grid.nx, setup.grid.ny, setup.mat.n_groups)),
            residual_history=[0.0], converged=True)

    psi = Field(setup.grid, setup.quad.n_dir, setup.mat.n_groups)
    boot_history = []
    if options.scheme == "pg" and options.bootstrap() > 0:
        psi, boot_history = _run_cycles(psi, setup, options.bootstrap(),
                                        scheme="upwind")
    psi, history = _run_cycles(psi, setup, options.mg_iters,
                               pg_state=PGState(options.k_avg_theta))
    phi = scalar_flux(psi, setup.quad)
    converged = True
    if options.tol_rel > 0.0 and history[0] > 0.0:
        converged = history[-1] <= options.tol_rel * history[0]
    if not np.isfinite(history[-1]):
        converged = False
    return FixedSourceResult(psi=psi, phi=phi, residual_history=history,
                             converged=converged,
                             bootstrap_history=boot_history)


def power_iteration(problem, options=None, inner_iters=None):
    """Power method for the dominant k-effective of a fissile problem.

    Each outer iteration freezes the fission source built from the current
    scalar flux and eigenvalue, applies ``inner_iters`` multigrid
    iterations (default ``options.mg_iters``), updates k by the ratio of
    fission production before and after, and normalises the iterate to
    unit production.
    """
    options = options or SolverOptions()
    setup = setup_transport(problem, options)
    mat = setup.mat
    if not mat.fissile:
        raise ValueError("problem has no fission source; "
                         "power iteration is undefined")
    if inner_iters is None:
        inner_iters = options.mg_iters

    psi = Field(setup.grid, setup.quad.n_dir, mat.n_groups).fill(1.0)
    apply_boundary(psi, setup.quad)
    phi = scalar_flux(psi, setup.quad)
    prod = fission_production(phi, mat, setup.grid.dx, setup.grid.dy)
    if prod <= 0.0:
        raise ValueError("initial fission production is zero")
    psi.data /= prod
    phi /= prod

    k = 1.0
    history = [k]
    residual_history = []
    pg_state = PGState(options.k_avg_theta)
    if options.scheme == "pg" and options.bootstrap() > 0:
        fission_q = mat.chi * np.einsum("xyg,xyg->xy", mat.nu_sigma_f,
                                        phi)[:, :, None]
        psi, _ = _run_cycles(psi, setup, options.bootstrap(),
                             fission_frozen=fission_q[:, :, None, :],
                             scheme="upwind")
    for it in range(options.outer_iters):
        fission_q = (1.0 / k) * mat.chi * np.einsum(
            "xyg,xyg->xy", mat.nu_sigma_f, phi)[:, :, None]
        psi, res = _run_cycles(psi, setup, inner_iters,
                               fission_frozen=fission_q[:, :, None, :],
                               pg_state=pg_state)
        residual_history.extend(res)
        phi = scalar_flux(psi, setup.quad)
        prod = fission_production(phi, mat, setup.grid.dx, setup.grid.dy)
        if not math.isfinite(prod) or prod <= 0.0:
            raise ValueError(f"fission production became {prod} at outer "
                             f"iteration {it + 1}")
        k = k * prod   # previous production is 1 after normalisation
        psi.data /= prod
        phi /= prod
        if pg_state.psi_avg is not None:
            pg_state.psi_avg.data /= prod
        history.append(k)

    return EigenState(psi=psi, phi=phi, k_eff=k, iteration=options.outer_iters,
                      history=history, residual_history=residual_history)
