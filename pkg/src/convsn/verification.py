"""Solver-versus-oracle comparison harness (used by tests and the CLI).

Builds a desk-scale fissile problem, assembles the governing equations as
dense matrices with the brute-force oracle and checks three things against
the production stencil path: the upwind residual, a single Jacobi sweep
and the converged k-effective of the power iteration.
"""

from dataclasses import dataclass

import numpy as np

from .discretisation import jacobi_diagonal, upwind_residual
from .eigen import SolverOptions, power_iteration
from .filters import build_upwind_filters
from .grid import Field, GridSpec, apply_boundary
from .materials import CrossSections
from .oracle import (assemble_fission, assemble_scatter,
                     assemble_streaming_removal, dense_jacobi_step,
                     dense_power_iteration)
from .problems import ProblemSpec
from .quadrature import build_quadrature


@dataclass
class OracleReport:
    rows: list  # (name, err, tol, ok)

    @property
    def passed(self):
        return all(ok for *_, ok in self.rows)


def _two_group_fuel():
    return CrossSections(
        "fuel",
        sigma_a=np.array([0.15, 1.2]),
        sigma_s=np.array([[0.0, 0.05], [0.02, 0.0]]),
        nu_sigma_f=np.array([0.02, 0.24]),
        sigma_f=np.array([0.02, 0.24]) / 2.45,
        chi=np.array([1.0, 0.0]),
    )


def oracle_problem(nx=6, ny=6, n_groups=2):
    """Homogeneous fissile block with vacuum boundaries."""
    fuel = _two_group_fuel()
    if n_groups == 1:
        fuel = CrossSections("fuel", np.array([0.5]), np.zeros((1, 1)),
                             np.array([0.6]), np.array([0.25]), np.array([1.0]))
    region = np.zeros((nx, ny), dtype=int)
    return ProblemSpec(name="oracle_block", nx=nx, ny=ny, dx=0.5, dy=0.5,
                       region_map=region, materials=[fuel],
                       n_groups=n_groups)


def _flatten(field_interior):
    # (nx, ny, nd, ng) -> oracle flat index ordering
    return np.ascontiguousarray(field_interior).ravel()


def compare_against_dense_oracle(nx=6, ny=6, n_a=1, n_groups=2,
                                 tol_residual=1e-12, tol_jacobi=1e-12,
                                 tol_keff=1e-6):
    """Run the three oracle equivalence checks; returns an OracleReport."""
    problem = oracle_problem(nx, ny, n_groups)
    quad = build_quadrature(n_a)
    mat = problem.material_field()
    grid = GridSpec(nx, ny, problem.dx, problem.dy, halo=1)
    uf = build_upwind_filters(problem.dx, problem.dy)

    A = assemble_streaming_removal(quad, mat.sigma_t, problem.dx, problem.dy)

    rng = np.random.default_rng(2718)
    psi = Field(grid, quad.n_dir, n_groups)
    psi.interior[...] = rng.random(psi.interior.shape)
    q = rng.random(psi.interior.shape)
    apply_boundary(psi, quad)

    r = upwind_residual(psi, mat.sigma_t, q, quad, uf)
    r_dense = A @ _flatten(psi.interior) - q.ravel()
    err_resid = float(np.max(np.abs(_flatten(r.interior) - r_dense)))

    d = jacobi_diagonal(mat.sigma_t, quad, grid, scheme="upwind")
    stepped = _flatten(psi.interior) - _flatten(r.interior) / _flatten(d)
    dense_stepped = dense_jacobi_step(A, _flatten(psi.interior), q.ravel())
    err_jac = float(np.max(np.abs(stepped - dense_stepped)))

    S = assemble_scatter(quad, mat.sigma_s)
    F = assemble_fission(quad, mat.chi, mat.nu_sigma_f)
    k_dense, _, _ = dense_power_iteration(A - S, F, iters=2000, tol=1e-13)

    options = SolverOptions(scheme="upwind", n_a=n_a, mg_iters=25,
                            jacobi_sweeps=3, outer_iters=200)
    state = power_iteration(problem, options)
    err_k = abs(state.k_eff - k_dense)

    rows = [
        ("upwind residual vs dense", err_resid, tol_residual,
         err_resid <= tol_residual),
        ("jacobi sweep vs dense", err_jac, tol_jacobi, err_jac <= tol_jacobi),
        (f"power-iteration k_eff vs dense ({k_dense:.8f})", err_k, tol_keff,
         err_k <= tol_keff),
    ]
    return OracleReport(rows)
