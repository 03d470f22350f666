"""Space-angle multigrid: hierarchy construction and the sawtooth cycle.

Each level halves the spatial grid and (until one patch per face remains)
the angular grid, coarsening the removal cross section with a harmonic
average.  A cycle forms the finest residual, restricts it to the bottom of
the hierarchy, Jacobi-relaxes the coarsest correction with the upwind
scheme, then prolongs and smooths upward.  On the finest level the upwind
correction smooth is followed by one Jacobi relaxation of the full
Petrov-Galerkin system with an enlarged diagonal.

Restriction is the two-stage operation: scale by the patch weight and cell
area, then a strided 2x2 sum in space (and over angle patch blocks when
the level coarsens angle).  ``restrict`` returns that raw integrated form;
inside the cycle the result is divided by the coarse patch weight and cell
area so each level's correction equation stays in the same lumped-mass
normalised units as its operator.  Prolongation is piecewise-constant
injection.
"""

from dataclasses import dataclass

import numpy as np

from .discretisation import (PGConfig, jacobi_diagonal,
                             pg_anisotropic_diffusivities, pg_residual,
                             upwind_residual)
from .filters import build_upwind_filters
from .grid import Field, GridSpec, apply_boundary
from .quadrature import N_FACES, coarsen_quadrature


@dataclass
class Level:
    """One multigrid level: grid, ordinates, removal and upwind pieces."""

    grid: GridSpec
    quad: object
    sigma_t: np.ndarray          # (nx, ny, ng)
    diag: np.ndarray             # upwind Jacobi diagonal, beta = 1
    upwind: object


class MultigridHierarchy:
    """Finest-to-coarsest list of levels."""

    def __init__(self, levels):
        self.levels = levels

    @property
    def n_levels(self):
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    def __getitem__(self, i):
        return self.levels[i]


def max_levels(nx, ny):
    """Deepest legal hierarchy: halve while both spatial extents stay even."""
    n = 1
    while nx % 2 == 0 and ny % 2 == 0 and nx > 1 and ny > 1:
        nx //= 2
        ny //= 2
        n += 1
    return n


def coarsen_sigma(sigma_t, eps=1e-30):
    """Harmonic 2x2 block average; a zero child forces a zero parent."""
    nx, ny, ng = sigma_t.shape
    blocks = sigma_t.reshape(nx // 2, 2, ny // 2, 2, ng)
    guarded = np.maximum(blocks, eps)
    coarse = 4.0 / (1.0 / guarded).sum(axis=(1, 3))
    coarse[(blocks == 0.0).any(axis=(1, 3))] = 0.0
    return coarse


def build_hierarchy(grid, quad, sigma_t, n_levels=None):
    """Build the space-angle hierarchy from the finest-level inputs.

    Spatial extents must be divisible by 2**(n_levels - 1); angle stops
    halving at one patch per face and deeper levels coarsen space only.
    With ``n_levels=None`` the deepest legal hierarchy is used.
    """
    if n_levels is None:
        n_levels = max_levels(grid.nx, grid.ny)
    if n_levels < 1:
        raise ValueError("hierarchy needs at least one level")
    if grid.nx % 2 ** (n_levels - 1) or grid.ny % 2 ** (n_levels - 1):
        raise ValueError(f"grid {grid.nx}x{grid.ny} not divisible by "
                         f"2**{n_levels - 1}")

    levels = []
    g, q, sig = grid, quad, sigma_t
    for _ in range(n_levels):
        uf = build_upwind_filters(g.dx, g.dy)
        diag = jacobi_diagonal(sig, q, g, scheme="upwind")
        levels.append(Level(grid=g, quad=q, sigma_t=sig, diag=diag, upwind=uf))
        if len(levels) == n_levels:
            break
        sig = coarsen_sigma(sig)
        g = GridSpec(g.nx // 2, g.ny // 2, 2 * g.dx, 2 * g.dy, g.halo)
        if q.n_a > 1:
            q = coarsen_quadrature(q)
    return MultigridHierarchy(levels)


def restrict(field, fine_level, coarse_level):
    """Two-stage restriction to the next coarser level (raw integrated form).

    Stage 1 multiplies by the fine patch weight and cell area; stage 2 sums
    2x2 spatial blocks (the 2x2 filter of ones applied with stride 2) and,
    when the level transition coarsens angle, 2x2 patch blocks per face.
    """
    fg, cg = fine_level.grid, coarse_level.grid
    if (cg.nx * 2, cg.ny * 2) != (fg.nx, fg.ny):
        raise ValueError("levels are not a spatial 2:1 pair")
    fq, cq = fine_level.quad, coarse_level.quad
    if cq.n_a not in (fq.n_a, fq.n_a // 2):
        raise ValueError("levels are not an angular 1:1 or 2:1 pair")

    out = Field(cg, cq.n_dir, field.n_group)
    out.interior[...] = restrict_field_array(field.interior, fine_level,
                                             coarse_level)
    return out


def prolong(field, coarse_level, fine_level):
    """Piecewise-constant injection onto the next finer level."""
    fg, cg = fine_level.grid, coarse_level.grid
    fq, cq = fine_level.quad, coarse_level.quad
    ng = field.n_group

    vals = field.interior
    if fq.n_a != cq.n_a:
        na = cq.n_a
        vals = vals.reshape(cg.nx, cg.ny, N_FACES, na, na, ng)
        vals = np.repeat(np.repeat(vals, 2, axis=3), 2, axis=4)
        vals = vals.reshape(cg.nx, cg.ny, fq.n_dir, ng)
    vals = np.repeat(np.repeat(vals, 2, axis=0), 2, axis=1)

    out = Field(fg, fq.n_dir, ng)
    out.interior[...] = vals
    return out


def jacobi_sweep(psi, q, level, n_sweeps=1, scheme="upwind", cfg=None,
                 fs=None, diag_scale=1.0, diffusivities=None):
    """n_sweeps Jacobi relaxations psi <- psi - d^-1 r(psi), in place.

    The boundary is applied before each residual evaluation.  For the
    ``pg`` scheme the residual is the Petrov-Galerkin one and the diagonal
    is enlarged by beta_diag; ``diag_scale`` applies the same relaxation to
    upwind sweeps that smooth a PG residual on the finest grid.
    """
    cfg = cfg or PGConfig()
    if scheme == "pg":
        d = cfg.beta_diag * level.diag
    elif scheme == "upwind":
        d = diag_scale * level.diag if diag_scale != 1.0 else level.diag
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    for _ in range(n_sweeps):
        apply_boundary(psi, level.quad)
        if scheme == "pg":
            r = pg_residual(psi, level.sigma_t, q, level.quad, fs, cfg,
                            diffusivities=diffusivities)
        else:
            r = upwind_residual(psi, level.sigma_t, q, level.quad, level.upwind)
        psi.interior[...] -= r.interior / d
    return psi


# stall window of the diffusivity Picard iteration: freeze when the live
# residual has not improved on its best by 10% for this many cycles, undo
# a freeze that lets the residual grow past the growth factor
_STALL_WINDOW = 5
_STALL_FACTOR = 0.9
_UNFREEZE_GROWTH = 2.0
_MAX_FREEZE_ATTEMPTS = 3


class PGState:
    """Across-cycle state of the non-linear diffusivity Picard iteration.

    The diffusivities are refreshed from the iterate every cycle until
    either the residual drops below ``k_freeze_rel`` of the initial one or
    it stops improving (the live-k feedback holds the residual in a
    bounded hover instead of letting it converge); they are then frozen so
    the remaining cycles contract on one linear system.  If the frozen
    system turns out not to contract (high filter orders can lose the
    dissipation the live feedback was supplying), the freeze is undone and
    after a few failed attempts the iteration stays live, which is the
    bounded self-regulated regime.
    """

    __slots__ = ("diffusivities", "initial_residual", "frozen",
                 "best_residual", "cycles_since_best", "freeze_residual",
                 "failed_freezes", "avg_theta", "psi_avg")

    def __init__(self, avg_theta=0.2):
        self.diffusivities = None
        self.initial_residual = None
        self.frozen = False
        self.best_residual = None
        self.cycles_since_best = 0
        self.freeze_residual = None
        self.failed_freezes = 0
        # the diffusivities are evaluated on an exponentially averaged
        # iterate, which quenches the noise feedback through their
        # denominators without moving the fixed point
        self.avg_theta = avg_theta
        self.psi_avg = None

    def averaged_iterate(self, psi):
        if self.avg_theta >= 1.0:
            return psi
        if self.psi_avg is None:
            self.psi_avg = psi.copy()
        else:
            self.psi_avg.data *= 1.0 - self.avg_theta
            self.psi_avg.data += self.avg_theta * psi.data
        return self.psi_avg

    def observe(self, resid, k_freeze_rel):
        if self.initial_residual is None:
            self.initial_residual = resid
            self.best_residual = resid
            return
        if self.frozen:
            if resid > _UNFREEZE_GROWTH * self.freeze_residual:
                # frozen system is not contracting; fall back to live k
                self.frozen = False
                self.failed_freezes += 1
                self.best_residual = resid
                self.cycles_since_best = 0
            return
        if self.failed_freezes >= _MAX_FREEZE_ATTEMPTS:
            return
        if resid <= k_freeze_rel * self.initial_residual:
            self._freeze(resid)
            return
        if resid < _STALL_FACTOR * self.best_residual:
            self.best_residual = resid
            self.cycles_since_best = 0
        else:
            self.cycles_since_best += 1
            if self.cycles_since_best >= _STALL_WINDOW:
                self._freeze(resid)

    def _freeze(self, resid):
        self.frozen = True
        self.freeze_residual = resid
        self.cycles_since_best = 0


def sawtooth_cycle(psi, q, hierarchy, fs=None, cfg=None, scheme="pg",
                   n_sweeps=3, pg_sweeps=1, pg_state=None):
    """One sawtooth multigrid iteration; returns (psi, finest residual l1).

    The finest residual (Petrov-Galerkin for ``scheme="pg"``, upwind
    otherwise) is restricted through every level; corrections are smoothed
    with the upwind scheme from the coarsest level up, injected level to
    level, added to the iterate on the finest grid, and for the PG scheme
    the update finishes with ``pg_sweeps`` relaxations of the full system.

    The non-linear diffusivities are evaluated once per cycle from the
    iterate the cycle starts with and reused by the final sweep.  Passing
    a ``PGState`` carries them across cycles: they stop being refreshed
    once the residual has fallen by ``cfg.k_freeze_rel`` relative to the
    first cycle (see PGConfig).
    """
    cfg = cfg or PGConfig()
    finest = hierarchy[0]
    apply_boundary(psi, finest.quad)
    if scheme == "pg":
        if pg_state is None:
            diff = pg_anisotropic_diffusivities(psi, fs, finest.quad, cfg)
        else:
            avg = pg_state.averaged_iterate(psi)
            if pg_state.diffusivities is None or not pg_state.frozen:
                pg_state.diffusivities = pg_anisotropic_diffusivities(
                    avg, fs, finest.quad, cfg)
            diff = pg_state.diffusivities
        r = pg_residual(psi, finest.sigma_t, q, finest.quad, fs, cfg,
                        diffusivities=diff)
    else:
        diff = None
        r = upwind_residual(psi, finest.sigma_t, q, finest.quad, finest.upwind)
    resid_l1 = float(np.abs(r.interior).sum())
    if scheme == "pg" and pg_state is not None:
        pg_state.observe(resid_l1, cfg.k_freeze_rel)

    delta = mg_correction(r.interior, hierarchy, n_sweeps=n_sweeps,
                          finest_diag_scale=(cfg.beta_diag if scheme == "pg"
                                             else 1.0), cfg=cfg)

    # r is A psi - q, so the smoothed correction is subtracted
    psi.interior[...] -= delta.interior
    if scheme == "pg":
        jacobi_sweep(psi, q, finest, n_sweeps=pg_sweeps, scheme="pg",
                     cfg=cfg, fs=fs, diffusivities=diff)
    apply_boundary(psi, finest.quad)
    return psi, resid_l1


def mg_correction(residual_interior, hierarchy, n_sweeps=3,
                  finest_diag_scale=1.0, cfg=None):
    """Restrict a finest-level residual and smooth the correction upward.

    This is the downward/upward half of the sawtooth cycle: the residual
    is restricted through every level (converting back to lumped-mass
    normalised units as it goes), the correction is Jacobi-relaxed with
    the upwind scheme from the coarsest level up and injected level to
    level.  Returns the finest-level correction field for ``r = A psi - q``
    (i.e. to be subtracted).  Linear in the residual for fixed settings.
    """
    cfg = cfg or PGConfig()
    sources = [residual_interior]
    for i in range(1, hierarchy.n_levels):
        raw = restrict_field_array(sources[-1], hierarchy[i - 1], hierarchy[i])
        lev = hierarchy[i]
        # back to lumped-mass normalised units on the coarse level
        raw /= lev.quad.weights.reshape(1, 1, -1, 1) * (lev.grid.dx * lev.grid.dy)
        sources.append(raw)

    n_group = residual_interior.shape[3]
    delta = Field(hierarchy[-1].grid, hierarchy[-1].quad.n_dir, n_group)
    for i in range(hierarchy.n_levels - 1, -1, -1):
        # the finest-grid update is relaxed when it smooths the stiffer
        # Petrov-Galerkin residual
        scale = finest_diag_scale if i == 0 else 1.0
        jacobi_sweep(delta, sources[i], hierarchy[i], n_sweeps=n_sweeps,
                     scheme="upwind", cfg=cfg, diag_scale=scale)
        if i > 0:
            delta = prolong(delta, hierarchy[i], hierarchy[i - 1])
    return delta


def restrict_field_array(arr, fine_level, coarse_level):
    """Array-in, array-out restriction used by the cycle internals."""
    fg, cg = fine_level.grid, coarse_level.grid
    fq, cq = fine_level.quad, coarse_level.quad
    ng = arr.shape[3]
    mod = arr * fq.weights.reshape(1, 1, -1, 1) * (fg.dx * fg.dy)
    mod = mod.reshape(cg.nx, 2, cg.ny, 2, fq.n_dir, ng).sum(axis=(1, 3))
    if cq.n_a != fq.n_a:
        na = fq.n_a
        mod = mod.reshape(cg.nx, cg.ny, N_FACES, na // 2, 2, na // 2, 2, ng)
        mod = mod.sum(axis=(4, 6)).reshape(cg.nx, cg.ny, cq.n_dir, ng)
    return mod
