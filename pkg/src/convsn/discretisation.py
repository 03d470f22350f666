"""Discrete transport residuals and the Jacobi diagonal.

Everything here is written in lumped-mass-normalised (strong) form: each
nodal equation is the assembled filter equation divided by the lumped mass
``dx*dy``, so removal and source enter as plain ``sigma_t * psi - q`` and
the upwind and Petrov-Galerkin residuals discretise the same equation.
The Jacobi diagonal matches that normalisation.

The Petrov-Galerkin residual adds a residual-driven anisotropic diffusion:
per direction and axis the mixed-mass residual estimate

    R_x = alpha_r * mu * f(f(psi; w_x); mL^-1 m - I)

feeds two candidate diffusivities which are clipped by the advection-sized
maximum,

    k_x = min(dx*|mu|,
              alpha_kabs*|R_x|*dx / (eps + |f(psi; w_x)|),
              alpha_ksquare*R_x^2*dx / (eps + |mu|*f(psi; w_x)^2)),

and the diffusion term enters through the product-rule identity
``-(k psi')' = -1/2 [(k psi)'' + k psi'' - psi k'']`` with the stiffness
filter standing in for the negated second derivative.
"""

from dataclasses import dataclass

import numpy as np

from .filters import averaged_stencils_1d
from .grid import _stencil_apply_sep


@dataclass(frozen=True)
class PGConfig:
    """Scalar knobs of the non-linear Petrov-Galerkin stabilisation.

    ``k_freeze_rel`` controls the solver-side Picard treatment of the
    non-linear diffusivities: they are re-evaluated every multigrid cycle
    until the finest residual has dropped below this fraction of the
    run's initial residual, then kept fixed so the remaining cycles solve
    one linear system.  Freezing changes neither the discretisation nor
    its fixed point, only the path taken to it; with live re-evaluation
    the iterate-noise feedback through the diffusivity denominators keeps
    the residual hovering instead of converging.
    """

    epsilon_k: float = 1.0e-3
    alpha_r: float = 3.0       # mixed-mass residual scaling
    beta_r: float = 3.0        # isotropic mixed-mass residual scaling
    beta_diag: float = 3.0     # diagonal relaxation factor for the PG sweep
    k_freeze_rel: float = 0.05

    def alpha_kabs(self, order):
        return 2.0 ** order / 16.0

    def alpha_ksquare(self, order):
        return 2.0 ** order / 2.0


def _sigma_array(mat):
    return getattr(mat, "sigma_t", mat)


def upwind_residual(psi, mat, q, quad, uf):
    """Residual of the upwind control-volume discretisation.

    ``r = mu D_x psi + nu D_y psi + sigma_t psi - q`` with one-sided
    differences biased against the direction of travel.  ``q`` is an array
    broadcastable over the interior (nx, ny, n_dir, ng); the boundary must
    already be applied to ``psi``.
    """
    sigma_t = _sigma_array(mat)
    g = psi.grid
    h = g.halo
    d = psi.data
    mu = quad.mu.reshape(1, 1, -1, 1)
    nu = quad.nu.reshape(1, 1, -1, 1)
    mu_pos = (quad.mu > 0.0).reshape(1, 1, -1, 1)
    nu_pos = (quad.nu > 0.0).reshape(1, 1, -1, 1)

    centre = d[h:h + g.nx, h:h + g.ny]
    west = d[h - 1:h - 1 + g.nx, h:h + g.ny]
    east = d[h + 1:h + 1 + g.nx, h:h + g.ny]
    south = d[h:h + g.nx, h - 1:h - 1 + g.ny]
    north = d[h:h + g.nx, h + 1:h + 1 + g.ny]

    dx_term = np.where(mu_pos, centre - west, east - centre) / uf.dx
    dy_term = np.where(nu_pos, centre - south, north - centre) / uf.dy

    out = psi.zeros_like()
    out.interior[...] = (mu * dx_term + nu * dy_term
                         + sigma_t[:, :, None, :] * centre - q)
    return out


def jacobi_diagonal(mat, quad, grid, scheme="upwind", cfg=None):
    """Diagonal of the upwind system, scaled by beta for the PG sweep.

    ``d = beta * (|mu|/dx + |nu|/dy + sigma_t)`` with beta = 1 for the
    upwind scheme and beta = beta_diag (default 3) for the Petrov-Galerkin
    relaxation on the finest grid.
    """
    sigma_t = _sigma_array(mat)
    beta = 1.0
    if scheme == "pg":
        beta = (cfg or PGConfig()).beta_diag
    elif scheme != "upwind":
        raise ValueError(f"unknown scheme {scheme!r}")
    stream = (np.abs(quad.mu) / grid.dx + np.abs(quad.nu) / grid.dy)
    return beta * (stream.reshape(1, 1, -1, 1) + sigma_t[:, :, None, :])


def _grad_fields(psi, fs):
    """f(psi; w_x) and f(psi; w_y) on the interior plus a 2l margin."""
    halo = psi.grid.halo
    l = fs.half_width
    psix = _stencil_apply_sep(psi.data, fs.grad1 / fs.dx, fs.mass1,
                              halo, margin=2 * l)
    psiy = _stencil_apply_sep(psi.data, fs.mass1, fs.grad1 / fs.dy,
                              halo, margin=2 * l)
    return psix, psiy


def pg_anisotropic_diffusivities(psi, fs, quad, cfg, grads=None):
    """Per-axis diffusion coefficients k_x, k_y of the non-linear PG term.

    Returns two arrays shaped like the field data, valid on the interior
    plus an l-cell margin (what the diffusion filters need).  Requires the
    field halo to be at least 3l with the boundary already applied.
    """
    g = psi.grid
    l = fs.half_width
    if g.halo < 3 * l:
        raise ValueError(f"PG diffusivities need halo >= {3 * l}, "
                         f"field has {g.halo}")
    psix, psiy = grads if grads is not None else _grad_fields(psi, fs)
    mu = np.abs(quad.mu).reshape(1, 1, -1, 1)
    nu = np.abs(quad.nu).reshape(1, 1, -1, 1)
    eps = cfg.epsilon_k
    a_abs = cfg.alpha_kabs(fs.order)
    a_sq = cfg.alpha_ksquare(fs.order)

    # mixed-mass residual estimate, valid on interior + l
    rx = cfg.alpha_r * quad.mu.reshape(1, 1, -1, 1) * (
        _stencil_apply_sep(psix, fs.mass1, fs.mass1, g.halo, margin=l) - psix)
    ry = cfg.alpha_r * quad.nu.reshape(1, 1, -1, 1) * (
        _stencil_apply_sep(psiy, fs.mass1, fs.mass1, g.halo, margin=l) - psiy)

    # a diverging iterate can overflow the squares; the min() clamp keeps
    # the coefficients finite, so silence the intermediate warnings
    with np.errstate(over="ignore", invalid="ignore"):
        kx = np.minimum(fs.dx * mu,
                        np.minimum(a_abs * np.abs(rx) * fs.dx / (eps + np.abs(psix)),
                                   a_sq * rx**2 * fs.dx / (eps + mu * psix**2)))
        ky = np.minimum(fs.dy * nu,
                        np.minimum(a_abs * np.abs(ry) * fs.dy / (eps + np.abs(psiy)),
                                   a_sq * ry**2 * fs.dy / (eps + nu * psiy**2)))
    kx = np.nan_to_num(kx, nan=0.0, posinf=0.0, neginf=0.0, copy=False)
    ky = np.nan_to_num(ky, nan=0.0, posinf=0.0, neginf=0.0, copy=False)
    return kx, ky


def pg_isotropic_diffusivity(psi, fs, quad, cfg, mode="mixed_mass", grads=None):
    """Single isotropic diffusion coefficient (legacy form, kept as a mode).

    ``mode`` selects how the equation residual R is estimated; see
    ``residual_estimate``.  The default anisotropic path is
    ``pg_anisotropic_diffusivities``.
    """
    g = psi.grid
    psix, psiy = grads if grads is not None else _grad_fields(psi, fs)
    r = residual_estimate(psi, fs, quad, cfg, mode=mode, grads=(psix, psiy))
    mu = quad.mu.reshape(1, 1, -1, 1)
    nu = quad.nu.reshape(1, 1, -1, 1)
    eps = cfg.epsilon_k
    h = 0.5 * (fs.dx + fs.dy)
    k_abs = (cfg.alpha_kabs(fs.order) * np.abs(r) * h
             / (eps + 0.5 * (np.abs(psix) + np.abs(psiy))))
    ratio = (mu * psix + nu * psiy) / (eps + psix**2 + psiy**2)
    k_sq = (cfg.alpha_ksquare(fs.order) * r**2 * h
            / (eps + 0.5 * (np.abs(ratio * psix) + np.abs(ratio * psiy))
               * (psix**2 + psiy**2)))
    k_max = np.sqrt((fs.dx * mu)**2 + (fs.dy * nu)**2)
    return np.minimum(k_max, np.minimum(k_abs, k_sq))


def residual_estimate(psi, fs, quad, cfg, mode="mixed_mass", grads=None):
    """Equation-residual estimate R used by the isotropic diffusivities.

    Modes: ``low_order`` subtracts the order-(p-1) advection expansion,
    ``high_order`` subtracts this expansion from the order-(p+1) one, and
    ``mixed_mass`` applies beta_r * (mL^-1 m - I) to the advection term.
    Valid on the interior plus an l margin.
    """
    g = psi.grid
    l = fs.half_width
    mu = quad.mu.reshape(1, 1, -1, 1)
    nu = quad.nu.reshape(1, 1, -1, 1)
    psix, psiy = grads if grads is not None else _grad_fields(psi, fs)
    adv = mu * psix + nu * psiy

    if mode == "mixed_mass":
        return cfg.beta_r * (
            _stencil_apply_sep(adv, fs.mass1, fs.mass1, g.halo, margin=l) - adv)
    if mode == "low_order":
        if fs.order - 1 < 1:
            raise ValueError("low_order residual needs filter order >= 2")
        other = fs.order - 1
    elif mode == "high_order":
        other = fs.order + 1
    else:
        raise ValueError(f"unknown residual mode {mode!r}")

    mass_o, grad_o, _ = averaged_stencils_1d(other)
    margin = min(l, g.halo - other)
    if margin < 0:
        raise ValueError("field halo too small for the comparison order")
    ox = _stencil_apply_sep(psi.data, grad_o / fs.dx, mass_o, g.halo, margin)
    oy = _stencil_apply_sep(psi.data, mass_o, grad_o / fs.dy, g.halo, margin)
    adv_other = mu * ox + nu * oy
    if mode == "low_order":
        return adv - adv_other
    return adv_other - adv


def _k_diffusion(arr, k, stiff_x, stiff_y, halo, l):
    """f_kdiff: -1/2[(k a)'' + k a'' - a k''] via the stiffness filter.

    The stiffness stencil already encodes the negated second derivative,
    so the three terms are summed with +1/2 here.
    """
    t1 = _stencil_apply_sep(arr * k, stiff_x, stiff_y, halo, 0)
    t2 = k * _stencil_apply_sep(arr, stiff_x, stiff_y, halo, 0)
    t3 = arr * _stencil_apply_sep(k, stiff_x, stiff_y, halo, 0)
    return 0.5 * (t1 + t2 - t3)


def pg_residual(psi, mat, q, quad, fs, cfg, diffusivities=None,
                anisotropy="xy"):
    """Residual of the Petrov-Galerkin filter discretisation.

    ``r = f(psi; mu w_x) + f(psi; nu w_y) + f_kdiff_x + f_kdiff_y
    + sigma_t psi - q`` in lumped-mass-normalised form.  ``diffusivities``
    may carry precomputed (k_x, k_y); ``anisotropy`` is ``"xy"`` for the
    per-axis coefficients (the default production path) or ``"iso"`` for
    the single isotropic coefficient.
    """
    sigma_t = _sigma_array(mat)
    g = psi.grid
    l = fs.half_width
    h = g.halo
    mu = quad.mu.reshape(1, 1, -1, 1)
    nu = quad.nu.reshape(1, 1, -1, 1)

    grads = _grad_fields(psi, fs)
    if diffusivities is not None:
        kx, ky = diffusivities
    elif anisotropy == "xy":
        kx, ky = pg_anisotropic_diffusivities(psi, fs, quad, cfg, grads=grads)
    elif anisotropy == "iso":
        k = pg_isotropic_diffusivity(psi, fs, quad, cfg, grads=grads)
        kx, ky = k, k
    else:
        raise ValueError(f"unknown anisotropy setting {anisotropy!r}")

    diff_x = _k_diffusion(psi.data, kx, fs.stiff1 / fs.dx**2, fs.mass1, h, l)
    diff_y = _k_diffusion(psi.data, ky, fs.mass1, fs.stiff1 / fs.dy**2, h, l)

    psix, psiy = grads
    out = psi.zeros_like()
    sl = (slice(h, h + g.nx), slice(h, h + g.ny))
    out.interior[...] = (mu * psix[sl] + nu * psiy[sl]
                         + diff_x[sl] + diff_y[sl]
                         + sigma_t[:, :, None, :] * psi.interior - q)
    return out


def residual_alternatives(psi, fs, quad, cfg, mode):
    """Field-valued equation-residual estimate (low/high order, mixed mass)."""
    r = residual_estimate(psi, fs, quad, cfg, mode=mode)
    out = psi.zeros_like()
    h = psi.grid.halo
    sl = (slice(h, h + psi.grid.nx), slice(h, h + psi.grid.ny))
    out.interior[...] = r[sl]
    return out
