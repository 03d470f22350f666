"""Brute-force reference implementations for verifying the solver.

Everything here is deliberately naive: dense matrices assembled term by
term from the governing equations and quadruple-loop convolutions.  The
stencil engine, upwind residual, Jacobi sweep and power iteration are all
checked against these on desk-scale instances.  Keep this module free of
the production code paths it verifies.
"""

import numpy as np


def naive_convolve_padded(plane, stencil, halo):
    """Quadruple-loop correlation of a padded 2D plane with a square stencil.

    ``plane`` has shape (nx + 2*halo, ny + 2*halo); the output interior
    entry (i, j) sums ``w[l+a, l+b] * plane[halo+i+a, halo+j+b]``.
    """
    w = np.asarray(stencil)
    l = (w.shape[0] - 1) // 2
    nx = plane.shape[0] - 2 * halo
    ny = plane.shape[1] - 2 * halo
    out = np.zeros((nx, ny))
    for i in range(nx):
        for j in range(ny):
            acc = 0.0
            for a in range(-l, l + 1):
                for b in range(-l, l + 1):
                    acc += w[l + a, l + b] * plane[halo + i + a, halo + j + b]
            out[i, j] = acc
    return out


def flat_index(i, j, n, g, ny, nd, ng):
    return ((i * ny + j) * nd + n) * ng + g


def assemble_streaming_removal(quad, sigma_t, dx, dy):
    """Dense matrix of the upwind streaming plus removal operator.

    Unknowns are psi[i, j, n, g] flattened with ``flat_index``.  The bare
    surface boundary (zero incoming flux) simply drops the upwind
    neighbour term at inflow boundaries; outgoing halo copies never enter
    the upwind stencil.
    """
    nx, ny, ng = sigma_t.shape
    nd = quad.n_dir
    size = nx * ny * nd * ng
    A = np.zeros((size, size))
    for i in range(nx):
        for j in range(ny):
            for n in range(nd):
                mu, nu = quad.mu[n], quad.nu[n]
                for g in range(ng):
                    row = flat_index(i, j, n, g, ny, nd, ng)
                    A[row, row] += abs(mu) / dx + abs(nu) / dy + sigma_t[i, j, g]
                    if mu > 0 and i > 0:
                        A[row, flat_index(i - 1, j, n, g, ny, nd, ng)] -= mu / dx
                    elif mu < 0 and i < nx - 1:
                        A[row, flat_index(i + 1, j, n, g, ny, nd, ng)] += mu / dx
                    if nu > 0 and j > 0:
                        A[row, flat_index(i, j - 1, n, g, ny, nd, ng)] -= nu / dy
                    elif nu < 0 and j < ny - 1:
                        A[row, flat_index(i, j + 1, n, g, ny, nd, ng)] += nu / dy
    return A


def assemble_scatter(quad, sigma_s):
    """Dense in-scatter operator: q_n,g gains sigma_s[g'->g] p_n' psi_n',g'."""
    nx, ny, ng = sigma_s.shape[0], sigma_s.shape[1], sigma_s.shape[2]
    nd = quad.n_dir
    size = nx * ny * nd * ng
    S = np.zeros((size, size))
    for i in range(nx):
        for j in range(ny):
            for n in range(nd):
                for g in range(ng):
                    row = flat_index(i, j, n, g, ny, nd, ng)
                    for np_ in range(nd):
                        for gp in range(ng):
                            if gp == g:
                                continue
                            col = flat_index(i, j, np_, gp, ny, nd, ng)
                            S[row, col] += sigma_s[i, j, gp, g] * quad.weights[np_]
    return S


def assemble_fission(quad, chi, nu_sigma_f):
    """Dense fission operator: chi_g * nu sigma_f,g' * p_n' per cell."""
    nx, ny, ng = chi.shape
    nd = quad.n_dir
    size = nx * ny * nd * ng
    F = np.zeros((size, size))
    for i in range(nx):
        for j in range(ny):
            for n in range(nd):
                for g in range(ng):
                    row = flat_index(i, j, n, g, ny, nd, ng)
                    for np_ in range(nd):
                        for gp in range(ng):
                            col = flat_index(i, j, np_, gp, ny, nd, ng)
                            F[row, col] += (chi[i, j, g] * nu_sigma_f[i, j, gp]
                                            * quad.weights[np_])
    return F


def dense_jacobi_step(A, psi_flat, q_flat, beta=1.0):
    """One Jacobi update psi - (beta diag A)^-1 (A psi - q)."""
    d = beta * np.diag(A)
    return psi_flat - (A @ psi_flat - q_flat) / d


def dense_power_iteration(A, B, iters=500, tol=1e-13):
    """Power iteration for the dominant eigenvalue of A^-1 B.

    Uses the production-ratio update ``k <- k * F_new / F_old`` with the
    fission rate as the production measure, mirroring the solver's outer
    iteration but with exact inner solves.
    """
    lu = np.linalg.inv(A)
    n = A.shape[0]
    phi = np.ones(n)
    k = 1.0
    prod_old = B @ phi
    norm_old = prod_old.sum()
    if norm_old == 0:
        raise ValueError("no fission production; eigenproblem is singular")
    history = [k]
    for _ in range(iters):
        phi = lu @ (prod_old / k)
        prod = B @ phi
        norm = prod.sum()
        k_new = k * norm / norm_old
        phi /= norm
        prod_old = B @ phi
        norm_old = prod_old.sum()
        if abs(k_new - k) < tol * abs(k_new):
            k = k_new
            history.append(k)
            break
        k = k_new
        history.append(k)
    return k, phi, history
