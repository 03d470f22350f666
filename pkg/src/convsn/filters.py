"""Stencil filters: ConvFEM advection/stiffness/mass, upwind and restriction.

The ConvFEM filters come from 1D Lagrange finite elements of order p on a
uniform mesh.  An infinite uniform mesh has exactly p distinct interior
nodal equations (the shared vertex row plus the p-1 element-interior rows);
assembling those rows, averaging them with uniform weight and dividing by
the mean nodal mass gives one 1D stencil that applies at every node.  The
2D filters are tensor products of the 1D mass / gradient / stiffness
stencils, so every 2D filter here is rank one and can be applied as two 1D
passes.

Conventions:

* A stencil array ``w`` is indexed ``w[l + di, l + dj]`` where ``di`` is the
  x offset and ``dj`` the y offset of the tap (matching field storage
  ``psi[ix, iy, ...]``).  ``to_display`` / ``from_display`` convert to the
  conventional printed layout (rows top-to-bottom = +y to -y).
* ``w_x``/``w_y`` discretise d/dx and d/dy, ``w_diffxx``/``w_diffyy`` the
  negated second derivatives (applying ``w_diffxx`` to x**2 yields -2), and
  ``w_m`` is the consistent mass scaled to unit sum.  The lumped mass is
  the scalar ``w_ml = dx*dy``.
"""

from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (1, 2, 3, 5)
ORDER_NAMES = {"linear": 1, "quadratic": 2, "cubic": 3, "quintic": 5}

#: 2x2 filter of ones used by the multigrid restriction stage.
RESTRICTION_FILTER = np.ones((2, 2))
RESTRICTION_FILTER.setflags(write=False)


def _lagrange_values_and_derivs(nodes, x):
    """Values and first derivatives of all Lagrange bases at points x."""
    n = len(nodes)
    x = np.asarray(x, dtype=float)
    vals = np.ones((n, x.size))
    ders = np.zeros((n, x.size))
    for k in range(n):
        for m in range(n):
            if m == k:
                continue
            vals[k] *= (x - nodes[m]) / (nodes[k] - nodes[m])
        for m in range(n):
            if m == k:
                continue
            term = np.ones_like(x) / (nodes[k] - nodes[m])
            for j in range(n):
                if j in (k, m):
                    continue
                term *= (x - nodes[j]) / (nodes[k] - nodes[j])
            ders[k] += term
    return vals, ders


def element_matrices(p):
    """Mass, gradient and stiffness element matrices for order p.

    Element nodes sit at 0..p with unit spacing; integrals are exact
    (Gauss-Legendre with p+2 points covers degree 2p integrands).
    """
    nodes = np.arange(p + 1, dtype=float)
    gx, gw = np.polynomial.legendre.leggauss(p + 2)
    x = 0.5 * p * (gx + 1.0)
    w = 0.5 * p * gw
    vals, ders = _lagrange_values_and_derivs(nodes, x)
    mass = np.einsum("iq,jq,q->ij", vals, vals, w)
    grad = np.einsum("iq,jq,q->ij", vals, ders, w)
    stiff = np.einsum("iq,jq,q->ij", ders, ders, w)
    return mass, grad, stiff


def _assembled_rows(p, elem):
    """The p distinct interior nodal equation rows, offsets -p..p.

    Row 0 is the vertex node shared by two elements; rows 1..p-1 are the
    element-interior nodes.
    """
    rows = np.zeros((p, 2 * p + 1))
    rows[0, 0:p + 1] += elem[p, :]
    rows[0, p:2 * p + 1] += elem[0, :]
    for m in range(1, p):
        rows[m, p - m:2 * p - m + 1] = elem[m, :]
    return rows


def averaged_stencils_1d(p):
    """Unit-spacing 1D (mass, gradient, stiffness) stencils for order p.

    Each is the uniform average of the p interior nodal equations divided
    by the mean nodal mass, so the mass stencil sums to 1, the gradient
    stencil recovers d/dx exactly on polynomials of degree <= p and the
    stiffness stencil recovers -d2/dx2 likewise.
    """
    if p < 1:
        raise ValueError("element order must be >= 1")
    em, ec, ek = element_matrices(p)
    mass_rows = _assembled_rows(p, em)
    mean_mass = mass_rows.sum() / p
    mass = mass_rows.mean(axis=0) / mean_mass
    grad = _assembled_rows(p, ec).mean(axis=0) / mean_mass
    stiff = _assembled_rows(p, ek).mean(axis=0) / mean_mass
    return mass, grad, stiff


@dataclass(frozen=True)
class FilterSet:
    """All ConvFEM filters for one polynomial order and grid spacing."""

    order: int
    half_width: int
    dx: float
    dy: float
    mass1: np.ndarray    # unit-spacing 1D factors
    grad1: np.ndarray
    stiff1: np.ndarray
    w_x: np.ndarray      # units 1/length
    w_y: np.ndarray
    w_diffxx: np.ndarray  # units 1/length**2
    w_diffyy: np.ndarray
    w_m: np.ndarray      # dimensionless, unit sum

    def __post_init__(self):
        for name in ("mass1", "grad1", "stiff1", "w_x", "w_y",
                     "w_diffxx", "w_diffyy", "w_m"):
            getattr(self, name).setflags(write=False)

    @property
    def w_ml(self):
        """Lumped mass scalar (the 1x1 filter)."""
        return self.dx * self.dy

    @property
    def w_r(self):
        return RESTRICTION_FILTER


def build_convfem_filters(order, dx, dy):
    """Build the order-p ConvFEM filter set for spacings dx, dy.

    Supported orders are 1, 2, 3 and 5 (half widths 1, 2, 3, 5).
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported filter order {order!r}; "
                         f"expected one of {SUPPORTED_ORDERS}")
    if dx <= 0 or dy <= 0:
        raise ValueError("grid spacings must be positive")
    mass1, grad1, stiff1 = averaged_stencils_1d(order)
    return FilterSet(
        order=order,
        half_width=order,
        dx=float(dx),
        dy=float(dy),
        mass1=mass1,
        grad1=grad1,
        stiff1=stiff1,
        w_x=np.outer(grad1, mass1) / dx,
        w_y=np.outer(mass1, grad1) / dy,
        w_diffxx=np.outer(stiff1, mass1) / dx**2,
        w_diffyy=np.outer(mass1, stiff1) / dy**2,
        w_m=np.outer(mass1, mass1),
    )


def mixed_mass_filter(fs):
    """The dimensionless operator (lumped mass)**-1 (consistent mass) - I.

    With ``w_m`` already normalised to unit sum the lumped mass cancels and
    the filter is simply ``w_m`` minus 1 at the centre tap.  Applied to any
    field that is constant or linear across the stencil it returns zero.
    """
    w = np.array(fs.w_m)
    l = fs.half_width
    w[l, l] -= 1.0
    return w


@dataclass(frozen=True)
class UpwindFilterSet:
    """First-order upwind difference stencils, selected by direction signs."""

    dx: float
    dy: float

    def x_stencil(self, mu_positive):
        """3x3 stencil for the x upwind difference for the given sign of mu."""
        w = np.zeros((3, 3))
        if mu_positive:
            w[0, 1] = -1.0 / self.dx   # west tap
            w[1, 1] = 1.0 / self.dx
        else:
            w[2, 1] = 1.0 / self.dx    # east tap
            w[1, 1] = -1.0 / self.dx
        return w

    def y_stencil(self, nu_positive):
        w = np.zeros((3, 3))
        if nu_positive:
            w[1, 0] = -1.0 / self.dy   # south tap
            w[1, 1] = 1.0 / self.dy
        else:
            w[1, 2] = 1.0 / self.dy    # north tap
            w[1, 1] = -1.0 / self.dy
        return w


def build_upwind_filters(dx, dy):
    if dx <= 0 or dy <= 0:
        raise ValueError("grid spacings must be positive")
    return UpwindFilterSet(dx=float(dx), dy=float(dy))


def to_display(w):
    """Stencil array -> printed table (rows +y..-y top to bottom)."""
    return np.asarray(w).T[::-1]


def from_display(rows):
    """Printed table -> stencil array indexed [l+di, l+dj]."""
    return np.asarray(rows, dtype=float)[::-1].T.copy()


def filters_to_csv(fs, stream):
    """Dump every filter as a CSV block in printed-table layout."""
    stream.write("order,name,l,dx,dy\n")
    stream.write(f"{fs.order},header,{fs.half_width},{fs.dx},{fs.dy}\n")
    named = [("w_x", fs.w_x), ("w_y", fs.w_y), ("w_diffxx", fs.w_diffxx),
             ("w_diffyy", fs.w_diffyy), ("w_m", fs.w_m),
             ("w_ml", np.array([[fs.w_ml]])), ("w_r", fs.w_r)]
    for name, w in named:
        stream.write(f"# {name}\n")
        for row in to_display(w):
            stream.write(",".join(f"{v:.12g}" for v in row) + "\n")
