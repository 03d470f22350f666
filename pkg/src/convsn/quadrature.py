"""Discrete-ordinates quadrature built from an octahedron on the unit sphere.

Eight octant faces each carry a regular ``n_a x n_a`` grid (the grid row
next to the pole vertex collapses onto it) and every grid cell is projected
radially onto the sphere.  One cell is one ordinate: the weight is the
spherical patch area and the direction is the patch mean of the unit
position vector, so directions sit strictly inside the unit ball.

Because a straight segment projects radially onto a great-circle arc, both
the patch area and the patch moment of the position vector have closed
forms (triangle solid angles and the boundary-arc formula below); no
numerical surface quadrature is needed.  The brute-force subdivision check
lives in the test suite.

Storage order is face major, then row major within the face (rows run from
the equator edge towards the pole vertex).  This layout lets the angle
coarsening merge 2x2 patch blocks with plain reshapes.
"""

from dataclasses import dataclass

import numpy as np

FOUR_PI = 4.0 * np.pi
N_FACES = 8

# one (sx, sy, sz) sign triple per octant face
OCTANT_SIGNS = (
    (1, 1, 1), (-1, 1, 1), (-1, -1, 1), (1, -1, 1),
    (1, 1, -1), (-1, 1, -1), (-1, -1, -1), (1, -1, -1),
)


@dataclass(frozen=True)
class AngularQuadrature:
    """Ordinate set: mean directions, patch weights and face membership."""

    n_a: int
    directions: np.ndarray   # (n_dir, 3) components (mu, nu, xi)
    weights: np.ndarray      # (n_dir,) patch areas, sum 4*pi
    face_index: np.ndarray   # (n_dir,) owning face, 0..7

    def __post_init__(self):
        for arr in (self.directions, self.weights, self.face_index):
            arr.setflags(write=False)

    @property
    def n_faces(self):
        return N_FACES

    @property
    def n_dir(self):
        return self.weights.shape[0]

    @property
    def mu(self):
        return self.directions[:, 0]

    @property
    def nu(self):
        return self.directions[:, 1]

    @property
    def xi(self):
        return self.directions[:, 2]


def _tri_solid_angle(a, b, c):
    """Solid angle of the spherical triangle with unit-vector corners."""
    num = abs(np.dot(a, np.cross(b, c)))
    den = 1.0 + np.dot(a, b) + np.dot(b, c) + np.dot(c, a)
    return 2.0 * np.arctan2(num, den)


def _patch_area_and_moment(corners):
    """Area and integral of the unit vector over a radially projected polygon.

    ``corners`` are planar polygon vertices in cyclic order; consecutive
    duplicates (the collapsed pole edge) are tolerated.  The moment uses
    the boundary form: integral of r over the patch equals half the sum of
    arc-angle times great-circle axis over the boundary arcs.
    """
    pts = [np.asarray(p, dtype=float) for p in corners]
    pts = [p / np.linalg.norm(p) for p in pts]
    uniq = []
    for p in pts:
        if not uniq or np.linalg.norm(p - uniq[-1]) > 1e-14:
            uniq.append(p)
    if len(uniq) > 1 and np.linalg.norm(uniq[0] - uniq[-1]) < 1e-14:
        uniq.pop()
    if len(uniq) < 3:
        raise ValueError("degenerate patch with no area")

    area = 0.0
    for i in range(1, len(uniq) - 1):
        area += _tri_solid_angle(uniq[0], uniq[i], uniq[i + 1])

    moment = np.zeros(3)
    for i, a in enumerate(uniq):
        b = uniq[(i + 1) % len(uniq)]
        cr = np.cross(a, b)
        s = np.linalg.norm(cr)
        if s < 1e-15:
            continue
        moment += np.arctan2(s, np.dot(a, b)) * (cr / s)
    moment *= 0.5
    if np.dot(moment, np.mean(uniq, axis=0)) < 0.0:
        moment = -moment
    return area, moment


def build_quadrature(n_a):
    """Build the octahedron ordinate set with ``n_a x n_a`` patches per face.

    ``n_a`` must be a power of two so the set supports repeated 2x2 angle
    coarsening.  Returns ``8 * n_a**2`` directions with weights rescaled to
    sum to exactly 4*pi.
    """
    if not isinstance(n_a, (int, np.integer)) or n_a < 1 or (n_a & (n_a - 1)) != 0:
        raise ValueError(f"n_a must be a positive power of 2, got {n_a!r}")
    n_a = int(n_a)

    directions = np.empty((N_FACES * n_a * n_a, 3))
    weights = np.empty(N_FACES * n_a * n_a)
    face_index = np.repeat(np.arange(N_FACES), n_a * n_a)

    pos = 0
    for sx, sy, sz in OCTANT_SIGNS:
        va = np.array([sx, 0.0, 0.0])
        vb = np.array([0.0, sy, 0.0])
        vp = np.array([0.0, 0.0, sz])

        def face_point(s, t):
            return (1.0 - t) * ((1.0 - s) * va + s * vb) + t * vp

        for row in range(n_a):          # towards the pole vertex
            t0, t1 = row / n_a, (row + 1) / n_a
            for col in range(n_a):      # along the equator edge
                s0, s1 = col / n_a, (col + 1) / n_a
                corners = (
                    face_point(s0, t0), face_point(s1, t0),
                    face_point(s1, t1), face_point(s0, t1),
                )
                area, moment = _patch_area_and_moment(corners)
                weights[pos] = area
                directions[pos] = moment / area
                pos += 1

    weights *= FOUR_PI / weights.sum()
    return AngularQuadrature(n_a=n_a, directions=directions, weights=weights,
                             face_index=face_index)


def coarsen_quadrature(quad):
    """Merge 2x2 patch blocks on every face into one coarse ordinate each.

    The coarse weight is the sum of the four child weights and the coarse
    direction is their weight average, so total weight (4*pi) and per-face
    sign uniformity are preserved at every level.
    """
    if quad.n_a < 2:
        raise ValueError("cannot coarsen: already at one patch per face")
    na = quad.n_a
    nc = na // 2

    w = quad.weights.reshape(N_FACES, nc, 2, nc, 2)
    d = quad.directions.reshape(N_FACES, nc, 2, nc, 2, 3)
    wc = w.sum(axis=(2, 4))
    dc = (d * w[..., None]).sum(axis=(2, 4)) / wc[..., None]

    return AngularQuadrature(
        n_a=nc,
        directions=dc.reshape(-1, 3),
        weights=wc.reshape(-1),
        face_index=np.repeat(np.arange(N_FACES), nc * nc),
    )


def quadrature_to_csv(quad, stream):
    """Dump (mu, nu, xi, weight, face) rows for external cross-checking."""
    stream.write("mu,nu,xi,weight,face\n")
    for (mu, nu, xi), w, f in zip(quad.directions, quad.weights, quad.face_index):
        stream.write(f"{mu:.17g},{nu:.17g},{xi:.17g},{w:.17g},{int(f)}\n")
