"""Benchmark problem definitions: the straight duct and the fuel assembly.

Straight duct: a 36 cm x 28 cm domain holding a 6 cm x 6 cm unit source at
the centre of a 6 cm wide void channel that runs the full width of the
domain; purely absorbing material everywhere else and vacuum on all sides.
Region boundaries are reconstructed from the published layout as closed
intervals about the domain centre (18, 14), so the material map is exactly
mirror symmetric in both axes at every supported resolution.  Cells are
assigned by their centre point.

Fuel assembly: a lattice of pins, each rasterised onto 8 x 8 cells of
pitch 0.1575 cm (pin pitch 1.26 cm).  Guide-tube positions hold either the
guide material or, with rods inserted, the control material.  Cross
sections come from a user-supplied CSV library; a synthetic two-group set
is bundled for desk-scale runs (the production 7-group library is external
data and not shipped).
"""

from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .materials import (CrossSectionLibrary, CrossSections, MaterialField,
                        void_material)

DUCT_SUPPORTED_DX = (0.8, 0.4, 0.2, 0.1, 0.05)

# standard 17x17 lattice guide-tube pattern (row, col), centre included
GUIDE_POSITIONS_17 = (
    (2, 5), (2, 8), (2, 11),
    (3, 3), (3, 13),
    (5, 2), (5, 5), (5, 8), (5, 11), (5, 14),
    (8, 2), (8, 5), (8, 8), (8, 11), (8, 14),
    (11, 2), (11, 5), (11, 8), (11, 11), (11, 14),
    (13, 3), (13, 13),
    (14, 5), (14, 8), (14, 11),
)
# reduced 4x4 desk-scale lattice: central 2x2 block of guide tubes
GUIDE_POSITIONS_4 = ((1, 1), (1, 2), (2, 1), (2, 2))


@dataclass
class ProblemSpec:
    """A transport problem on a uniform cell-centred grid."""

    name: str
    nx: int
    ny: int
    dx: float
    dy: float
    region_map: np.ndarray           # (nx, ny) material ids
    materials: list                  # CrossSections per id
    source: np.ndarray | None = None  # (nx, ny, ng) fixed source
    n_groups: int = 1
    boundary: str = "vacuum"         # both shipped problems are vacuum
    notes: str = ""

    def __post_init__(self):
        if self.boundary != "vacuum":
            raise ValueError(
                f"boundary {self.boundary!r} unsupported: only the bare "
                "surface (vacuum) condition is implemented")

    def material_field(self):
        return MaterialField.from_region_map(self.region_map, self.materials,
                                             self.source)


def build_straight_duct(dx):
    """Straight duct problem at one of the published resolutions."""
    if not any(abs(dx - v) < 1e-12 for v in DUCT_SUPPORTED_DX):
        raise ValueError(f"dx={dx} unsupported; pick one of {DUCT_SUPPORTED_DX}")
    width, height = 36.0, 28.0
    nx = round(width / dx)
    ny = round(height / dx)

    xc = (np.arange(nx) + 0.5) * dx
    yc = (np.arange(ny) + 0.5) * dx
    in_src_x = np.abs(xc - width / 2) <= 3.0 + 1e-12
    in_band_y = np.abs(yc - height / 2) <= 3.0 + 1e-12

    # 0 absorber, 1 source, 2 duct (void)
    region = np.zeros((nx, ny), dtype=int)
    region[:, in_band_y] = 2
    region[np.ix_(in_src_x, in_band_y)] = 1

    absorber = CrossSections("absorber", np.array([0.5]), np.zeros((1, 1)),
                             np.zeros(1), np.zeros(1), np.zeros(1))
    src_mat = CrossSections("source", np.array([0.5]), np.zeros((1, 1)),
                            np.zeros(1), np.zeros(1), np.zeros(1))
    duct = void_material("duct", 1)

    source = np.zeros((nx, ny, 1))
    source[region == 1] = 1.0
    return ProblemSpec(name="straight_duct", nx=nx, ny=ny, dx=dx, dy=dx,
                       region_map=region, materials=[absorber, src_mat, duct],
                       source=source, n_groups=1,
                       notes="region layout reconstructed from the published "
                             "figure; closed intervals about (18, 14) cm")


def synthetic_xs_path():
    """Path of the bundled synthetic two-group cross-section library."""
    return str(resources.files("convsn").joinpath("data/synthetic_2group.csv"))


def _pin_region(cells_per_pin, radius_cells):
    """Boolean fuel mask of one rasterised pin cell."""
    c = (np.arange(cells_per_pin) + 0.5) - cells_per_pin / 2
    xx, yy = np.meshgrid(c, c, indexing="ij")
    return xx**2 + yy**2 <= radius_cells**2


def build_fuel_assembly(rods_inserted, xs_file, n_pins=17, cells_per_pin=8,
                        cell_pitch=0.1575, pin_radius=0.4095):
    """Pin lattice eigenvalue problem with vacuum boundaries.

    ``xs_file`` must provide materials named ``fuel``, ``moderator``,
    ``guide`` and (with rods inserted) ``control``.  ``n_pins=17`` is the
    full assembly; ``n_pins=4`` gives the reduced desk-scale lattice.
    """
    lib = CrossSectionLibrary.from_csv(xs_file)
    fuel = lib["fuel"]
    moderator = lib["moderator"]
    inner = lib["control"] if rods_inserted else lib["guide"]
    materials = [moderator, fuel, inner]

    if n_pins == 17:
        guide_positions = set(GUIDE_POSITIONS_17)
    elif n_pins == 4:
        guide_positions = set(GUIDE_POSITIONS_4)
    else:
        raise ValueError(f"no guide-tube pattern defined for {n_pins} pins")

    n_cells = n_pins * cells_per_pin
    region = np.zeros((n_cells, n_cells), dtype=int)
    pin_mask = _pin_region(cells_per_pin, pin_radius / cell_pitch)
    for pi in range(n_pins):
        for pj in range(n_pins):
            mid = 2 if (pi, pj) in guide_positions else 1
            block = region[pi * cells_per_pin:(pi + 1) * cells_per_pin,
                           pj * cells_per_pin:(pj + 1) * cells_per_pin]
            block[pin_mask] = mid

    return ProblemSpec(
        name="fuel_assembly", nx=n_cells, ny=n_cells,
        dx=cell_pitch, dy=cell_pitch, region_map=region,
        materials=materials, source=None, n_groups=lib.n_groups,
        notes=f"{n_pins}x{n_pins} pins, rods "
              f"{'inserted' if rods_inserted else 'withdrawn'}")
