"""Multigroup cross sections: per-material sets, CSV i/o and cell fields.

The total removal cross section per group is absorption plus out-scatter,
``sigma_t[g] = sigma_a[g] + sum_{g' != g} sigma_s[g -> g']``.  Within-group
scattering cancels identically between removal and in-scatter and is
therefore inert in this formulation; a nonzero ``sigma_s[g, g]`` entry in a
data file is accepted and ignored by the physics.
"""

import csv
from dataclasses import dataclass

import numpy as np


class CrossSectionDataError(ValueError):
    """Raised when a cross-section file is malformed or incomplete."""


@dataclass(frozen=True)
class CrossSections:
    """One material: absorption, scatter matrix, fission data per group."""

    name: str
    sigma_a: np.ndarray      # (ng,) 1/cm
    sigma_s: np.ndarray      # (ng, ng) 1/cm, [from, to]
    nu_sigma_f: np.ndarray   # (ng,) 1/cm
    sigma_f: np.ndarray      # (ng,) 1/cm
    chi: np.ndarray          # (ng,) fission spectrum

    def __post_init__(self):
        ng = self.sigma_a.shape[0]
        if self.sigma_s.shape != (ng, ng):
            raise CrossSectionDataError(
                f"{self.name}: scatter matrix shape {self.sigma_s.shape} "
                f"does not match {ng} groups")
        for label in ("sigma_a", "sigma_s", "nu_sigma_f", "sigma_f", "chi"):
            if np.any(getattr(self, label) < 0):
                raise CrossSectionDataError(f"{self.name}: negative {label}")
        if self.nu_sigma_f.any() and abs(self.chi.sum() - 1.0) > 1e-10:
            raise CrossSectionDataError(
                f"{self.name}: chi sums to {self.chi.sum()}, expected 1")
        for arr in (self.sigma_a, self.sigma_s, self.nu_sigma_f,
                    self.sigma_f, self.chi):
            arr.setflags(write=False)

    @property
    def n_groups(self):
        return self.sigma_a.shape[0]

    @property
    def sigma_t(self):
        """Total removal per group: absorption plus out-scatter."""
        out_scatter = self.sigma_s.sum(axis=1) - np.diag(self.sigma_s)
        return self.sigma_a + out_scatter

    @property
    def fissile(self):
        return bool(self.nu_sigma_f.any())


def void_material(name, n_groups):
    z = np.zeros(n_groups)
    return CrossSections(name, z, np.zeros((n_groups, n_groups)),
                         z.copy(), z.copy(), z.copy())


class CrossSectionLibrary:
    """Named material sets sharing one group structure."""

    def __init__(self, materials, n_groups):
        self.n_groups = n_groups
        self.materials = {}
        for m in materials:
            if m.n_groups != n_groups:
                raise CrossSectionDataError(
                    f"{m.name}: has {m.n_groups} groups, library has {n_groups}")
            self.materials[m.name] = m

    def __getitem__(self, name):
        try:
            return self.materials[name]
        except KeyError:
            raise CrossSectionDataError(
                f"material {name!r} missing from cross-section data "
                f"(available: {sorted(self.materials)})") from None

    def __contains__(self, name):
        return name in self.materials

    @classmethod
    def from_csv(cls, path):
        """Load a flat CSV library.

        Two record kinds, distinguished by the first column:

            xs,<material>,<group>,<sigma_a>,<nu_sigma_f>,<sigma_f>,<chi>
            scatter,<material>,<from_group>,<to_group>,<sigma_s>

        Groups are numbered from 1.  Comment lines start with '#'.
        """
        xs_rows = {}
        scatter_rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#") or not row[0].strip():
                    continue
                kind = row[0].strip().lower()
                if kind == "xs":
                    name, g = row[1].strip(), int(row[2])
                    xs_rows.setdefault(name, {})[g] = [float(v) for v in row[3:7]]
                elif kind == "scatter":
                    scatter_rows.append((row[1].strip(), int(row[2]), int(row[3]),
                                         float(row[4])))
                else:
                    raise CrossSectionDataError(
                        f"{path}: unknown record kind {row[0]!r}")
        if not xs_rows:
            raise CrossSectionDataError(f"{path}: no xs records found")
        n_groups = max(max(groups) for groups in xs_rows.values())

        materials = []
        for name, groups in xs_rows.items():
            if sorted(groups) != list(range(1, n_groups + 1)):
                raise CrossSectionDataError(
                    f"{path}: material {name!r} does not cover groups "
                    f"1..{n_groups}")
            sigma_a = np.zeros(n_groups)
            nu_sigma_f = np.zeros(n_groups)
            sigma_f = np.zeros(n_groups)
            chi = np.zeros(n_groups)
            for g, (sa, nsf, sf, ch) in groups.items():
                sigma_a[g - 1] = sa
                nu_sigma_f[g - 1] = nsf
                sigma_f[g - 1] = sf
                chi[g - 1] = ch
            sigma_s = np.zeros((n_groups, n_groups))
            for sname, gf, gt, val in scatter_rows:
                if sname == name:
                    sigma_s[gf - 1, gt - 1] = val
            materials.append(CrossSections(name, sigma_a, sigma_s,
                                           nu_sigma_f, sigma_f, chi))
        return cls(materials, n_groups)

    def to_csv(self, stream):
        stream.write("# record,material,group,sigma_a,nu_sigma_f,sigma_f,chi\n")
        for m in self.materials.values():
            for g in range(m.n_groups):
                stream.write(f"xs,{m.name},{g + 1},{m.sigma_a[g]:g},"
                             f"{m.nu_sigma_f[g]:g},{m.sigma_f[g]:g},{m.chi[g]:g}\n")
        stream.write("# record,material,from_group,to_group,sigma_s\n")
        for m in self.materials.values():
            for gf in range(m.n_groups):
                for gt in range(m.n_groups):
                    if m.sigma_s[gf, gt] != 0.0:
                        stream.write(f"scatter,{m.name},{gf + 1},{gt + 1},"
                                     f"{m.sigma_s[gf, gt]:g}\n")


@dataclass
class MaterialField:
    """Per-cell cross sections and fixed source on one grid."""

    sigma_t: np.ndarray      # (nx, ny, ng)
    sigma_s: np.ndarray      # (nx, ny, ng, ng) [from, to]
    nu_sigma_f: np.ndarray   # (nx, ny, ng)
    sigma_f: np.ndarray      # (nx, ny, ng)
    chi: np.ndarray          # (nx, ny, ng)
    source: np.ndarray       # (nx, ny, ng) n/cm^2/s

    @property
    def n_groups(self):
        return self.sigma_t.shape[2]

    @property
    def fissile(self):
        return bool(self.nu_sigma_f.any())

    @classmethod
    def from_region_map(cls, region_map, materials, source=None):
        """Expand a cell -> material-id map into dense per-cell arrays.

        ``materials`` is a sequence of CrossSections indexed by the ids in
        ``region_map``; ``source`` is an optional (nx, ny, ng) fixed source.
        """
        region_map = np.asarray(region_map)
        nx, ny = region_map.shape
        ng = materials[0].n_groups
        ids = np.unique(region_map)
        if ids.min() < 0 or ids.max() >= len(materials):
            raise ValueError("region map references an undefined material id")

        sigma_t = np.zeros((nx, ny, ng))
        sigma_s = np.zeros((nx, ny, ng, ng))
        nu_sigma_f = np.zeros((nx, ny, ng))
        sigma_f = np.zeros((nx, ny, ng))
        chi = np.zeros((nx, ny, ng))
        for mid, mat in enumerate(materials):
            mask = region_map == mid
            if not mask.any():
                continue
            sigma_t[mask] = mat.sigma_t
            sigma_s[mask] = mat.sigma_s
            nu_sigma_f[mask] = mat.nu_sigma_f
            sigma_f[mask] = mat.sigma_f
            chi[mask] = mat.chi
        if source is None:
            source = np.zeros((nx, ny, ng))
        return cls(sigma_t, sigma_s, nu_sigma_f, sigma_f, chi, source)
