"""Result export: CSV field dumps, legacy VTK, profiles, metrics, manifest."""

import subprocess
from pathlib import Path

import numpy as np


def field_to_csv(phi, grid, stream, group=None):
    """Write (i, j, x, y, group, value) rows of a scalar-flux array."""
    stream.write("i,j,x,y,group,value\n")
    xc, yc = grid.x_centres, grid.y_centres
    groups = range(phi.shape[2]) if group is None else [group]
    for g in groups:
        for i in range(grid.nx):
            for j in range(grid.ny):
                stream.write(f"{i},{j},{xc[i]:.10g},{yc[j]:.10g},"
                             f"{g + 1},{phi[i, j, g]:.17g}\n")


def write_vtk_structured_points(phi, grid, path):
    """Legacy ASCII structured-points file with one scalar array per group."""
    nx, ny, ng = phi.shape
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write("convsn scalar flux\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nx} {ny} 1\n")
        fh.write(f"ORIGIN {0.5 * grid.dx:.10g} {0.5 * grid.dy:.10g} 0\n")
        fh.write(f"SPACING {grid.dx:.10g} {grid.dy:.10g} 1\n")
        fh.write(f"POINT_DATA {nx * ny}\n")
        for g in range(ng):
            fh.write(f"SCALARS flux_g{g + 1} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            # x varies fastest in the legacy format
            for j in range(ny):
                for i in range(nx):
                    fh.write(f"{phi[i, j, g]:.12g}\n")


def profile_at_x(phi, grid, x_value):
    """Column cut: (y centres, phi[nearest column to x_value]) per group."""
    i = int(np.argmin(np.abs(grid.x_centres - x_value)))
    return grid.x_centres[i], grid.y_centres, phi[i, :, :]


def profile_at_y(phi, grid, y_value):
    j = int(np.argmin(np.abs(grid.y_centres - y_value)))
    return grid.y_centres[j], grid.x_centres, phi[:, j, :]


def profile_to_csv(coord_name, coords, values, stream):
    ng = values.shape[1]
    header = ",".join(f"flux_g{g + 1}" for g in range(ng))
    stream.write(f"{coord_name},{header}\n")
    for c, row in zip(coords, values):
        stream.write(f"{c:.10g}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def metrics_to_csv(residual_history, stream):
    stream.write("cycle,level0_residual_l1\n")
    for i, r in enumerate(residual_history):
        stream.write(f"{i},{r:.17g}\n")


def keff_history_to_csv(history, stream):
    stream.write("iteration,k_eff\n")
    for i, k in enumerate(history):
        stream.write(f"{i},{k:.17g}\n")


def git_describe():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10,
                             cwd=Path(__file__).parent)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def write_manifest(path, params):
    """Flat key = value run manifest, including the source revision."""
    with open(path, "w") as fh:
        for key in sorted(params):
            fh.write(f"{key} = {params[key]}\n")
        fh.write(f"git_describe = {git_describe()}\n")
