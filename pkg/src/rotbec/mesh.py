"""Uniform nested triangulations of the square [-R, R]^2."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MeshGrid:
    """Structured triangulation of the square [-half_width, half_width]^2.

    The square is divided into ``subdivisions x subdivisions`` cells of side
    ``mesh_size`` and every cell is split along its lower-left to upper-right
    diagonal, giving ``2 * subdivisions**2`` congruent triangles, all listed
    counterclockwise.  Nodes are numbered row-major in (x1, x2) with the x1
    index varying fastest, so sparsity patterns and dumps are reproducible.
    Instances are immutable and safe to share between workers.
    """

    half_width: float
    subdivisions: int
    node_coords: np.ndarray    # (n_nodes, 2) float
    triangles: np.ndarray      # (n_triangles, 3) int, counterclockwise
    boundary_flags: np.ndarray  # (n_nodes,) bool
    mesh_size: float

    @property
    def n_nodes(self):
        return self.node_coords.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]


def build_uniform_mesh(half_width, subdivisions):
    """Build the uniform triangulation of [-R, R]^2 with N_h cells per side.

    Parameters
    ----------
    half_width : float
        R > 0, half the side length of the square domain.
    subdivisions : int
        N_h >= 2, number of cells per side.  The mesh size is h = 2R / N_h.

    Returns
    -------
    MeshGrid
    """
    if half_width <= 0:
        raise ValueError("half_width must be positive, got %r" % (half_width,))
    n = int(subdivisions)
    if n != subdivisions or n < 2:
        raise ValueError(
            "subdivisions must be an integer >= 2 (got %r); smaller grids "
            "have no interior node" % (subdivisions,))

    h = (2.0 * half_width) / n
    side = np.linspace(-half_width, half_width, n + 1)
    xg, yg = np.meshgrid(side, side, indexing="xy")
    coords = np.column_stack([xg.ravel(), yg.ravel()])

    ix, iy = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="xy")
    on_boundary = (ix == 0) | (ix == n) | (iy == 0) | (iy == n)
    flags = on_boundary.ravel()

    # cell (ix, iy), corners a---b (bottom) and d---c (top); the diagonal
    # runs a -> c so both triangles are counterclockwise
    cx, cy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    a = (cy * (n + 1) + cx).ravel()
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = lower
    tris[1::2] = upper

    for arr in (coords, tris, flags):
        arr.setflags(write=False)
    return MeshGrid(half_width=half_width, subdivisions=n,
                    node_coords=coords, triangles=tris,
                    boundary_flags=flags, mesh_size=h)


def refine(mesh):
    """Return the nested refinement with doubled subdivisions (h -> h/2)."""
    return build_uniform_mesh(mesh.half_width, 2 * mesh.subdivisions)


def triangle_areas(mesh):
    """Signed areas of all triangles (positive for counterclockwise)."""
    p = mesh.node_coords[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def dump_mesh(mesh, path):
    """Write the mesh as plain text: node lines `x1 x2 flag`, then triangles."""
    with open(path, "w") as fh:
        for (x, y), flag in zip(mesh.node_coords, mesh.boundary_flags):
            fh.write("%.17g %.17g %d\n" % (x, y, int(flag)))
        for i, j, k in mesh.triangles:
            fh.write("%d %d %d\n" % (i, j, k))
