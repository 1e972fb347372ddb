"""
Uniform vertex-centred grids on intervals and rectangles, with the discrete
calculus (Laplacians, gradients, quadrature) shared by the solvers.

2D arrays are indexed [y, x].
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from phaseforge.core.errors import DomainError


FACES_1D = ("left", "right")
FACES_2D = ("left", "right", "bottom", "top")


def _neumann_second_difference(n, dx):
    """Second-difference matrix on n+1 nodes with reflecting ends."""
    main = np.full(n + 1, -2.0)
    upper = np.ones(n)
    lower = np.ones(n)
    upper[0] = 2.0
    lower[-1] = 2.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr") / dx**2


def _trapezoid_weights(n, dx):
    w = np.full(n + 1, dx)
    w[0] = w[-1] = 0.5 * dx
    return w


@dataclass(frozen=True)
class Grid:
    """Vertex-centred grid: `cells` intervals per axis, `cells + 1` nodes."""
    dim: int
    extents: tuple
    cells: tuple

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f"Grid dimension must be 1 or 2, got {self.dim}")
        if len(self.extents) != self.dim or len(self.cells) != self.dim:
            raise DomainError("Grid extents and cells must have one entry per axis")
        for L in self.extents:
            if not L > 0:
                raise DomainError(f"Grid extent must be positive, got {L}")
        for n in self.cells:
            if int(n) < 8:
                raise DomainError(f"Grid needs at least 8 cells per axis, got {n}")

    @classmethod
    def interval(cls, length, cells):
        return cls(1, (float(length),), (int(cells),))

    @classmethod
    def rectangle(cls, lx, ly, nx, ny):
        return cls(2, (float(lx), float(ly)), (int(nx), int(ny)))

    # ---------------------------------------------------------------
    # Geometry
    # ---------------------------------------------------------------
    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.extents, self.cells))

    @property
    def min_spacing(self):
        return min(self.spacing)

    @property
    def shape(self):
        # array shape; reversed axes so 2D is [y, x]
        return tuple(n + 1 for n in reversed(self.cells))

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def faces(self):
        return FACES_1D if self.dim == 1 else FACES_2D

    def axis_coords(self, axis):
        return np.linspace(0.0, self.extents[axis], self.cells[axis] + 1)

    @cached_property
    def coords(self):
        """Node coordinates, one array of `shape` per axis (x first)."""
        if self.dim == 1:
            return (self.axis_coords(0),)
        X, Y = np.meshgrid(self.axis_coords(0), self.axis_coords(1))
        return (X, Y)

    @property
    def measure(self):
        return float(np.prod(self.extents))

    def face_measure(self, face):
        if self.dim == 1:
            return 1.0
        return self.extents[1] if face in ("left", "right") else self.extents[0]

    # ---------------------------------------------------------------
    # Quadrature
    # ---------------------------------------------------------------
    @cached_property
    def weights(self):
        w = [_trapezoid_weights(n, h) for n, h in zip(self.cells, self.spacing)]
        if self.dim == 1:
            return w[0]
        return np.outer(w[1], w[0])

    def integrate(self, values):
        return float(np.sum(self.weights * values))

    def norm_sq(self, values):
        return self.integrate(np.asarray(values) ** 2)

    def gradient_sq_integral(self, u):
        """Discrete integral of |grad u|^2 from edge differences."""
        u = np.asarray(u, dtype=float)
        if self.dim == 1:
            dx = self.spacing[0]
            return float(np.sum(np.diff(u) ** 2) / dx)
        dx, dy = self.spacing
        wx = _trapezoid_weights(self.cells[0], dx)
        wy = _trapezoid_weights(self.cells[1], dy)
        gx = np.sum(wy[:, None] * np.diff(u, axis=1) ** 2) / dx
        gy = np.sum(wx[None, :] * np.diff(u, axis=0) ** 2) / dy
        return float(gx + gy)

    def gradient(self, u):
        """Centred nodal gradient, one-sided at the boundary."""
        u = np.asarray(u, dtype=float)
        if self.dim == 1:
            return (np.gradient(u, self.spacing[0]),)
        gy, gx = np.gradient(u, self.spacing[1], self.spacing[0])
        return (gx, gy)

    # ---------------------------------------------------------------
    # Operators
    # ---------------------------------------------------------------
    @cached_property
    def neumann_laplacian(self):
        """Laplacian with homogeneous Neumann reflection on every face (flattened)."""
        mats = [_neumann_second_difference(n, h) for n, h in zip(self.cells, self.spacing)]
        if self.dim == 1:
            return mats[0].tocsc()
        Lx, Ly = mats
        Ix = sp.identity(self.cells[0] + 1, format="csr")
        Iy = sp.identity(self.cells[1] + 1, format="csr")
        return (sp.kron(Iy, Lx) + sp.kron(Ly, Ix)).tocsc()

    def laplacian(self, u):
        u = np.asarray(u, dtype=float)
        return (self.neumann_laplacian @ u.ravel()).reshape(self.shape)

    def face_mask(self, face):
        mask = np.zeros(self.shape, dtype=bool)
        if self.dim == 1:
            mask[0 if face == "left" else -1] = True
            return mask
        if face == "left":
            mask[:, 0] = True
        elif face == "right":
            mask[:, -1] = True
        elif face == "bottom":
            mask[0, :] = True
        elif face == "top":
            mask[-1, :] = True
        else:
            raise DomainError(f"Unknown face '{face}'")
        return mask

    def face_spacing(self, face):
        if face in ("left", "right"):
            return self.spacing[0]
        return self.spacing[1]

    def refine(self, factor=2):
        return Grid(self.dim, self.extents, tuple(int(n * factor) for n in self.cells))


@dataclass
class FieldState:
    """Order parameter and temperature on a grid at one instant."""
    phi: np.ndarray
    T: np.ndarray
    grid: Grid
    time: float = 0.0

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float).reshape(self.grid.shape)
        self.T = np.asarray(self.T, dtype=float).reshape(self.grid.shape)
        if not (np.all(np.isfinite(self.phi)) and np.all(np.isfinite(self.T))):
            raise DomainError("FieldState contains non-finite values")

    def copy(self):
        return FieldState(self.phi.copy(), self.T.copy(), self.grid, self.time)
