"""
Cell-centered uniform grids on a box with zero-flux (Neumann) boundary.

Fields are plain 1D numpy arrays of length ``grid.num_nodes`` (row-major
flattening in 2D).  All operators here are conservative by construction:
the Laplacian and the mobility-weighted flux divergence are assembled from
face fluxes that vanish on the boundary, so their weighted sums telescope
to zero up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on [0, length]^dim with dim in {1, 2}.

    Node coordinates are cell centers, x_i = (i + 1/2) h, so the quadrature
    weight per node is h^dim and the midpoint rule is exact for linears.
    """

    dim: int
    n: int
    length: float
    h: float

    @property
    def num_nodes(self) -> int:
        return self.n ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def domain_volume(self) -> float:
        return self.length ** self.dim

    def axis_coords(self) -> np.ndarray:
        """Cell-center coordinates along one axis (all axes are identical)."""
        return (np.arange(self.n) + 0.5) * self.h

    def coords(self) -> np.ndarray:
        """(num_nodes, dim) array of node coordinates, row-major ordering."""
        x = self.axis_coords()
        if self.dim == 1:
            return x[:, None]
        x0, x1 = np.meshgrid(x, x, indexing="ij")
        return np.column_stack([x0.ravel(), x1.ravel()])

    def reshape(self, f: np.ndarray) -> np.ndarray:
        """View a flat field as (n,) in 1D or (n, n) in 2D."""
        if self.dim == 1:
            return f.reshape(self.n)
        return f.reshape(self.n, self.n)


def build_grid(dim: int, n: int, length: float) -> Grid:
    """Construct a grid, rejecting unsupported dimensions and coarse meshes."""
    if dim not in (1, 2):
        raise ValueError(f"unsupported dimension: {dim} (must be 1 or 2)")
    if n < 8:
        raise ValueError(f"n must be >= 8 per axis, got {n}")
    if not np.isfinite(length) or length <= 0:
        raise ValueError(f"length must be positive and finite, got {length}")
    return Grid(dim=int(dim), n=int(n), length=float(length), h=float(length) / int(n))


def check_field(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Validate a nodal field: right length, all entries finite."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.num_nodes,):
        raise ValueError(f"field has shape {f.shape}, expected ({grid.num_nodes},)")
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite entries")
    return f


# -- quadrature and norms -----------------------------------------------------

def integrate(grid: Grid, f: np.ndarray) -> float:
    """Midpoint-rule integral h^dim * sum(f)."""
    return grid.cell_volume * float(np.sum(f))


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """Discrete L2 inner product."""
    return grid.cell_volume * float(np.dot(f, g))


def l2_norm(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(grid.cell_volume) * np.linalg.norm(f))


def h1_seminorm(grid: Grid, f: np.ndarray) -> float:
    """Discrete H1 seminorm from face-centered differences.

    Consistent with the conservative operators below: for any field,
    inner(-laplacian_neumann(f), f) == h1_seminorm(f)**2 exactly
    (summation by parts with zero boundary flux).
    """
    v = grid.reshape(f)
    total = 0.0
    for axis in range(grid.dim):
        d = np.diff(v, axis=axis) / grid.h
        total += float(np.sum(d * d))
    return float(np.sqrt(grid.cell_volume * total))


# -- conservative operators ---------------------------------------------------

def laplacian_neumann(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Second-order centered Laplacian with mirrored ghost values.

    The ghost value equals the boundary cell value, which makes the normal
    derivative vanish at the domain faces and the weighted sum of the output
    telescope to zero.
    """
    v = grid.reshape(f)
    out = np.zeros_like(v)
    for axis in range(grid.dim):
        p = np.pad(v, [(1, 1) if a == axis else (0, 0) for a in range(grid.dim)], mode="edge")
        sl = [slice(None)] * grid.dim
        sl_lo, sl_mid, sl_hi = list(sl), list(sl), list(sl)
        sl_lo[axis] = slice(0, -2)
        sl_mid[axis] = slice(1, -1)
        sl_hi[axis] = slice(2, None)
        out += (p[tuple(sl_lo)] - 2.0 * p[tuple(sl_mid)] + p[tuple(sl_hi)]) / grid.h**2
    return out.ravel()


def div_flux(grid: Grid, a: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Conservative divergence of a coefficient-weighted gradient.

    Returns div(a grad p) in flux form: the flux on the face between nodes
    i and j is mean(a_i, a_j) * (p_j - p_i) / h, and boundary faces carry
    zero flux.  Arithmetic face averaging keeps the face coefficient zero
    whenever both neighbors have a == 0 and makes the operator linear in a
    (the tangent flow relies on that linearity).
    """
    va = grid.reshape(a)
    vp = grid.reshape(p)
    out = np.zeros_like(vp)
    for axis in range(grid.dim):
        a_face = 0.5 * (np.take(va, range(1, grid.n), axis=axis)
                        + np.take(va, range(0, grid.n - 1), axis=axis))
        dp = np.diff(vp, axis=axis) / grid.h
        flux = a_face * dp
        pad = [(1, 1) if ax == axis else (0, 0) for ax in range(grid.dim)]
        flux = np.pad(flux, pad, mode="constant")          # zero boundary fluxes
        out += np.diff(flux, axis=axis) / grid.h
    return out.ravel()


def div_mu_grad(grid: Grid, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """div(mu(u) grad w) with the degenerate mobility mu(s) = s(1-s) on [0,1]."""
    from .model import mobility

    return div_flux(grid, mobility(u), w)


def node_gradient(grid: Grid, f: np.ndarray) -> list[np.ndarray]:
    """Node-centered gradient components (central differences, one-sided at
    the boundary).  Used for operator-norm probing, not for the dynamics."""
    v = grid.reshape(f)
    return [np.gradient(v, grid.h, axis=axis).ravel() for axis in range(grid.dim)]


# -- spectral helpers (exact for the constant-coefficient Neumann stencil) ----

def laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of -laplacian_neumann on the DCT-II basis, as a flat array
    aligned with dctn coefficient ordering."""
    k = np.arange(grid.n)
    lam = (2.0 - 2.0 * np.cos(np.pi * k / grid.n)) / grid.h**2
    if grid.dim == 1:
        return lam
    return (lam[:, None] + lam[None, :]).ravel()


def neumann_mode(grid: Grid, modes: int | tuple[int, ...]) -> np.ndarray:
    """Discrete Neumann cosine mode, an exact eigenvector of the stencil.

    ``modes`` is an integer in 1D or a (k0, k1) pair in 2D; mode 0 is the
    constant.  Not normalized.
    """
    if isinstance(modes, int):
        modes = (modes,)
    if len(modes) != grid.dim:
        raise ValueError("one mode index per axis required")
    x = np.arange(grid.n) + 0.5
    axes = [np.cos(k * np.pi * x / grid.n) for k in modes]
    if grid.dim == 1:
        return axes[0].copy()
    return np.outer(axes[0], axes[1]).ravel()
