"""
Matrix-free conjugate-gradient solves for the SPD Neumann operators
(a I - b Lap).  A DCT-II preconditioner supplies the exact inverse of the
constant-coefficient stencil, so CG certifies the residual in a couple of
iterations while staying matrix-free.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn
from scipy.sparse.linalg import LinearOperator, cg

from .grid import Grid, laplacian_eigenvalues, laplacian_neumann


class SolverError(RuntimeError):
    """Raised when an inner linear solve or a time step cannot be completed."""


class SpdNeumannSolver:
    """CG solver for (mass_coef * I - diff_coef * Lap) with zero-flux boundary.

    For mass_coef == 0 the operator is singular along constants; the solve is
    then performed on the mean-zero complement (the right side is projected
    and the returned solution has zero mean).
    """

    def __init__(self, grid: Grid, mass_coef: float, diff_coef: float):
        if diff_coef < 0 or mass_coef < 0 or (mass_coef == 0 and diff_coef == 0):
            raise ValueError("need mass_coef, diff_coef >= 0 and not both zero")
        self.grid = grid
        self.mass_coef = float(mass_coef)
        self.diff_coef = float(diff_coef)
        self.singular = mass_coef == 0.0
        diag = mass_coef + diff_coef * laplacian_eigenvalues(grid)
        if self.singular:
            diag = diag.copy()
            diag[0] = 1.0       # constant mode is projected out, value unused
        self._diag = diag
        self._shape = (grid.n,) * grid.dim

    def _matvec(self, v: np.ndarray) -> np.ndarray:
        return self.mass_coef * v - self.diff_coef * laplacian_neumann(self.grid, v)

    def _precond(self, v: np.ndarray) -> np.ndarray:
        coef = dctn(v.reshape(self._shape), type=2, norm="ortho").ravel()
        coef /= self._diag
        if self.singular:
            coef[0] = 0.0
        return idctn(coef.reshape(self._shape), type=2, norm="ortho").ravel()

    def solve(self, b: np.ndarray, x0: np.ndarray | None = None,
              tol: float = 1e-10, max_iter: int = 500) -> np.ndarray:
        n = self.grid.num_nodes
        if self.singular:
            b = b - np.mean(b)
            if x0 is not None:
                x0 = x0 - np.mean(x0)
        a_op = LinearOperator((n, n), matvec=self._matvec, dtype=float)
        m_op = LinearOperator((n, n), matvec=self._precond, dtype=float)
        x, info = cg(a_op, b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, M=m_op)
        if info != 0:
            resid = np.linalg.norm(b - self._matvec(x))
            raise SolverError(
                f"CG did not converge within {max_iter} iterations "
                f"(residual {resid:.3e}, rtol {tol:.1e})"
            )
        if self.singular:
            x = x - np.mean(x)
        return x
