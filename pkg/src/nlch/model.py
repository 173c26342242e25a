"""
Pointwise physics: degenerate mobility, logarithmic potential, reaction terms.

The mobility mu(s) = s(1-s) and the reaction g are extended constantly
outside [0,1] (mu by zero, g by its boundary values), matching the phase
bounds the dynamics preserve.  The reaction family carries its s-derivative
explicitly because the tangent flow needs it with uniform accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .grid import Grid, check_field


def mobility(s: np.ndarray | float) -> np.ndarray | float:
    """mu(s) = s(1-s) on [0,1], zero outside (degenerate at the pure phases)."""
    s = np.asarray(s, dtype=float)
    out = np.where((s >= 0.0) & (s <= 1.0), s * (1.0 - s), 0.0)
    return out if out.ndim else float(out)


def mobility_deriv(s: np.ndarray | float) -> np.ndarray | float:
    """mu'(s) = 1-2s on [0,1], zero outside (interior limit at the endpoints)."""
    s = np.asarray(s, dtype=float)
    out = np.where((s >= 0.0) & (s <= 1.0), 1.0 - 2.0 * s, 0.0)
    return out if out.ndim else float(out)


def potential(s: np.ndarray | float) -> np.ndarray | float:
    """f(s) = s log s + (1-s) log(1-s), extended continuously by f(0)=f(1)=0."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    out = xlogy(s, s) + xlogy(1.0 - s, 1.0 - s)
    return out if out.ndim else float(out)


def f_prime(s: np.ndarray | float, guard: float = 1e-12) -> np.ndarray | float:
    """f'(s) = log(s/(1-s)) evaluated at s clamped to [guard, 1-guard].

    Clamping is the contract: callers that need to detect the raw divergence
    check |result| >= log((1-guard)/guard).
    """
    if not (0.0 < guard <= 1e-6):
        raise ValueError(f"guard must be in (0, 1e-6], got {guard}")
    sc = np.clip(np.asarray(s, dtype=float), guard, 1.0 - guard)
    out = np.log(sc / (1.0 - sc))
    return out if out.ndim else float(out)


def chemical_potential(u: np.ndarray, op, guard: float = 1e-12) -> np.ndarray:
    """Diagnostic chemical potential v = f'(u) + K*(1-2u).

    Diagnostic only: near the pure phases the guard dominates f', mirroring
    the fact that the continuum potential is not well defined there.
    """
    u = check_field(op.grid, u)
    return f_prime(u, guard) + op.convolve(1.0 - 2.0 * u)


@dataclass(frozen=True, eq=False)
class ReactionSpec:
    """A reaction term g(x, s) with its s-derivative and validity checks.

    ``g_fn`` and ``dg_fn`` map a nodal state array (already clamped to [0,1])
    to nodal values; the constant extension outside [0,1] is applied by the
    evaluation wrappers.  ``lipschitz_s`` is the uniform Lipschitz constant
    in s, stored for stability guards and reports.
    """

    grid: Grid
    name: str
    g_fn: Callable[[np.ndarray], np.ndarray]
    dg_fn: Callable[[np.ndarray], np.ndarray]
    lipschitz_s: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        ones = np.ones(self.grid.num_nodes)
        g0 = self.g_fn(0.0 * ones)
        g1 = self.g_fn(1.0 * ones)
        # sign condition at the pure phases: sources at 0, sinks at 1
        if np.any(g0 < 0.0) or np.any(g1 > 0.0):
            raise ValueError(
                f"reaction '{self.name}' violates the sign condition: "
                f"min g(.,0) = {np.min(g0):.3e} (needs >= 0), "
                f"max g(.,1) = {np.max(g1):.3e} (needs <= 0)"
            )
        if not np.isfinite(self.lipschitz_s) or self.lipschitz_s < 0:
            raise ValueError("lipschitz_s must be finite and nonnegative")


def reaction_eval(spec: ReactionSpec, u: np.ndarray) -> np.ndarray:
    """Pointwise g(x_i, u_i) with constant extension outside [0,1]."""
    u = np.asarray(u, dtype=float)
    return spec.g_fn(np.clip(u, 0.0, 1.0))


def reaction_deriv(spec: ReactionSpec, u: np.ndarray) -> np.ndarray:
    """Pointwise d_s g(x_i, u_i); zero outside [0,1] where g is constant."""
    u = np.asarray(u, dtype=float)
    out = spec.dg_fn(np.clip(u, 0.0, 1.0))
    return np.where((u >= 0.0) & (u <= 1.0), out, 0.0)


def _as_field(grid: Grid, value, name: str, lo=None, hi=None) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        v = np.full(grid.num_nodes, float(v))
    v = check_field(grid, v)
    if lo is not None and np.any(v < lo):
        raise ValueError(f"{name} must be >= {lo} everywhere")
    if hi is not None and np.any(v > hi):
        raise ValueError(f"{name} must be <= {hi} everywhere")
    return v


def logistic_reaction(grid: Grid, alpha) -> ReactionSpec:
    """g = alpha(x) u (1-u), the space-dependent logistic source (g >= 0)."""
    a = _as_field(grid, alpha, "alpha", lo=0.0)
    return ReactionSpec(
        grid=grid, name="logistic",
        g_fn=lambda s: a * s * (1.0 - s),
        dg_fn=lambda s: a * (1.0 - 2.0 * s),
        lipschitz_s=float(np.max(a)),
        params={"alpha": a},
    )


def bertozzi_reaction(grid: Grid, beta, h_target) -> ReactionSpec:
    """g = beta(x) (h(x) - u), the inpainting relaxation toward h <= 1."""
    b = _as_field(grid, beta, "beta", lo=0.0)
    ht = _as_field(grid, h_target, "h", lo=0.0, hi=1.0)
    return ReactionSpec(
        grid=grid, name="bertozzi",
        g_fn=lambda s: b * (ht - s),
        dg_fn=lambda s: -b * np.ones_like(s),
        lipschitz_s=float(np.max(b)),
        params={"beta": b, "h": ht},
    )


def oono_reaction(grid: Grid, sigma) -> ReactionSpec:
    """g = -sigma(x) u, the diblock-copolymer sink (g <= 0)."""
    s0 = _as_field(grid, sigma, "sigma", lo=0.0)
    return ReactionSpec(
        grid=grid, name="oono",
        g_fn=lambda s: -s0 * s,
        dg_fn=lambda s: -s0 * np.ones_like(s),
        lipschitz_s=float(np.max(s0)),
        params={"sigma": s0},
    )


def custom_reaction(grid: Grid, g_fn, dg_fn, lipschitz_s: float | None = None,
                    name: str = "custom") -> ReactionSpec:
    """Wrap user-supplied g and d_s g (both required, vectorized over nodes).

    If ``lipschitz_s`` is omitted it is estimated by sampling |d_s g| on a
    dense s-grid; smoothness beyond Lipschitz continuity of the derivative
    cannot be decided from samples and remains the caller's obligation.
    """
    if g_fn is None or dg_fn is None:
        raise ValueError("custom reactions require both g and its s-derivative")
    if lipschitz_s is None:
        ones = np.ones(grid.num_nodes)
        lipschitz_s = max(
            float(np.max(np.abs(dg_fn(s * ones)))) for s in np.linspace(0.0, 1.0, 101)
        )
    return ReactionSpec(grid=grid, name=name, g_fn=g_fn, dg_fn=dg_fn,
                        lipschitz_s=float(lipschitz_s))


def zero_reaction(grid: Grid) -> ReactionSpec:
    """g = 0: the mass-conserving, reaction-free dynamics."""
    return custom_reaction(grid, lambda s: np.zeros_like(s), lambda s: np.zeros_like(s),
                           lipschitz_s=0.0, name="none")


def balanced_cubic_reaction(grid: Grid, scale=1.0) -> ReactionSpec:
    """g = scale * u (1-u) (1/2 - u): vanishes at 0, 1/2, and 1.

    The canonical example of non-unique equilibria: all three constant
    states solve the stationary problem.
    """
    c = _as_field(grid, scale, "scale", lo=0.0)
    return ReactionSpec(
        grid=grid, name="balanced_cubic",
        g_fn=lambda s: c * s * (1.0 - s) * (0.5 - s),
        dg_fn=lambda s: c * (0.5 - 3.0 * s + 3.0 * s * s),
        lipschitz_s=float(np.max(c)) * 0.5,
        params={"scale": c},
    )
