"""
Steady states of the reacting nonlocal Cahn-Hilliard system by damped Picard
iteration with a regularized linear solve and continuation to epsilon = 0.

Each sweep solves

    (-Lap + (eps + rho) I) u_next = div(mu(z) grad K*(1-2z)) + g(z) + (eps + rho) z

with rho the reaction's Lipschitz constant in s.  Every true equilibrium is
a fixed point of this map at every eps (the shift terms cancel at a fixed
point), eps controls how much of the update the well-conditioned operator
absorbs, and the rho shift keeps the map contractive for stiff monotone
reactions where no fixed damping could.  At eps = 0 with rho = 0 the solve
moves to the mean-zero complement and the iteration preserves the mean; the
compatibility defect |mean(g(u))| is reported, since no steady state exists
when the reaction pumps net mass.  Iterates are clamped to [0,1]: the
existence construction proves the bounds by truncation, and the pure phases
are reachable limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import check_field, div_flux, l2_norm, laplacian_neumann
from .kernels import KernelOp
from .model import ReactionSpec, mobility, reaction_eval
from .solvers import SpdNeumannSolver

DEFAULT_EPS_SCHEDULE = (1.0, 0.1, 0.01, 0.001, 0.0)


@dataclass(frozen=True)
class EquilibriumConfig:
    eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    damping: float = 0.5
    picard_tol: float = 1e-10
    max_iter: int = 10000
    residual_tol: float = 1e-9

    def __post_init__(self):
        sched = tuple(float(e) for e in self.eps_schedule)
        if len(sched) == 0:
            raise ValueError("eps_schedule must be nonempty")
        if any(e < 0 for e in sched):
            raise ValueError("eps_schedule entries must be >= 0")
        if len(sched) > 1 and not all(b < a for a, b in zip(sched, sched[1:])):
            raise ValueError("eps_schedule must be strictly decreasing")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must be in (0, 1]")
        if self.picard_tol <= 0 or self.max_iter < 1 or self.residual_tol <= 0:
            raise ValueError("tolerances must be positive and max_iter >= 1")
        object.__setattr__(self, "eps_schedule", sched)


@dataclass
class EquilibriumResult:
    u: np.ndarray
    residual: float
    converged: bool
    iterations: int
    eps_gaps: list[float] = field(default_factory=list)
    clamp_excursion: float = 0.0
    mass_defect: float = 0.0

    @property
    def certified(self) -> bool:
        return self.converged and self.residual < 1e-8


def _rhs(z: np.ndarray, spec: ReactionSpec, op: KernelOp) -> np.ndarray:
    w = op.convolve(1.0 - 2.0 * z)
    return div_flux(op.grid, mobility(z), w) + reaction_eval(spec, z)


def equilibrium_residual(u: np.ndarray, spec: ReactionSpec, op: KernelOp) -> float:
    """Discrete L2 norm of -Lap u - div(mu grad w) - g(u) at w = K*(1-2u).

    Equals the weak residual against the full nodal test basis because the
    discretization is conservative.
    """
    grid = op.grid
    u = check_field(grid, u)
    r = -laplacian_neumann(grid, u) - _rhs(u, spec, op)
    return l2_norm(grid, r)


def solve_equilibrium(u_init: np.ndarray, spec: ReactionSpec, op: KernelOp,
                      cfg: EquilibriumConfig | None = None) -> EquilibriumResult:
    """Damped Picard iteration with eps-continuation and warm starts.

    A phase converges when both the step size drops below picard_tol and
    the strong-form residual drops below residual_tol (a small step alone
    does not certify a stiff problem).  Non-convergence within max_iter is
    a flagged outcome, not an error: the underlying existence proof is a
    compactness argument and does not claim the iteration converges.
    """
    if cfg is None:
        cfg = EquilibriumConfig()
    grid = op.grid
    theta = cfg.damping
    rho = spec.lipschitz_s
    u = np.clip(check_field(grid, u_init).copy(), 0.0, 1.0)
    total_iters = 0
    converged_all = True
    eps_gaps = []
    clamp_excursion = 0.0

    for eps in cfg.eps_schedule:
        shift = eps + rho
        solver = SpdNeumannSolver(grid, shift, 1.0)
        phase_start = u.copy()
        converged = False
        stall_residual = np.inf
        for _ in range(cfg.max_iter):
            total_iters += 1
            b = _rhs(u, spec, op)
            # inner solves run well below residual_tol so the CG floor
            # cannot block the certification gate
            if shift > 0:
                gamma = solver.solve(b + shift * u, x0=u, tol=1e-12)
            else:
                # reaction-free limit problem: solve on the mean-zero
                # complement and keep the iterate's mean
                lift = solver.solve(b - np.mean(b), x0=u - np.mean(u), tol=1e-12)
                gamma = np.mean(u) + lift
            u_next = (1.0 - theta) * u + theta * gamma
            lo, hi = float(np.min(u_next)), float(np.max(u_next))
            clamp_excursion = max(clamp_excursion, -lo, hi - 1.0, 0.0)
            np.clip(u_next, 0.0, 1.0, out=u_next)
            delta = l2_norm(grid, u_next - u)
            u = u_next
            if delta < cfg.picard_tol:
                resid = equilibrium_residual(u, spec, op)
                if resid < cfg.residual_tol:
                    converged = True
                    break
                if resid >= 0.99 * stall_residual:
                    break       # step converged but residual stalled: flag
                stall_residual = resid
        converged_all = converged_all and converged
        eps_gaps.append(l2_norm(grid, u - phase_start))

    mass_defect = abs(float(np.mean(reaction_eval(spec, u))))
    return EquilibriumResult(
        u=u,
        residual=equilibrium_residual(u, spec, op),
        converged=converged_all,
        iterations=total_iters,
        eps_gaps=eps_gaps,
        clamp_excursion=clamp_excursion,
        mass_defect=mass_defect,
    )


def multistart_equilibria(seeds, spec: ReactionSpec, op: KernelOp,
                          cfg: EquilibriumConfig | None = None,
                          dedup_tol: float = 1e-6) -> list[EquilibriumResult]:
    """Solve from every seed and deduplicate converged limits.

    Uniqueness of equilibria is not guaranteed in general, so the full list
    of distinct limits (pairwise L2 distance > dedup_tol) is returned;
    non-converged solves are dropped.
    """
    grid = op.grid
    found: list[EquilibriumResult] = []
    for seed in seeds:
        res = solve_equilibrium(seed, spec, op, cfg)
        if not res.converged:
            continue
        if any(l2_norm(grid, res.u - other.u) <= dedup_tol for other in found):
            continue
        found.append(res)
    return found
