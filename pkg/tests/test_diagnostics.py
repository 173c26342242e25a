"""Observables, rate fitting, and the mass-balance ledger."""

import math

import numpy as np
import pytest

from nlch.diagnostics import (
    energy,
    fit_exponential_rate,
    linear_fit_residual_fraction,
    mass,
    mass_balance_residual,
    separation,
)
from nlch.grid import build_grid
from nlch.kernels import assemble_kernel, gaussian_kernel
from nlch.model import oono_reaction, potential
from nlch.timestepper import SolverConfig, run


@pytest.fixture(scope="module")
def grid():
    return build_grid(1, 64, 1.0)


@pytest.fixture(scope="module")
def op(grid):
    return assemble_kernel(gaussian_kernel(0.5, 0.1), grid)


class TestMass:
    def test_constant(self, grid):
        assert mass(np.full(grid.num_nodes, 0.3)) == pytest.approx(0.3)

    def test_half_indicator(self, grid):
        u = np.zeros(grid.num_nodes)
        u[: grid.num_nodes // 2] = 1.0
        assert mass(u) == pytest.approx(0.5)

    def test_linear_profile_exact(self, grid):
        # midpoint rule integrates linears exactly
        u = grid.axis_coords() / grid.length
        assert mass(u) == pytest.approx(0.5, abs=1e-12)


class TestSeparation:
    def test_interior_band(self):
        u = np.array([0.2, 0.4, 0.7])
        assert separation(u) == (pytest.approx(0.2), pytest.approx(0.3))

    def test_pure_phases(self):
        assert separation(np.zeros(5)) == (0.0, 1.0)
        assert separation(np.ones(5)) == (1.0, 0.0)


class TestEnergy:
    def test_constant_state_has_no_pair_energy(self, grid, op):
        c = 0.3
        e = energy(np.full(grid.num_nodes, c), op)
        assert e == pytest.approx(grid.domain_volume * potential(c), rel=1e-12)

    def test_half_state_value(self, grid, op):
        e = energy(np.full(grid.num_nodes, 0.5), op)
        assert e == pytest.approx(-grid.domain_volume * math.log(2.0), rel=1e-12)

    def test_pure_phase_energy_vanishes(self, grid, op):
        assert energy(np.zeros(grid.num_nodes), op) == pytest.approx(0.0, abs=1e-12)

    def test_matches_direct_double_sum(self, grid, op):
        rng = np.random.default_rng(0)
        u = rng.uniform(0, 1, grid.num_nodes)
        diff = u[:, None] - u[None, :]
        pair = float(np.sum(op.weights * diff**2)) * grid.cell_volume
        bulk = grid.cell_volume * float(np.sum(potential(u)))
        assert energy(u, op) == pytest.approx(pair + bulk, rel=1e-10)


class TestRateFitting:
    def test_exact_exponential(self):
        t = np.linspace(0, 5, 101)
        rate, r2 = fit_exponential_rate(t, np.exp(-2.0 * t), (1.0, 5.0))
        assert rate == pytest.approx(2.0, abs=1e-9)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_constant_series(self):
        t = np.linspace(0, 5, 101)
        rate, _ = fit_exponential_rate(t, np.full_like(t, 3.0), (0.0, 5.0))
        assert rate == pytest.approx(0.0, abs=1e-12)

    def test_floor_hits_zero_is_error(self):
        t = np.linspace(0, 5, 101)
        v = np.exp(-20 * t)
        v[v < 1e-15] = 0.0
        with pytest.raises(ValueError, match="floor"):
            fit_exponential_rate(t, v, (0.0, 5.0))

    def test_short_window_is_error(self):
        t = np.linspace(0, 5, 101)
        with pytest.raises(ValueError, match="need >= 10"):
            fit_exponential_rate(t, np.exp(-t), (4.9, 5.0))

    def test_linear_fit_residual_fraction(self):
        t = np.linspace(0, 5, 50)
        assert linear_fit_residual_fraction(t, -2 * t + 1) < 1e-12
        assert linear_fit_residual_fraction(t, -(t**2)) > 0.05


class TestMassBalance:
    def test_reaction_free_run_conserves(self, grid, op):
        from nlch.model import zero_reaction

        rng = np.random.default_rng(1)
        u0 = rng.uniform(0.2, 0.8, grid.num_nodes)
        _, rec = run(u0, zero_reaction(grid), op, SolverConfig(dt=0.01, t_end=0.5))
        assert mass_balance_residual(rec) <= 1e-12
        m = np.asarray(rec.step_mass)
        assert np.max(np.abs(m - m[0])) <= 1e-12 * abs(m[0])

    def test_oono_geometric_mass_and_l2_collapse_bound(self, grid, op):
        """The sink shrinks mass geometrically; for 0 <= u <= 1 the squared
        L2 norm is bounded by 3 |Omega| mean(u), so vanishing mass forces
        L2 collapse."""
        sigma, dt = 1.0, 0.01
        spec = oono_reaction(grid, sigma)
        rng = np.random.default_rng(2)
        u0 = rng.uniform(0.0, 1.0, grid.num_nodes)
        _, rec = run(u0, spec, op, SolverConfig(dt=dt, t_end=2.0, record_every=10))
        assert mass_balance_residual(rec) <= 1e-12

        oracle = float(np.mean(u0))
        for _ in range(len(rec.step_mass) - 1):
            oracle = oracle * (1.0 - sigma * dt)
        assert rec.step_mass[-1] == pytest.approx(oracle, rel=1e-12)

        vol = grid.domain_volume
        for l2, m in zip(rec.l2_norm, rec.mass):
            assert l2**2 <= 3.0 * vol * m + 1e-15
