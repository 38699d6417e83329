"""Pauli generator, steady states, evolution, and the high-T structure."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floquet_ness.errors import ConfigError, DegenerateSpectrumError
from floquet_ness.model import Truncation, paper_system
from floquet_ness.ness import (
    Populations,
    boltzmann,
    build_generator,
    default_slope_grid,
    evolve,
    high_t_slope,
    steady_state,
    steady_state_of,
    thermal_domain_bound,
)
from floquet_ness.rates import RateEngine, RateTable, exp_moment

from oracles import null_space_populations


def toy_table(spec, totals):
    """RateTable stub carrying only totals (plus matching nu=0 entries)."""
    trunc = Truncation(nu_cut=0, e_cut=1.0, quad_points=8)
    per_nu = {(jt, jf, 0): v for (jt, jf), v in totals.items()}
    return RateTable(spec=spec, trunc=trunc, beta=1.0, per_nu=per_nu,
                     totals=dict(totals))


class TestGenerator:
    def test_two_level_symmetric(self, spec):
        totals = {(1, 2): 1.0, (2, 1): 1.0, (1, 1): 0.0, (2, 2): 0.0,
                  (1, 3): 0.0, (3, 1): 0.0, (2, 3): 0.0, (3, 2): 0.0,
                  (3, 3): 0.0}
        w = build_generator(toy_table(spec, totals))
        assert np.allclose(w[:2, :2], [[-1.0, 1.0], [1.0, -1.0]])

    def test_column_sums_vanish(self, engine_std):
        w = build_generator(engine_std.table(1.7))
        assert np.max(np.abs(w.sum(axis=0))) < 1e-16 * np.max(np.abs(w)) + 1e-300

    def test_elastic_rates_do_not_enter(self, spec, engine_std):
        table = engine_std.table(1.7)
        bumped = RateTable(
            spec=table.spec, trunc=table.trunc, beta=table.beta,
            per_nu=table.per_nu,
            totals={k: (v + 5.0 if k[0] == k[1] else v)
                    for k, v in table.totals.items()})
        assert np.allclose(build_generator(table), build_generator(bumped))


class TestSteadyState:
    def test_symmetric_two_level(self, spec):
        w = np.array([[-1.0, 1.0], [1.0, -1.0]])
        assert steady_state(w).p == pytest.approx((0.5, 0.5), abs=1e-14)

    def test_detailed_balance_rates_give_boltzmann(self):
        # gain rates gamma*exp(-beta*E) satisfy the non-driven balance exactly
        beta, e1, e2, gamma = 1.3, -0.2, 0.7, 0.8
        w = np.array([
            [-gamma * np.exp(-beta * e2), gamma * np.exp(-beta * e1)],
            [gamma * np.exp(-beta * e2), -gamma * np.exp(-beta * e1)],
        ])
        pop = steady_state(w)
        ref = null_space_populations(w)
        assert pop.p == pytest.approx(tuple(ref), abs=1e-12)
        expect = np.exp(-beta * np.array([e1, e2]))
        expect /= expect.sum()
        assert pop.p == pytest.approx(tuple(expect), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.05, 5.0), min_size=6, max_size=6))
    def test_matches_null_space_oracle(self, offdiag):
        w = np.zeros((3, 3))
        k = 0
        for i in range(3):
            for j in range(3):
                if i != j:
                    w[i, j] = offdiag[k]
                    k += 1
        w[np.diag_indices(3)] = -w.sum(axis=0)
        assert steady_state(w).p == pytest.approx(
            tuple(null_space_populations(w)), abs=1e-10)

    def test_scaling_invariance(self, engine_std):
        w = build_generator(engine_std.table(2.0))
        a = steady_state(w)
        b = steady_state(17.0 * w)
        assert a.p == pytest.approx(b.p, abs=1e-12)

    def test_disconnected_graph_raises(self):
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 1.0
        w[np.diag_indices(3)] = -w.sum(axis=0)
        with pytest.raises(DegenerateSpectrumError):
            steady_state(w)

    def test_populations_validate(self):
        with pytest.raises(ConfigError):
            Populations(beta=1.0, p=(0.7, 0.7))
        with pytest.raises(ConfigError):
            Populations(beta=1.0, p=(1.2, -0.2))


class TestEvolve:
    def test_fixed_point(self, engine_std):
        w = build_generator(engine_std.table(2.0))
        pop = steady_state(w, beta=2.0)
        _, traj = evolve(w, pop, t_final=5.0, dt=0.05)
        assert np.max(np.abs(traj - pop.asarray())) < 1e-10

    def test_relaxes_to_steady_state(self, engine_std):
        # rescale to unit peak rate (steady state is scale invariant); the
        # spectral gap then sets the relaxation horizon
        w = build_generator(engine_std.table(2.0))
        w = w / np.max(np.abs(w))
        gap = -max(ev.real for ev in np.linalg.eigvals(w) if ev.real < -1e-12)
        start = Populations(beta=2.0, p=(1.0, 0.0, 0.0))
        t_final = 25.0 / gap
        _, traj = evolve(w, start, t_final=t_final, dt=t_final / 4000.0)
        assert np.max(np.abs(traj[-1] - steady_state(w).asarray())) < 1e-8

    def test_normalization_conserved(self, engine_std):
        w = build_generator(engine_std.table(2.0))
        start = Populations(beta=2.0, p=(0.2, 0.3, 0.5))
        _, traj = evolve(w, start, t_final=20.0, dt=0.1)
        assert np.max(np.abs(traj.sum(axis=1) - 1.0)) < 1e-10


class TestBoltzmann:
    def test_infinite_temperature_uniform(self, spec):
        assert boltzmann(spec, 0.0).p == pytest.approx((1 / 3,) * 3, abs=1e-15)

    def test_unit_beta_values(self, spec):
        ref = np.exp(-1.0 * np.array([-0.5, 0.0, 0.4]))
        ref /= ref.sum()
        assert boltzmann(spec, 1.0).p == pytest.approx(tuple(ref), abs=1e-14)

    def test_ground_state_projection(self, spec):
        pop = boltzmann(spec, 1e4)
        assert pop[1] == pytest.approx(1.0, abs=1e-12)


class TestHighTemperature:
    def test_zero_drive_slope_exact(self, spec_lam0):
        # the smallest grid beta needs exp(-beta*e_cut) below the tolerance,
        # so this check runs at a deep momentum cutoff (3-channel basis: cheap)
        trunc = Truncation(nu_cut=0, e_cut=2000.0, quad_points=48)
        got = high_t_slope(spec_lam0, trunc, 1, 2)
        assert got == pytest.approx(-0.5, abs=1e-6)

    def test_slope_antisymmetric(self, spec, trunc_std, engine_std):
        a = high_t_slope(spec, trunc_std, 1, 2, engine=engine_std)
        b = high_t_slope(spec, trunc_std, 2, 1, engine=engine_std)
        assert a == pytest.approx(-b, abs=1e-12)

    def test_driven_slope_near_quasienergy_gap(self, spec, trunc_std, engine_std):
        got = high_t_slope(spec, trunc_std, 1, 2, engine=engine_std)
        assert got == pytest.approx(-0.5, rel=0.02)

    def test_grid_scale(self, spec):
        grid = default_slope_grid(spec)
        assert max(grid) <= 0.1 and min(grid) > 0.0

    def test_zero_drive_bound(self, spec_lam0, trunc_lam0, engine_lam0):
        # curvature term vanishes: 2 * 0.5 / 0.5^2
        got = thermal_domain_bound(spec_lam0, trunc_lam0, 1, 2, engine=engine_lam0)
        assert got == pytest.approx(4.0, abs=1e-6)

    def test_same_level_rejected(self, spec, trunc_std):
        with pytest.raises(ConfigError):
            thermal_domain_bound(spec, trunc_std, 2, 2)


class TestStationarityRestatement:
    def test_moment_weighted_form_agrees(self, spec, engine_std):
        # the moment-weighted restatement of stationarity follows from the
        # thermalization balance; residuals track each other
        beta = 2.0
        table = engine_std.table(beta)
        pop = steady_state_of(table)
        worst = 0.0
        for j in (1, 2, 3):
            num = den = 0.0
            for jp in (1, 2, 3):
                a = table.total(j, jp)
                ratio = pop[jp] / pop[j]
                de = spec.level_energy(jp) - spec.level_energy(j)
                therm = np.exp(-beta * de) * exp_moment(table, j, jp)
                num += a * (ratio - therm)
                den += a * (abs(ratio) + abs(therm))
            worst = max(worst, abs(num) / den)
        assert worst < 1e-8

    def test_low_temperature_deviation(self, spec):
        # far below the lowest gap the steady state stays mixed while the
        # thermal state collapses onto the ground level
        engine = RateEngine(spec, Truncation(nu_cut=6, e_cut=20.0,
                                             quad_points=32))
        beta = 20.0 / 0.5
        pop = steady_state_of(engine.table(beta))
        ref = boltzmann(spec, beta)
        assert min(pop.p) > 1e-3
        assert np.max(np.abs(pop.asarray() - ref.asarray())) > 0.05
