import numpy as np
import pytest

import epnls as ep
from conftest import random_state

GL3 = ep.gauss_legendre(3)
CFG = ep.SolverConfig()


def single_mode_state(g, j=1, amp=0.5):
    c = np.zeros(g.n, dtype=complex)
    c[g.M + j] = amp
    return ep.FourierState(coeffs=c)


def converge_data(g):
    vals = np.cos(g.x) + np.sin(g.x) + 0.0j
    return ep.to_fourier(g, ep.PhysicalState(vals))


def dense_ep1_endpoint_oracle(g, h, quad, u0, tol=1e-15, itmax=2000):
    """Brute-force fixed point on the endpoint unknown,

        U <- e^V u0 + h phi_1(V) sum_q w_q fhat((1-c_q) u0 + c_q U),

    with the transforms done as explicit O(N^2) DFT sums (independent of
    the solver's transform path)."""
    N = g.n
    E = np.array([[np.exp(1j * kj * xk) for kj in g.k] for xk in g.x])
    Einv = np.conj(E).T / N

    def fhat(c):
        v = E @ c
        return Einv @ (-1j * g.lam * np.abs(v) ** 2 * v)

    z = -1j * h * g.omega
    phi1 = np.where(g.omega == 0, 1.0, (np.exp(z) - 1) / np.where(z == 0, 1, z))
    U = np.exp(z) * u0
    for _ in range(itmax):
        acc = np.zeros_like(u0)
        for c, w in zip(quad.nodes, quad.weights):
            acc += w * fhat((1 - c) * u0 + c * U)
        G = np.exp(z) * u0 + h * phi1 * acc
        if np.abs(G - U).max() < tol:
            return G
        U = G
    raise AssertionError("oracle fixed point did not converge")


class TestStepBasics:
    def test_free_flow_is_exact_one_iteration(self):
        g = ep.build_grid(16, 2 * np.pi, 1.0, 0.0)
        s0 = single_mode_state(g, 3, 0.7 + 0.2j)
        for scheme in (ep.ep1(), ep.ep2(), ep.ep3()):
            s1, rep = ep.step(scheme, g, 0.01, GL3, CFG, s0)
            assert rep.iterations == 1
            np.testing.assert_allclose(
                s1.coeffs, np.exp(-1j * 0.01 * g.omega) * s0.coeffs, atol=1e-15)

    def test_updates_time(self):
        g = ep.build_grid(4, 2 * np.pi, 1.0, 0.0)
        s0 = single_mode_state(g)
        s1, _ = ep.step(ep.ep1(), g, 0.25, GL3, CFG, s0)
        assert s1.t == pytest.approx(0.25)

    def test_small_h_consistency(self, rng):
        g = ep.build_grid(8, 2 * np.pi, 1.0, -2.0)
        s0 = random_state(g, rng, amp=0.3)
        deltas = []
        for h in (1e-3, 5e-4, 2.5e-4):
            s1, _ = ep.step(ep.ep1(), g, h, GL3, CFG, s0)
            deltas.append(np.abs(s1.coeffs - s0.coeffs).max())
        assert deltas[0] == pytest.approx(2 * deltas[1], rel=0.05)
        assert deltas[1] == pytest.approx(2 * deltas[2], rel=0.05)

    def test_rejects_bad_h_and_state(self):
        g = ep.build_grid(4, 2 * np.pi, 1.0, 0.0)
        with pytest.raises(ValueError):
            ep.step(ep.ep1(), g, 0.0, GL3, CFG, single_mode_state(g))
        with pytest.raises(ValueError):
            ep.step(ep.ep1(), g, 0.1, GL3, CFG,
                    ep.FourierState(np.zeros(4, dtype=complex)))

    def test_etd2_explicit(self):
        g = ep.build_grid(8, 2 * np.pi, 1.0, -2.0)
        s1, rep = ep.step(ep.etd2(), g, 0.01, GL3, CFG, single_mode_state(g))
        assert rep.iterations == 0 and rep.converged


class TestDenseOracle:
    def test_ep1_matches_endpoint_fixed_point(self):
        # single-mode data on the smallest grid, cross-checked against the
        # independent dense implementation of the endpoint iteration
        g = ep.build_grid(2, 2 * np.pi, 1.0, 1.0)
        s0 = single_mode_state(g, 1, 0.5)
        s1, _ = ep.step(ep.ep1(), g, 0.01, GL3, CFG, s0)
        expected = dense_ep1_endpoint_oracle(g, 0.01, GL3, s0.coeffs)
        assert np.abs(s1.coeffs - expected).max() <= 1e-12

    def test_ep1_oracle_on_mixed_data(self, rng):
        g = ep.build_grid(2, 2 * np.pi, 1.0, -2.0)
        s0 = ep.FourierState(0.3 * (rng.standard_normal(4) + 1j * rng.standard_normal(4)))
        s1, _ = ep.step(ep.ep1(), g, 0.02, GL3, CFG, s0)
        expected = dense_ep1_endpoint_oracle(g, 0.02, GL3, s0.coeffs)
        assert np.abs(s1.coeffs - expected).max() <= 1e-12


class TestEvolve:
    def test_zero_steps(self):
        g = ep.build_grid(4, 2 * np.pi, 1.0, -1.0)
        s0 = single_mode_state(g)
        out = ep.evolve(ep.ep1(), g, 0.1, GL3, CFG, s0, 0)
        np.testing.assert_array_equal(out.coeffs, s0.coeffs)

    def test_linear_phase_composition(self, rng):
        g = ep.build_grid(8, 2 * np.pi, 0.1, 0.0)
        s0 = random_state(g, rng)
        out = ep.evolve(ep.ep2(), g, 0.01, GL3, CFG, s0, 50)
        expected = np.exp(-1j * 0.5 * g.omega) * s0.coeffs
        assert np.abs(out.coeffs - expected).max() <= 1e-12

    def test_observer_schedule(self):
        g = ep.build_grid(4, 2 * np.pi, 1.0, -1.0)
        seen = []
        ep.evolve(ep.ep1(), g, 0.1, GL3, CFG, single_mode_state(g), 10,
                  observer=lambda i, t, s, rep: seen.append((i, t)), observe_every=4)
        assert [i for i, _ in seen] == [0, 4, 8, 10]
        assert seen[-1][1] == pytest.approx(1.0)

    def test_determinism_bit_identical(self, rng):
        g = ep.build_grid(16, 2 * np.pi, 0.5, -2.0)
        s0 = random_state(g, rng, amp=0.4)
        a = ep.evolve(ep.ep1(), g, 0.02, GL3, CFG, s0, 40)
        b = ep.evolve(ep.ep1(), g, 0.02, GL3, CFG, s0, 40)
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_engines_agree(self, rng):
        g = ep.build_grid(16, 2 * np.pi, 1.0, -2.0)
        s0 = random_state(g, rng, amp=0.4)
        a = ep.evolve(ep.ep3(), g, 0.02, GL3, CFG, s0, 60, engine="numpy")
        b = ep.evolve(ep.ep3(), g, 0.02, GL3, CFG, s0, 60, engine="numba")
        assert np.abs(a.coeffs - b.coeffs).max() <= 1e-13


class TestEnergyConservation:
    def test_ep1_per_step_bound(self, rng):
        g = ep.build_grid(32, 2 * np.pi, 1.0, -2.0)
        s = random_state(g, rng, amp=0.4)
        h0 = ep.observables(g, s).energy
        prev = h0
        for _ in range(25):
            s, _ = ep.step(ep.ep1(), g, 0.01, GL3, CFG, s)
            cur = ep.observables(g, s).energy
            assert abs(cur - prev) / abs(h0) <= 100 * CFG.fp_tol
            prev = cur

    def test_ep2_exact_rule_cumulative(self, rng):
        g = ep.build_grid(16, 2 * np.pi, 1.0, -2.0)
        s0 = random_state(g, rng, amp=0.4)
        h0 = ep.observables(g, s0).energy
        drift = []
        ep.evolve(ep.ep2(), g, 0.01, ep.gauss_legendre(4), CFG, s0, 400,
                  observer=lambda i, t, s, rep: drift.append(
                      abs(ep.observables(g, s).energy - h0) / abs(h0)),
                  observe_every=50)
        assert max(drift) <= 1e-11


class TestTwoStepIdentity:
    def test_linear_case_exact(self, rng):
        g = ep.build_grid(16, 2 * np.pi, 0.05, 0.0)
        s0 = random_state(g, rng)
        assert ep.ep1_two_step_residual(g, 0.01, GL3, CFG, s0) <= 1e-13

    def test_nonlinear_bounded_by_tolerance(self, rng):
        g = ep.build_grid(32, 2 * np.pi, 1.0, -2.0)
        s0 = random_state(g, rng, amp=0.4)
        assert ep.ep1_two_step_residual(g, 0.01, GL3, CFG, s0) <= 10 * CFG.fp_tol

    def test_residual_tracks_tolerance(self, rng):
        g = ep.build_grid(16, 2 * np.pi, 1.0, -2.0)
        s0 = random_state(g, rng, amp=0.4)
        res = {tol: ep.ep1_two_step_residual(g, 0.01, GL3,
                                             ep.SolverConfig(fp_tol=tol), s0)
               for tol in (1e-8, 1e-11, 1e-14)}
        assert res[1e-8] > res[1e-11] > res[1e-14]
        assert res[1e-8] <= 10 * 1e-8


class TestRescalingEquivalence:
    @pytest.mark.parametrize("eps", [0.1, 0.01])
    def test_original_vs_longterm_iterates(self, eps):
        # original equation with h = eps*dk  ==  mapped equation
        # (eps = 1 in the Laplacian, lambda -> eps*lambda) with step dk
        dk = 0.1
        lam = -2.0
        g_orig = ep.build_grid(16, 2 * np.pi, eps, lam)
        g_map = ep.build_grid(16, 2 * np.pi, 1.0, eps * lam)
        s0 = converge_data(g_orig)
        for scheme in (ep.ep1(), ep.ep3()):
            a = ep.evolve(scheme, g_orig, eps * dk, GL3, CFG, s0, 100)
            b = ep.evolve(scheme, g_map, dk, GL3, CFG, s0, 100)
            assert np.abs(a.coeffs - b.coeffs).max() <= 1e-12


class TestReversibility:
    def test_ep1_symmetric_round_trip(self, rng):
        g = ep.build_grid(16, 2 * np.pi, 1.0, -2.0)
        s0 = random_state(g, rng, amp=0.2)
        s1, _ = ep.step(ep.ep1(), g, 0.02, GL3, CFG, s0)
        back, _ = ep.step(ep.ep1(), g, 0.02, GL3, CFG,
                          ep.FourierState(np.conj(s1.coeffs)))
        assert np.abs(np.conj(back.coeffs) - s0.coeffs).max() <= 100 * CFG.fp_tol


class TestFixedPointControl:
    def test_contraction_iteration_budget(self):
        # lam = -2, |u| <= 1 pointwise, h <= 0.05: at most 30 iterations
        g = ep.build_grid(16, 2 * np.pi, 1.0, -2.0)
        vals = 0.9 * np.exp(1j * g.x) / (1.0 + 0.5 * np.sin(g.x) ** 2)
        s0 = ep.to_fourier(g, ep.PhysicalState(vals))
        assert np.abs(vals).max() <= 1.0
        for scheme in (ep.ep1(), ep.ep2(), ep.ep3()):
            _, rep = ep.step(scheme, g, 0.05, GL3, CFG, s0)
            assert rep.converged and rep.iterations <= 30

    def test_divergent_iteration_raises(self):
        g = ep.build_grid(32, 2 * np.pi, 1.0, -2.0)
        s0 = converge_data(g)
        with pytest.raises(ep.StepConvergenceError) as info:
            ep.step(ep.ep1(), g, 0.5, GL3, CFG, s0)
        assert info.value.residual > 0

    def test_evolve_attaches_step_index(self):
        g = ep.build_grid(32, 2 * np.pi, 1.0, -2.0)
        s0 = converge_data(g)
        with pytest.raises(ep.StepConvergenceError) as info:
            ep.evolve(ep.ep2(), g, 0.25, GL3, ep.SolverConfig(fp_max=400), s0, 4)
        assert info.value.step_index is not None

    def test_stagnation_accepts_at_rounding_floor(self, rng):
        g = ep.build_grid(32, 2 * np.pi, 1.0, -2.0)
        s0 = random_state(g, rng, amp=0.5)
        cfg = ep.SolverConfig(fp_tol=1e-300, fp_max=100)  # unreachable tolerance
        _, rep = ep.step(ep.ep1(), g, 0.02, GL3, cfg, s0)
        assert rep.converged and rep.stagnated
        assert rep.final_residual <= 1e-12

    def test_solver_config_validation(self):
        with pytest.raises(ValueError):
            ep.SolverConfig(fp_tol=0.0)
        with pytest.raises(ValueError):
            ep.SolverConfig(fp_max=0)


class TestReferenceSolution:
    def test_linear_matches_analytic(self, rng):
        g = ep.build_grid(8, 2 * np.pi, 1.0, 0.0)
        s0 = random_state(g, rng)
        ref = ep.reference_solution(g, 1.0, s0, 0.01)
        expected = np.exp(-1j * 1.0 * g.omega) * s0.coeffs
        assert np.abs(ref.coeffs - expected).max() <= 1e-12

    def test_richardson_self_consistency(self):
        g = ep.build_grid(16, 2 * np.pi, 1.0, -0.2)  # eps=0.1 long-term mapping
        s0 = converge_data(g)
        a = ep.reference_solution(g, 1.0, s0, 0.002)
        b = ep.reference_solution(g, 1.0, s0, 0.001)
        diff = ep.FourierState(a.coeffs - b.coeffs)
        assert ep.sobolev_norm(g, diff, 0.0) <= 1e-10

    def test_rejects_non_multiple_horizon(self):
        g = ep.build_grid(8, 2 * np.pi, 1.0, 0.0)
        with pytest.raises(ValueError):
            ep.reference_solution(g, 1.0, single_mode_state(g), 0.3)
