import numpy as np
import pytest
from parameterized import parameterized

from ncg.core import BetaFormula, DegenerateDirectionError, RestartKind, SolverConfig
from ncg.directions import (RestartPolicy, compute_beta, length_threshold, next_direction,
                            norm_power, propose_direction, restart_test, slope_threshold)

G_OLD = np.array([1.0, 0.0])
G_NEW = np.array([0.5, 0.5])
D_OLD = np.array([-1.0, 0.0])


@pytest.mark.unit
class TestBetaFormulas:
    """Conjugate parameters on a fixed pair of gradients."""

    @parameterized.expand([
        # ||g_new||^2 / ||g_old||^2 = 0.5 / 1
        ("fletcher_reeves", BetaFormula.FR, 0.5),
        # g_new^T (g_new - g_old) / ||g_old||^2 = (0.5 * -0.5 + 0.5 * 0.5) / 1
        ("polak_ribiere", BetaFormula.PR, 0.0),
        ("polak_ribiere_plus", BetaFormula.PRP_PLUS, 0.0),
    ])
    def test_formula_values(self, _name, formula, expected):
        assert compute_beta(formula, G_NEW, G_OLD, D_OLD) == pytest.approx(expected)

    def test_prp_plus_truncates_negative_values(self):
        g_new = np.array([0.2, 0.0])
        assert compute_beta(BetaFormula.PR, g_new, G_OLD, D_OLD) == pytest.approx(-0.16)
        assert compute_beta(BetaFormula.PRP_PLUS, g_new, G_OLD, D_OLD) == 0.0

    def test_prp_plus_is_truncated_polak_ribiere(self):
        """beta_PRP+ = max(beta_PR, 0) on 1000 random gradient triples."""
        rng = np.random.Generator(np.random.PCG64(21))
        for _ in range(1000):
            g_old, g_new, d_old = rng.standard_normal((3, 5))
            pr = compute_beta(BetaFormula.PR, g_new, g_old, d_old)
            plus = compute_beta(BetaFormula.PRP_PLUS, g_new, g_old, d_old)
            assert plus >= 0.0
            assert plus == max(pr, 0.0)

    def test_hager_zhang(self):
        """y = (-0.5, 0.5), d^T y = 0.5, ||y||^2 = 0.5: (y - 2 d) . g_new / 0.5 = 2."""
        assert compute_beta(BetaFormula.HZ, G_NEW, G_OLD, D_OLD) == pytest.approx(2.0)

    def test_hager_zhang_degenerate_denominator(self):
        with pytest.raises(DegenerateDirectionError):
            compute_beta(BetaFormula.HZ, np.array([1.0, 1.0]), G_OLD, D_OLD)

    def test_zero_previous_gradient(self):
        with pytest.raises(DegenerateDirectionError):
            compute_beta(BetaFormula.FR, G_NEW, np.zeros(2), D_OLD)


@pytest.mark.unit
class TestRestartPolicies:
    """Restart tests on proposed directions."""

    def test_thresholds(self):
        assert slope_threshold(4.0, 0.01, 0.5) == pytest.approx(-0.08)
        assert length_threshold(16.0, 100.0, 0.75) == pytest.approx(800.0)
        assert norm_power(0.0, 1.5) == 0.0

    @parameterized.expand([(norm,) for norm in (1e-6, 0.01, 0.5, 1.0, 3.0, 250.0)])
    def test_unit_constants_and_exponents(self, norm):
        """kappa = sigma = 1 leaves the bare powers; p = q = 1 gives -sigma ||g||^2 and kappa ||g||."""
        assert slope_threshold(norm, 1.0, 0.5) == pytest.approx(-norm ** 1.5, rel=1e-12)
        assert length_threshold(norm, 1.0, 0.75) == pytest.approx(norm ** 0.75, rel=1e-12)
        assert slope_threshold(norm, 0.01, 1.0) == pytest.approx(-0.01 * norm * norm, rel=1e-12)
        assert length_threshold(norm, 100.0, 1.0) == pytest.approx(100.0 * norm, rel=1e-12)

    def test_modified_fires_on_weak_descent(self):
        policy = RestartPolicy(RestartKind.MODIFIED)
        g = np.array([1.0, 0.0])
        # g^T d = -0.005 >= -sigma ||g||^{1.5} = -0.01
        assert restart_test(policy, g, np.array([-0.005, 1.0]), G_OLD)
        assert not restart_test(policy, g, np.array([-1.0, 1.0]), G_OLD)

    def test_modified_fires_on_long_direction(self):
        policy = RestartPolicy(RestartKind.MODIFIED, kappa=2.0)
        g = np.array([1.0, 0.0])
        assert restart_test(policy, g, np.array([-1.0, 2.0]), G_OLD)

    def test_standard_fires_only_on_ascent(self):
        policy = RestartPolicy(RestartKind.STANDARD)
        g = np.array([1.0, 0.0])
        assert not restart_test(policy, g, np.array([-1e-12, 1e6]), G_OLD)
        assert restart_test(policy, g, np.array([0.0, 1.0]), G_OLD)

    def test_orthogonality(self):
        policy = RestartPolicy(RestartKind.ORTHOGONALITY, sigma_orth=0.2)
        assert restart_test(policy, np.array([0.3, 1.0]), -np.ones(2), G_OLD)
        assert not restart_test(policy, np.array([0.1, 1.0]), -np.ones(2), G_OLD)

    def test_from_config(self):
        policy = RestartPolicy.from_config(SolverConfig.restarted(1.0, sigma=0.5))
        assert (policy.kind, policy.sigma, policy.p, policy.q) == (RestartKind.MODIFIED, 0.5, 1.0, 1.0)


@pytest.mark.unit
class TestNextDirection:

    def test_conjugate_step_kept(self):
        policy = RestartPolicy(RestartKind.MODIFIED)
        state = next_direction(policy, BetaFormula.FR, G_NEW, G_OLD, D_OLD)
        assert not state.restarted
        assert state.beta == pytest.approx(0.5)
        np.testing.assert_allclose(state.d_new, propose_direction(G_NEW, 0.5, D_OLD))
        np.testing.assert_allclose(state.y, G_NEW - G_OLD)

    def test_always_policy_is_gradient_descent(self):
        state = next_direction(RestartPolicy(RestartKind.ALWAYS), BetaFormula.FR, G_NEW, G_OLD, D_OLD)
        assert state.restarted
        assert state.beta == 0.0
        np.testing.assert_array_equal(state.d_new, -G_NEW)

    def test_restart_keeps_proposed_beta(self):
        policy = RestartPolicy(RestartKind.MODIFIED, kappa=1.0)
        state = next_direction(policy, BetaFormula.FR, G_NEW, G_OLD, D_OLD)
        assert state.restarted
        assert state.beta == 0.0
        assert state.beta_proposed == pytest.approx(0.5)
        np.testing.assert_array_equal(state.d_new, -G_NEW)

    def test_degenerate_formula_restarts(self):
        state = next_direction(RestartPolicy(RestartKind.MODIFIED), BetaFormula.HZ,
                               np.array([1.0, 1.0]), G_OLD, D_OLD)
        assert state.restarted

    def test_non_descent_proposal_restarts(self):
        """The orthogonality test can pass an ascent direction; it is replaced by -g."""
        policy = RestartPolicy(RestartKind.ORTHOGONALITY, sigma_orth=0.5)
        g_new = np.array([0.1, 1.0])
        d_old = np.array([0.0, 10.0])
        state = next_direction(policy, BetaFormula.FR, g_new, G_OLD, d_old)
        assert state.restarted
        np.testing.assert_array_equal(state.d_new, -g_new)

    def test_modified_directions_satisfy_bounds(self):
        """Every kept direction is a sufficient descent direction of bounded length."""
        rng = np.random.Generator(np.random.PCG64(3))
        policy = RestartPolicy(RestartKind.MODIFIED)
        for _ in range(200):
            g_old, g_new, d_old = rng.standard_normal((3, 4))
            state = next_direction(policy, BetaFormula.PR, g_new, g_old, d_old)
            if state.restarted:
                continue
            norm = float(np.linalg.norm(g_new))
            assert float(np.dot(g_new, state.d_new)) < slope_threshold(norm, policy.sigma, policy.p)
            assert float(np.linalg.norm(state.d_new)) < length_threshold(norm, policy.kappa, policy.q)
