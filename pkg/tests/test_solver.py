import math

import numpy as np
import pandas as pd
import pytest

from ncg.core import (BetaFormula, DimensionError, Objective, RestartKind, RunStatus, SolverConfig,
                      StopRule, WarmStart)
from ncg.solver import (TRACE_COLUMNS, export_trace_csv, run_gradient_descent, run_restarted_ncg,
                        run_semi_adaptive_gd, trace_frame)
from utils.test_helpers import TestHelpers


@pytest.mark.unit
class TestRestartedNCG:
    """Algorithm-1 runs on small problems."""

    @pytest.mark.parametrize("formula", list(BetaFormula))
    def test_quadratic_converges(self, quadratic, formula):
        config = SolverConfig(beta_formula=formula, epsilon=1e-8)
        result = run_restarted_ncg(quadratic, [1.0, 0.0], config)
        assert result.status is RunStatus.CONVERGED
        assert result.final_grad_norm <= 1e-8
        TestHelpers.assert_run_consistent(result, config)

    def test_stationary_start(self, quadratic):
        """||g_0|| <= epsilon: no iterations, one gradient and the value at x_0."""
        result = run_restarted_ncg(quadratic, [0.0, 0.0], SolverConfig())
        assert result.status is RunStatus.CONVERGED
        assert result.iterations == 0
        assert result.trace == []
        assert (result.n_f, result.n_g) == (1, 1)
        assert result.final_f == 0.0

    def test_biweight_instance_converges(self, biweight_objective):
        config = SolverConfig.restarted(0.75)
        result = run_restarted_ncg(biweight_objective, np.zeros(30), config)
        assert result.status is RunStatus.CONVERGED
        TestHelpers.assert_run_consistent(result, config)

    def test_first_direction_is_steepest_descent(self, biweight_objective):
        result = run_restarted_ncg(biweight_objective, np.zeros(30), SolverConfig(max_iterations=5))
        first = result.trace[0]
        assert first.restarted and first.beta == 0.0
        assert first.directional_derivative == pytest.approx(-first.grad_norm ** 2)

    def test_evaluation_counts_under_unit_steps(self, tukey_objective):
        config = SolverConfig.restarted(0.5, warm_start=WarmStart.UNIT)
        result = run_restarted_ncg(tukey_objective, np.zeros(30), config)
        assert result.n_f == 1 + sum(record.backtracks + 1 for record in result.trace)
        assert result.n_g == result.iterations + 1

    def test_sufficient_decrease_on_conjugate_iterations(self, biweight_objective):
        """f_k - f_{k+1} > eta sigma alpha_k ||g_k||^{1+p} wherever d_k was not reset."""
        config = SolverConfig.restarted(0.5)
        result = run_restarted_ncg(biweight_objective, np.zeros(30), config)
        values = result.f_values()
        for record, f_next in zip(result.trace, values[1:]):
            if not record.restarted:
                bound = config.eta * config.sigma * record.alpha * record.grad_norm ** (1.0 + config.p)
                assert record.f - f_next > bound

    def test_budget_exhausted(self, biweight_objective):
        result = run_restarted_ncg(biweight_objective, np.zeros(30), SolverConfig(max_iterations=3))
        assert result.status is RunStatus.BUDGET_EXHAUSTED
        assert result.iterations == 3
        assert result.n_g == 4

    def test_relative_stopping(self, quadratic):
        config = SolverConfig(epsilon=1e-3, stop_rule=StopRule.RELATIVE)
        result = run_restarted_ncg(quadratic, [100.0, 0.0], config)
        assert result.converged
        assert result.final_grad_norm <= 1e-3 * 100.0
        assert result.final_grad_norm > 1e-3

    def test_breakdown_keeps_partial_trace(self):
        """A non-finite value during the first line search ends the run as LINESEARCH_FAILED."""
        def value(x):
            return math.nan if x[0] < 0.0 else float(x[0] ** 2)

        obj = Objective(1, value, lambda x: 2.0 * x)
        result = run_restarted_ncg(obj, [1.0], SolverConfig())
        assert result.status is RunStatus.LINESEARCH_FAILED
        assert result.iterations == 0
        assert "non-finite" in result.message

    def test_flat_function_fails_line_search(self):
        obj = Objective(1, lambda x: 1.0, lambda x: np.array([1.0]))
        result = run_restarted_ncg(obj, [0.0], SolverConfig(max_backtracks=4))
        assert result.status is RunStatus.LINESEARCH_FAILED
        assert result.n_f == 6

    def test_bad_start_dimension(self, quadratic):
        with pytest.raises(DimensionError):
            run_restarted_ncg(quadratic, [1.0, 2.0, 3.0], SolverConfig())

    def test_repeated_runs_identical(self, biweight_objective):
        config = SolverConfig.restarted(0.25)
        first = run_restarted_ncg(biweight_objective.fresh(), np.zeros(30), config)
        second = run_restarted_ncg(biweight_objective.fresh(), np.zeros(30), config)
        assert first.trace == second.trace
        assert first.n_f == second.n_f

    def test_restart_step_carries_previous_step_length(self, biweight_objective):
        """After a conjugate step, a restart's trial step is at least 2 alpha_prev ||d_prev|| / ||d_k||."""
        config = SolverConfig.restarted(0.0)
        result = run_restarted_ncg(biweight_objective, np.zeros(30), config)
        transitions = 0
        for previous, record in zip(result.trace, result.trace[1:]):
            ratio = 1.0
            if record.restarted and not previous.restarted:
                transitions += 1
                ratio = max(1.0, previous.direction_norm / record.direction_norm)
            expected = 2.0 * previous.alpha * ratio * config.theta ** record.backtracks
            assert record.alpha == pytest.approx(expected, rel=1e-12)
        assert transitions > 0

    def test_orthogonality_policy(self, tukey_objective):
        config = SolverConfig(restart_policy=RestartKind.ORTHOGONALITY)
        result = run_restarted_ncg(tukey_objective, np.zeros(30), config)
        assert result.converged
        TestHelpers.assert_run_consistent(result, config)


@pytest.mark.unit
class TestGradientDescent:

    def test_quadratic_run_matches_hand_count(self, quadratic):
        expected = TestHelpers.load_expected_response("quadratic_runs.json")["armijo_gd_unit_quadratic"]
        config = SolverConfig(epsilon=expected["epsilon"], warm_start=WarmStart.UNIT)
        result = run_gradient_descent(quadratic, expected["x0"], config)
        assert result.converged
        assert (result.iterations, result.n_f, result.n_g) == (
            expected["iterations"], expected["n_f"], expected["n_g"])
        assert all(r.alpha == expected["alpha"] and r.backtracks == expected["backtracks"]
                   for r in result.trace)

    def test_every_iteration_restarted(self, quadratic):
        result = run_gradient_descent(quadratic, [1.0, -2.0], SolverConfig(epsilon=1e-8))
        assert result.converged
        assert all(r.restarted and r.beta == 0.0 for r in result.trace)
        assert result.restart_pct == 100.0

    def test_biweight_instance_converges(self, biweight_objective):
        config = SolverConfig()
        result = run_gradient_descent(biweight_objective, np.zeros(30), config)
        assert result.converged
        assert result.solver == "ArmijoGD"
        TestHelpers.assert_run_consistent(result, config)


@pytest.mark.unit
class TestSemiAdaptiveGD:

    def test_unit_estimate_accepted(self, quadratic):
        """L = 1: the first proposal x - g lands on the minimiser."""
        result = run_semi_adaptive_gd(quadratic, [1.0, 0.0], SolverConfig(epsilon=1e-8))
        assert result.converged
        assert result.iterations == 1
        assert result.trace[0].backtracks == 0
        assert result.final_f == 0.0

    def test_estimate_doubles_until_acceptance(self):
        expected = TestHelpers.load_expected_response("quadratic_runs.json")["semi_adaptive_scaled_quadratic"]
        obj = TestHelpers.quadratic(2, scale=expected["scale"])
        result = run_semi_adaptive_gd(obj, expected["x0"], SolverConfig(epsilon=1e-8))
        assert result.iterations == expected["iterations"]
        assert result.n_f == expected["n_f"]
        assert result.trace[0].backtracks == expected["backtracks"]
        assert result.trace[0].alpha == expected["alpha"]
        # final estimate 1 / alpha stays within twice the true constant
        assert 1.0 / result.trace[0].alpha <= 2.0 * expected["scale"]

    def test_zero_gradient_start(self, quadratic):
        result = run_semi_adaptive_gd(quadratic, [0.0, 0.0], SolverConfig())
        assert result.converged and result.iterations == 0

    def test_regression_instance(self, tukey_objective):
        config = SolverConfig()
        result = run_semi_adaptive_gd(tukey_objective, np.zeros(30), config)
        assert result.converged
        TestHelpers.assert_run_consistent(result, config)


@pytest.mark.unit
class TestTraceExport:

    def test_columns_and_rows(self, quadratic, tmp_path):
        result = run_restarted_ncg(quadratic, [1.0, 2.0], SolverConfig(epsilon=1e-6))
        path = export_trace_csv(result, tmp_path / "trace.csv")
        frame = pd.read_csv(path)
        expected = TestHelpers.load_expected_response("profile_grids.json")["trace_columns"]
        assert list(frame.columns) == expected == TRACE_COLUMNS
        assert len(frame) == result.iterations

    def test_running_minimum(self, biweight_objective):
        result = run_restarted_ncg(biweight_objective, np.zeros(30), SolverConfig(max_iterations=20))
        frame = trace_frame(result, include_running_min=True)
        assert (frame["min_grad_norm"] <= frame["grad_norm"]).all()
        assert frame["min_grad_norm"].is_monotonic_decreasing
