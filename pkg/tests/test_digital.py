import asyncio
import math

import attr
import numpy as np
import pytest

from iwpt.conic import SdpSolution
from iwpt.digital import (
    RANK_FLAG,
    WPT_VIOLATION_FLAG,
    SolverConfig,
    TraceKernel,
    penalty_residual,
    solve_digital,
    solve_qsdp_subproblem,
    trace_objective,
    write_diagnostics,
)
from iwpt.enums import Architecture, SolveStatus
from iwpt.errors import InfeasibleThresholdError, SolverError
from iwpt.harness import baseline_beam
from iwpt.imaging import equivalent_channel
from iwpt.matrix_helpers import dominant_eigenpair
from iwpt.wpt import CovarianceMatrix, beam_harvested_power, e_max, optimal_wpt_beam
from tests.helpers import DESK_FRACTIONS, random_beam, random_psd

# Two antennas, one receiver seeing their sum: the optimum at E_r = 1.5 W puts the beam
# at angle π/12 with objective 2 − √3/2.
TOY_KERNEL = np.diag([1.0, 3.0]).astype(complex)
TOY_GAIN = np.array([[1.0, 1.0]], dtype=complex)
TOY_OPTIMUM = 2 - math.sqrt(3) / 2


@attr.define
class ScriptedBackend:
    """Returns canned covariances in turn, or raises once they run out."""

    matrices: list
    calls: int = 0

    def solve(self, problem):
        if self.calls >= len(self.matrices):
            raise SolverError("scripted failure")
        matrix = np.asarray(self.matrices[self.calls], dtype=complex)
        self.calls += 1
        return SdpSolution(matrix=matrix, status="optimal", solver="scripted")


def test_trace_identity(rng, tiny_channels, tiny_kernel):
    for _ in range(50):
        x = random_beam(rng, tiny_channels.antennas, power=2.0)
        channel = equivalent_channel(tiny_channels, x).matrix
        expected = np.linalg.norm(channel) ** 2
        assert trace_objective(tiny_kernel, x) == pytest.approx(expected, rel=1e-10)


def test_kernel_trace_formula(tiny_channels, tiny_kernel):
    expected = sum(
        np.linalg.norm(tiny_channels.h_r[:, k]) ** 2 * np.linalg.norm(tiny_channels.h_t[k]) ** 2
        for k in range(tiny_channels.cells)
    )
    assert np.trace(tiny_kernel.matrix).real == pytest.approx(expected, rel=1e-12)
    assert tiny_kernel.scale == pytest.approx(expected / tiny_channels.antennas, rel=1e-12)


def test_kernel_is_hermitian_psd(tiny_kernel):
    matrix = tiny_kernel.matrix
    np.testing.assert_array_equal(matrix, matrix.conj().T)
    values = np.linalg.eigvalsh(matrix)
    assert values.min() >= -1e-12 * values.max()


def test_trace_objective_examples(rng):
    x = random_beam(rng, 4, power=3.0)
    assert trace_objective(np.eye(4), x) == pytest.approx(3.0)
    assert trace_objective(TraceKernel(np.eye(4, dtype=complex)), np.zeros(4)) == 0.0


def test_penalty_residual(rng):
    x = random_beam(rng, 4, power=2.0)
    assert penalty_residual(np.outer(x, x.conj())) == pytest.approx(0.0, abs=1e-12)
    assert penalty_residual(np.eye(2)) == pytest.approx(1.0)
    assert penalty_residual(random_psd(rng, 4, rank=3)) > 0


def test_linearization_is_a_minorant(rng):
    previous = random_psd(rng, 4, rank=2)
    _, direction = dominant_eigenpair(previous)
    for _ in range(20):
        candidate = random_psd(rng, 4)
        largest, _ = dominant_eigenpair(candidate)
        linearized = np.vdot(direction, candidate @ direction).real
        assert largest >= linearized - 1e-12


def test_subproblem_with_identity_kernel(rng):
    g = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    threshold = 0.5 * e_max(g, 1.0, 0.5)
    result = solve_qsdp_subproblem(
        np.eye(3), g, 1.0, threshold, 0.5, random_psd(rng, 3), penalty=0.0
    )
    assert result.power == pytest.approx(1.0, rel=1e-9)
    harvested = 0.5 * np.trace(g @ result.matrix @ g.conj().T).real
    assert harvested >= threshold * (1 - 1e-6)


def test_subproblem_at_the_ceiling_returns_the_power_optimum(rng):
    g = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    ceiling = e_max(g, 1.0, 0.5)
    result = solve_qsdp_subproblem(
        np.eye(3), g, 1.0, ceiling, 0.5, np.eye(3) / 3, penalty=0.1
    )
    expected = CovarianceMatrix.from_beam(optimal_wpt_beam(g, 1.0)).matrix
    np.testing.assert_allclose(result.matrix, expected, atol=1e-12)


def test_subproblem_matches_grid_search():
    angles = np.linspace(0.0, math.pi, 200_001)
    feasible = 1 + np.sin(2 * angles) >= 1.5
    grid = np.min(1 + 2 * np.sin(angles[feasible]) ** 2)
    # spacing π/200000 with unit slope at the optimum bounds the grid error by ~1.6e-5
    assert grid == pytest.approx(TOY_OPTIMUM, rel=1e-4)

    result = solve_qsdp_subproblem(
        TOY_KERNEL, TOY_GAIN, 1.0, 1.5, 1.0, np.eye(2) / 2, penalty=0.0
    )
    assert np.trace(TOY_KERNEL @ result.matrix).real == pytest.approx(grid, rel=1e-3)


def test_subproblem_rejects_infeasible_thresholds():
    with pytest.raises(InfeasibleThresholdError):
        solve_qsdp_subproblem(TOY_KERNEL, TOY_GAIN, 1.0, 2.5, 1.0, np.eye(2) / 2, 0.0)
    with pytest.raises(InfeasibleThresholdError):
        solve_qsdp_subproblem(TOY_KERNEL, TOY_GAIN, 1.0, -0.1, 1.0, np.eye(2) / 2, 0.0)


def test_digital_solve_on_toy_problem():
    beam, diagnostics = solve_digital(TOY_KERNEL, TOY_GAIN, 1.0, 1.5, 1.0)
    assert trace_objective(TOY_KERNEL, beam) == pytest.approx(TOY_OPTIMUM, rel=1e-3)
    assert beam.power == pytest.approx(1.0, rel=1e-12)
    assert diagnostics.penalty == pytest.approx(1e-2 * 2.0)


def test_zero_threshold_minimizes_the_kernel(
    tiny_scene, tiny_channels, tiny_kernel, solver_config
):
    beam, diagnostics = solve_digital(
        tiny_kernel,
        tiny_channels.g,
        tiny_scene.tx_power,
        0.0,
        tiny_scene.efficiency,
        solver_config,
    )
    smallest = np.linalg.eigvalsh(tiny_kernel.matrix)[0]
    bound = (smallest + diagnostics.penalty) * tiny_scene.tx_power
    assert trace_objective(tiny_kernel, beam) <= bound + 1e-6 * tiny_kernel.scale
    assert trace_objective(tiny_kernel, beam) < tiny_kernel.scale * tiny_scene.tx_power


def test_ceiling_threshold_returns_the_power_beam(tiny_scene, tiny_channels, tiny_kernel):
    g = tiny_channels.g
    ceiling = e_max(g, tiny_scene.tx_power, tiny_scene.efficiency)
    beam, diagnostics = solve_digital(
        tiny_kernel, g, tiny_scene.tx_power, ceiling, tiny_scene.efficiency
    )
    expected = optimal_wpt_beam(g, tiny_scene.tx_power)
    assert diagnostics.status is SolveStatus.SATURATED
    assert diagnostics.iterations == 0
    assert abs(np.vdot(expected.x, beam.x)) == pytest.approx(tiny_scene.tx_power, rel=1e-9)
    assert not diagnostics.flagged


def test_beam_meets_the_constraints_or_is_flagged(
    tiny_scene, tiny_channels, tiny_kernel, solver_config
):
    g = tiny_channels.g
    ceiling = e_max(g, tiny_scene.tx_power, tiny_scene.efficiency)
    for fraction in (0.25, 0.6):
        threshold = fraction * ceiling
        beam, diagnostics = solve_digital(
            tiny_kernel, g, tiny_scene.tx_power, threshold, tiny_scene.efficiency, solver_config
        )
        assert beam.power == pytest.approx(tiny_scene.tx_power, rel=1e-12)
        assert diagnostics.trace_slack == pytest.approx(0.0, abs=1e-12)
        achieved = beam_harvested_power(g, beam, tiny_scene.efficiency)
        assert diagnostics.power_slack == pytest.approx(achieved - threshold, abs=1e-15)
        if achieved < threshold * (1 - 1e-6):
            assert WPT_VIOLATION_FLAG in diagnostics.flags
        if diagnostics.status is SolveStatus.RANK_ONE:
            assert diagnostics.final_eigen_ratio <= 1e-3
        else:
            assert RANK_FLAG in diagnostics.flags


def test_penalized_objective_never_increases(
    tiny_scene, tiny_channels, tiny_kernel, solver_config
):
    g = tiny_channels.g
    threshold = 0.5 * e_max(g, tiny_scene.tx_power, tiny_scene.efficiency)
    _, diagnostics = solve_digital(
        tiny_kernel, g, tiny_scene.tx_power, threshold, tiny_scene.efficiency, solver_config
    )
    slack = 1e-6 * np.trace(tiny_kernel.matrix).real * tiny_scene.tx_power
    values = diagnostics.penalized_objectives
    assert diagnostics.records[0].iteration == 0
    assert diagnostics.records[0].penalty_residual == pytest.approx(0.0, abs=1e-12)
    for before, after in zip(values, values[1:]):
        assert after <= before + slack
    assert all(residual >= -1e-8 for residual in diagnostics.penalty_residuals)


def test_objective_grows_with_the_threshold(desk, desk_kernel, desk_solves):
    slack = 1e-6 * desk_kernel.scale * desk.tx_power
    objectives = [
        trace_objective(desk_kernel, desk_solves[fraction][0]) for fraction in DESK_FRACTIONS
    ]
    for lower, upper in zip(objectives, objectives[1:]):
        assert upper >= lower - slack


@pytest.mark.parametrize("fraction", [0.0, 0.25, 0.5, 0.75])
def test_desk_solves_reach_rank_one(desk, desk_kernel, desk_solves, fraction):
    beam, diagnostics = desk_solves[fraction]
    assert diagnostics.status is SolveStatus.RANK_ONE
    assert diagnostics.final_eigen_ratio <= 1e-3
    assert RANK_FLAG not in diagnostics.flags
    assert beam.power == pytest.approx(desk.tx_power, rel=1e-12)

    slack = 1e-6 * np.trace(desk_kernel.matrix).real * desk.tx_power
    values = diagnostics.penalized_objectives
    for before, after in zip(values, values[1:]):
        assert after <= before + slack
    assert all(
        residual >= -1e-8 * desk.tx_power for residual in diagnostics.penalty_residuals
    )


def test_desk_ceiling_aligns_with_the_power_beam(desk, desk_channels, desk_solves):
    beam, diagnostics = desk_solves[1.0]
    expected = optimal_wpt_beam(desk_channels.g, desk.tx_power)
    assert diagnostics.status is SolveStatus.SATURATED
    assert abs(np.vdot(expected.x, beam.x)) / desk.tx_power >= 0.999


def test_zero_threshold_beats_random_beams(desk, desk_channels, desk_kernel, desk_solves):
    designed = trace_objective(desk_kernel, desk_solves[0.0][0])
    for seed in range(10):
        random = baseline_beam(
            Architecture.RANDOM,
            desk_channels,
            desk_channels.g,
            desk.tx_power,
            desk.efficiency,
            seed=seed,
        )
        assert designed < trace_objective(desk_kernel, random)


def test_infeasible_thresholds_raise(tiny_scene, tiny_channels, tiny_kernel):
    g = tiny_channels.g
    ceiling = e_max(g, tiny_scene.tx_power, tiny_scene.efficiency)
    for threshold in (1.01 * ceiling, -1e-9):
        with pytest.raises(InfeasibleThresholdError):
            solve_digital(tiny_kernel, g, tiny_scene.tx_power, threshold, tiny_scene.efficiency)


def test_rank_one_iterate_stops_the_loop():
    backend = ScriptedBackend([np.diag([1.0, 0.0])])
    beam, diagnostics = solve_digital(TOY_KERNEL, TOY_GAIN, 1.0, 0.5, 1.0, backend=backend)
    assert diagnostics.status is SolveStatus.RANK_ONE
    assert diagnostics.iterations == 1
    assert abs(beam.x[0]) == pytest.approx(1.0)
    assert not diagnostics.flagged


def test_repeated_iterate_stalls():
    backend = ScriptedBackend([np.eye(2) / 2] * 5)
    _, diagnostics = solve_digital(TOY_KERNEL, TOY_GAIN, 1.0, 0.5, 1.0, backend=backend)
    assert diagnostics.status is SolveStatus.STALLED
    assert diagnostics.iterations == 2
    assert RANK_FLAG in diagnostics.flags


def test_iteration_limit():
    swinging = [np.diag([0.7, 0.3]), np.diag([0.3, 0.7])] * 2
    config = SolverConfig(max_iterations=3)
    _, diagnostics = solve_digital(
        TOY_KERNEL, TOY_GAIN, 1.0, 0.5, 1.0, config, backend=ScriptedBackend(swinging)
    )
    assert diagnostics.status is SolveStatus.ITERATION_LIMIT
    assert diagnostics.iterations == 3
    assert RANK_FLAG in diagnostics.flags


def test_backend_failure_carries_diagnostics():
    with pytest.raises(SolverError) as info:
        solve_digital(TOY_KERNEL, TOY_GAIN, 1.0, 0.5, 1.0, backend=ScriptedBackend([]))
    assert info.value.diagnostics is not None
    assert info.value.diagnostics.iterations == 0


def test_non_psd_iterate_raises():
    backend = ScriptedBackend([np.diag([1.1, -0.1])])
    with pytest.raises(SolverError):
        solve_digital(TOY_KERNEL, TOY_GAIN, 1.0, 0.5, 1.0, backend=backend)


def test_penalty_defaults():
    kernel = TraceKernel(TOY_KERNEL)
    assert SolverConfig().penalty_for(kernel) == pytest.approx(0.02)
    assert SolverConfig(penalty_scale=100).penalty_for(kernel) == pytest.approx(200.0)
    assert SolverConfig(penalty=0.5).penalty_for(kernel) == 0.5
    assert SolverConfig().penalty_for(TraceKernel(np.zeros((2, 2), complex))) == 1.0


def test_invalid_solver_config():
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(penalty=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(rank_tolerance=0.0)


def test_write_diagnostics(tmp_path):
    backend = ScriptedBackend([np.eye(2) / 2] * 5)
    _, diagnostics = solve_digital(TOY_KERNEL, TOY_GAIN, 1.0, 0.5, 1.0, backend=backend)
    path = asyncio.run(write_diagnostics(diagnostics, tmp_path / "diagnostics.csv"))
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,objective,penalty_residual,lambda2_over_lambda1"
    assert len(lines) == 1 + len(diagnostics.records)
    assert lines[1].startswith("0,")
    assert float(lines[-1].split(",")[-1]) == pytest.approx(1.0)
