import asyncio
import math

import numpy as np
import pytest

from iwpt.channel import build_channels
from iwpt.digital import SolverConfig
from iwpt.enums import Architecture
from iwpt.harness import (
    RF_CHAIN_HEADER,
    TRADEOFF_HEADER,
    ExperimentConfig,
    TradeoffPoint,
    baseline_beam,
    prepare,
    run_image_comparison,
    run_imaging_experiment,
    run_rf_chain_sweep,
    run_solve,
    run_tradeoff_sweep,
    tradeoff_trend,
)
from iwpt.imaging import equivalent_channel, ls_estimate, simulate_received
from iwpt.wpt import beam_harvested_power, e_max, optimal_wpt_beam
from tests.helpers import DESK_FRACTIONS, close_scene, make_scene, random_beam

FAST_SOLVER = SolverConfig(max_iterations=10)


def experiment(scene, output, **overrides):
    settings = dict(
        scene=scene,
        er_grid=(0.0, 0.5, 1.0),
        trials=3,
        seed=4,
        output=output,
        solver=FAST_SOLVER,
        workers=2,
    )
    settings.update(overrides)
    return ExperimentConfig(**settings)


def read_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_random_baseline_is_seeded(tiny_channels):
    g = tiny_channels.g
    first = baseline_beam("random", tiny_channels, g, 2.0, 0.5, seed=3)
    second = baseline_beam(Architecture.RANDOM, tiny_channels, g, 2.0, 0.5, seed=3)
    other = baseline_beam(Architecture.RANDOM, tiny_channels, g, 2.0, 0.5, seed=4)
    np.testing.assert_array_equal(first.x, second.x)
    assert not np.array_equal(first.x, other.x)
    assert first.power == pytest.approx(2.0, rel=1e-12)


def test_wpt_baseline_is_the_power_optimum(tiny_channels):
    g = tiny_channels.g
    beam = baseline_beam(Architecture.WPT_ONLY, tiny_channels, g, 1.0, 0.5)
    np.testing.assert_array_equal(beam.x, optimal_wpt_beam(g, 1.0).x)


def test_imaging_baseline_has_full_power(tiny_channels, solver_config):
    beam = baseline_beam(
        Architecture.IMAGING_ONLY, tiny_channels, tiny_channels.g, 1.0, 0.5, solver_config
    )
    assert beam.power == pytest.approx(1.0, rel=1e-12)


def test_swept_designs_are_not_baselines(tiny_channels):
    with pytest.raises(ValueError):
        baseline_beam(Architecture.DIGITAL, tiny_channels, tiny_channels.g, 1.0, 0.5)


def test_invalid_experiment_configs(tiny_scene):
    with pytest.raises(ValueError):
        ExperimentConfig(scene=tiny_scene, er_grid=(0.5, 0.25))
    with pytest.raises(ValueError):
        ExperimentConfig(scene=tiny_scene, er_grid=(0.0, 1.5))
    with pytest.raises(ValueError):
        ExperimentConfig(scene=tiny_scene, er_grid=())
    with pytest.raises(ValueError):
        ExperimentConfig(scene=tiny_scene, trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(scene=tiny_scene, architectures=["analog"])


def test_noiseless_imaging_is_exact(rng, tmp_path):
    scene = close_scene(noise_power=0.0)
    config = experiment(scene, tmp_path)
    beam = random_beam(rng, scene.array.size)
    result = asyncio.run(run_imaging_experiment(config, beam))
    assert result.rmse <= 1e-6
    np.testing.assert_allclose(result.mean_estimate, config.truth().gamma, atol=1e-6)
    assert result.grid.shape == scene.roi.shape
    assert not any(tmp_path.iterdir())


def test_single_trial_matches_one_estimate(rng, tmp_path):
    scene = close_scene(noise_power=1e-12)
    config = experiment(scene, tmp_path, trials=1, seed=9)
    channels = build_channels(scene)
    truth = config.truth()
    beam = random_beam(rng, scene.array.size)

    received = simulate_received(channels, beam, truth, scene.noise_power, seed=10)
    estimate = ls_estimate(equivalent_channel(channels, beam), received)
    expected = np.linalg.norm(estimate - truth.gamma)

    result = asyncio.run(run_imaging_experiment(config, beam, channels=channels))
    assert result.rmse == pytest.approx(expected, rel=1e-12)


def test_rmse_grows_with_the_noise_amplitude(rng, tmp_path):
    beam = random_beam(rng, 16)
    quiet = experiment(close_scene(noise_power=1e-12), tmp_path, trials=5)
    loud = experiment(close_scene(noise_power=2e-12), tmp_path, trials=5)
    first = asyncio.run(run_imaging_experiment(quiet, beam)).rmse
    second = asyncio.run(run_imaging_experiment(loud, beam)).rmse
    assert second / first == pytest.approx(math.sqrt(2), rel=1e-3)


def test_named_imaging_run_writes_the_reconstruction(rng, tmp_path, imaging_scene):
    config = experiment(imaging_scene, tmp_path)
    asyncio.run(
        run_imaging_experiment(config, random_beam(rng, imaging_scene.array.size), name="scan")
    )
    assert (tmp_path / "scan.pgm").read_text().startswith("P2\n2 2\n255\n")
    assert len((tmp_path / "scan.csv").read_text().splitlines()) == 1 + 4


def test_tradeoff_sweep(tmp_path, imaging_scene):
    config = experiment(imaging_scene, tmp_path)
    points = asyncio.run(run_tradeoff_sweep(config))

    assert len(points) == 2 * 3 + 3
    assert [point.architecture for point in points] == sorted(
        (point.architecture for point in points), key=lambda architecture: architecture.value
    )
    assert not any(point.failed for point in points)

    by_key = {(point.architecture, point.fraction): point for point in points}
    ceiling = prepare(config).ceiling

    digital_zero = by_key[Architecture.DIGITAL, 0.0]
    imaging = by_key[Architecture.IMAGING_ONLY, 0.0]
    assert digital_zero.trace_objective == pytest.approx(imaging.trace_objective, rel=1e-9)

    saturated = by_key[Architecture.DIGITAL, 1.0]
    wpt = by_key[Architecture.WPT_ONLY, 1.0]
    assert saturated.status == "saturated"
    assert saturated.achieved_power == pytest.approx(wpt.achieved_power, rel=1e-9)
    assert wpt.achieved_power == pytest.approx(ceiling, rel=1e-9)

    for point in points:
        if point.architecture is Architecture.DIGITAL:
            assert point.constraint_met or "violated" in point.note
        if point.architecture is Architecture.HYBRID:
            assert point.note.startswith("residual=")

    random_point = next(p for p in points if p.architecture is Architecture.RANDOM)
    assert 0.0 <= random_point.fraction <= 1.0
    assert random_point.achieved_power == pytest.approx(random_point.threshold, rel=1e-12)
    assert random_point.constraint_met

    header, rows = read_rows(tmp_path / "tradeoff.csv")
    assert tuple(header) == TRADEOFF_HEADER
    assert len(rows) == len(points)
    assert rows[0][0] == "digital"


def test_tradeoff_sweep_is_reproducible(tmp_path, imaging_scene):
    settings = dict(
        er_grid=(0.0, 0.5),
        architectures=(Architecture.DIGITAL, Architecture.RANDOM),
    )
    for name, workers in (("a", 1), ("b", 3)):
        config = experiment(imaging_scene, tmp_path / name, workers=workers, **settings)
        asyncio.run(run_tradeoff_sweep(config))
    first = (tmp_path / "a" / "tradeoff.csv").read_bytes()
    second = (tmp_path / "b" / "tradeoff.csv").read_bytes()
    assert first == second


def test_failed_points_stay_in_the_table(tmp_path, imaging_scene):
    config = experiment(
        imaging_scene,
        tmp_path,
        er_grid=(0.5, 1.0),
        architectures=(Architecture.DIGITAL,),
        solver=SolverConfig(solvers=("NOT_A_SOLVER",)),
    )
    points = asyncio.run(run_tradeoff_sweep(config))
    assert [point.status for point in points] == ["error", "saturated"]
    assert points[0].failed
    assert points[0].note.startswith("SolverError")
    assert math.isnan(points[0].rmse)

    _, rows = read_rows(tmp_path / "tradeoff.csv")
    assert rows[0][8] == "error"
    assert rows[0][6] == "nan"


def sweep_point(architecture, fraction, objective, cond=1.0, status="rank-one"):
    return TradeoffPoint(
        architecture=Architecture(architecture),
        fraction=fraction,
        threshold=fraction,
        trace_objective=objective,
        condition_number=cond,
        status=status,
    )


def test_tradeoff_trend_follows_one_architecture():
    points = [
        sweep_point("digital", 0.5, 2.0, cond=3.0),
        sweep_point("hybrid", 0.0, 5.0),
        sweep_point("digital", 0.0, 1.0, cond=4.0),
        sweep_point("digital", 0.25, math.nan, status="error"),
        sweep_point("digital", 1.0, 2.0 - 1e-9, cond=3.5),
    ]
    trend = tradeoff_trend(points, slack=1e-8)
    assert trend.architecture is Architecture.DIGITAL
    assert trend.fractions == (0.0, 0.5, 1.0)
    assert trend.trace_objectives == (1.0, 2.0, 2.0 - 1e-9)
    assert trend.trace_nondecreasing
    assert not trend.condition_nondecreasing
    assert not tradeoff_trend(points, slack=1e-10).trace_nondecreasing
    assert tradeoff_trend(points, 0.0, "hybrid").fractions == (0.0,)


def test_desk_sweep_trace_objective_is_nondecreasing(tmp_path, desk, desk_kernel):
    config = ExperimentConfig(
        scene=desk,
        er_grid=DESK_FRACTIONS,
        trials=1,
        architectures=(Architecture.DIGITAL,),
        output=tmp_path,
    )
    points = asyncio.run(run_tradeoff_sweep(config))

    assert [p.fraction for p in points] == list(DESK_FRACTIONS)
    assert not any(p.failed for p in points)
    trend = tradeoff_trend(points, slack=1e-6 * desk_kernel.scale * desk.tx_power)
    assert trend.fractions == DESK_FRACTIONS
    assert trend.trace_nondecreasing

    _, rows = read_rows(tmp_path / "tradeoff.csv")
    column = TRADEOFF_HEADER.index("trace_objective")
    written = [float(row[column]) for row in rows]
    assert written == pytest.approx(list(trend.trace_objectives), rel=1e-12)


def test_single_element_rows_give_equal_condition_numbers(tmp_path):
    scene = make_scene(rows=3, cols=1)
    config = experiment(scene, tmp_path)
    rows = asyncio.run(run_rf_chain_sweep(config, [3, 2]))

    assert [(row.chains, row.fraction) for row in rows] == [
        (2, 0.0),
        (2, 0.15),
        (3, 0.0),
        (3, 0.15),
    ]
    for row in rows:
        assert not row.failed
        assert row.elements == 1
        assert row.cond_hybrid == pytest.approx(row.cond_digital, rel=1e-6)

    header, written = read_rows(tmp_path / "rf_chains.csv")
    assert tuple(header) == RF_CHAIN_HEADER
    assert written[0][:3] == ["2", "1", "2"]
    assert written[0][6:8] == ["2", "2"]


def test_rf_chain_table_counts_chains(tmp_path):
    config = experiment(make_scene(rows=2, cols=2), tmp_path)
    rows = asyncio.run(run_rf_chain_sweep(config, [2]))
    assert [row.to_row()[6:8] for row in rows] == [(4, 2), (4, 2)]


def test_rf_chain_sweep_with_subarrays(tmp_path):
    config = experiment(make_scene(rows=3, cols=2), tmp_path)
    rows = asyncio.run(run_rf_chain_sweep(config, [2, 3]))

    assert [(row.chains, row.fraction) for row in rows] == [
        (2, 0.0),
        (2, 0.15),
        (3, 0.0),
        (3, 0.15),
    ]
    for row in rows:
        assert not row.failed
        assert row.elements == 2
        assert math.isfinite(row.cond_digital)
        assert math.isfinite(row.cond_hybrid)
        assert row.power_digital > 0
        assert row.power_hybrid > 0
        assert row.digital_constraint_met or "violated" in row.note
        if row.fraction == 0.0:
            assert row.hybrid_constraint_met

    header, written = read_rows(tmp_path / "rf_chains.csv")
    power = header.index("power_hybrid_w")
    assert [float(line[power]) for line in written] == pytest.approx(
        [row.power_hybrid for row in rows], rel=1e-12
    )


def test_rf_chain_sweep_uses_the_given_fractions(tmp_path):
    config = experiment(make_scene(rows=2, cols=2), tmp_path)
    rows = asyncio.run(run_rf_chain_sweep(config, [2], fractions=(0.0, 0.3)))
    assert [row.fraction for row in rows] == [0.0, 0.3]
    assert rows[1].threshold == pytest.approx(0.3 * prepare(config).ceiling, rel=1e-12)
    with pytest.raises(ValueError):
        asyncio.run(run_rf_chain_sweep(config, [2], fractions=(1.5,)))


def test_rf_chain_counts_must_be_positive(tmp_path, tiny_scene):
    with pytest.raises(ValueError):
        asyncio.run(run_rf_chain_sweep(experiment(tiny_scene, tmp_path), [0]))


def test_solve_digital_writes_beam_and_diagnostics(tmp_path, imaging_scene):
    config = experiment(imaging_scene, tmp_path, er_grid=(0.3,))
    beam = asyncio.run(run_solve(config, "digital"))
    assert beam.power == pytest.approx(imaging_scene.tx_power, rel=1e-12)

    header, rows = read_rows(tmp_path / "beam.csv")
    assert header == ["index", "re", "im"]
    assert len(rows) == imaging_scene.array.size
    assert complex(float(rows[0][1]), float(rows[0][2])) == beam.x[0]
    assert (tmp_path / "diagnostics.csv").exists()
    assert not (tmp_path / "phases.csv").exists()


def test_solve_hybrid_writes_the_precoder(tmp_path, imaging_scene):
    config = experiment(imaging_scene, tmp_path, er_grid=(0.3,))
    beam = asyncio.run(run_solve(config, Architecture.HYBRID))
    assert beam.power == pytest.approx(imaging_scene.tx_power, rel=1e-12)
    for name in ("beam.csv", "diagnostics.csv", "phases.csv", "digital.csv"):
        assert (tmp_path / name).exists()
    _, phases = read_rows(tmp_path / "phases.csv")
    assert len(phases) == imaging_scene.array.size


def test_solve_baseline_skips_diagnostics(tmp_path, imaging_scene):
    config = experiment(imaging_scene, tmp_path)
    beam = asyncio.run(run_solve(config, Architecture.WPT_ONLY))
    channels = build_channels(imaging_scene)
    ceiling = e_max(channels.g, imaging_scene.tx_power, imaging_scene.efficiency)
    achieved = beam_harvested_power(channels.g, beam, imaging_scene.efficiency)
    assert achieved == pytest.approx(ceiling, rel=1e-9)
    assert (tmp_path / "beam.csv").exists()
    assert not (tmp_path / "diagnostics.csv").exists()


def test_image_comparison(tmp_path, imaging_scene):
    config = experiment(imaging_scene, tmp_path, er_grid=(0.15,), trials=2)
    cases = asyncio.run(run_image_comparison(config))

    assert [case.name for case in cases] == ["random", "imaging", "wpt", "digital", "hybrid"]
    assert cases[3].fraction == 0.15
    assert math.isnan(cases[0].fraction)
    assert cases[2].achieved_power == max(case.achieved_power for case in cases)

    for name in ("truth", "random", "imaging", "wpt", "digital", "hybrid"):
        assert (tmp_path / f"{name}.pgm").exists()
    header, rows = read_rows(tmp_path / "images.csv")
    assert header == ["case", "fraction", "rmse", "condition_number", "achieved_power_w"]
    assert [row[0] for row in rows] == ["random", "imaging", "wpt", "digital", "hybrid"]


def test_channel_dump(tmp_path, imaging_scene):
    config = experiment(
        imaging_scene,
        tmp_path / "out",
        er_grid=(0.0,),
        architectures=(Architecture.WPT_ONLY,),
        dump_channels=tmp_path / "channels",
    )
    asyncio.run(run_tradeoff_sweep(config))
    names = sorted(path.name for path in (tmp_path / "channels").iterdir())
    assert names == ["g.csv", "h_r.csv", "h_t.csv"]
