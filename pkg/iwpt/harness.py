"""
## iwpt.harness

A module containing the experiment drivers: Monte Carlo imaging, the power-threshold sweep,
the RF-chain sweep, the illumination comparison and single solves.

The drivers are coroutines. Sweep points run in worker threads, at most ``workers`` at a
time, and every point derives its randomness from the configured seed, so the written files
do not depend on scheduling.
"""

import asyncio
import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import attr
import numpy as np

from iwpt.channel import ChannelSet, build_channels, dump_channels
from iwpt.digital import (
    SolveDiagnostics,
    SolverConfig,
    TraceKernel,
    build_trace_kernel,
    solve_digital,
    trace_objective,
    write_diagnostics,
)
from iwpt.enums import Architecture
from iwpt.errors import IwptError
from iwpt.helpers import csv_text, graymap_text, write
from iwpt.hybrid import alternating_optimize, compose, write_precoder
from iwpt.imaging import (
    BeamVector,
    condition_number,
    equivalent_channel,
    ls_estimate,
    magnitude_grid,
    rmse,
    simulate_received,
    write_reconstruction,
)
from iwpt.scene import Scene, ScatteringField, scattering_from_bitmap, standard_pattern
from iwpt.type_hints import BinaryMask, Seed, Watts
from iwpt.wpt import beam_harvested_power, e_max, optimal_wpt_beam

__all__ = [
    "ExperimentConfig",
    "TradeoffPoint",
    "TradeoffTrend",
    "RfChainRow",
    "ImagingResult",
    "ImageCase",
    "ExperimentContext",
    "prepare",
    "baseline_beam",
    "monte_carlo",
    "run_imaging_experiment",
    "run_tradeoff_sweep",
    "tradeoff_trend",
    "run_rf_chain_sweep",
    "run_image_comparison",
    "run_solve",
    "TRADEOFF_HEADER",
    "RF_CHAIN_HEADER",
]

logger = logging.getLogger(__name__)

TRADEOFF_HEADER = (
    "architecture",
    "fraction",
    "threshold_w",
    "achieved_power_w",
    "trace_objective",
    "condition_number",
    "rmse",
    "constraint_met",
    "status",
    "note",
)
RF_CHAIN_HEADER = (
    "chains",
    "elements",
    "antennas",
    "fraction",
    "cond_digital",
    "cond_hybrid",
    "rf_chains_digital",
    "rf_chains_hybrid",
    "threshold_w",
    "power_digital_w",
    "power_hybrid_w",
    "status",
    "note",
)
RF_CHAIN_FRACTIONS = (0.0, 0.15)
CONSTRAINT_SLACK = 1e-6
TREND_SLACK = 1e-6


def _fraction_grid(value: Iterable[float]) -> Tuple[float, ...]:
    return tuple(float(fraction) for fraction in value)


def _architectures(value: Iterable) -> Tuple[Architecture, ...]:
    return tuple(Architecture(item) for item in value)


@attr.define(slots=True, frozen=True, eq=False)
class ExperimentConfig:
    """
    A class containing the settings of an experiment run.

    Attributes
    ----------
    scene : Scene
        The scene.
    er_grid : Tuple[float, ...]
        The power thresholds as ascending fractions of E_max in [0, 1].
    trials : int
        The Monte Carlo trial count ``N_t``.
    seed : Seed
        The base seed; trial ``t`` uses ``seed + t``.
    architectures : Tuple[Architecture, ...]
        The architectures and baselines to evaluate.
    output : Path
        The output directory.
    solver : SolverConfig
        The digital solver settings.
    mask : Optional[BinaryMask]
        The scatterer occupancy; the standard pattern resampled to the ROI when omitted.
    workers : int
        The number of sweep points computed concurrently.
    hybrid_iterations : int
        The alternating iterations of the hybrid design.
    dump_channels : Optional[Path]
        Where to write the channel matrices, if anywhere.
    scene_source : str
        A label of where the scene came from.
    """

    scene: Scene
    er_grid: Tuple[float, ...] = attr.field(
        default=(0.0, 0.25, 0.5, 0.75, 1.0), converter=_fraction_grid
    )
    trials: int = attr.field(default=200)
    seed: Seed = 0
    architectures: Tuple[Architecture, ...] = attr.field(
        default=tuple(Architecture), converter=_architectures
    )
    output: Path = attr.field(default=Path("results"), converter=Path)
    solver: SolverConfig = attr.field(factory=SolverConfig)
    mask: Optional[BinaryMask] = None
    workers: int = attr.field(default=4)
    hybrid_iterations: int = 10
    dump_channels: Optional[Path] = attr.field(
        default=None, converter=attr.converters.optional(Path)
    )
    scene_source: str = "preset"

    @er_grid.validator
    def _check_grid(self, attribute, value) -> None:
        if not value:
            raise ValueError("The E_r grid cannot be empty.")
        if any(not 0.0 <= fraction <= 1.0 for fraction in value):
            raise ValueError("E_r fractions must lie in [0, 1].")
        if list(value) != sorted(value):
            raise ValueError("The E_r grid must be sorted ascending.")

    @trials.validator
    def _check_trials(self, attribute, value) -> None:
        if value < 1:
            raise ValueError("At least one Monte Carlo trial is needed.")

    @workers.validator
    def _check_workers(self, attribute, value) -> None:
        if value < 1:
            raise ValueError("At least one worker is needed.")

    def truth(self, scene: Optional[Scene] = None) -> ScatteringField:
        """The scattering field imaged in every experiment."""
        roi = (scene or self.scene).roi
        mask = self.mask if self.mask is not None else standard_pattern(roi.rows, roi.cols)
        return scattering_from_bitmap(mask, roi)


@attr.define(slots=True, frozen=True)
class TradeoffPoint:
    """
    A class representing one row of the trade-off table.
    """

    architecture: Architecture
    fraction: float
    """``E_r / E_max`` in [0, 1]."""
    threshold: Watts
    achieved_power: Watts = math.nan
    trace_objective: float = math.nan
    condition_number: float = math.nan
    """``inf`` when the equivalent channel is singular."""
    rmse: float = math.nan
    constraint_met: bool = False
    status: str = ""
    note: str = ""

    @property
    def failed(self) -> bool:
        """If the point could not be computed."""
        return self.status == "error"

    def to_row(self) -> tuple:
        return (
            self.architecture.value,
            self.fraction,
            self.threshold,
            self.achieved_power,
            self.trace_objective,
            self.condition_number,
            self.rmse,
            self.constraint_met,
            self.status,
            self.note,
        )


def _steps(values: Sequence[float]) -> List[Tuple[float, float]]:
    return list(zip(values, values[1:]))


@attr.define(slots=True, frozen=True)
class TradeoffTrend:
    """
    A class representing how one architecture moves along the threshold grid.

    The trace objective is the quantity the design minimizes over nested feasible sets, so
    it cannot decrease as the threshold rises. The condition number and the RMSE are only
    bounded through it and may move either way.

    Attributes
    ----------
    architecture : Architecture
        The architecture the trend was taken from.
    fractions : Tuple[float, ...]
        The fractions of the computed points, ascending.
    trace_objectives : Tuple[float, ...]
        The trace objective at each fraction.
    condition_numbers : Tuple[float, ...]
        The condition number at each fraction.
    rmses : Tuple[float, ...]
        The Monte Carlo RMSE at each fraction.
    slack : float
        The absolute decrease of the trace objective that is still accepted.
    """

    architecture: Architecture
    fractions: Tuple[float, ...]
    trace_objectives: Tuple[float, ...]
    condition_numbers: Tuple[float, ...]
    rmses: Tuple[float, ...]
    slack: float

    @property
    def trace_nondecreasing(self) -> bool:
        return all(
            after >= before - self.slack for before, after in _steps(self.trace_objectives)
        )

    @property
    def condition_nondecreasing(self) -> bool:
        return all(
            after >= before * (1 - TREND_SLACK)
            for before, after in _steps(self.condition_numbers)
        )


@attr.define(slots=True, frozen=True)
class RfChainRow:
    """
    A class representing one row of the RF-chain table.
    """

    chains: int
    elements: int
    fraction: float
    cond_digital: float = math.nan
    cond_hybrid: float = math.nan
    threshold: Watts = math.nan
    power_digital: Watts = math.nan
    """The power harvested under the digital beam."""
    power_hybrid: Watts = math.nan
    """The power harvested under the hybrid beam. It may fall short of the threshold."""
    status: str = ""
    note: str = ""

    @property
    def antennas(self) -> int:
        return self.chains * self.elements

    @property
    def failed(self) -> bool:
        return self.status == "error"

    @property
    def digital_constraint_met(self) -> bool:
        return self.power_digital >= self.threshold * (1 - CONSTRAINT_SLACK)

    @property
    def hybrid_constraint_met(self) -> bool:
        return self.power_hybrid >= self.threshold * (1 - CONSTRAINT_SLACK)

    def to_row(self) -> tuple:
        return (
            self.chains,
            self.elements,
            self.antennas,
            self.fraction,
            self.cond_digital,
            self.cond_hybrid,
            self.antennas,
            self.chains,
            self.threshold,
            self.power_digital,
            self.power_hybrid,
            self.status,
            self.note,
        )


@attr.define(slots=True, frozen=True, eq=False)
class ImagingResult:
    """
    A class representing the outcome of a Monte Carlo imaging run.
    """

    rmse: float
    mean_estimate: np.ndarray
    grid: np.ndarray
    """The magnitudes of the mean estimate on the ROI grid."""


@attr.define(slots=True, frozen=True)
class ImageCase:
    """
    A class representing one illumination of the imaging comparison.
    """

    name: str
    fraction: float
    rmse: float
    condition_number: float
    achieved_power: Watts


@attr.define(slots=True, frozen=True, eq=False)
class ExperimentContext:
    """
    A class holding everything derived once from a scene.
    """

    scene: Scene
    channels: ChannelSet
    kernel: TraceKernel
    ceiling: Watts
    """E_max."""
    truth: ScatteringField

    @property
    def g(self) -> np.ndarray:
        return self.channels.g


def prepare(config: ExperimentConfig, scene: Optional[Scene] = None) -> ExperimentContext:
    """
    Builds the channels, the kernel, E_max and the scattering truth of a scene.

    :param config: The experiment configuration.
    :type config: ExperimentConfig
    :param scene: A scene overriding ``config.scene``.
    :type scene: Optional[Scene]
    :return: The context.
    :rtype: ExperimentContext
    """
    scene = scene or config.scene
    channels = build_channels(scene)
    return ExperimentContext(
        scene=scene,
        channels=channels,
        kernel=build_trace_kernel(channels),
        ceiling=e_max(channels.g, scene.tx_power, scene.efficiency),
        truth=config.truth(scene),
    )


def baseline_beam(
    kind: Union[Architecture, str],
    channels: ChannelSet,
    g,
    tx_power: Watts,
    efficiency: float,
    config: Optional[SolverConfig] = None,
    seed: Optional[Seed] = 0,
) -> BeamVector:
    """
    A reference illumination.

    ``random`` draws a complex Gaussian vector from ``numpy.random.default_rng(seed)``,
    ``imaging`` solves the digital design with ``E_r = 0`` and ``wpt`` is the closed-form
    power-optimal beam. Each is scaled to ``‖x‖² = P_t``.

    :param kind: The baseline.
    :type kind: Union[Architecture, str]
    :param channels: The channels.
    :type channels: ChannelSet
    :param g: The power-transfer channel ``G``.
    :param tx_power: The transmit power ``P_t``.
    :type tx_power: Watts
    :param efficiency: The conversion efficiency ``ζ``.
    :type efficiency: float
    :param config: The digital solver configuration.
    :type config: Optional[SolverConfig]
    :param seed: The seed of the random baseline.
    :type seed: Optional[Seed]
    :raises: ValueError
    :return: The beam.
    :rtype: BeamVector
    """
    kind = Architecture(kind)
    match kind:
        case Architecture.RANDOM:
            rng = np.random.default_rng(seed)
            size = channels.antennas
            draw = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            return BeamVector.normalized(draw, tx_power)
        case Architecture.IMAGING_ONLY:
            beam, _ = solve_digital(
                build_trace_kernel(channels), g, tx_power, 0.0, efficiency, config
            )
            return beam
        case Architecture.WPT_ONLY:
            return optimal_wpt_beam(g, tx_power)
        case _:
            raise ValueError(f"{kind} is not a baseline.")


def monte_carlo(
    channels: ChannelSet,
    beam,
    truth: ScatteringField,
    noise_power: Watts,
    trials: int,
    seed: Seed,
) -> Tuple[float, np.ndarray]:
    """
    Reconstructs the truth ``trials`` times, trial ``t`` with noise seed ``seed + t``.

    :return: The RMSE and the mean estimate.
    :rtype: Tuple[float, np.ndarray]
    """
    if trials < 1:
        raise ValueError("At least one Monte Carlo trial is needed.")
    channel = equivalent_channel(channels, beam)
    estimates = []
    for trial in range(1, trials + 1):
        received = simulate_received(
            channels, beam, truth, noise_power, seed=seed + trial
        )
        estimates.append(ls_estimate(channel, received))
        logger.debug("Monte Carlo trial %d/%d done", trial, trials)
    return rmse(estimates, truth), np.mean(estimates, axis=0)


async def run_imaging_experiment(
    config: ExperimentConfig,
    beam,
    truth: Optional[ScatteringField] = None,
    *,
    channels: Optional[ChannelSet] = None,
    name: Optional[str] = None,
) -> ImagingResult:
    """
    Runs the Monte Carlo imaging experiment for one illumination.

    When ``name`` is given the mean reconstruction is written to
    ``<output>/<name>.pgm`` and ``<output>/<name>.csv``.

    :param config: The experiment configuration.
    :type config: ExperimentConfig
    :param beam: The illumination.
    :param truth: The scattering field, ``config.truth()`` by default.
    :type truth: Optional[ScatteringField]
    :param channels: Prebuilt channels of ``config.scene``.
    :type channels: Optional[ChannelSet]
    :param name: The base name of the reconstruction files.
    :type name: Optional[str]
    :return: The RMSE and the mean reconstruction.
    :rtype: ImagingResult
    """
    scene = config.scene
    channels = channels or build_channels(scene)
    truth = truth or config.truth()

    error, mean = await asyncio.to_thread(
        monte_carlo,
        channels,
        beam,
        truth,
        scene.noise_power,
        config.trials,
        config.seed,
    )
    grid = magnitude_grid(mean, scene.roi.shape)
    if name is not None:
        await write_reconstruction(grid, config.output, name)
    logger.info("Imaging %s: RMSE=%r over %d trials", name or "run", error, config.trials)
    return ImagingResult(rmse=error, mean_estimate=mean, grid=grid)


def _evaluate(
    context: ExperimentContext,
    config: ExperimentConfig,
    architecture: Architecture,
    fraction: float,
    beam: BeamVector,
    status: str,
    note: str = "",
) -> TradeoffPoint:
    scene = context.scene
    threshold = fraction * context.ceiling
    achieved = beam_harvested_power(context.g, beam, scene.efficiency)
    if architecture is Architecture.RANDOM:
        fraction = min(max(achieved / context.ceiling, 0.0), 1.0)
        threshold = fraction * context.ceiling
    error, _ = monte_carlo(
        context.channels, beam, context.truth, scene.noise_power, config.trials, config.seed
    )
    return TradeoffPoint(
        architecture=architecture,
        fraction=fraction,
        threshold=threshold,
        achieved_power=achieved,
        trace_objective=trace_objective(context.kernel, beam),
        condition_number=condition_number(equivalent_channel(context.channels, beam)),
        rmse=error,
        constraint_met=achieved >= threshold * (1 - CONSTRAINT_SLACK),
        status=status,
        note=note,
    )


def _digital_beam(
    context: ExperimentContext, config: ExperimentConfig, fraction: float
) -> Tuple[BeamVector, SolveDiagnostics]:
    scene = context.scene
    return solve_digital(
        context.kernel,
        context.g,
        scene.tx_power,
        fraction * context.ceiling,
        scene.efficiency,
        config.solver,
    )


def _hybrid_beam(
    context: ExperimentContext, config: ExperimentConfig, digital: BeamVector
) -> Tuple[BeamVector, List[float]]:
    array = context.scene.array
    precoder, residuals = alternating_optimize(
        digital,
        array.rows,
        array.cols,
        context.scene.tx_power,
        max_iterations=config.hybrid_iterations,
        seed=config.seed,
    )
    return compose(precoder), residuals


def _swept_points(
    context: ExperimentContext, config: ExperimentConfig, fraction: float
) -> List[TradeoffPoint]:
    selected = [
        architecture
        for architecture in (Architecture.DIGITAL, Architecture.HYBRID)
        if architecture in config.architectures
    ]
    try:
        digital, diagnostics = _digital_beam(context, config, fraction)
        note = "; ".join(diagnostics.flags)
        points = []
        if Architecture.DIGITAL in selected:
            points.append(
                _evaluate(
                    context,
                    config,
                    Architecture.DIGITAL,
                    fraction,
                    digital,
                    diagnostics.status.value,
                    note,
                )
            )
        if Architecture.HYBRID in selected:
            beam, residuals = _hybrid_beam(context, config, digital)
            points.append(
                _evaluate(
                    context,
                    config,
                    Architecture.HYBRID,
                    fraction,
                    beam,
                    diagnostics.status.value,
                    f"residual={residuals[-1]!r}",
                )
            )
        return points
    except IwptError as error:
        logger.error("Sweep point at fraction %r failed: %s", fraction, error)
        return [
            TradeoffPoint(
                architecture=architecture,
                fraction=fraction,
                threshold=fraction * context.ceiling,
                status="error",
                note=f"{type(error).__name__}: {error}",
            )
            for architecture in selected
        ]


def _baseline_point(
    context: ExperimentContext, config: ExperimentConfig, kind: Architecture
) -> TradeoffPoint:
    fraction = 1.0 if kind is Architecture.WPT_ONLY else 0.0
    scene = context.scene
    try:
        beam = baseline_beam(
            kind,
            context.channels,
            context.g,
            scene.tx_power,
            scene.efficiency,
            config.solver,
            seed=config.seed,
        )
        return _evaluate(context, config, kind, fraction, beam, "baseline")
    except IwptError as error:
        logger.error("Baseline %s failed: %s", kind, error)
        return TradeoffPoint(
            architecture=kind,
            fraction=fraction,
            threshold=fraction * context.ceiling,
            status="error",
            note=f"{type(error).__name__}: {error}",
        )


def _baseline_points(
    context: ExperimentContext, config: ExperimentConfig, kind: Architecture
) -> List[TradeoffPoint]:
    return [_baseline_point(context, config, kind)]


async def _bounded(semaphore: asyncio.Semaphore, func, *args):
    async with semaphore:
        return await asyncio.to_thread(func, *args)


async def _maybe_dump(config: ExperimentConfig, context: ExperimentContext) -> None:
    if config.dump_channels is not None:
        await dump_channels(context.channels, config.dump_channels)


def tradeoff_trend(
    points: Iterable[TradeoffPoint],
    slack: float,
    architecture: Union[Architecture, str] = Architecture.DIGITAL,
) -> TradeoffTrend:
    """
    Collects the computed points of one architecture in fraction order.

    :param points: The sweep points.
    :type points: Iterable[TradeoffPoint]
    :param slack: The accepted decrease of the trace objective between neighbours.
    :type slack: float
    :param architecture: The architecture to follow.
    :type architecture: Union[Architecture, str]
    :return: The trend.
    :rtype: TradeoffTrend
    """
    architecture = Architecture(architecture)
    selected = sorted(
        (
            point
            for point in points
            if point.architecture is architecture and not point.failed
        ),
        key=lambda point: point.fraction,
    )
    return TradeoffTrend(
        architecture=architecture,
        fractions=tuple(point.fraction for point in selected),
        trace_objectives=tuple(point.trace_objective for point in selected),
        condition_numbers=tuple(point.condition_number for point in selected),
        rmses=tuple(point.rmse for point in selected),
        slack=slack,
    )


def _log_trend(trend: TradeoffTrend) -> None:
    if len(trend.fractions) < 2:
        return
    if trend.trace_nondecreasing:
        logger.info(
            "%s trace objective is nondecreasing in E_r: %r",
            trend.architecture,
            trend.trace_objectives,
        )
    else:
        logger.warning(
            "%s trace objective decreases along the grid: %r",
            trend.architecture,
            trend.trace_objectives,
        )
    if not trend.condition_nondecreasing:
        logger.info(
            "%s condition number is not monotone in E_r: %r",
            trend.architecture,
            trend.condition_numbers,
        )


async def run_tradeoff_sweep(config: ExperimentConfig) -> List[TradeoffPoint]:
    """
    Sweeps the power threshold for the selected architectures and appends the selected
    baselines. The table is written to ``<output>/tradeoff.csv`` sorted by
    (architecture, fraction).

    Failed points stay in the table with status ``error``. The digital trace objective is
    checked for monotonicity in ``E_r`` and the result is logged; the condition number is
    logged when it is not monotone.

    :param config: The experiment configuration.
    :type config: ExperimentConfig
    :return: The sorted points.
    :rtype: List[TradeoffPoint]
    """
    context = await asyncio.to_thread(prepare, config)
    await _maybe_dump(config, context)
    logger.info("Trade-off sweep: E_max=%r W, %d thresholds", context.ceiling, len(config.er_grid))

    semaphore = asyncio.Semaphore(config.workers)
    tasks = []
    if Architecture.DIGITAL in config.architectures or Architecture.HYBRID in config.architectures:
        tasks.extend(
            _bounded(semaphore, _swept_points, context, config, fraction)
            for fraction in config.er_grid
        )
    baselines = [kind for kind in config.architectures if kind.is_baseline]
    tasks.extend(
        _bounded(semaphore, _baseline_points, context, config, kind)
        for kind in baselines
    )

    points = [point for group in await asyncio.gather(*tasks) for point in group]
    points.sort(key=lambda point: (point.architecture.value, point.fraction))
    slack = TREND_SLACK * context.kernel.scale * context.scene.tx_power
    if Architecture.DIGITAL in config.architectures:
        _log_trend(tradeoff_trend(points, slack))

    await write(
        csv_text(TRADEOFF_HEADER, (point.to_row() for point in points)),
        config.output / "tradeoff.csv",
    )
    return points


def _rf_chain_rows(
    config: ExperimentConfig, chains: int, fractions: Tuple[float, ...]
) -> List[RfChainRow]:
    scene = config.scene.with_array(rows=chains)
    elements = scene.array.cols
    rows = []
    try:
        context = prepare(config, scene)
    except IwptError as error:
        note = f"{type(error).__name__}: {error}"
        return [
            RfChainRow(chains, elements, fraction, status="error", note=note)
            for fraction in fractions
        ]

    for fraction in fractions:
        try:
            digital, diagnostics = _digital_beam(context, config, fraction)
            hybrid, _ = _hybrid_beam(context, config, digital)
            rows.append(
                RfChainRow(
                    chains,
                    elements,
                    fraction,
                    cond_digital=condition_number(
                        equivalent_channel(context.channels, digital)
                    ),
                    cond_hybrid=condition_number(
                        equivalent_channel(context.channels, hybrid)
                    ),
                    threshold=fraction * context.ceiling,
                    power_digital=beam_harvested_power(
                        context.g, digital, scene.efficiency
                    ),
                    power_hybrid=beam_harvested_power(context.g, hybrid, scene.efficiency),
                    status=diagnostics.status.value,
                    note="; ".join(diagnostics.flags),
                )
            )
        except IwptError as error:
            logger.error("RF-chain point %d/%r failed: %s", chains, fraction, error)
            rows.append(
                RfChainRow(
                    chains,
                    elements,
                    fraction,
                    threshold=fraction * context.ceiling,
                    status="error",
                    note=f"{type(error).__name__}: {error}",
                )
            )
    return rows


async def run_rf_chain_sweep(
    config: ExperimentConfig,
    chain_counts: Sequence[int],
    fractions: Optional[Sequence[float]] = None,
) -> List[RfChainRow]:
    """
    Compares digital and hybrid condition numbers while the number of antenna rows (RF
    chains of the hybrid array) varies, by default at ``E_r = 0`` and
    ``E_r = 0.15 E_max``. The table, with the power each design harvests, is written to
    ``<output>/rf_chains.csv``.

    :param config: The experiment configuration.
    :type config: ExperimentConfig
    :param chain_counts: The numbers of antenna rows ``N_d``.
    :type chain_counts: Sequence[int]
    :param fractions: The power thresholds as fractions of E_max.
    :type fractions: Optional[Sequence[float]]
    :raises: ValueError
    :return: The rows, sorted by (chains, fraction).
    :rtype: List[RfChainRow]
    """
    if not chain_counts or any(count < 1 for count in chain_counts):
        raise ValueError("RF-chain counts must be positive.")
    fractions = RF_CHAIN_FRACTIONS if fractions is None else _fraction_grid(fractions)
    if not fractions or any(not 0.0 <= fraction <= 1.0 for fraction in fractions):
        raise ValueError("E_r fractions must lie in [0, 1].")

    semaphore = asyncio.Semaphore(config.workers)
    groups = await asyncio.gather(
        *(
            _bounded(semaphore, _rf_chain_rows, config, count, fractions)
            for count in chain_counts
        )
    )
    rows = sorted(
        (row for group in groups for row in group),
        key=lambda row: (row.chains, row.fraction),
    )
    await write(
        csv_text(RF_CHAIN_HEADER, (row.to_row() for row in rows)),
        config.output / "rf_chains.csv",
    )
    return rows


async def run_image_comparison(
    config: ExperimentConfig, fraction: Optional[float] = None
) -> List[ImageCase]:
    """
    Images the standard pattern under five illuminations: random, imaging-only,
    WPT-only, and the digital and hybrid designs at ``fraction`` (the first grid value by
    default). Writes one reconstruction per case, ``truth.pgm`` and ``images.csv``.

    :param config: The experiment configuration.
    :type config: ExperimentConfig
    :param fraction: The power threshold of the trade-off designs.
    :type fraction: Optional[float]
    :return: The cases.
    :rtype: List[ImageCase]
    """
    fraction = config.er_grid[0] if fraction is None else fraction
    context = await asyncio.to_thread(prepare, config)
    await _maybe_dump(config, context)
    scene = context.scene

    digital, _ = await asyncio.to_thread(_digital_beam, context, config, fraction)
    hybrid, _ = await asyncio.to_thread(_hybrid_beam, context, config, digital)
    beams = {
        "random": baseline_beam(
            Architecture.RANDOM,
            context.channels,
            context.g,
            scene.tx_power,
            scene.efficiency,
            seed=config.seed,
        ),
        "imaging": (await asyncio.to_thread(_digital_beam, context, config, 0.0))[0],
        "wpt": optimal_wpt_beam(context.g, scene.tx_power),
        "digital": digital,
        "hybrid": hybrid,
    }

    await write(
        graymap_text(magnitude_grid(context.truth.gamma, scene.roi.shape)),
        config.output / "truth.pgm",
    )

    cases = []
    for name, beam in beams.items():
        result = await run_imaging_experiment(
            config, beam, context.truth, channels=context.channels, name=name
        )
        cases.append(
            ImageCase(
                name=name,
                fraction=fraction if name in ("digital", "hybrid") else math.nan,
                rmse=result.rmse,
                condition_number=condition_number(
                    equivalent_channel(context.channels, beam)
                ),
                achieved_power=beam_harvested_power(context.g, beam, scene.efficiency),
            )
        )

    await write(
        csv_text(
            ("case", "fraction", "rmse", "condition_number", "achieved_power_w"),
            (
                (case.name, case.fraction, case.rmse, case.condition_number, case.achieved_power)
                for case in cases
            ),
        ),
        config.output / "images.csv",
    )
    return cases


async def run_solve(
    config: ExperimentConfig,
    architecture: Union[Architecture, str] = Architecture.DIGITAL,
    fraction: Optional[float] = None,
) -> BeamVector:
    """
    Designs one beam and writes ``beam.csv`` (index, re, im). Digital and hybrid designs
    also write ``diagnostics.csv``; hybrid designs write the precoder dump.

    :param config: The experiment configuration.
    :type config: ExperimentConfig
    :param architecture: The design or baseline.
    :type architecture: Union[Architecture, str]
    :param fraction: The power threshold, the first grid value by default.
    :type fraction: Optional[float]
    :raises: IwptError
    :return: The beam.
    :rtype: BeamVector
    """
    architecture = Architecture(architecture)
    fraction = config.er_grid[0] if fraction is None else fraction
    context = await asyncio.to_thread(prepare, config)
    await _maybe_dump(config, context)
    scene = context.scene

    if architecture.is_baseline:
        beam = await asyncio.to_thread(
            baseline_beam,
            architecture,
            context.channels,
            context.g,
            scene.tx_power,
            scene.efficiency,
            config.solver,
            config.seed,
        )
    else:
        beam, diagnostics = await asyncio.to_thread(_digital_beam, context, config, fraction)
        await write_diagnostics(diagnostics, config.output / "diagnostics.csv")
        if architecture is Architecture.HYBRID:
            array = scene.array
            precoder, _ = await asyncio.to_thread(
                alternating_optimize,
                beam,
                array.rows,
                array.cols,
                scene.tx_power,
                config.hybrid_iterations,
                config.seed,
            )
            await write_precoder(precoder, config.output)
            beam = compose(precoder)

    await write(
        csv_text(
            ("index", "re", "im"),
            ((index, value.real, value.imag) for index, value in enumerate(beam.x)),
        ),
        config.output / "beam.csv",
    )
    return beam
