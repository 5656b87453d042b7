"""
Simulate integrated imaging and wireless power transfer with near-field arrays.
"""

__title__: str = "iwpt"
__author__: str = "notanerd"
__license__: str = "MIT"
__copyright__: str = "Copyright 2024 notanerd"
__version__: str = "0.1.0"

__description__ = "Beam design trading imaging quality against harvested power."

from collections import namedtuple

from iwpt.errors import (
    IwptError,
    DimensionMismatch,
    ChannelError,
    DegenerateInputError,
    NotHermitianError,
    InfeasibleThresholdError,
    SolverError,
    SceneConfigError,
    InvalidSceneError,
)
from iwpt.enums import Architecture, SolveStatus, Preset
from iwpt.scene import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    RoiGrid,
    ReceiverSet,
    Scene,
    ScatteringField,
    paper_scene,
    desk_scene,
    scene_validate,
    scattering_from_bitmap,
    standard_pattern,
)
from iwpt.config import load_scene, scene_from_dict, preset_scene
from iwpt.channel import ChannelSet, element_gain, build_channels, dump_channels
from iwpt.imaging import (
    BeamVector,
    EquivalentChannel,
    equivalent_channel,
    simulate_received,
    ls_estimate,
    condition_number,
    rmse,
)
from iwpt.wpt import CovarianceMatrix, harvested_power, optimal_wpt_beam, e_max
from iwpt.conic import HermitianSdp, SdpSolution, ConicBackend, CvxpyBackend
from iwpt.digital import (
    TraceKernel,
    SolverConfig,
    SolveDiagnostics,
    build_trace_kernel,
    trace_objective,
    solve_qsdp_subproblem,
    solve_digital,
)
from iwpt.hybrid import (
    HybridPrecoder,
    HybridMetrics,
    compose,
    digital_update,
    analog_update,
    alternating_optimize,
    hybrid_tradeoff,
)
from iwpt.harness import (
    ExperimentConfig,
    TradeoffPoint,
    TradeoffTrend,
    RfChainRow,
    baseline_beam,
    run_imaging_experiment,
    run_tradeoff_sweep,
    tradeoff_trend,
    run_rf_chain_sweep,
    run_image_comparison,
    run_solve,
)

__all__ = [
    # Exceptions
    "IwptError",
    "DimensionMismatch",
    "ChannelError",
    "DegenerateInputError",
    "NotHermitianError",
    "InfeasibleThresholdError",
    "SolverError",
    "SceneConfigError",
    "InvalidSceneError",
    # Enums
    "Architecture",
    "SolveStatus",
    "Preset",
    # Scene
    "SPEED_OF_LIGHT",
    "ArrayGeometry",
    "RoiGrid",
    "ReceiverSet",
    "Scene",
    "ScatteringField",
    "paper_scene",
    "desk_scene",
    "scene_validate",
    "scattering_from_bitmap",
    "standard_pattern",
    "load_scene",
    "scene_from_dict",
    "preset_scene",
    # Channels
    "ChannelSet",
    "element_gain",
    "build_channels",
    "dump_channels",
    # Imaging
    "BeamVector",
    "EquivalentChannel",
    "equivalent_channel",
    "simulate_received",
    "ls_estimate",
    "condition_number",
    "rmse",
    # Power transfer
    "CovarianceMatrix",
    "harvested_power",
    "optimal_wpt_beam",
    "e_max",
    # Digital design
    "HermitianSdp",
    "SdpSolution",
    "ConicBackend",
    "CvxpyBackend",
    "TraceKernel",
    "SolverConfig",
    "SolveDiagnostics",
    "build_trace_kernel",
    "trace_objective",
    "solve_qsdp_subproblem",
    "solve_digital",
    # Hybrid design
    "HybridPrecoder",
    "HybridMetrics",
    "compose",
    "digital_update",
    "analog_update",
    "alternating_optimize",
    "hybrid_tradeoff",
    # Experiments
    "ExperimentConfig",
    "TradeoffPoint",
    "TradeoffTrend",
    "RfChainRow",
    "baseline_beam",
    "run_imaging_experiment",
    "run_tradeoff_sweep",
    "tradeoff_trend",
    "run_rf_chain_sweep",
    "run_image_comparison",
    "run_solve",
]

VersionInfo: namedtuple = namedtuple("VersionInfo", "major minor micro")

version_info: tuple[int] = VersionInfo(major=0, minor=1, micro=0)
