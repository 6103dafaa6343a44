"""Geometric molecular docking with a hybrid worker / device-lane pipeline."""
from .docking import (
    DockParams,
    DockResult,
    align_ligand,
    count_score_calls,
    dock_ligand,
    generate_starting_pose,
    optimize_pose,
)
from .geometry import (
    Rotation,
    RotationGrid,
    apply_rotation_about_centroid,
    enumerate_rotations,
    rotate_about_axis,
)
from .molecule import Ligand, fragment_partition, make_ligand, rotate_fragment, validate_ligand
from .pipeline import NodeConfig, RunMetrics, run_screening, simulate_schedule, summarize
from .scoring import Pocket, bump_check, sample_field, score_pose

__all__ = [
    "DockParams", "DockResult", "align_ligand", "count_score_calls", "dock_ligand",
    "generate_starting_pose", "optimize_pose", "Rotation", "RotationGrid",
    "apply_rotation_about_centroid", "enumerate_rotations", "rotate_about_axis", "Ligand",
    "fragment_partition", "make_ligand", "rotate_fragment", "validate_ligand", "NodeConfig",
    "RunMetrics", "run_screening", "simulate_schedule", "summarize", "Pocket", "bump_check",
    "sample_field", "score_pose",
]
__version__ = "0.1.0"
