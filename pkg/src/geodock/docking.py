"""
Multi-restart greedy docking.

One ligand is replicated ``n_restarts`` times. Each replica gets a seeded
starting pose, is aligned rigidly by exhaustive search over a rotation grid
(argmax reduction, lowest index wins ties) and then refined by
``num_repetitions`` sequential passes over its rotamers. The best final
score over restarts wins, ties going to the lowest restart id.

All tie-breaks are by lowest index and every restart is a pure function of
``(seed, pose_id, ligand name)``, so results do not depend on how restarts
or ligands are scheduled.
"""
from __future__ import annotations

import math
import time
import zlib
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DegenerateAxisError
from .geometry import (
    Rotation,
    RotationGrid,
    apply_rotation_about_centroid,
    axis_angle_stack,
    centroid,
    enumerate_rotations,
    transform,
)
from .molecule import TWO_PI, Ligand, check_ligand, moving_indices, rotamer_axis, wrap_angle
from .scoring import DEFAULT_CLASH_FACTOR, Pocket, bump_mask, sample_points, score_pose, score_stack

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DockParams:
    n_restarts: int = 32
    num_repetitions: int = 3
    rotation_steps: tuple[int, int, int] = (16, 16, 8)
    dihedral_steps: int = 36
    clash_factor: float = DEFAULT_CLASH_FACTOR
    seed: int = 0

    def __post_init__(self):
        steps = tuple(int(s) for s in self.rotation_steps)
        object.__setattr__(self, "rotation_steps", steps)
        if len(steps) != 3 or min(steps) < 1:
            raise ContractError(f"rotation_steps must be three counts >= 1, got {steps}")
        if self.n_restarts < 1 or self.num_repetitions < 1:
            raise ContractError("n_restarts and num_repetitions must be >= 1")
        if self.dihedral_steps < 2:
            raise ContractError("dihedral_steps must be >= 2")
        if not 0.0 < self.clash_factor <= 1.0:
            raise ContractError("clash_factor must be in (0, 1]")

    @property
    def n_rotations(self) -> int:
        a, b, c = self.rotation_steps
        return a * b * c


@dataclass
class DockResult:
    ligand_name: str
    best_score: float
    best_restart_id: int
    coords: np.ndarray
    dihedrals: tuple[float, ...]
    score_calls: int
    align_seconds: float = 0.0
    optimize_seconds: float = 0.0
    visits: dict = field(default_factory=dict)

    def same_outcome(self, other: DockResult) -> bool:
        """Bitwise equality of everything except wall-clock timings."""
        return (
            self.ligand_name == other.ligand_name
            and np.float64(self.best_score).tobytes() == np.float64(other.best_score).tobytes()
            and self.best_restart_id == other.best_restart_id
            and self.coords.tobytes() == other.coords.tobytes()
            and np.array(self.dihedrals).tobytes() == np.array(other.dihedrals).tobytes()
            and self.score_calls == other.score_calls
            and self.visits == other.visits
        )


class Profile:
    """Accumulates wall time per named section (used by the profile command)."""

    def __init__(self):
        self.seconds: dict[str, float] = {}

    @contextmanager
    def section(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - t0


def _section(profile, name):
    return nullcontext() if profile is None else profile.section(name)


def count_score_calls(params: DockParams, n_rotamers: int) -> int:
    """Score evaluations made by :func:`dock_ligand` for one ligand."""
    return params.n_restarts * (
        params.n_rotations + params.num_repetitions * n_rotamers * params.dihedral_steps
    )


def expected_visits(params: DockParams, n_rotamers: int) -> dict[str, int]:
    """Closed-form call counts per kernel for one docked ligand."""
    steps = params.n_restarts * params.num_repetitions * n_rotamers
    return {
        "align_score": params.n_restarts * params.n_rotations,
        "optimize_score": steps * params.dihedral_steps,
        "bump_check": steps * params.dihedral_steps,
        "fragment_rotation": steps * (params.dihedral_steps - 1),
    }


def restart_rng(seed: int, pose_id: int, name: str) -> np.random.Generator:
    """Counter-style generator keyed on (seed, restart, ligand name)."""
    key = np.random.SeedSequence([seed & MASK64, pose_id, zlib.crc32(name.encode("utf-8"))])
    return np.random.Generator(np.random.Philox(key))


def random_rotation(rng: np.random.Generator) -> Rotation:
    """Uniformly distributed rotation (Shoemake's subgroup algorithm)."""
    u1, u2, u3 = rng.random(3).tolist()
    a = math.sqrt(1.0 - u1)
    b = math.sqrt(u1)
    q = (
        a * math.sin(TWO_PI * u2),
        a * math.cos(TWO_PI * u2),
        b * math.sin(TWO_PI * u3),
        b * math.cos(TWO_PI * u3),
    )
    n = math.sqrt(sum(v * v for v in q))
    return Rotation(*(v / n for v in q))


def generate_starting_pose(ligand: Ligand, pose_id: int, params: DockParams, pocket: Pocket) -> Ligand:
    """Seeded random orientation with the centroid moved to a random point of
    the pocket bounding box."""
    if not 0 <= pose_id < params.n_restarts:
        raise ContractError(f"pose_id {pose_id} outside [0, {params.n_restarts})")
    rng = restart_rng(params.seed, pose_id, ligand.name)
    rot = random_rotation(rng)
    lo = np.array(pocket.origin)
    target = lo + rng.random(3) * (pocket.upper - lo)
    coords = transform(ligand.coords, rot.matrix(), centroid(ligand.coords), target)
    return ligand.with_coords(coords)


# Elements per (pose, rotation) tile: keeps the per-atom temporaries cache
# resident, which roughly halves the cost of large tables.
TILE_ELEMENTS = 4096


def _fused_tile(coords, centers, m, pocket):
    n = coords.shape[1]
    cx, cy, cz = centers[:, 0, None], centers[:, 1, None], centers[:, 2, None]
    total = np.zeros((coords.shape[0], len(m)))
    for a in range(n):
        d = coords[:, a, :] - centers
        dx, dy, dz = d[:, 0, None], d[:, 1, None], d[:, 2, None]
        x = cx + ((m[:, 0, 0] * dx + m[:, 0, 1] * dy) + m[:, 0, 2] * dz)
        y = cy + ((m[:, 1, 0] * dx + m[:, 1, 1] * dy) + m[:, 1, 2] * dz)
        z = cz + ((m[:, 2, 0] * dx + m[:, 2, 1] * dy) + m[:, 2, 2] * dz)
        total += sample_points(pocket, x, y, z)
    return np.minimum(total / n, 1.0)


def fused_alignment_scores(coords: np.ndarray, centers: np.ndarray, matrices: np.ndarray,
                           pocket: Pocket) -> np.ndarray:
    """Score every (pose, rotation) pair without building rotated poses.

    coords: ``(B, n, 3)`` poses, centers: ``(B, 3)`` their centroids,
    matrices: ``(K, 3, 3)``. Returns ``(B, K)``. Atoms are rotated and
    sampled one at a time and accumulated, so memory is ``O(B * K)``.
    Work is done in cache-sized tiles; every entry is computed by the same
    expression, so tiling never changes a result bit.
    """
    m = np.asarray(matrices)
    n_pose, n_rot = coords.shape[0], len(m)
    if coords.shape[1] == 0:
        raise ContractError("cannot score a ligand with no atoms")
    out = np.empty((n_pose, n_rot))
    pose_step = max(1, min(n_pose, TILE_ELEMENTS))
    rot_step = max(1, TILE_ELEMENTS // pose_step)
    for b in range(0, n_pose, pose_step):
        for k in range(0, n_rot, rot_step):
            out[b:b + pose_step, k:k + rot_step] = _fused_tile(
                coords[b:b + pose_step], centers[b:b + pose_step], m[k:k + rot_step], pocket
            )
    return out


def align_batch(poses, pocket: Pocket, grid: RotationGrid, chunks: int = 1, mapper=map):
    """Align many poses of one ligand over ``grid`` in one fused batch.

    The rotation axis of the batch is split into ``chunks`` pieces evaluated
    through ``mapper`` (e.g. an executor's ``map``). Returns
    ``(aligned_poses, scores, best_indices)``.
    """
    if len(grid) == 0:
        raise ContractError("empty rotation grid")
    coords = np.stack([p.coords for p in poses])
    centers = np.stack([centroid(p.coords) for p in poses])
    pieces = np.array_split(np.arange(len(grid)), max(1, min(chunks, len(grid))))
    parts = list(mapper(lambda idx: fused_alignment_scores(coords, centers, grid.matrices[idx], pocket),
                        pieces))
    table = np.concatenate(parts, axis=1)
    best = np.argmax(table, axis=1)
    aligned = [
        p.with_coords(apply_rotation_about_centroid(p.coords, grid.matrices[k]))
        for p, k in zip(poses, best.tolist())
    ]
    scores = [float(table[b, k]) for b, k in enumerate(best.tolist())]
    return aligned, scores, best.tolist()


def align_ligand(ligand: Ligand, pocket: Pocket, grid: RotationGrid) -> tuple[Ligand, float]:
    """Best rigid orientation of ``ligand`` about its centroid over ``grid``."""
    aligned, scores, _ = align_batch([ligand], pocket, grid)
    return aligned[0], scores[0]


def candidate_angle(k: int, steps: int) -> float:
    return TWO_PI * k / steps


def rotamer_step(ligand: Ligand, coords: np.ndarray, rotamer_index: int, pocket: Pocket,
                 dihedral_steps: int, clash_factor: float, profile: Profile | None = None):
    """One greedy dihedral step applied to a batch of conformers of ``ligand``.

    ``coords`` is ``(B, n, 3)``. Every conformer tries offsets ``2*pi*k/S``
    (k = 0..S-1) from its current dihedral and keeps the best-scoring
    candidate that passes the bump check, lowest ``k`` on ties. Returns
    ``(new_coords, scores, ks)``; ``ks[b]`` is None when no candidate of
    conformer ``b`` is sterically valid, which leaves it as it was.
    Conformers never interact, so the batch is only a way to amortize work.
    """
    steps = dihedral_steps
    i, j = ligand.rotamers[rotamer_index].bond
    idx = moving_indices(ligand, rotamer_index)
    with _section(profile, "rotate"):
        origin = coords[:, i]
        v = coords[:, j] - origin
        norm = np.sqrt((v[:, 0] * v[:, 0] + v[:, 1] * v[:, 1]) + v[:, 2] * v[:, 2])
        if np.any(norm == 0.0):
            raise DegenerateAxisError(f"rotamer {rotamer_index}: atoms {i} and {j} coincide")
        cands = np.repeat(coords[:, None], steps, axis=1)
        if len(idx):
            m = axis_angle_stack(v / norm[:, None], [candidate_angle(k, steps) for k in range(1, steps)])
            d = coords[:, idx] - origin[:, None]
            dx, dy, dz = (d[:, None, :, c] for c in range(3))
            for r in range(3):
                cands[:, 1:, idx, r] = origin[:, None, None, r] + (
                    (m[:, :, r, 0, None] * dx + m[:, :, r, 1, None] * dy) + m[:, :, r, 2, None] * dz
                )
    with _section(profile, "bump_check"):
        ok = bump_mask(ligand, cands, clash_factor)
    with _section(profile, "score"):
        scores = score_stack(cands, pocket)
    pick = np.argmax(np.where(ok, scores, -np.inf), axis=1)
    valid = ok.any(axis=1)
    pick[~valid] = 0
    rows = np.arange(len(coords))
    new_coords = cands[rows, pick]
    ks = [int(k) if good else None for k, good in zip(pick.tolist(), valid.tolist())]
    return new_coords, scores[rows, pick].tolist(), ks


def optimize_rotamer(ligand: Ligand, rotamer_index: int, pocket: Pocket, dihedral_steps: int,
                     clash_factor: float, profile: Profile | None = None):
    """One greedy dihedral step for a single pose.

    Returns ``(ligand, score, k)``; ``k`` is None when no candidate passes the
    bump check and the pose is kept as is.
    """
    rotamer_axis(ligand, rotamer_index)
    coords, scores, (k,) = rotamer_step(ligand, ligand.coords[None], rotamer_index, pocket,
                                        dihedral_steps, clash_factor, profile)
    if not k:
        return ligand, scores[0], k
    dihedrals = list(ligand.dihedrals)
    dihedrals[rotamer_index] = wrap_angle(dihedrals[rotamer_index] + candidate_angle(k, dihedral_steps))
    return ligand.with_coords(coords[0], tuple(dihedrals)), scores[0], k


def optimize_batch(ligand: Ligand, coords: np.ndarray, scores, dihedrals, pocket: Pocket,
                   params: DockParams, passes: int, visits: dict | None = None,
                   profile: Profile | None = None):
    """``passes`` sequential sweeps over the rotamers for a batch of conformers.

    Rotamers are visited in index order and each step is committed before
    the next; the batch dimension only runs independent restarts side by side.
    """
    scores = list(scores)
    dihedrals = [list(d) for d in dihedrals]
    steps = params.dihedral_steps
    for _ in range(passes):
        for r in range(len(ligand.rotamers)):
            coords, step_scores, ks = rotamer_step(ligand, coords, r, pocket, steps,
                                                   params.clash_factor, profile)
            for b, k in enumerate(ks):
                scores[b] = step_scores[b]
                if k:
                    dihedrals[b][r] = wrap_angle(dihedrals[b][r] + candidate_angle(k, steps))
            if visits is not None:
                visits["optimize_score"] += steps * len(ks)
                visits["bump_check"] += steps * len(ks)
                visits["fragment_rotation"] += (steps - 1) * len(ks)
    return coords, scores, dihedrals


def optimize_pose(ligand: Ligand, pocket: Pocket, params: DockParams) -> tuple[Ligand, float]:
    """One sequential pass over all rotamers in index order."""
    score = score_pose(ligand, pocket)
    if not ligand.rotamers:
        return ligand, score
    coords, scores, dihedrals = optimize_batch(
        ligand, ligand.coords[None], [score], [ligand.dihedrals], pocket, params, 1
    )
    return ligand.with_coords(coords[0], tuple(dihedrals[0])), scores[0]


def empty_visits() -> dict[str, int]:
    return {"align_score": 0, "optimize_score": 0, "bump_check": 0, "fragment_rotation": 0}


def starting_poses(ligand: Ligand, pocket: Pocket, params: DockParams) -> list[Ligand]:
    return [generate_starting_pose(ligand, i, params, pocket) for i in range(params.n_restarts)]


def refine_and_select(ligand: Ligand, aligned, scores, pocket: Pocket, params: DockParams,
                      visits: dict, profile: Profile | None = None) -> DockResult:
    """Optimization phase for every restart plus best-of-restarts selection."""
    coords = np.stack([p.coords for p in aligned])
    coords, scores, dihedrals = optimize_batch(
        ligand, coords, scores, [p.dihedrals for p in aligned], pocket, params,
        params.num_repetitions, visits, profile,
    )
    best = 0
    for pose_id, score in enumerate(scores):
        if score > scores[best]:
            best = pose_id
    final = coords[best].copy()
    final.setflags(write=False)
    return DockResult(
        ligand_name=ligand.name,
        best_score=scores[best],
        best_restart_id=best,
        coords=final,
        dihedrals=tuple(dihedrals[best]),
        score_calls=visits["align_score"] + visits["optimize_score"],
        visits=dict(visits),
    )


def dock_ligand(ligand: Ligand, pocket: Pocket, params: DockParams = DockParams(),
                grid: RotationGrid | None = None, profile: Profile | None = None) -> DockResult:
    """Dock one ligand: restarts, batch alignment, then greedy refinement."""
    check_ligand(ligand)
    if grid is None:
        grid = enumerate_rotations(params.rotation_steps)
    visits = empty_visits()
    t0 = time.perf_counter()
    with _section(profile, "generate_starting_pose"):
        starts = starting_poses(ligand, pocket, params)
    t1 = time.perf_counter()
    with _section(profile, "align_ligand"):
        aligned, scores, _ = align_batch(starts, pocket, grid)
    visits["align_score"] += len(starts) * len(grid)
    t2 = time.perf_counter()
    with _section(profile, "optimize_pose"):
        result = refine_and_select(ligand, aligned, scores, pocket, params, visits, profile)
    t3 = time.perf_counter()
    result.align_seconds = t2 - t0
    result.optimize_seconds = t3 - t2
    return result
