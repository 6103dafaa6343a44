"""
Independent oracles for the test-suite.

Everything here is written as plain Python loops over floats: one pose at a
time, intermediate poses materialized, no numpy batching. The floating point
expressions follow the same evaluation order as the vectorized kernels, so
agreement is expected bit for bit rather than within a tolerance.

Starting poses come from :func:`geodock.docking.generate_starting_pose` and
rotation matrices from the grid under test; both are inputs to the search,
not part of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .docking import DockParams, DockResult, generate_starting_pose
from .errors import ContractError
from .geometry import RotationGrid, enumerate_rotations
from .molecule import Ligand, wrap_angle
from .scoring import Pocket

TWO_PI = 2.0 * math.pi
REFERENCE_GUARD = 10**5


class OracleRefusal(ContractError):
    """The instance is too large for a deliberately slow oracle."""


@dataclass
class OracleReport:
    instance: str
    main: object
    oracle: object
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.instance}: deviation {self.deviation:.3g} (tol {self.tolerance:.3g})"


def compare(instance: str, main, oracle, tolerance: float = 0.0) -> OracleReport:
    a = np.asarray(main, dtype=float)
    b = np.asarray(oracle, dtype=float)
    if a.shape != b.shape:
        dev = math.inf
    elif a.size == 0:
        dev = 0.0
    else:
        dev = float(np.max(np.abs(a - b)))
    return OracleReport(instance, main, oracle, dev, tolerance)


# -- plain-float kernels ----------------------------------------------------

def _centroid(points):
    sx = sy = sz = 0.0
    for x, y, z in points:
        sx += x
        sy += y
        sz += z
    n = len(points)
    return (sx / n, sy / n, sz / n)


def _apply(points, m, center, target):
    out = []
    for x, y, z in points:
        dx = x - center[0]
        dy = y - center[1]
        dz = z - center[2]
        out.append((
            target[0] + ((m[0][0] * dx + m[0][1] * dy) + m[0][2] * dz),
            target[1] + ((m[1][0] * dx + m[1][1] * dy) + m[1][2] * dz),
            target[2] + ((m[2][0] * dx + m[2][1] * dy) + m[2][2] * dz),
        ))
    return out


def _axis_rotation(u, angle):
    ux, uy, uz = u
    c = math.cos(angle)
    s = math.sin(angle)
    t = 1.0 - c
    return (
        (t * ux * ux + c, t * ux * uy - s * uz, t * ux * uz + s * uy),
        (t * ux * uy + s * uz, t * uy * uy + c, t * uy * uz - s * ux),
        (t * ux * uz - s * uy, t * uy * uz + s * ux, t * uz * uz + c),
    )


class _Field:
    def __init__(self, pocket: Pocket):
        self.origin = pocket.origin
        self.s = pocket.spacing
        self.nx, self.ny, self.nz = pocket.dims
        self.v = pocket.values.tolist()

    def sample(self, p):
        nx, ny, nz = self.nx, self.ny, self.nz
        gx = (p[0] - self.origin[0]) / self.s
        gy = (p[1] - self.origin[1]) / self.s
        gz = (p[2] - self.origin[2]) / self.s
        if not (0.0 <= gx <= nx - 1 and 0.0 <= gy <= ny - 1 and 0.0 <= gz <= nz - 1):
            return 0.0
        ix = min(math.floor(gx), nx - 2)
        iy = min(math.floor(gy), ny - 2)
        iz = min(math.floor(gz), nz - 2)
        fx, fy, fz = gx - ix, gy - iy, gz - iz
        v = self.v

        def at(i, j, k):
            return v[i + nx * (j + ny * k)]

        ex = 1.0 - fx
        c00 = at(ix, iy, iz) * ex + at(ix + 1, iy, iz) * fx
        c10 = at(ix, iy + 1, iz) * ex + at(ix + 1, iy + 1, iz) * fx
        c01 = at(ix, iy, iz + 1) * ex + at(ix + 1, iy, iz + 1) * fx
        c11 = at(ix, iy + 1, iz + 1) * ex + at(ix + 1, iy + 1, iz + 1) * fx
        ey = 1.0 - fy
        c0 = c00 * ey + c10 * fy
        c1 = c01 * ey + c11 * fy
        return min(c0 * (1.0 - fz) + c1 * fz, 1.0)

    def score(self, points):
        total = 0.0
        for p in points:
            total += self.sample(p)
        return min(total / len(points), 1.0)


def _bump_ok(points, radii, bonds, clash_factor):
    bonded = {(min(i, j), max(i, j)) for i, j in bonds}
    n = len(points)
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) in bonded:
                continue
            dx = points[a][0] - points[b][0]
            dy = points[a][1] - points[b][1]
            dz = points[a][2] - points[b][2]
            if math.sqrt((dx * dx + dy * dy) + dz * dz) < clash_factor * (radii[a] + radii[b]):
                return False
    return True


def _moving_side(n, bonds, i, j):
    adj = {k: set() for k in range(n)}
    for a, b in bonds:
        adj[a].add(b)
        adj[b].add(a)
    adj[i].discard(j)
    adj[j].discard(i)
    seen, stack = {j}, [j]
    while stack:
        u = stack.pop()
        for v in adj[u] - seen:
            seen.add(v)
            stack.append(v)
    return seen


# -- oracles ------------------------------------------------------------------

def brute_force_best_rotation(ligand: Ligand, pocket: Pocket, grid: RotationGrid):
    """Rotate-then-score every grid rotation; returns ``(index, score)``."""
    if len(grid) > 10**4:
        raise OracleRefusal(f"grid of {len(grid)} rotations exceeds the oracle limit")
    field = _Field(pocket)
    pts = [tuple(p) for p in ligand.coords.tolist()]
    c = _centroid(pts)
    best = (-1, -math.inf, None)
    for k, m in enumerate(grid.matrices.tolist()):
        pose = _apply(pts, m, c, c)
        s = field.score(pose)
        if s > best[1]:
            best = (k, s, pose)
    return best[0], best[1]


def _dihedral_step(pts, radii, bonds, bond, pocket_field, steps, clash_factor):
    i, j = bond
    moving = sorted(_moving_side(len(pts), bonds, i, j) - {j})
    ox, oy, oz = pts[i]
    ax, ay, az = pts[j][0] - ox, pts[j][1] - oy, pts[j][2] - oz
    norm = math.sqrt(ax * ax + ay * ay + az * az)
    u = (ax / norm, ay / norm, az / norm)
    best_k, best_s, best_pts = None, -math.inf, None
    current_score = None
    for k in range(steps):
        if k == 0:
            cand = pts
        else:
            m = _axis_rotation(u, TWO_PI * k / steps)
            moved = _apply([pts[a] for a in moving], m, pts[i], pts[i])
            cand = list(pts)
            for a, p in zip(moving, moved):
                cand[a] = p
        s = pocket_field.score(cand)
        if k == 0:
            current_score = s
        if _bump_ok(cand, radii, bonds, clash_factor) and s > best_s:
            best_k, best_s, best_pts = k, s, cand
    if best_k is None:
        return None, current_score, pts
    return best_k, best_s, best_pts


def brute_force_best_dihedral(ligand: Ligand, rotamer_index: int, pocket: Pocket, steps: int,
                              clash_factor: float):
    """Enumerate the ``steps`` dihedral offsets of one rotamer.

    Returns ``(k, score)``; ``k`` is None when every candidate fails the bump
    check, in which case ``score`` is that of the unchanged pose.
    """
    if steps > 10**4:
        raise OracleRefusal("too many dihedral steps for the oracle")
    pts = [tuple(p) for p in ligand.coords.tolist()]
    k, s, _ = _dihedral_step(
        pts, ligand.radii.tolist(), ligand.bonds, ligand.rotamers[rotamer_index].bond,
        _Field(pocket), steps, clash_factor,
    )
    return k, s


def reference_dock(ligand: Ligand, pocket: Pocket, params: DockParams) -> DockResult:
    """Direct nested-loop transcription of the restart / align / optimize loop."""
    n_rot = params.n_restarts * params.n_rotations
    if n_rot > REFERENCE_GUARD:
        raise OracleRefusal(f"{n_rot} alignment evaluations exceed the oracle guard")
    grid = enumerate_rotations(params.rotation_steps)
    mats = grid.matrices.tolist()
    field = _Field(pocket)
    radii = ligand.radii.tolist()
    steps = params.dihedral_steps
    calls = 0
    visits = {"align_score": 0, "optimize_score": 0, "bump_check": 0, "fragment_rotation": 0}
    best = None
    for pose_id in range(params.n_restarts):
        start = generate_starting_pose(ligand, pose_id, params, pocket)
        pts = [tuple(p) for p in start.coords.tolist()]
        c = _centroid(pts)
        top_s, top_pose = -math.inf, None
        for m in mats:
            pose = _apply(pts, m, c, c)
            s = field.score(pose)
            calls += 1
            visits["align_score"] += 1
            if s > top_s:
                top_s, top_pose = s, pose
        pts, score = top_pose, top_s
        dihedrals = list(start.dihedrals)
        for _rep in range(params.num_repetitions):
            for r, rot in enumerate(ligand.rotamers):
                k, s, new_pts = _dihedral_step(
                    pts, radii, ligand.bonds, rot.bond, field, steps, params.clash_factor
                )
                calls += steps
                visits["optimize_score"] += steps
                visits["bump_check"] += steps
                visits["fragment_rotation"] += steps - 1
                pts, score = new_pts, s
                if k:
                    dihedrals[r] = wrap_angle(dihedrals[r] + TWO_PI * k / steps)
        if best is None or score > best[0]:
            best = (score, pose_id, pts, tuple(dihedrals))
    score, pose_id, pts, dihedrals = best
    return DockResult(
        ligand_name=ligand.name,
        best_score=score,
        best_restart_id=pose_id,
        coords=np.array(pts, dtype=np.float64),
        dihedrals=dihedrals,
        score_calls=calls,
        visits=visits,
    )


def closed_form_throughput(n_workers: int, n_devices: int, t_align_device: float,
                           t_opt_cpu: float, t_align_cpu: float | None = None) -> float:
    """Steady-state pipeline bound: each lane serves ``worker % n_devices``
    workers and saturates at ``1 / t_align_device``."""
    if n_devices == 0:
        return n_workers / (t_align_cpu + t_opt_cpu)
    total = 0.0
    for lane in range(n_devices):
        members = len(range(lane, n_workers, n_devices))
        total += min(members / (t_align_device + t_opt_cpu), 1.0 / t_align_device)
    return total
