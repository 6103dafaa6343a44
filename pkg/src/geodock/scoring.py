"""Pocket field, the geometric score and the steric bump check."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .molecule import Ligand

DEFAULT_CLASH_FACTOR = 0.75


@dataclass(frozen=True, eq=False)
class Pocket:
    """Regular 3-D desirability field.

    ``values`` is the flat x-fastest array: node ``(ix, iy, iz)`` lives at
    ``ix + nx * (iy + ny * iz)``.
    """

    origin: tuple[float, float, float]
    spacing: float
    dims: tuple[int, int, int]
    values: np.ndarray

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        dims = tuple(int(d) for d in self.dims)
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if len(origin) != 3 or len(dims) != 3:
            raise ContractError("origin and dims need three components")
        if not self.spacing > 0:
            raise ContractError(f"spacing must be positive, got {self.spacing!r}")
        if min(dims) < 2:
            raise ContractError(f"every grid dimension must be >= 2, got {dims}")
        expected = dims[0] * dims[1] * dims[2]
        if values.size != expected:
            raise ContractError(f"expected {expected} values, got {values.size}")
        if values.size and not (np.all(values >= 0.0) and np.all(values <= 1.0)):
            raise ContractError("field values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_grid(cls, origin, spacing, grid) -> Pocket:
        """Build from an array indexed ``grid[ix, iy, iz]``."""
        grid = np.asarray(grid, dtype=np.float64)
        return cls(origin, spacing, grid.shape, grid.transpose(2, 1, 0).reshape(-1))

    @property
    def grid(self) -> np.ndarray:
        nx, ny, nz = self.dims
        return self.values.reshape(nz, ny, nx).transpose(2, 1, 0)

    @property
    def upper(self) -> np.ndarray:
        """Far corner of the bounding box."""
        return np.array(self.origin) + self.spacing * (np.array(self.dims) - 1)


def sample_points(pocket: Pocket, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Trilinear field values at coordinate arrays of any (equal) shape.

    Points outside the node lattice give exactly 0.
    """
    ox, oy, oz = pocket.origin
    s = pocket.spacing
    nx, ny, nz = pocket.dims
    gx = (x - ox) / s
    gy = (y - oy) / s
    gz = (z - oz) / s
    # clipping leaves in-range coordinates untouched, so equality flags them
    cx = np.clip(gx, 0.0, nx - 1)
    cy = np.clip(gy, 0.0, ny - 1)
    cz = np.clip(gz, 0.0, nz - 1)
    inside = (cx == gx) & (cy == gy) & (cz == gz)
    ix = np.minimum(np.floor(cx), nx - 2)
    iy = np.minimum(np.floor(cy), ny - 2)
    iz = np.minimum(np.floor(cz), nz - 2)
    fx = cx - ix
    fy = cy - iy
    fz = cz - iz
    base = (ix + nx * (iy + ny * iz)).astype(np.intp)
    v = pocket.values
    sy = nx
    sz = nx * ny
    ex = 1.0 - fx
    c00 = v.take(base) * ex + v.take(base + 1) * fx
    c10 = v.take(base + sy) * ex + v.take(base + (sy + 1)) * fx
    c01 = v.take(base + sz) * ex + v.take(base + (sz + 1)) * fx
    c11 = v.take(base + (sz + sy)) * ex + v.take(base + (sz + sy + 1)) * fx
    ey = 1.0 - fy
    c0 = c00 * ey + c10 * fy
    c1 = c01 * ey + c11 * fy
    c = c0 * (1.0 - fz) + c1 * fz
    np.minimum(c, 1.0, out=c)
    np.putmask(c, ~inside, 0.0)
    return c


def sample_field(pocket: Pocket, p) -> float:
    p = np.asarray(p, dtype=np.float64).reshape(3)
    return float(sample_points(pocket, p[0:1], p[1:2], p[2:3])[0])


def mean_in_order(values) -> float:
    """Left-to-right sum divided by the count."""
    total = 0.0
    vals = values.tolist()
    for v in vals:
        total += v
    return total / len(vals)


def score_coords(coords: np.ndarray, pocket: Pocket) -> float:
    if len(coords) == 0:
        raise ContractError("cannot score a ligand with no atoms")
    vals = sample_points(pocket, coords[:, 0], coords[:, 1], coords[:, 2])
    return min(mean_in_order(vals), 1.0)


def score_pose(ligand: Ligand, pocket: Pocket) -> float:
    """Mean pocket-field occupancy over the ligand atoms, in [0, 1]."""
    return score_coords(ligand.coords, pocket)


def score_stack(coords: np.ndarray, pocket: Pocket) -> np.ndarray:
    """Scores for a stack of poses ``(..., n_atoms, 3)`` -> ``(...)``.

    Atoms are accumulated one at a time so each pose sees the same
    left-to-right sum as :func:`score_pose`.
    """
    n = coords.shape[-2]
    if n == 0:
        raise ContractError("cannot score a ligand with no atoms")
    vals = sample_points(pocket, coords[..., 0], coords[..., 1], coords[..., 2])
    total = np.zeros(coords.shape[:-2])
    for a in range(n):
        total += vals[..., a]
    return np.minimum(total / n, 1.0)


def clash_thresholds(ligand: Ligand, clash_factor: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    key = ("clash", clash_factor)
    hit = ligand._cache.get(key)
    if hit is None:
        a, b = ligand.nonbonded_pairs()
        hit = (a, b, clash_factor * (ligand.radii[a] + ligand.radii[b]))
        ligand._cache[key] = hit
    return hit


def bump_mask(ligand: Ligand, coords: np.ndarray, clash_factor: float) -> np.ndarray:
    """Bump check for a stack of conformers ``(..., n_atoms, 3)`` of ``ligand``."""
    if not 0.0 < clash_factor <= 1.0:
        raise ContractError(f"clash_factor must be in (0, 1], got {clash_factor!r}")
    a, b, thr = clash_thresholds(ligand, clash_factor)
    if len(a) == 0:
        return np.ones(coords.shape[:-2], dtype=bool)
    d = coords[..., a, :] - coords[..., b, :]
    dist = np.sqrt((d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1]) + d[..., 2] * d[..., 2])
    return np.all(dist >= thr, axis=-1)


def bump_check(ligand: Ligand, clash_factor: float = DEFAULT_CLASH_FACTOR) -> bool:
    """True when no non-bonded atom pair sits closer than
    ``clash_factor * (r_a + r_b)``; equality passes."""
    return bool(bump_mask(ligand, ligand.coords, clash_factor))
