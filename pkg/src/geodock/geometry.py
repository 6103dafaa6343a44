"""
Rigid-body math for ligand placement.

Points are float64 arrays of shape ``(n, 3)``. Every rigid transform in the
package is evaluated with one fixed expression,

    out = target + ((r00 * dx + r01 * dy) + r02 * dz)        (per row)

where ``d = p - center``. Keeping that order fixed (and computing sines and
cosines with :mod:`math` only) makes the batched alignment kernel, the
single-pose path and the pure-Python oracles agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ContractError

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion ``(w, x, y, z)``."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        n = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(n - 1.0) > UNIT_TOL:
            raise ContractError(f"quaternion norm {n!r} is not 1")

    @classmethod
    def identity(cls) -> Rotation:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> Rotation:
        ux, uy, uz = _unit_axis(axis)
        h = 0.5 * angle
        s = math.sin(h)
        return cls(math.cos(h), ux * s, uy * s, uz * s)

    @classmethod
    def from_euler_zyz(cls, alpha: float, beta: float, gamma: float) -> Rotation:
        """Rz(alpha) * Ry(beta) * Rz(gamma)."""
        qa = (math.cos(0.5 * alpha), 0.0, 0.0, math.sin(0.5 * alpha))
        qb = (math.cos(0.5 * beta), 0.0, math.sin(0.5 * beta), 0.0)
        qg = (math.cos(0.5 * gamma), 0.0, 0.0, math.sin(0.5 * gamma))
        return cls(*_qmul(_qmul(qa, qb), qg))

    def compose(self, other: Rotation) -> Rotation:
        """Rotation applying ``other`` first, then ``self``."""
        return Rotation(*_qmul(self.as_tuple(), other.as_tuple()))

    __mul__ = compose

    def inverse(self) -> Rotation:
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ]
        )

    def apply(self, points) -> np.ndarray:
        """Rotate points about the origin."""
        pts = as_points(points)
        zero = np.zeros(3)
        return transform(pts, self.matrix(), zero, zero)


def _qmul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


@dataclass(frozen=True)
class RotationGrid:
    """Euler ZYZ rotations on a regular (alpha, beta, gamma) lattice.

    Order is lexicographic in ``(i_alpha, i_beta, i_gamma)`` so index 0 is
    the identity.
    """

    steps_alpha: int
    steps_beta: int
    steps_gamma: int
    rotations: tuple[Rotation, ...] = field(repr=False)
    matrices: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.rotations)

    def __getitem__(self, i: int) -> Rotation:
        return self.rotations[i]

    @property
    def steps(self) -> tuple[int, int, int]:
        return (self.steps_alpha, self.steps_beta, self.steps_gamma)


def enumerate_rotations(steps) -> RotationGrid:
    """Build the rotation grid for ``steps = (a, b, c)``.

    alpha and gamma are sampled on ``[0, 2pi)`` with ``a`` and ``c`` points,
    beta on the closed interval ``[0, pi]`` with ``b`` points (``b == 1``
    gives beta = 0 only). Grids are immutable and cached per step triple.
    """
    a, b, c = (int(s) for s in steps)
    if min(a, b, c) < 1:
        raise ContractError(f"rotation steps must be >= 1, got {(a, b, c)}")
    return _build_grid(a, b, c)


@lru_cache(maxsize=16)
def _build_grid(a: int, b: int, c: int) -> RotationGrid:
    alphas = [2.0 * math.pi * i / a for i in range(a)]
    betas = [0.0] if b == 1 else [math.pi * j / (b - 1) for j in range(b)]
    gammas = [2.0 * math.pi * k / c for k in range(c)]
    rots = tuple(
        Rotation.from_euler_zyz(al, be, ga) for al in alphas for be in betas for ga in gammas
    )
    mats = np.stack([r.matrix() for r in rots])
    mats.setflags(write=False)
    return RotationGrid(a, b, c, rots, mats)


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ContractError(f"expected an (n, 3) point array, got shape {pts.shape}")
    return pts


def centroid(points) -> np.ndarray:
    """Mean position, summed strictly left to right over the rows."""
    pts = as_points(points)
    if len(pts) == 0:
        raise ContractError("centroid of an empty point set")
    sx = sy = sz = 0.0
    for x, y, z in pts.tolist():
        sx += x
        sy += y
        sz += z
    n = len(pts)
    return np.array([sx / n, sy / n, sz / n])


def transform(points: np.ndarray, matrix: np.ndarray, center, target) -> np.ndarray:
    """``target + matrix @ (p - center)`` in the canonical evaluation order.

    ``matrix`` may be a stack ``(k, 3, 3)``; the result is then ``(k, n, 3)``.
    """
    d = points - center
    dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]
    m = np.asarray(matrix)
    if m.ndim == 2:
        out = np.empty_like(d)
        for r in range(3):
            out[:, r] = target[r] + ((m[r, 0] * dx + m[r, 1] * dy) + m[r, 2] * dz)
        return out
    out = np.empty((len(m), len(d), 3))
    for r in range(3):
        out[:, :, r] = target[r] + (
            (m[:, r, 0, None] * dx + m[:, r, 1, None] * dy) + m[:, r, 2, None] * dz
        )
    return out


def _unit_axis(axis) -> tuple[float, float, float]:
    ux, uy, uz = (float(v) for v in np.asarray(axis, dtype=np.float64).reshape(3))
    n = math.sqrt(ux * ux + uy * uy + uz * uz)
    if abs(n - 1.0) > UNIT_TOL:
        raise ContractError(f"rotation axis must have unit norm, got {n!r}")
    return ux, uy, uz


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit ``axis``."""
    ux, uy, uz = _unit_axis(axis)
    c = math.cos(angle)
    s = math.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * ux * ux + c, t * ux * uy - s * uz, t * ux * uz + s * uy],
            [t * ux * uy + s * uz, t * uy * uy + c, t * uy * uz - s * ux],
            [t * ux * uz - s * uy, t * uy * uz + s * ux, t * uz * uz + c],
        ]
    )


def axis_angle_stack(axes: np.ndarray, angles) -> np.ndarray:
    """Rodrigues matrices for every (axis, angle) pair: ``(B, 3)`` x ``K`` -> ``(B, K, 3, 3)``.

    Entry for entry the same float expressions as :func:`axis_angle_matrix`.
    Axes are assumed to be unit vectors already.
    """
    c = np.array([math.cos(a) for a in angles])
    s = np.array([math.sin(a) for a in angles])
    t = 1.0 - c
    ux, uy, uz = (axes[:, i, None] for i in range(3))
    out = np.empty((len(axes), len(c), 3, 3))
    out[:, :, 0, 0] = t * ux * ux + c
    out[:, :, 0, 1] = t * ux * uy - s * uz
    out[:, :, 0, 2] = t * ux * uz + s * uy
    out[:, :, 1, 0] = t * ux * uy + s * uz
    out[:, :, 1, 1] = t * uy * uy + c
    out[:, :, 1, 2] = t * uy * uz - s * ux
    out[:, :, 2, 0] = t * ux * uz - s * uy
    out[:, :, 2, 1] = t * uy * uz + s * ux
    out[:, :, 2, 2] = t * uz * uz + c
    return out


def rotate_about_axis(points, origin, axis, angle: float) -> np.ndarray:
    """Rotate ``points`` by ``angle`` radians about the line through ``origin``
    along the unit vector ``axis`` (right-hand rule)."""
    pts = as_points(points)
    o = np.asarray(origin, dtype=np.float64).reshape(3)
    m = axis_angle_matrix(axis, angle)
    if angle == 0.0:
        return pts.copy()
    return transform(pts, m, o, o)


def apply_rotation_about_centroid(points, rotation) -> np.ndarray:
    """Rotate a rigid point set about its own centroid.

    ``rotation`` is a :class:`Rotation` or a 3x3 matrix.
    """
    pts = as_points(points)
    if len(pts) == 0:
        raise ContractError("cannot rotate an empty point set")
    m = rotation.matrix() if isinstance(rotation, Rotation) else np.asarray(rotation)
    c = centroid(pts)
    return transform(pts, m, c, c)


def pairwise_distances(points) -> np.ndarray:
    pts = as_points(points)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))
