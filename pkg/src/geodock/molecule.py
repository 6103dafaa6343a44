"""Ligand model: atoms, bond graph, rotamers and fragment rotation."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import DegenerateAxisError, InvalidRotamerError, LigandValidationError
from .geometry import as_points, axis_angle_matrix, transform

TWO_PI = 2.0 * math.pi
MAX_ROTAMERS = 128


class Atom(NamedTuple):
    position: tuple[float, float, float]
    radius: float


@dataclass(frozen=True)
class Rotamer:
    """Rotatable bond ``(i, j)``; ``moving`` is the side that contains ``j``."""

    bond: tuple[int, int]
    moving: frozenset[int] | None


@dataclass(frozen=True, eq=False)
class Ligand:
    name: str
    coords: np.ndarray
    radii: np.ndarray
    bonds: tuple[tuple[int, int], ...]
    rotamers: tuple[Rotamer, ...] = ()
    dihedrals: tuple[float, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64).reshape(-1, 3)
        radii = np.array(self.radii, dtype=np.float64).reshape(-1)
        coords.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "bonds", tuple((int(i), int(j)) for i, j in self.bonds))
        if not self.dihedrals and self.rotamers:
            object.__setattr__(self, "dihedrals", (0.0,) * len(self.rotamers))
        else:
            object.__setattr__(self, "dihedrals", tuple(float(d) for d in self.dihedrals))

    @property
    def n_atoms(self) -> int:
        return len(self.coords)

    @property
    def atoms(self) -> list[Atom]:
        return [Atom(tuple(p), float(r)) for p, r in zip(self.coords.tolist(), self.radii)]

    def with_coords(self, coords, dihedrals=None) -> Ligand:
        """Copy sharing topology (and its cached pair tables) with new coordinates."""
        new = replace(
            self,
            coords=coords,
            dihedrals=self.dihedrals if dihedrals is None else dihedrals,
            _cache=self._cache,
        )
        return new

    def same_state(self, other: Ligand) -> bool:
        """Bitwise equality of name, coordinates, radii, topology and dihedrals."""
        return (
            self.name == other.name
            and self.coords.tobytes() == other.coords.tobytes()
            and self.radii.tobytes() == other.radii.tobytes()
            and self.bonds == other.bonds
            and self.rotamers == other.rotamers
            and np.array(self.dihedrals).tobytes() == np.array(other.dihedrals).tobytes()
        )

    def nonbonded_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays ``(a, b)``, ``a < b``, of atom pairs without a bond edge."""
        pairs = self._cache.get("nonbonded")
        if pairs is None:
            n = self.n_atoms
            bonded = {(min(i, j), max(i, j)) for i, j in self.bonds}
            a, b = np.triu_indices(n, k=1)
            keep = np.array(
                [(int(x), int(y)) not in bonded for x, y in zip(a, b)], dtype=bool
            )
            pairs = (a[keep], b[keep])
            self._cache["nonbonded"] = pairs
        return pairs


def adjacency(n_atoms: int, bonds) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n_atoms)]
    for i, j in bonds:
        adj[i].append(j)
        adj[j].append(i)
    return adj


def _component(adj, start: int, cut: tuple[int, int]) -> set[int]:
    """Atoms reachable from ``start`` without traversing edge ``cut``."""
    a, b = cut
    seen = {start}
    todo = deque([start])
    while todo:
        u = todo.popleft()
        for v in adj[u]:
            if (u == a and v == b) or (u == b and v == a):
                continue
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def moving_set(n_atoms: int, bonds, bond: tuple[int, int]) -> frozenset[int]:
    """Side of ``bond = (i, j)`` containing ``j`` once the edge is removed."""
    i, j = bond
    comp = _component(adjacency(n_atoms, bonds), j, (i, j))
    if i in comp:
        raise InvalidRotamerError(f"rotamer bond {bond} does not disconnect the bond graph")
    return frozenset(comp)


def make_ligand(name, coords, radii, bonds, rotamer_bonds=(), dihedrals=()) -> Ligand:
    """Build a ligand, computing each rotamer's moving set from the bond graph.

    Rotamers that cannot be partitioned (ring bonds, bad indices) keep
    ``moving=None`` and are reported by :func:`validate_ligand`.
    """
    coords = as_points(coords)
    n = len(coords)
    bonds = tuple((int(i), int(j)) for i, j in bonds)
    safe_bonds = [(i, j) for i, j in bonds if 0 <= i < n and 0 <= j < n]
    rotamers = []
    for i, j in rotamer_bonds:
        bond = (int(i), int(j))
        try:
            moving = moving_set(n, safe_bonds, bond) if 0 <= bond[0] < n and 0 <= bond[1] < n else None
        except InvalidRotamerError:
            moving = None
        rotamers.append(Rotamer(bond, moving))
    return Ligand(name, coords, radii, bonds, tuple(rotamers), tuple(dihedrals))


def fragment_partition(ligand: Ligand, rotamer_index: int) -> tuple[frozenset[int], frozenset[int]]:
    """Return ``(moving, fixed)`` atom index sets for one rotamer."""
    if not 0 <= rotamer_index < len(ligand.rotamers):
        raise IndexError(f"rotamer index {rotamer_index} out of range")
    rot = ligand.rotamers[rotamer_index]
    moving = rot.moving
    if moving is None:
        moving = moving_set(ligand.n_atoms, ligand.bonds, rot.bond)
    fixed = frozenset(range(ligand.n_atoms)) - moving
    return moving, fixed


def rotamer_axis(ligand: Ligand, rotamer_index: int) -> tuple[np.ndarray, tuple[float, float, float]]:
    """Origin (atom ``i``) and unit direction ``i -> j`` of a rotamer bond."""
    i, j = ligand.rotamers[rotamer_index].bond
    origin = ligand.coords[i]
    ax, ay, az = (ligand.coords[j] - origin).tolist()
    norm = math.sqrt(ax * ax + ay * ay + az * az)
    if norm == 0.0:
        raise DegenerateAxisError(f"rotamer {rotamer_index}: atoms {i} and {j} coincide")
    return origin, (ax / norm, ay / norm, az / norm)


def moving_indices(ligand: Ligand, rotamer_index: int) -> np.ndarray:
    """Sorted indices of atoms actually displaced by a rotamer (axis atom ``j`` excluded)."""
    key = ("moving", rotamer_index)
    idx = ligand._cache.get(key)
    if idx is None:
        rot = ligand.rotamers[rotamer_index]
        idx = np.array(sorted(rot.moving - {rot.bond[1]}), dtype=np.intp)
        ligand._cache[key] = idx
    return idx


def wrap_angle(angle: float) -> float:
    """Reduce to [0, 2*pi); tiny negatives would otherwise round up to 2*pi."""
    v = angle % TWO_PI
    return 0.0 if v == TWO_PI else v


def rotate_fragment(ligand: Ligand, rotamer_index: int, angle: float) -> Ligand:
    """Turn the moving side of a rotamer by ``angle`` radians about its bond."""
    origin, axis = rotamer_axis(ligand, rotamer_index)
    if angle == 0.0:
        return ligand
    idx = moving_indices(ligand, rotamer_index)
    coords = ligand.coords.copy()
    if len(idx):
        m = axis_angle_matrix(axis, angle)
        coords[idx] = transform(ligand.coords[idx], m, origin, origin)
    dihedrals = list(ligand.dihedrals)
    dihedrals[rotamer_index] = wrap_angle(dihedrals[rotamer_index] + angle)
    return ligand.with_coords(coords, tuple(dihedrals))


def validate_ligand(ligand: Ligand, max_rotamers: int = MAX_ROTAMERS) -> list[str]:
    """Every invariant violation of ``ligand``; an empty list means valid."""
    problems = []
    n = ligand.n_atoms
    if n == 0:
        problems.append("ligand has no atoms")
    if len(ligand.radii) != n:
        problems.append(f"radius count {len(ligand.radii)} != atom count {n}")
    elif np.any(~(ligand.radii > 0)):
        problems.append("atom radius must be positive")
    if not np.all(np.isfinite(ligand.coords)):
        problems.append("non-finite atom coordinate")

    bonds_ok = []
    for i, j in ligand.bonds:
        if not (0 <= i < n and 0 <= j < n):
            problems.append(f"bond index out of range: ({i}, {j})")
        elif i == j:
            problems.append(f"self bond: ({i}, {j})")
        else:
            bonds_ok.append((i, j))
    adj = adjacency(n, bonds_ok)
    if n and len(_component(adj, 0, (-1, -1))) != n:
        problems.append("bond graph is not connected")

    edges = {(min(i, j), max(i, j)) for i, j in bonds_ok}
    if len(ligand.rotamers) > max_rotamers:
        problems.append(f"{len(ligand.rotamers)} rotamers exceeds limit {max_rotamers}")
    for k, rot in enumerate(ligand.rotamers):
        i, j = rot.bond
        if not (0 <= i < n and 0 <= j < n):
            problems.append(f"rotamer {k}: bond index out of range: ({i}, {j})")
            continue
        if (min(i, j), max(i, j)) not in edges:
            problems.append(f"rotamer {k}: ({i}, {j}) is not a bond")
            continue
        comp = _component(adj, j, (i, j))
        if i in comp:
            problems.append(f"rotamer {k}: rotamer does not disconnect graph at bond ({i}, {j})")
            continue
        if rot.moving is None or set(rot.moving) != comp:
            problems.append(f"rotamer {k}: moving set does not match the bond graph")
        if np.array_equal(ligand.coords[i], ligand.coords[j]):
            problems.append(f"rotamer {k}: atoms {i} and {j} coincide")
    if len(ligand.dihedrals) != len(ligand.rotamers):
        problems.append(
            f"dihedral count {len(ligand.dihedrals)} != rotamer count {len(ligand.rotamers)}"
        )
    return problems


def check_ligand(ligand: Ligand) -> Ligand:
    problems = validate_ligand(ligand)
    if problems:
        raise LigandValidationError(ligand.name, problems)
    return ligand


def bond_lengths(ligand: Ligand) -> np.ndarray:
    if not ligand.bonds:
        return np.zeros(0)
    b = np.array(ligand.bonds)
    d = ligand.coords[b[:, 0]] - ligand.coords[b[:, 1]]
    return np.sqrt((d * d).sum(axis=1))
