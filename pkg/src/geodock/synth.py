"""Seeded synthetic pockets and tree-shaped ligand libraries."""
from __future__ import annotations

import numpy as np

from .molecule import Ligand, make_ligand
from .scoring import Pocket

BOND_LENGTH = 1.5
MIN_NONBONDED = 2.0
MAX_DEGREE = 3


def make_pocket(seed: int = 0, dims=(24, 24, 24), spacing: float = 1.0, n_blobs: int = 6,
                origin=(0.0, 0.0, 0.0)) -> Pocket:
    """Sum of Gaussian blobs clamped to [0, 1]."""
    rng = np.random.default_rng([seed, 0x9E37])
    ax = [np.arange(d) * spacing + o for d, o in zip(dims, origin)]
    X, Y, Z = np.meshgrid(*ax, indexing="ij")
    extent = np.array([(d - 1) * spacing for d in dims])
    field = np.zeros(dims)
    for _ in range(n_blobs):
        center = np.array(origin) + extent * rng.uniform(0.2, 0.8, 3)
        width = rng.uniform(0.1, 0.25) * extent.min()
        height = rng.uniform(0.3, 0.7)
        r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2 + (Z - center[2]) ** 2
        field += height * np.exp(-r2 / (2.0 * width * width))
    return Pocket.from_grid(origin, spacing, np.clip(field, 0.0, 1.0))


def _random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def make_tree_ligand(name: str, n_atoms: int, n_rotamers: int, rng: np.random.Generator) -> Ligand:
    """Random tree ligand with ~1.5 A bonds and no close non-bonded contacts.

    Rotamers are picked among bonds with at least one atom beyond the axis on
    the moving side, so rotating them actually moves atoms.
    """
    coords = [np.zeros(3)]
    bonds = []
    degree = [0]
    for new in range(1, n_atoms):
        for _attempt in range(200):
            open_atoms = [a for a in range(new) if degree[a] < MAX_DEGREE]
            parent = int(rng.choice(open_atoms))
            pos = coords[parent] + BOND_LENGTH * _random_unit(rng)
            others = [coords[a] for a in range(new) if a != parent]
            if not others or min(np.linalg.norm(pos - o) for o in others) >= MIN_NONBONDED:
                break
        coords.append(pos)
        bonds.append((parent, new))
        degree[parent] += 1
        degree.append(1)
    # tree bond (parent, child): moving side is the child's subtree
    candidates = [(p, c) for p, c in bonds if degree[c] > 1]
    order = rng.permutation(len(candidates))
    picked = sorted(candidates[i] for i in order[:n_rotamers])
    radii = rng.uniform(0.6, 0.9, n_atoms)
    return make_ligand(name, np.array(coords), radii, bonds, picked)


def make_library(n_ligands: int, n_atoms: int = 12, n_rotamers: int = 3, seed: int = 0) -> list[Ligand]:
    rng = np.random.default_rng([seed, 0x11C4])
    width = max(5, len(str(n_ligands - 1)))
    return [
        make_tree_ligand(f"LIG{i:0{width}d}", n_atoms, n_rotamers, rng) for i in range(n_ligands)
    ]
