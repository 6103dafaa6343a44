import math

import numpy as np
import pytest
from hypothesis import settings

from geodock.docking import DockParams
from geodock.molecule import make_ligand
from geodock.scoring import Pocket
from geodock.synth import make_library, make_pocket

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def chain4():
    """0-1-2 along x, atom 3 lifted in +y; rotamer on (1, 2)."""
    coords = [[0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [3.0, 0.0, 0.0], [4.0, 1.2, 0.0]]
    return make_ligand("chain4", coords, [0.5] * 4, [(0, 1), (1, 2), (2, 3)], [(1, 2)])


@pytest.fixture(scope="session")
def pocket():
    return make_pocket(seed=1, dims=(16, 16, 16))


@pytest.fixture(scope="session")
def small_library():
    return make_library(6, n_atoms=8, n_rotamers=2, seed=11)


@pytest.fixture
def small_params():
    return DockParams(n_restarts=4, num_repetitions=2, rotation_steps=(6, 6, 4), dihedral_steps=12, seed=5)


def uniform_pocket(value, dims=(8, 8, 8), spacing=1.0, origin=(-4.0, -4.0, -4.0)):
    return Pocket(origin, spacing, dims, np.full(dims[0] * dims[1] * dims[2], float(value)))


def gradient_pocket(direction, dims=(12, 12, 12), spacing=1.0, origin=(-6.0, -6.0, -6.0)):
    """Field rising linearly along ``direction``, kept inside [0, 1]."""
    axes = [np.arange(d) * spacing + o for d, o in zip(dims, origin)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    d = np.asarray(direction, dtype=float)
    proj = d[0] * X + d[1] * Y + d[2] * Z
    span = np.abs(proj).max() or 1.0
    return Pocket.from_grid(origin, spacing, 0.5 + 0.5 * proj / span)


def random_rotation_matrix(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_tree(rng, n_atoms, n_rotamers=None, scale=2.0, name="rand"):
    """Random tree topology with random (not chemically sensible) coordinates."""
    bonds = [(int(rng.integers(0, i)), i) for i in range(1, n_atoms)]
    coords = rng.normal(scale=scale, size=(n_atoms, 3))
    if n_rotamers is None:
        n_rotamers = len(bonds)
    picks = rng.permutation(len(bonds))[:n_rotamers]
    rot = [bonds[i] if rng.random() < 0.5 else bonds[i][::-1] for i in sorted(picks)]
    radii = rng.uniform(0.3, 0.9, n_atoms)
    return make_ligand(name, coords, radii, bonds, rot)


TWO_PI = 2 * math.pi
