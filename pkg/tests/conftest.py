"""Shared builders for the test suite.

Random problem instances are built from explicit Generator seeds so every
test is reproducible on its own.  Helpers return plain numpy arrays; the
oracle computations live inside the individual test modules.
"""

import numpy as np
import pytest

from risopt import ScenarioConfig, BeamformerSet, draw_realization


def crandn(rng, *shape):
    """Standard complex Gaussian array, CN(0, 1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def unit_phases(rng, n):
    return np.exp(1j * rng.uniform(-np.pi, np.pi, size=n))


def random_system(rng, num_ues=2, m=4, n=2, num_ris=6, noise_var=0.5):
    """Unit-scale concatenated tensors plus beamformers for rate tests.

    Returns (concats, bfs, psi, noise_var).  concats[k] has shape
    (m, num_ris + 1, n); slab 0 plays the direct channel.
    """
    concats = [crandn(rng, m, num_ris + 1, n) for _ in range(num_ues)]
    per_ue = []
    for _ in range(num_ues):
        b = crandn(rng, m, n)
        per_ue.append(b / np.linalg.norm(b))
    bfs = BeamformerSet(per_ue=tuple(per_ue), tx_power=float(num_ues))
    phi = unit_phases(rng, num_ris)
    psi = np.concatenate(([1.0 + 0.0j], phi))
    return concats, bfs, psi, noise_var


def tiny_config(**overrides):
    """ScenarioConfig small enough for fast end-to-end runs."""
    base = dict(
        num_ues=2,
        bs_geometry=None,
        ue_geometry=None,
        ris_geometry=None,
        paths_direct=3,
        paths_bs_ris=3,
        paths_ris_ue=3,
        rng_seed=11,
    )
    base.update(overrides)
    from risopt.channel import near_square_geometry

    if base["bs_geometry"] is None:
        base["bs_geometry"] = near_square_geometry(4)
    if base["ue_geometry"] is None:
        base["ue_geometry"] = near_square_geometry(2)
    if base["ris_geometry"] is None:
        base["ris_geometry"] = near_square_geometry(8)
    return ScenarioConfig(**base)


@pytest.fixture(scope="module")
def tiny_realization():
    return draw_realization(tiny_config(), trial=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
