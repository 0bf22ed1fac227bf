"""Shared fixtures: the reference operating point and one seed-1 dataset.

The expensive artifacts (a 60 s event stream, its coincidence histogram,
one full cavity scan) are session-scoped so every test file reuses the
same objects instead of regenerating them.
"""

import numpy as np
import pytest

from biphoton_lab import presets
from biphoton_lab.eventsim import count_coincidences, generate_events
from biphoton_lab.model import wavefunction_from_spectrum
from biphoton_lab.spectral import simulate_joint_scan


@pytest.fixture(scope="session")
def ref_model():
    return presets.reference_model()


@pytest.fixture(scope="session")
def ref_grid():
    return presets.reference_grid()


@pytest.fixture(scope="session")
def ref_wavefunction(ref_model, ref_grid):
    return wavefunction_from_spectrum(ref_model, ref_grid)


@pytest.fixture(scope="session")
def ref_sim():
    return presets.reference_sim_config()


@pytest.fixture(scope="session")
def ref_cavity():
    return presets.reference_cavity()


@pytest.fixture(scope="session")
def ref_scan():
    return presets.reference_scan_config()


@pytest.fixture(scope="session")
def stream1(ref_sim, ref_wavefunction):
    """Seed-1 event stream, full 60 s acquisition."""
    return generate_events(ref_sim, ref_wavefunction, seed=1)


@pytest.fixture(scope="session")
def hist1(stream1):
    return count_coincidences(stream1, t_bin_s=1e-9, max_delay_s=1e-6)


@pytest.fixture(scope="session")
def map1(ref_model, ref_sim, ref_scan):
    """Seed-1 joint spectral scan."""
    return simulate_joint_scan(ref_model, ref_sim, ref_scan, seed=1)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
