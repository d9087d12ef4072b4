"""Shared fixtures: the (expensive) certified two-stage run and the scaling
sweep are computed once per session and reused across test modules."""

import time

import numpy as np
import pytest

from statkdv.scheme import SchemeParams, iterate
from statkdv.slabs import build_profile
from statkdv.spectral import TorusFunction
from statkdv.verify import run_lemma_suite, scaling_suite


@pytest.fixture(scope="session")
def params():
    return SchemeParams()


@pytest.fixture(scope="session")
def profile():
    return build_profile()


@pytest.fixture(scope="session")
def states2(params):
    """Base case plus two certified stages, with the wall time it took."""
    t0 = time.monotonic()
    states = iterate(params, 2, certify=True)
    return states, time.monotonic() - t0


@pytest.fixture(scope="session")
def reports(params):
    """Full scaling sweep (lambda = 2^7..2^13 plus the high-low sweep)."""
    return scaling_suite(params=params)


@pytest.fixture(scope="session")
def lemma_report():
    """Seeded empirical-constant suite, with its wall time."""
    t0 = time.monotonic()
    rep = run_lemma_suite(seed=0)
    return rep, time.monotonic() - t0


def random_tf(rng, max_freq, decay=1.0):
    """Random real trig polynomial with power-law coefficient decay."""
    pos = np.arange(1, max_freq + 1)
    amps = ((rng.standard_normal(max_freq) + 1j * rng.standard_normal(max_freq))
            / (1.0 + pos) ** decay)
    freqs = np.concatenate([-pos[::-1], [0], pos])
    allamps = np.concatenate([np.conj(amps[::-1]),
                              [complex(rng.standard_normal())], amps])
    return TorusFunction(freqs, allamps)
