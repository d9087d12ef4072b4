"""Dyadic cutoff and projector family: partition of unity, shell disjointness,
exact reassembly, and mean handling."""

import numpy as np
import pytest

from statkdv.littlewood_paley import (build_filter, project_high, project_low,
                                      project_mean, project_nonzero,
                                      project_shell)
from statkdv.spectral import TorusFunction

from conftest import random_tf


@pytest.fixture(scope="module")
def filt():
    return build_filter()


# ----------------------------------------------------------------- the cutoff

def test_phi_flat_region(filt):
    assert filt.phi(1.5) == pytest.approx(1.0)
    assert filt.phi(1.0) == pytest.approx(1.0)
    assert filt.phi(12.0 / 7.0) == pytest.approx(1.0)


def test_phi_support(filt):
    for t in (0.0, 0.5, 6.0 / 7.0, 2.0, 2.5, -3.0):
        assert filt.phi(t) == 0.0


def test_phi_even(filt):
    t = np.linspace(0.1, 2.5, 73)
    assert np.allclose(filt.phi(t), filt.phi(-t), atol=0.0)


def test_phi_range(filt):
    t = np.linspace(0.0, 3.0, 4001)
    v = filt.phi(t)
    assert np.all(v >= 0.0) and np.all(v <= 1.0)


def test_phi_overlap_partition(filt):
    # phi(t) + phi(t/2) = 1 on the overlap [12/7, 2]
    t = np.linspace(12.0 / 7.0, 2.0, 1000)
    assert np.max(np.abs(filt.phi(t) + filt.phi(t / 2.0) - 1.0)) < 1e-14


def test_partition_of_unity_pointwise(filt):
    # sum over j >= 0 of phi(2^-j xi) = 1 for every |xi| >= 1
    for xi in list(range(1, 80)) + [127, 128, 129, 38, 1000, 4096]:
        total = sum(float(filt.phi(xi / 2.0 ** j)) for j in range(16))
        assert total == pytest.approx(1.0, abs=1e-14), xi


def test_shell_weight_at_38(filt):
    # 38 / 2^5 = 1.1875 lies in the flat region of shell j=5
    assert filt.shell_weights(np.array([38]), 5)[0] == pytest.approx(1.0)
    assert filt.shell_weights(np.array([38]), 3)[0] == 0.0


# ------------------------------------------------------------------ projectors

def test_shell_of_constant_is_zero(filt):
    c = TorusFunction.constant(5.0)
    for j in range(6):
        assert project_shell(c, j, filt).allclose(TorusFunction.zero())


def test_shells_sum_to_nonzero_part(filt):
    rng = np.random.default_rng(21)
    f = random_tf(rng, 200)
    total = TorusFunction.zero()
    for j in range(10):
        total = total + project_shell(f, j, filt)
    assert total.allclose(project_nonzero(f), tol=1e-12)


def test_low_high_exact_reassembly(filt):
    rng = np.random.default_rng(22)
    f = random_tf(rng, 300)
    for thr in (4, 16, 64, 256):
        lo = project_low(f, thr, filt)
        hi = project_high(f, thr, filt)
        assert (lo + hi).allclose(f, tol=1e-14)


def test_project_mean():
    f = TorusFunction.constant(3.0) + TorusFunction.sine(1)
    assert project_mean(f) == pytest.approx(3.0)


def test_project_nonzero_constant():
    assert project_nonzero(TorusFunction.constant(2.0)).allclose(
        TorusFunction.zero())


def test_project_nonzero_removes_only_mean():
    rng = np.random.default_rng(23)
    f = random_tf(rng, 16)
    g = project_nonzero(f)
    assert g.mean == 0.0
    assert (g + f.mean).allclose(f, tol=1e-14)


def test_distant_shells_disjoint(filt):
    rng = np.random.default_rng(24)
    f = random_tf(rng, 500)
    for j in range(8):
        pj = project_shell(f, j, filt)
        for jp in range(j + 2, 10):
            again = project_shell(pj, jp, filt)
            assert again.allclose(TorusFunction.zero(), relative=False,
                                  tol=1e-15)


def test_project_low_keeps_mean(filt):
    f = TorusFunction.constant(7.0) + TorusFunction.cosine(100)
    lo = project_low(f, 4, filt)
    assert lo.mean == pytest.approx(7.0)
    assert abs(lo.coeff(100)) == 0.0


def test_project_low_flat_inside_band(filt):
    # P_{<= lambda} passes every |xi| <= lambda unchanged
    rng = np.random.default_rng(25)
    f = random_tf(rng, 64)
    lo = project_low(f, 64, filt)
    for xi in range(-64, 65):
        assert lo.coeff(xi) == pytest.approx(f.coeff(xi), abs=1e-15)


def test_projector_idempotent_on_flat_shell(filt):
    # a pure mode in the flat part of shell j is reproduced exactly
    f = TorusFunction.cosine(48)   # 48/2^5 = 1.5, flat for j=5
    assert project_shell(f, 5, filt).allclose(f, tol=1e-15)
