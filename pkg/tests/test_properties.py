"""Quantitative-lemma suite (seeded empirical constants) and randomized
property tests."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statkdv.littlewood_paley import build_filter
from statkdv.norms import lp_norm, sobolev_norm
from statkdv.spectral import TorusFunction, analyze, product, synthesize
from statkdv.verify import run_lemma_suite

from conftest import random_tf


def _entry(lemma_report, name):
    rep, _ = lemma_report
    matches = [r for r in rep["results"] if r["lemma"] == name]
    assert len(matches) == 1
    return matches[0]


# --------------------------------------------------- seeded empirical constants

def test_lp_partition_of_unity(lemma_report):
    r = _entry(lemma_report, "lp_partition")
    assert r["pass"] and r["constant"] <= r["tolerance"] == 1e-12
    assert r["n_cases"] >= 500


def test_projector_lp_bounded(lemma_report):
    r = _entry(lemma_report, "lp_boundedness")
    assert r["pass"] and r["constant"] <= r["tolerance"] == 4.0
    assert r["n_cases"] >= 100


def test_bernstein_a(lemma_report):
    r = _entry(lemma_report, "bernstein_a")
    assert r["pass"] and r["constant"] <= r["tolerance"] == 8.0
    assert r["n_cases"] >= 50


def test_bernstein_b(lemma_report):
    r = _entry(lemma_report, "bernstein_b")
    assert r["pass"] and r["constant"] <= r["tolerance"] == 4.0
    assert r["n_cases"] >= 50


def test_kato_ponce(lemma_report):
    r = _entry(lemma_report, "kato_ponce")
    assert r["pass"] and r["constant"] <= r["tolerance"] == 16.0
    assert r["n_cases"] >= 100


def test_lemma_suite_deterministic(lemma_report):
    rep, _ = lemma_report
    again = run_lemma_suite(seed=0)
    assert json.dumps(rep, sort_keys=True) == json.dumps(again, sort_keys=True)
    assert rep["passed"] is True


# ------------------------------------------------------------ hypothesis tests

finite = st.floats(-5, 5, allow_nan=False, allow_subnormal=False)
amp_lists = st.lists(st.tuples(finite, finite), min_size=1, max_size=8)


def _tf_from(pairs):
    """Hermitian trig polynomial from (re, im) pairs for xi = 1..n."""
    coeffs = {0: complex(0.0)}
    for xi, (re, im) in enumerate(pairs, start=1):
        coeffs[xi] = complex(re, im)
        coeffs[-xi] = complex(re, -im)
    return TorusFunction.from_coeffs(coeffs)


@settings(max_examples=50, deadline=None)
@given(amp_lists, amp_lists)
def test_product_commutes(pa, pb):
    f, g = _tf_from(pa), _tf_from(pb)
    assert product(f, g).allclose(product(g, f), tol=1e-12)


@settings(max_examples=50, deadline=None)
@given(amp_lists)
def test_synthesize_analyze_roundtrip(pairs):
    f = _tf_from(pairs)
    M = 4 * (2 * f.max_freq + 1)
    assert analyze(synthesize(f, M), f.max_freq).allclose(f, tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=10 ** 9))
def test_partition_of_unity_arbitrary_frequency(xi):
    filt = build_filter()
    total = sum(float(filt.phi(xi / 2.0 ** j)) for j in range(34))
    assert total == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(amp_lists, st.floats(0.01, 100.0, allow_nan=False),
       st.floats(-3.0, 3.0, allow_nan=False))
def test_sobolev_homogeneity(pairs, c, s):
    f = _tf_from(pairs)
    assert sobolev_norm(c * f, s) == pytest.approx(c * sobolev_norm(f, s),
                                                   rel=1e-10, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(amp_lists, amp_lists)
def test_product_l2_against_grid(pa, pb):
    f, g = _tf_from(pa), _tf_from(pb)
    prod = product(f, g)
    M = 4 * (2 * prod.max_freq + 1)
    grid = synthesize(f, M).values * synthesize(g, M).values
    assert lp_norm(prod, 2) == pytest.approx(
        math.sqrt(float(np.mean(grid ** 2))), rel=1e-9, abs=1e-10)


def test_random_tf_is_real():
    rng = np.random.default_rng(99)
    for _ in range(20):
        random_tf(rng, int(rng.integers(1, 64))).check_real(tol=1e-14)
