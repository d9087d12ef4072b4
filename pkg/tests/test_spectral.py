"""Spectral core: synthesis/analysis, derivatives, products, pointwise maps.

Oracles: direct Fourier summation, centered finite differences, and grid
multiplication followed by re-analysis.
"""

import numpy as np
import pytest

from statkdv.spectral import (GridSamples, NonRealSignal, ResolutionTooSmall,
                              TailTooLarge, TorusFunction, analyze, derivative,
                              load_coeffs, pointwise_map, product,
                              product_at_freqs, save_coeffs, synthesize)

from conftest import random_tf


# ------------------------------------------------------------------ synthesize

def test_synthesize_constant():
    g = synthesize(TorusFunction.constant(1.0), 8)
    assert np.allclose(g.values, 1.0, atol=1e-14)


def test_synthesize_sine_exact_samples():
    # sin(2 pi x) at x = 0, 1/4, 1/2, 3/4
    g = synthesize(TorusFunction.sine(1), 4)
    assert np.allclose(g.values, [0.0, 1.0, 0.0, -1.0], atol=1e-14)


def test_synthesize_direct_summation_oracle():
    rng = np.random.default_rng(2)
    f = random_tf(rng, 16)
    M = 64
    g = synthesize(f, M)
    x = np.arange(M) / M
    direct = np.zeros(M, dtype=np.complex128)
    for xi, a in zip(f.freqs, f.amps):
        direct += a * np.exp(2j * np.pi * xi * x)
    assert np.max(np.abs(g.values - direct.real)) < 1e-12
    assert np.max(np.abs(direct.imag)) < 1e-12


def test_synthesize_resolution_too_small():
    f = TorusFunction.cosine(5)
    with pytest.raises(ResolutionTooSmall):
        synthesize(f, 10)   # needs M >= 11


def test_synthesize_rejects_non_real():
    # single unpaired complex mode is not a real-valued function
    f = TorusFunction([3], [1.0 + 0.0j])
    with pytest.raises(NonRealSignal):
        synthesize(f, 16)


# --------------------------------------------------------------------- analyze

def test_analyze_constant():
    f = analyze(GridSamples(np.full(9, 3.0)), 0)
    assert f.coeff(0) == pytest.approx(3.0)
    assert f.nnz == 1


def test_roundtrip_identity():
    rng = np.random.default_rng(3)
    f = random_tf(rng, 20)
    back = analyze(synthesize(f, 64), 20)
    assert f.allclose(back, tol=1e-12)


def test_analyze_cos_product_coefficients():
    # cos(2 pi x) cos(4 pi x) = (cos(2 pi x) + cos(6 pi x))/2
    M = 16
    x = np.arange(M) / M
    vals = np.cos(2 * np.pi * x) * np.cos(4 * np.pi * x)
    f = analyze(GridSamples(vals), 4)
    for xi in (1, -1, 3, -3):
        assert f.coeff(xi) == pytest.approx(0.25, abs=1e-14)
    assert abs(f.coeff(2)) < 1e-14


# ------------------------------------------------------------------ derivative

def test_derivative_constant_is_zero():
    d = derivative(TorusFunction.constant(7.0), 3)
    assert d.allclose(TorusFunction.zero())


def test_derivative_sine():
    d = derivative(TorusFunction.sine(1), 1)
    expected = TorusFunction.cosine(1, 2.0 * np.pi)
    assert d.allclose(expected, tol=1e-14)
    assert d.mean == 0.0


def test_derivative_finite_difference_oracle():
    rng = np.random.default_rng(4)
    f = random_tf(rng, 12)
    M = 1 << 16
    vals = synthesize(f, M).values
    fd = (np.roll(vals, -1) - np.roll(vals, 1)) * (M / 2.0)
    exact = synthesize(derivative(f, 1), M).values
    scale = np.max(np.abs(exact))
    assert np.max(np.abs(fd - exact)) < 1e-6 * scale


# --------------------------------------------------------------------- product

def test_product_identity():
    rng = np.random.default_rng(5)
    f = random_tf(rng, 10)
    assert product(f, TorusFunction.constant(1.0)).allclose(f, tol=1e-14)


def test_product_sine_squared():
    # sin^2(2 pi x) = 1/2 - cos(4 pi x)/2
    s = TorusFunction.sine(1)
    expected = TorusFunction.constant(0.5) + TorusFunction.cosine(2, -0.5)
    assert product(s, s).allclose(expected, tol=1e-14)


def test_product_grid_oracle():
    rng = np.random.default_rng(6)
    f = random_tf(rng, 32)
    g = random_tf(rng, 32)
    M = 129   # 2*64 + 1, alias-free for the product band
    vals = synthesize(f, M).values * synthesize(g, M).values
    oracle = analyze(GridSamples(vals), 64)
    assert product(f, g).allclose(oracle, tol=1e-11)


def test_product_commutative_bilinear():
    rng = np.random.default_rng(7)
    f, g, h = (random_tf(rng, 8) for _ in range(3))
    assert product(f, g).allclose(product(g, f), tol=1e-14)
    lhs = product(f, g + 2.0 * h)
    rhs = product(f, g) + 2.0 * product(f, h)
    assert lhs.allclose(rhs, tol=1e-13)


def test_leibniz_rule():
    rng = np.random.default_rng(8)
    f = random_tf(rng, 16)
    g = random_tf(rng, 16)
    lhs = derivative(product(f, g), 1)
    rhs = product(derivative(f, 1), g) + product(f, derivative(g, 1))
    assert lhs.allclose(rhs, tol=1e-10)


def test_sparse_dense_storage_equality():
    rng = np.random.default_rng(9)
    f = random_tf(rng, 24)
    sparse = TorusFunction(f.freqs, f.amps, storage="sparse")
    assert sparse.storage == "sparse" and f.storage == "dense"
    assert sparse.allclose(f, tol=0.0)
    assert product(sparse, sparse).allclose(product(f, f), tol=1e-13)


def test_product_at_freqs_matches_product():
    rng = np.random.default_rng(10)
    f = random_tf(rng, 16)
    g = random_tf(rng, 12)
    full = product(f, g)
    targets = [-20, -3, 0, 5, 17, 28, 40]
    got = product_at_freqs(f, g, targets)
    want = np.array([full.coeff(t) for t in targets])
    assert np.max(np.abs(got - want)) < 1e-13


def test_hermitian_symmetry_preserved():
    rng = np.random.default_rng(11)
    f = random_tf(rng, 16)
    for g in (derivative(f, 2), product(f, f), f + 3.0, 2.5 * f):
        g.check_real(tol=1e-12)


# ---------------------------------------------------------------- pointwise map

def test_pointwise_map_sqrt_constant():
    f = TorusFunction.constant(4.0)
    out = pointwise_map(f, np.sqrt, 4, 1e-10)
    assert out.allclose(TorusFunction.constant(2.0), tol=1e-13)


def test_pointwise_map_square_identity():
    # cos^2(2 pi x) = 1/2 + cos(4 pi x)/2
    f = TorusFunction.cosine(1)
    out = pointwise_map(f, lambda v: v * v, 4, 1e-12)
    expected = TorusFunction.constant(0.5) + TorusFunction.cosine(2, 0.5)
    assert out.allclose(expected, tol=1e-13)


def test_pointwise_map_sqrt_grid_oracle():
    f = TorusFunction.constant(2.0) + TorusFunction.cosine(1)
    out = pointwise_map(f, np.sqrt, 64, 1e-8)
    M = 1024
    x = np.arange(M) / M
    want = np.sqrt(2.0 + np.cos(2 * np.pi * x))
    assert np.max(np.abs(synthesize(out, M).values - want)) < 1e-8


def test_pointwise_map_tail_too_large():
    # |cos| has a slowly decaying spectrum; a 2-mode band cannot hold it
    f = TorusFunction.cosine(1)
    with pytest.raises(TailTooLarge):
        pointwise_map(f, np.abs, 2, 1e-10)


# --------------------------------------------------------------------- CSV I/O

def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    f = random_tf(rng, 30)
    path = tmp_path / "f.csv"
    save_coeffs(f, path)
    back = load_coeffs(path)
    assert back.allclose(f, tol=0.0)   # repr round-trip is exact
