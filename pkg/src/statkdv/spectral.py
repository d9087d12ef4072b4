"""Exact spectral arithmetic for real band-limited functions on the torus T=[0,1].

Functions are stored as finitely many complex Fourier coefficients with the
convention f(x) = sum_xi fhat(xi) e^{2 pi i xi x}.  Real-valuedness is the
Hermitian symmetry fhat(-xi) = conj(fhat(xi)), maintained by every operation.

Two storage layouts share one type: dense contiguous coefficient vectors for
max_freq <= DENSE_MAX_FREQ, and sparse sorted (frequency, amplitude) pairs
above that.  The spectra arising from the iteration are lacunary (multiples
of a lattice step shifted by a huge carrier), so sparse storage is what makes
carrier frequencies of order 10^8 feasible: memory, not speed, is the binding
constraint.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.fft import next_fast_len
from scipy.signal import fftconvolve

# Boundary between dense contiguous storage and sparse (freq, amp) pairs.
DENSE_MAX_FREQ = 1 << 20

# Largest max_freq for which products go through dense FFT convolution.
_DENSE_CONV_LIMIT = 1 << 23

# Hard cap on pairwise terms in sparse convolution before we refuse.
_SPARSE_PAIR_LIMIT = 300_000_000

# When True every operation re-checks Hermitian symmetry of its output.
STRICT_CHECKS = False


class SpectralError(Exception):
    """Base class for spectral-core failures."""


class ResolutionTooSmall(SpectralError):
    """Grid resolution below the alias-free minimum 2*max_freq+1."""


class NonRealSignal(SpectralError):
    """Imaginary residue of a synthesis exceeded its threshold."""


class TailTooLarge(SpectralError):
    """Truncated coefficient tail of a pointwise map exceeded tail_tol."""


class ProductTooLarge(SpectralError):
    """Sparse convolution would exceed the pairwise-term budget."""


def _as_freq_array(freqs):
    return np.asarray(freqs, dtype=np.int64)


class TorusFunction:
    """Real-valued function on T=[0,1] with finitely supported Fourier series.

    Immutable after construction; all operations are pure and safe to share
    across parallel workers.
    """

    __slots__ = ("freqs", "amps", "max_freq", "_dense")

    def __init__(self, freqs, amps, storage="auto"):
        freqs = _as_freq_array(freqs)
        amps = np.asarray(amps, dtype=np.complex128)
        if freqs.shape != amps.shape or freqs.ndim != 1:
            raise ValueError("freqs and amps must be 1-d arrays of equal length")
        order = np.argsort(freqs, kind="stable")
        freqs = freqs[order]
        amps = amps[order].copy()
        if freqs.size and np.any(np.diff(freqs) == 0):
            # merge duplicate frequencies
            uf, inv = np.unique(freqs, return_inverse=True)
            ua = np.zeros(uf.size, dtype=np.complex128)
            np.add.at(ua, inv, amps)
            freqs, amps = uf, ua
        mf = int(np.max(np.abs(freqs))) if freqs.size else 0
        dense = storage == "dense" or (storage == "auto" and mf <= DENSE_MAX_FREQ)
        if storage == "dense" and mf > DENSE_MAX_FREQ:
            raise ValueError("dense storage requested above DENSE_MAX_FREQ")
        if dense:
            vec = np.zeros(2 * mf + 1, dtype=np.complex128)
            vec[freqs + mf] = amps
            self.freqs = np.arange(-mf, mf + 1, dtype=np.int64)
            self.amps = vec
            self._dense = True
        else:
            keep = amps != 0
            self.freqs = freqs[keep]
            self.amps = amps[keep]
            self._dense = False
        self.max_freq = mf
        if STRICT_CHECKS:
            self.check_real()
        self.freqs.setflags(write=False)
        self.amps.setflags(write=False)

    # ---------------------------------------------------------------- basics

    @property
    def storage(self):
        return "dense" if self._dense else "sparse"

    @property
    def nnz(self):
        return int(np.count_nonzero(self.amps))

    @classmethod
    def zero(cls):
        return cls([], [])

    @classmethod
    def constant(cls, c):
        return cls([0], [complex(c)])

    @classmethod
    def from_coeffs(cls, coeffs):
        """Build from a {frequency: amplitude} mapping."""
        items = sorted(coeffs.items())
        return cls([k for k, _ in items], [v for _, v in items])

    @classmethod
    def from_dense(cls, vec):
        """Build from a centered dense vector of length 2*mf+1."""
        vec = np.asarray(vec, dtype=np.complex128)
        mf = (vec.size - 1) // 2
        return cls(np.arange(-mf, mf + 1), vec)

    @classmethod
    def harmonic(cls, xi, amp):
        """amp*e^{2 pi i xi x} + c.c. (real by construction)."""
        if xi == 0:
            return cls([0], [complex(amp).real])
        return cls([-xi, xi], [np.conj(amp), amp])

    @classmethod
    def cosine(cls, freq, amplitude=1.0):
        return cls.harmonic(freq, amplitude / 2.0)

    @classmethod
    def sine(cls, freq, amplitude=1.0):
        return cls.harmonic(freq, -0.5j * amplitude)

    def coeff(self, xi):
        idx = np.searchsorted(self.freqs, xi)
        if idx < self.freqs.size and self.freqs[idx] == xi:
            return complex(self.amps[idx])
        return 0j

    def coeffs_at(self, xis):
        """Vector of coefficients at the given frequencies."""
        xis = _as_freq_array(xis)
        out = np.zeros(xis.size, dtype=np.complex128)
        idx = np.searchsorted(self.freqs, xis)
        ok = idx < self.freqs.size
        hit = np.zeros_like(ok)
        hit[ok] = self.freqs[idx[ok]] == xis[ok]
        out[hit] = self.amps[idx[hit]]
        return out

    @property
    def mean(self):
        return self.coeff(0).real

    def to_dense_array(self, mf=None):
        """Centered coefficient vector of length 2*mf+1."""
        if mf is None:
            mf = self.max_freq
        if mf < self.max_freq:
            raise ValueError("requested dense band smaller than support")
        vec = np.zeros(2 * mf + 1, dtype=np.complex128)
        vec[self.freqs + mf] = self.amps
        return vec

    def check_real(self, tol=1e-10):
        neg = self.coeffs_at(-self.freqs)
        scale = np.max(np.abs(self.amps)) if self.amps.size else 0.0
        if scale and np.max(np.abs(self.amps - np.conj(neg))) > tol * scale:
            raise NonRealSignal("coefficients violate Hermitian symmetry")

    # ------------------------------------------------------------- arithmetic

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = TorusFunction.constant(other)
        freqs = np.concatenate([self.freqs, other.freqs])
        amps = np.concatenate([self.amps, other.amps])
        return TorusFunction(freqs, amps)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        return TorusFunction(self.freqs, self.amps * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def scale_freq(self, weights_fn):
        """Multiply coefficients by a frequency-dependent weight array."""
        return TorusFunction(self.freqs, self.amps * weights_fn(self.freqs))

    def shift_freq(self, sigma):
        """Frequency translation xi -> xi + sigma (modulation by e^{2pi i sigma x})."""
        return TorusFunction(self.freqs + int(sigma), self.amps, storage="sparse"
                             if self.max_freq + abs(sigma) > DENSE_MAX_FREQ else "auto")

    def prune(self, rel_tol):
        """Drop coefficients below rel_tol times the largest amplitude."""
        if not self.amps.size:
            return self
        cut = rel_tol * np.max(np.abs(self.amps))
        keep = np.abs(self.amps) >= cut
        return TorusFunction(self.freqs[keep], self.amps[keep],
                             storage="sparse" if not self._dense else "auto")

    def restrict(self, max_freq):
        """Hard truncation to |xi| <= max_freq (explicit, never silent)."""
        keep = np.abs(self.freqs) <= max_freq
        return TorusFunction(self.freqs[keep], self.amps[keep])

    def allclose(self, other, tol=1e-12, relative=True):
        freqs = np.union1d(self.freqs, other.freqs)
        d = np.abs(self.coeffs_at(freqs) - other.coeffs_at(freqs))
        if not d.size:
            return True
        scale = 1.0
        if relative:
            m = max(np.max(np.abs(self.amps)) if self.amps.size else 0.0,
                    np.max(np.abs(other.amps)) if other.amps.size else 0.0)
            scale = m if m > 0 else 1.0
        return bool(np.max(d) <= tol * scale)

    def __repr__(self):
        return (f"TorusFunction(max_freq={self.max_freq}, nnz={self.nnz}, "
                f"storage={self.storage})")


class GridSamples:
    """Real samples on the uniform grid x_k = k/M."""

    __slots__ = ("values", "resolution")

    def __init__(self, values, resolution=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.resolution = int(resolution if resolution is not None
                              else self.values.size)
        if self.values.size != self.resolution:
            raise ValueError("values length must equal resolution")


def synthesize(f: TorusFunction, M: int) -> GridSamples:
    """Evaluate f at x_k = k/M, k = 0..M-1 (alias-free: M >= 2*max_freq+1)."""
    if M < 2 * f.max_freq + 1:
        raise ResolutionTooSmall(
            f"M={M} < 2*max_freq+1 = {2 * f.max_freq + 1}")
    spec = np.zeros(M, dtype=np.complex128)
    np.add.at(spec, np.mod(f.freqs, M), f.amps)
    vals = np.fft.ifft(spec) * M
    scale = np.max(np.abs(f.amps)) if f.amps.size else 0.0
    resid = np.max(np.abs(vals.imag)) if vals.size else 0.0
    if scale and resid > 1e-12 * scale:
        raise NonRealSignal(
            f"imaginary residue {resid:.3e} exceeds 1e-12*{scale:.3e}")
    return GridSamples(vals.real, M)


def analyze(g: GridSamples, max_freq: int) -> TorusFunction:
    """Fourier coefficients of grid samples up to |xi| <= max_freq.

    Left inverse of synthesize on band-limited inputs.
    """
    M = g.resolution
    if M < 2 * max_freq + 1:
        raise ResolutionTooSmall(f"resolution {M} < 2*max_freq+1")
    spec = np.fft.fft(g.values) / M
    xi = np.arange(-max_freq, max_freq + 1, dtype=np.int64)
    c = spec[np.mod(xi, M)]
    # symmetrize: input is real so enforce exact Hermitian symmetry
    c = 0.5 * (c + np.conj(c[::-1]))
    return TorusFunction(xi, c)


def full_spectrum(g: GridSamples):
    """All M Fourier bins of the samples, as (freqs, amps) centered arrays."""
    M = g.resolution
    spec = np.fft.fft(g.values) / M
    half = M // 2
    xi = np.arange(-half, M - half, dtype=np.int64)
    return xi, spec[np.mod(xi, M)]


def derivative(f: TorusFunction, order: int = 1) -> TorusFunction:
    """order-th derivative: coefficient multiplier (2 pi i xi)^order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    mult = (2j * np.pi * f.freqs.astype(np.float64)) ** order
    return TorusFunction(f.freqs, f.amps * mult,
                         storage=f.storage if not f._dense else "auto")


def product(f: TorusFunction, g: TorusFunction) -> TorusFunction:
    """Exact coefficient convolution; max_freq adds, never truncated."""
    if not f.amps.size or not g.amps.size:
        return TorusFunction.zero()
    out_mf = f.max_freq + g.max_freq
    if out_mf <= _DENSE_CONV_LIMIT:
        a = f.to_dense_array()
        b = g.to_dense_array()
        if min(a.size, b.size) <= 64:
            conv = np.convolve(a, b)
        else:
            conv = fftconvolve(a, b)
        xi = np.arange(-out_mf, out_mf + 1, dtype=np.int64)
        res = TorusFunction(xi, conv)
    else:
        n_pairs = f.freqs.size * g.freqs.size
        if n_pairs > _SPARSE_PAIR_LIMIT:
            raise ProductTooLarge(
                f"sparse convolution with {n_pairs:.2e} pairwise terms")
        F = (f.freqs[:, None] + g.freqs[None, :]).ravel()
        A = (f.amps[:, None] * g.amps[None, :]).ravel()
        uf, inv = np.unique(F, return_inverse=True)
        ua = np.zeros(uf.size, dtype=np.complex128)
        np.add.at(ua, inv, A)
        res = TorusFunction(uf, ua, storage="sparse"
                            if out_mf > DENSE_MAX_FREQ else "auto")
    if STRICT_CHECKS:
        res.check_real()
    return res


def product_at_freqs(f: TorusFunction, g: TorusFunction, targets):
    """Coefficients of f*g at selected frequencies without the full product.

    For each target t: sum_eta fhat(eta) ghat(t - eta), via a sorted lookup
    of g at t - supp(fhat).  Cost O(len(targets) * nnz(f) * log nnz(g)).
    """
    out = np.zeros(len(targets), dtype=np.complex128)
    for i, t in enumerate(targets):
        gv = g.coeffs_at(int(t) - f.freqs)
        out[i] = np.sum(f.amps * gv)
    return out


def _grid_size(n):
    return next_fast_len(max(int(n), 1), real=True)


def pointwise_map(f: TorusFunction, map_fn, out_max_freq: int,
                  tail_tol: float, oversample: int = 4) -> TorusFunction:
    """Apply a scalar map pointwise and re-expand, certifying the tail.

    Samples f on an oversampled grid (factor >= oversample beyond the
    alias-free size for out_max_freq), applies map_fn, analyzes back and
    truncates at out_max_freq.  The discarded coefficient tail must have
    ell^2 mass < tail_tol * (ell^2 mass kept), else TailTooLarge.
    """
    if oversample < 4:
        raise ValueError("oversample factor must be >= 4")
    M = _grid_size(max(oversample * (2 * out_max_freq + 1),
                       2 * f.max_freq + 1))
    vals = map_fn(synthesize(f, M).values)
    spec = np.fft.rfft(np.asarray(vals, dtype=np.float64)) / M
    nbins = spec.size  # frequencies 0..M//2
    keep_hi = min(out_max_freq, nbins - 1)
    kept_sq = np.abs(spec[0]) ** 2 + 2.0 * np.sum(np.abs(spec[1:keep_hi + 1]) ** 2)
    tail_sq = 2.0 * np.sum(np.abs(spec[keep_hi + 1:]) ** 2)
    if tail_sq > tail_tol ** 2 * kept_sq:
        raise TailTooLarge(
            f"truncated tail ell2 {np.sqrt(tail_sq):.3e} exceeds "
            f"{tail_tol:.1e} * kept {np.sqrt(kept_sq):.3e}")
    xi = np.arange(-keep_hi, keep_hi + 1, dtype=np.int64)
    pos = spec[:keep_hi + 1]
    c = np.concatenate([np.conj(pos[1:][::-1]), pos])
    return TorusFunction(xi, c)


# ------------------------------------------------------------------ CSV I/O

def save_coeffs(f: TorusFunction, path):
    """Dump coefficients as CSV rows `xi,re,im` sorted by xi."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["xi", "re", "im"])
        for xi, a in zip(f.freqs.tolist(), f.amps.tolist()):
            if a != 0:
                wr.writerow([xi, repr(a.real), repr(a.imag)])


def load_coeffs(path) -> TorusFunction:
    freqs, amps = [], []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != ["xi", "re", "im"]:
            raise ValueError(f"unexpected coefficient CSV header: {header}")
        for row in rd:
            freqs.append(int(row[0]))
            amps.append(complex(float(row[1]), float(row[2])))
    return TorusFunction(freqs, amps)
