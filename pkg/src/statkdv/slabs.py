"""Intermittent slabs: concentrated periodic bump trains and their spectra.

The slab rho_{lambda,eps} is built two independent ways:

* physical: rho(x) = sum_n lambda^{(1-eps)/2} phi(lambda x + lambda^{1-eps} n),
  a train of bumps of width 1/lambda at lattice spacing 1/mu, mu = lambda^eps;
* Fourier: rho(x) = sum_n lambda^{(eps-1)/2} phihat(lambda^{eps-1} n)
  e^{2 pi i mu n x}  (Poisson summation).

The profile is phi(x) = c x e^{-1/(1-x^2)} on (-1,1): smooth, odd, mean-zero,
L^2(R)-normalized.  Its transform is purely imaginary and decays faster than
any polynomial; empirically |phihat(xi)| ~ e^{-2.65 sqrt(xi)}, a fit used
only to size guard bands and working precision (never for values; values are
cross-validated between independent samplers).

Deep tail values (down to ~1e-50 for the high-low decay diagnostics) are out
of reach of double-precision quadrature, so a fixed-point FFT sampler over
gmpy2 multiprecision complexes supplies the transform on dyadic grids at a
precision chosen from the target magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import numpy as np
from scipy.fft import next_fast_len
from scipy.integrate import quad

from .littlewood_paley import LPFilter, build_filter
from .spectral import GridSamples, TorusFunction, analyze, product, synthesize

# Empirical decay envelope |phihat(xi)| ~ exp(-DECAY_C*sqrt(xi)) (see module
# docstring: guard-band sizing only).
_DECAY_C = 2.65


def _decay_arg(target: float) -> float:
    """xi beyond which the decay envelope falls below `target`."""
    return (math.log(1.0 / target) / _DECAY_C) ** 2


def _pow2_at_least(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


@dataclass(frozen=True)
class SlabSpec:
    """Slab parameters with exact dyadic integrality: lam=2^m, mu=2^k, eps=k/m."""

    lam: int
    mu: int

    def __post_init__(self):
        m, k = self.m, self.k
        if 2 ** m != self.lam or 2 ** k != self.mu:
            raise ValueError("lam and mu must be powers of 2")
        if not 1 <= k <= m - 1:
            raise ValueError("need 2 <= mu <= lam/2")

    @property
    def m(self) -> int:
        return self.lam.bit_length() - 1

    @property
    def k(self) -> int:
        return self.mu.bit_length() - 1

    @property
    def epsilon(self) -> float:
        return self.k / self.m

    @property
    def delta(self) -> float:
        """Transform grid step mu/lam = lam^{eps-1}, an exact power of 2."""
        return self.mu / self.lam

    @classmethod
    def from_target(cls, lam: int, eps_target: float) -> "SlabSpec":
        """Realize eps as k/m with k = round(m*eps_target), ties down.

        Ties-down keeps sweeps over lambda grids centered on the target
        exponent (ties-up would bias every realized eps upward).
        """
        m = lam.bit_length() - 1
        if 2 ** m != lam:
            raise ValueError("lam must be a power of 2")
        k = math.ceil(m * eps_target - 0.5)
        k = min(max(k, 1), m - 1)
        return cls(lam, 2 ** k)


class SlabProfile:
    """The odd bump profile and samplers of its continuous Fourier transform."""

    def __init__(self, norm_const: float):
        self.norm_const = norm_const
        self._hat_cache: dict[float, complex] = {}
        self._grid_cache: dict[tuple, np.ndarray] = {}

    # ------------------------------------------------------------- profile

    def phi_profile(self, x):
        """c * x * exp(-1/(1-x^2)) on (-1,1), zero outside (vectorized)."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        inside = np.abs(x) < 1.0
        xi = x[inside]
        out[inside] = self.norm_const * xi * np.exp(-1.0 / (1.0 - xi * xi))
        return out

    def _phi_mp(self, x):
        """Profile value at a gmpy2 mpfr point (current context precision)."""
        ax = abs(x)
        if ax >= 1:
            return gmpy2.mpfr(0)
        return self.norm_const * x * gmpy2.exp(-1 / (1 - x * x))

    # ------------------------------------------------- per-point quadrature

    def phi_hat(self, xi: float) -> complex:
        """Continuous Fourier transform by adaptive quadrature, cached.

        phihat(xi) = int phi(x) e^{-2 pi i xi x} dx = -2i int_0^1 phi sin(2
        pi xi x) dx (odd real profile => purely imaginary transform).
        """
        xi = float(xi)
        if xi in self._hat_cache:
            return self._hat_cache[xi]
        if xi == 0.0:
            val = 0j
        else:
            integ, _ = quad(self.phi_profile, 0.0, 1.0, weight="sin",
                            wvar=2.0 * math.pi * abs(xi),
                            epsabs=1e-13, epsrel=1e-13, limit=400)
            val = -2j * integ
            if xi < 0:
                val = np.conj(val)
        self._hat_cache[xi] = val
        return val

    # --------------------------------------------------- batched FFT sampler

    def phi_hat_grid(self, delta: float, n_max: int) -> np.ndarray:
        """phihat(n*delta) for n = 0..n_max via a double-precision FFT.

        delta must be 2^{-t}, t >= 1.  Trapezoid sums of a compactly
        supported smooth function are exact up to spectral aliasing, guarded
        to below 1e-18 absolute.
        """
        T = 1.0 / delta
        if T != round(T) or int(round(T)) & (int(round(T)) - 1):
            raise ValueError("delta must be an inverse power of 2")
        key = ("f64", delta, n_max)
        if key in self._grid_cache:
            return self._grid_cache[key]
        inv_h = _pow2_at_least(math.ceil(n_max * delta + _decay_arg(1e-18)))
        N = int(round(T)) * inv_h
        if n_max >= N // 2:
            raise ValueError("n_max beyond the alias-free half-spectrum")
        h = 1.0 / inv_h
        x = -T / 2.0 + h * np.arange(N)
        vals = self.phi_profile(x)
        spec = np.fft.fft(vals)
        n = np.arange(n_max + 1)
        out = h * np.where(n % 2 == 0, 1.0, -1.0) * spec[n]
        self._grid_cache[key] = out
        return out

    def phi_hat_window_mp(self, delta: float, n_lo: int, n_hi: int,
                          abs_floor: float) -> np.ndarray:
        """phihat(n*delta) for n in [n_lo, n_hi] at absolute accuracy abs_floor.

        Multiprecision FFT over gmpy2 complexes; needed when the window sits
        in the deep tail (values below double-precision quadrature noise).
        Returns complex128 (the values themselves are representable).
        """
        T = int(round(1.0 / delta))
        key = ("mp", delta, n_lo, n_hi, abs_floor)
        if key in self._grid_cache:
            return self._grid_cache[key]
        inv_h = _pow2_at_least(math.ceil(n_hi * delta + _decay_arg(abs_floor)))
        N = T * inv_h
        if n_hi >= N // 2:
            raise ValueError("window beyond the alias-free half-spectrum")
        prec = int(math.log2(1.0 / abs_floor)) + N.bit_length() + 24
        ctx = gmpy2.get_context()
        saved = ctx.precision
        ctx.precision = prec
        try:
            h = gmpy2.mpfr(1) / inv_h
            half = gmpy2.mpfr(T) / 2
            x = [None] * N
            data = [gmpy2.mpc(0)] * N
            for j in range(N):
                xj = j * h - half
                if abs(xj) < 1:
                    data[j] = gmpy2.mpc(self._phi_mp(xj))
            _mp_fft_inplace(data)
            out = np.empty(n_hi - n_lo + 1, dtype=np.complex128)
            for i, n in enumerate(range(n_lo, n_hi + 1)):
                v = data[n] * h
                if n % 2 == 1:
                    v = -v
                out[i] = complex(v)
        finally:
            ctx.precision = saved
        self._grid_cache[key] = out
        return out


def _mp_fft_inplace(a):
    """Iterative radix-2 DIT FFT over a list of gmpy2 mpc (length power of 2)."""
    n = len(a)
    if n & (n - 1):
        raise ValueError("length must be a power of 2")
    # bit-reversal permutation
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            a[i], a[j] = a[j], a[i]
    # twiddle table e^{-2 pi i k / n}, k = 0..n/2-1, by repeated multiplication
    two_pi = 2 * gmpy2.const_pi()
    w1 = gmpy2.mpc(gmpy2.cos(two_pi / n), -gmpy2.sin(two_pi / n))
    tw = [gmpy2.mpc(1)] * (n // 2)
    for k in range(1, n // 2):
        tw[k] = tw[k - 1] * w1
    length = 2
    while length <= n:
        half = length // 2
        stride = n // length
        for start in range(0, n, length):
            for k in range(half):
                t = tw[k * stride] * a[start + half + k]
                u = a[start + k]
                a[start + k] = u + t
                a[start + half + k] = u - t
        length *= 2


def build_profile() -> SlabProfile:
    """Normalize the bump so that int_R phi^2 = 1."""
    unsq, _ = quad(lambda x: x * x * np.exp(-2.0 / (1.0 - x * x)), -1.0, 1.0,
                   epsabs=1e-14, epsrel=1e-14, limit=200)
    profile = SlabProfile(1.0 / math.sqrt(unsq))
    check, _ = quad(lambda x: profile.phi_profile(x) ** 2, -1.0, 1.0,
                    epsabs=1e-12, limit=200)
    if abs(check - 1.0) > 1e-10:
        raise RuntimeError("profile normalization failed")
    return profile


def default_max_freq(spec: SlabSpec, profile: SlabProfile,
                     rel_tol: float = 1e-14) -> int:
    """Smallest band containing every transform sample above rel_tol."""
    n_guess = int(math.ceil(_decay_arg(rel_tol * 1e-3) / spec.delta)) + 2
    hat = np.abs(profile.phi_hat_grid(spec.delta, n_guess))
    cut = rel_tol * hat.max()
    keep = np.nonzero(hat >= cut)[0]
    n_keep = int(keep.max()) if keep.size else 1
    return n_keep * spec.mu


def build_slab_fourier(spec: SlabSpec, profile: SlabProfile,
                       max_freq: int | None = None) -> TorusFunction:
    """Slab from its Fourier series: support on multiples of mu."""
    if max_freq is None:
        max_freq = default_max_freq(spec, profile)
    if max_freq < 4 * spec.lam:
        raise ValueError("max_freq must be at least 4*lam")
    n_max = max_freq // spec.mu
    hat = profile.phi_hat_grid(spec.delta, n_max)
    amp = spec.lam ** (-(1.0 - spec.epsilon) / 2.0)
    n = np.arange(1, n_max + 1)
    pos = amp * hat[1:]
    freqs = np.concatenate([-spec.mu * n[::-1], spec.mu * n])
    amps = np.concatenate([np.conj(pos[::-1]), pos])
    keep = amps != 0
    return TorusFunction(freqs[keep], amps[keep])


def slab_values(spec: SlabSpec, profile: SlabProfile, x) -> np.ndarray:
    """Pointwise physical-space slab values (exact translate sum).

    The bumps sit at the lattice j/mu with support radius 1/lam <= 1/(2 mu),
    so exactly one translate contributes at each point.
    """
    x = np.asarray(x, dtype=np.float64)
    spacing = 1.0 / spec.mu
    d = np.mod(x + spacing / 2.0, spacing) - spacing / 2.0
    amp = spec.lam ** ((1.0 - spec.epsilon) / 2.0)
    return amp * profile.phi_profile(spec.lam * d)


def build_slab_physical(spec: SlabSpec, profile: SlabProfile,
                        max_freq: int | None = None) -> TorusFunction:
    """Slab from physical-space samples of the translate sum."""
    if max_freq is None:
        max_freq = default_max_freq(spec, profile)
    if max_freq < 4 * spec.lam:
        raise ValueError("max_freq must be at least 4*lam")
    M = next_fast_len(4 * (2 * max_freq + 1), real=True)
    xs = np.arange(M) / M
    g = GridSamples(slab_values(spec, profile, xs), M)
    return analyze(g, max_freq)


def sup_norm_sparse(f: TorusFunction, coarse_mult: int = 2,
                    refine_points: int = 2048) -> float:
    """Sup norm of a sparse high-band trigonometric polynomial.

    Coarse alias-free grid max followed by dense local refinement around the
    argmax; relative error ~ (pi/overs)^2/2 with effective oversampling
    overs = refine_points/4 around the peak.
    """
    if not f.amps.size:
        return 0.0
    M = next_fast_len(coarse_mult * (2 * f.max_freq + 1), real=True)
    vals = synthesize(f, M).values
    k0 = int(np.argmax(np.abs(vals)))
    xs = (k0 + np.linspace(-2.0, 2.0, refine_points)) / M
    local = np.zeros(refine_points)
    for xi, a in zip(f.freqs, f.amps):
        local += (a * np.exp(2j * np.pi * float(xi) * xs)).real
    return float(max(np.max(np.abs(vals)), np.max(np.abs(local))))


def high_low_decay(a: TorusFunction, spec: SlabSpec,
                   profile: SlabProfile | None = None,
                   max_freq: int | None = None,
                   filt: LPFilter | None = None) -> float:
    """||P_{> lam^2}(a * rho_{lam,eps})||_{L^infty}.

    With an explicit max_freq the slab is truncated there first (and the
    result is exactly 0 when nothing survives the cutoff).  Without it, the
    slab tail past the cutoff is computed with the multiprecision transform
    sampler: the surviving coefficients sit 13-50 decimal orders below the
    slab's head and are invisible to double-precision construction.
    """
    profile = profile or _default_profile()
    filt = filt or build_filter()
    lam2 = spec.lam ** 2
    cutoff_arg = (12.0 / 7.0) * lam2 / spec.lam  # transform argument at the
    # lowest frequency where the high-pass weight is nonzero
    if max_freq is not None:
        rho = build_slab_fourier(spec, profile, max_freq=max_freq)
        from .littlewood_paley import project_high
        tail = project_high(product(a, rho), lam2, filt)
        if not tail.amps.size:
            return 0.0
        return sup_norm_sparse(tail)
    # window of transform arguments that can contribute after the cutoff
    margin = (a.max_freq + 1) / spec.lam + 1.0
    arg_lo = max(cutoff_arg - margin, 1.0)
    arg_hi = (math.sqrt(cutoff_arg) + 6.0 / _DECAY_C * math.log(10.0)) ** 2
    n_lo = max(int(math.floor(arg_lo / spec.delta)), 1)
    n_hi = int(math.ceil(arg_hi / spec.delta))
    lead = math.exp(-_DECAY_C * math.sqrt(cutoff_arg))
    abs_floor = max(lead * 1e-10, 1e-290)
    hat = profile.phi_hat_window_mp(spec.delta, n_lo, n_hi, abs_floor)
    amp = spec.lam ** (-(1.0 - spec.epsilon) / 2.0)
    n = np.arange(n_lo, n_hi + 1)
    pos = amp * hat
    freqs = np.concatenate([-spec.mu * n[::-1], spec.mu * n])
    amps = np.concatenate([np.conj(pos[::-1]), pos])
    rho_tail = TorusFunction(freqs, amps, storage="sparse")
    prod = product(a, rho_tail)
    whigh = 1.0 - filt.low_weights(prod.freqs, 2 * spec.m)
    tail = TorusFunction(prod.freqs, prod.amps * whigh, storage="sparse")
    tail = tail.prune(1e-9)
    if not tail.amps.size:
        return 0.0
    return sup_norm_sparse(tail)


@lru_cache(maxsize=1)
def _default_profile() -> SlabProfile:
    return build_profile()
