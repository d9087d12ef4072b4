"""Smooth dyadic frequency cutoff and the projector family on the torus.

The cutoff phi : R -> [0,1] is even, smooth, supported in {6/7 <= |t| <= 2},
identically 1 on 1 <= |t| <= 12/7, and satisfies the exact partition
sum_{j>=0} phi(2^{-j} t) = 1 for every |t| >= 1.  It is built from the
C^infty smoothstep S(t) = h(t)/(h(t)+h(1-t)), h(t) = e^{-1/t}:

    phi(t) = S((2-t)/(2-12/7))   on [12/7, 2]
    phi(t) = 1 - phi(2t)         on [6/7, 1]   (forces the partition overlap)

Shell projector P_{2^j} multiplies coefficients by phi(2^{-j} xi); the cutoff
P_{<=2^j} is P_{=0} + sum_{k=0}^{j} P_{2^k} and P_{>2^j} its complement.
"""

from __future__ import annotations

import math

import numpy as np

from .spectral import TorusFunction

_UPPER = 2.0
_FLAT_HI = 12.0 / 7.0
_FLAT_LO = 1.0
_LOWER = 6.0 / 7.0


def _smoothstep(t):
    """C^infty monotone step: 0 for t<=0, 1 for t>=1."""
    t = np.asarray(t, dtype=np.float64)
    ht = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    h1 = np.where(1.0 - t > 0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return ht / (ht + h1)


class LPFilter:
    """The concrete dyadic cutoff and its projector family."""

    def __init__(self):
        pass

    def phi(self, t):
        """Cutoff value(s) at real frequency argument(s) t (even in t)."""
        t = np.abs(np.asarray(t, dtype=np.float64))
        out = np.zeros_like(t)
        flat = (t >= _FLAT_LO) & (t <= _FLAT_HI)
        out[flat] = 1.0
        upper = (t > _FLAT_HI) & (t < _UPPER)
        out[upper] = _smoothstep((_UPPER - t[upper]) / (_UPPER - _FLAT_HI))
        lower = (t > _LOWER) & (t < _FLAT_LO)
        # partition constraint on the overlap: phi(t) = 1 - phi(2t)
        out[lower] = 1.0 - _smoothstep((_UPPER - 2.0 * t[lower])
                                       / (_UPPER - _FLAT_HI))
        return out

    def shell_weights(self, freqs, j):
        """phi(2^{-j} xi) for an integer frequency array."""
        return self.phi(np.asarray(freqs, dtype=np.float64) / float(2 ** j))

    def low_weights(self, freqs, j):
        """Weights of P_{<=2^j}: 1 at xi=0 plus sum_{k=0..j} phi(2^{-k} xi).

        For |xi| >= 1 at most two shells are active at once, and every shell
        with 2^k <= |xi|/2 vanishes, so the sum runs over a short window.
        """
        freqs = np.asarray(freqs, dtype=np.float64)
        out = np.zeros_like(freqs)
        out[freqs == 0] = 1.0
        a = np.abs(freqs)
        active = a >= 1
        if np.any(active):
            aa = a[active]
            acc = np.zeros_like(aa)
            # shells k with support meeting |xi|: 6/7*2^k < |xi| < 2*2^k
            k_lo = np.maximum(np.ceil(np.log2(np.maximum(aa, 1.0) / _UPPER
                                              )).astype(np.int64), 0)
            k_hi_all = np.floor(np.log2(aa / _LOWER)).astype(np.int64)
            k_hi = np.minimum(k_hi_all, j)
            kmax_span = int(np.max(k_hi - k_lo, initial=-1))
            for d in range(kmax_span + 1):
                k = k_lo + d
                use = k <= k_hi
                w = np.zeros_like(aa)
                w[use] = self.phi(aa[use] / np.exp2(k[use].astype(np.float64)))
                acc += w
            out[active] = acc
        return out


def build_filter() -> LPFilter:
    return LPFilter()


def project_shell(f: TorusFunction, j: int, filt: LPFilter | None = None
                  ) -> TorusFunction:
    """P_{2^j} f: multiply coefficients by phi(2^{-j} xi)."""
    filt = filt or _DEFAULT_FILTER
    return f.scale_freq(lambda xi: filt.shell_weights(xi, j))


def project_mean(f: TorusFunction) -> float:
    """P_{=0} f as a number."""
    return f.mean


def project_nonzero(f: TorusFunction) -> TorusFunction:
    """P_{neq 0} f = f minus its mean."""
    keep = f.freqs != 0
    return TorusFunction(f.freqs[keep], f.amps[keep],
                         storage=f.storage if f.storage == "sparse" else "auto")


def _threshold_level(threshold) -> int:
    """j with 2^j <= threshold < 2^{j+1}; thresholds in use are powers of 2."""
    t = int(threshold)
    if t < 1:
        raise ValueError("threshold must be >= 1")
    return t.bit_length() - 1


def project_low(f: TorusFunction, threshold, filt: LPFilter | None = None
                ) -> TorusFunction:
    """P_{<=2^j} f with j = floor(log2 threshold)."""
    filt = filt or _DEFAULT_FILTER
    j = _threshold_level(threshold)
    return f.scale_freq(lambda xi: filt.low_weights(xi, j))


def project_high(f: TorusFunction, threshold, filt: LPFilter | None = None
                 ) -> TorusFunction:
    """P_{>2^j} f = f - P_{<=2^j} f (exact complement)."""
    filt = filt or _DEFAULT_FILTER
    j = _threshold_level(threshold)
    return f.scale_freq(lambda xi: 1.0 - filt.low_weights(xi, j))


_DEFAULT_FILTER = build_filter()
