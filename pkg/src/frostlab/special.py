"""Special functions: complex Gamma, lattice (Epstein) zeta, sphere areas."""
import cmath
import math
from functools import lru_cache

import mpmath

from .errors import PoleError

# Lanczos coefficients for g = 7, n = 9
_G = 7.0
_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _is_pole(z):
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def _log_gamma_right(z):
    # valid for Re z >= 0.5
    z = z - 1.0
    x = _COEF[0]
    for i in range(1, 9):
        x += _COEF[i] / (z + i)
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def _sin_pi(z):
    # sin(pi z) with the integer part of Re z removed first
    k = math.floor(z.real + 0.5)
    r = complex(z.real - k, z.imag)
    v = cmath.sin(math.pi * r)
    return -v if k % 2 else v


def complex_gamma(z):
    """Gamma function for complex ``z`` (Lanczos, g = 7).

    Relative error is below 1e-10 on |Re z| <= 20, |Im z| <= 20.
    Raises :class:`PoleError` at nonpositive integers.
    """
    z = complex(z)
    if _is_pole(z):
        raise PoleError("gamma", f"pole at z={z.real:g}")
    if z.real < 0.5:
        return math.pi / (_sin_pi(z) * cmath.exp(_log_gamma_right(1.0 - z)))
    return cmath.exp(_log_gamma_right(z))


def rgamma(z):
    """1/Gamma(z); zero at the poles."""
    z = complex(z)
    if _is_pole(z):
        return 0j
    return 1.0 / complex_gamma(z)


def sphere_area(k):
    """Surface area |S^{k-1}| = 2 pi^{k/2} / Gamma(k/2) of the unit sphere in R^k."""
    return 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)


def riesz_constant(d, s):
    """C_{d,s} with  I_s(mu) = C_{d,s} * integral |mu^(xi)|^2 |xi|^{s-d} dxi.

    Fourier convention exp(-2 pi i x xi).
    """
    return math.pi ** (s - d / 2.0) * math.gamma((d - s) / 2.0) / math.gamma(s / 2.0)


@lru_cache(maxsize=None)
def _shells(d, kmax):
    """Multiplicities of |k|^2 over the nonzero points of Z^d with |k|_inf <= kmax."""
    counts = {0: 1}
    for _ in range(d):
        nxt = {}
        for r2, c in counts.items():
            for j in range(-kmax, kmax + 1):
                key = r2 + j * j
                nxt[key] = nxt.get(key, 0) + c
        counts = nxt
    counts.pop(0)
    return tuple(sorted(counts.items()))


@lru_cache(maxsize=4096)
def _epstein_cached(d, re, im):
    a = mpmath.mpc(re, im)
    if im == 0.0 and re <= 0.0 and re == math.floor(re) and int(re) % 2 == 0:
        # trivial zeros of the completed function, Z(0) = -1
        return complex(-1.0) if re == 0.0 else 0j
    if im == 0.0 and re == d:
        raise PoleError("epstein_zeta", f"pole at a={d}")
    b = d - a
    total = mpmath.mpf(0)
    for r2, mult in _shells(d, 5):
        x = mpmath.pi * r2
        total += mult * (x ** (-a / 2) * mpmath.gammainc(a / 2, x)
                         + x ** (-b / 2) * mpmath.gammainc(b / 2, x))
    lam = total - 2 / a - 2 / b
    return complex(mpmath.pi ** (a / 2) * lam / mpmath.gamma(a / 2))


def epstein_zeta(d, a):
    """Lattice sum Z_d(a) = sum over nonzero k in Z^d of |k|^{-a}, continued in a.

    Evaluated through the theta-function splitting, which converges for all
    complex ``a`` except the pole at ``a = d``.  Shells with |k|_inf <= 5 keep
    the neglected terms below exp(-25 pi).
    """
    a = complex(a)
    with mpmath.workdps(20):
        return _epstein_cached(int(d), a.real, a.imag)
