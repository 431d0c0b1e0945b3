"""Frozen reference values and the independent computations that produce them.

Each constant is checked against its derivation in test_oracles.py, so a
changed constant cannot slip through.  The derivations use mpmath and
scipy quadrature only, never frostlab code.
"""
import math

import mpmath as mp
from scipy import integrate

# Gamma values (mpmath, 30 digits)
GAMMA_HALF = 1.7724538509055160273
GAMMA_1_PLUS_I = complex(0.49801566811835604271, -0.15494982830181068512)
ABS_GAMMA_1_PLUS_I = 0.52156404686493984116

# I_{1/2} of Lebesgue measure on [0, 1]
LEBESGUE_ENERGY_HALF = 2.6666666666666667
# sup_y int_0^1 |x - y|^{-1/2} dx, attained at y = 1/2
LEBESGUE_AMPLITUDE_HALF = 2.8284271247461901
# int (pi sqrt(1 - u^2))^{-3/2} du over (-1, 1)
ARCSINE_L15_POWER = 0.94177553817205080
ARCSINE_L15_NORM = ARCSINE_L15_POWER ** (2.0 / 3.0)
# I_1 of the standard gaussian density with sigma = 0.1 in R^2
GAUSS_ENERGY_S1_SIGMA01 = 8.8622692545275801


def derive():
    """Recompute every constant above."""
    mp.mp.dps = 30
    out = {}
    out["GAMMA_HALF"] = float(mp.gamma(0.5))
    g = mp.gamma(1 + 1j)
    out["GAMMA_1_PLUS_I"] = complex(g)
    out["ABS_GAMMA_1_PLUS_I"] = float(abs(g))

    def inner(x):
        # int_0^1 |x-y|^{-1/2} dy split at the singularity, algebraic weights
        left = integrate.quad(lambda y: 1.0, 0.0, x, weight="alg", wvar=(0.0, -0.5))[0] if x > 0 else 0.0
        right = integrate.quad(lambda y: 1.0, x, 1.0, weight="alg", wvar=(-0.5, 0.0))[0] if x < 1 else 0.0
        return left + right

    out["LEBESGUE_ENERGY_HALF"] = integrate.quad(inner, 0.0, 1.0, limit=200)[0]
    out["LEBESGUE_AMPLITUDE_HALF"] = inner(0.5)
    out["ARCSINE_L15_POWER"] = float(2 * mp.quad(lambda u: (mp.pi * mp.sqrt(1 - u * u)) ** -1.5, [0, 1]))
    out["ARCSINE_L15_NORM"] = out["ARCSINE_L15_POWER"] ** (2.0 / 3.0)
    s = 0.1
    # X - Y ~ N(0, 2 s^2 I); integrate r^{-1} against its radial density
    out["GAUSS_ENERGY_S1_SIGMA01"] = integrate.quad(
        lambda r: math.exp(-r * r / (4 * s * s)) / (2 * s * s), 0.0, math.inf)[0]
    return out
