"""Riesz energies, amplitudes and complex-order Riesz potentials.

Spectral routines sample the Fourier transform on the DFT lattice of a
zero-padded cube.  The Riemann sum over nonzero frequencies of a function
|xi|^{-a} G(xi) misses a lattice-zeta term at the origin; it is restored
with the generalized Euler-Maclaurin expansion

    Delta^d sum' |k Delta|^{-a} G(k Delta)
        = integral + Z_d(a) Delta^{d-a} G(0)
          + Z_d(a-2) Delta^{d-a+2} (Laplacian G)(0) / (2d) + ...

where Z_d is the Epstein zeta function of Z^d.  G(0) and its Laplacian
are moments of the field, so they are computed exactly in physical space.
"""
import cmath
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as sfft

from . import kernels
from ._parallel import get_threads
from .errors import PoleError, PreconditionError
from .measures import DiscreteMeasure, GridField, GridSpec
from .special import complex_gamma, epstein_zeta, rgamma, riesz_constant

_4PI2 = 4.0 * math.pi ** 2


@dataclass(frozen=True)
class EnergyResult:
    value: complex
    s: float
    method: str
    epsilon: float
    samples: int
    runtime_ms: float

    @property
    def real(self):
        return float(np.real(self.value))

    def record(self):
        return {
            "quantity": "riesz_energy",
            "s": self.s,
            "method": self.method,
            "epsilon": self.epsilon,
            "value_re": float(np.real(self.value)),
            "value_im": float(np.imag(self.value)),
            "samples": self.samples,
            "runtime_ms": self.runtime_ms,
        }


def _check_order(s, d, what="s"):
    if not 0.0 < s < d:
        raise PreconditionError(what, f"order {s} outside (0, {d})")


def riesz_energy_direct(mu: DiscreteMeasure, s, eps=0.0) -> EnergyResult:
    """sum_{i,j} w_i w_j max(|x_i - x_j|, eps)^{-s}.

    With eps = 0 the diagonal is excluded; with eps > 0 it contributes
    w_i^2 eps^{-s}.  Row sums are accumulated in index order and then
    combined by numpy's pairwise summation.
    """
    _check_order(s, mu.dim)
    if eps < 0:
        raise PreconditionError("riesz_energy_direct", "eps must be nonnegative")
    t0 = time.perf_counter()
    w = np.ascontiguousarray(mu.weights)
    rows = kernels.riesz_rows(np.ascontiguousarray(mu.positions), w, float(s), float(eps), get_threads())
    value = float(np.sum(w * rows))
    return EnergyResult(value, float(s), "direct", float(eps), len(mu),
                        (time.perf_counter() - t0) * 1e3)


def matched_epsilon(delta, d, s):
    """Clamp radius whose diagonal term equals the self-energy of one gaussian blob.

    For phi_delta gaussian with sigma = delta/2, E|X - Y|^{-s} over two
    independent blobs is (2 sigma)^{-s} Gamma((d-s)/2) / Gamma(d/2).
    """
    sigma = delta / 2.0
    return 2.0 * sigma * (math.gamma((d - s) / 2.0) / math.gamma(d / 2.0)) ** (-1.0 / s)


# ------------------------------------------------------------- spectral core


def _pad_size(shape, pad):
    if pad < 2:
        raise PreconditionError("fft", f"zero-padding factor must be >= 2, got {pad}")
    return int(sfft.next_fast_len(int(math.ceil(pad * max(shape)))))


def _freq_sq(P, h, d):
    k = sfft.fftfreq(P, d=h)
    r2 = np.zeros((P,) * d)
    for ax in range(d):
        shp = [1] * d
        shp[ax] = P
        r2 = r2 + (k ** 2).reshape(shp)
    return r2


def _centered_coords(grid: GridSpec, shape=None):
    shape = grid.shape if shape is None else shape
    c = grid.center()
    axes = [grid.origin[k] + grid.h * np.arange(shape[k]) - c[k] for k in range(grid.dim)]
    return np.meshgrid(*axes, indexing="ij")


def field_moments(f: GridField):
    """Mass, first moment and second moment about the grid center."""
    vol = f.h ** f.dim
    xs = _centered_coords(f.grid)
    a = f.samples
    mass = complex(a.sum() * vol)
    m1 = np.array([complex((x * a).sum() * vol) for x in xs])
    m2 = complex((sum(x * x for x in xs) * a).sum() * vol)
    return mass, m1, m2


def _lap_autocorr(mass, m1, m2):
    # Laplacian at 0 of |F|^2 where F is the transform of the field
    return -2.0 * _4PI2 * ((np.conj(mass) * m2).real - float(np.sum(np.abs(m1) ** 2)))


def _check_decay(f: GridField, tol):
    a = np.abs(f.samples)
    peak = a.max()
    if peak == 0:
        raise PreconditionError("fft", "field is identically zero")
    edge = 0.0
    for ax in range(f.dim):
        edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
    if edge > tol * peak:
        raise PreconditionError("fft", f"field at boundary is {edge / peak:.2e} of its max (> {tol:g})")


def riesz_energy_fourier(f: GridField, s, pad=2, decay_tol=1e-8) -> EnergyResult:
    """C_{d,s} * integral |f^(xi)|^2 |xi|^{s-d} dxi by FFT.

    Ordinary fields are zero-padded to a cube of side ``pad`` times the
    largest extent.  Periodic fields produced by
    :func:`riesz_potential_complex` are transformed as they are and their
    low-frequency behaviour c |xi|^{-z} F(xi) is taken from the attached
    source moments.
    """
    d = f.dim
    _check_order(s, d)
    t0 = time.perf_counter()
    h = f.h
    if f.periodic:
        spec = f.spectral
        P = f.shape[0]
        F = sfft.fftn(f.samples, workers=get_threads()) * h ** d
        zeta = complex(spec["order"])
        coef2 = abs(spec["coef"]) ** 2
        mass, m1, m2 = spec["mass"], spec["m1"], spec["m2"]
        a_exp = d - s + 2.0 * zeta.real
    else:
        if decay_tol is not None:
            _check_decay(f, decay_tol)
        P = _pad_size(f.shape, pad)
        F = sfft.fftn(f.samples, s=(P,) * d, workers=get_threads()) * h ** d
        coef2 = 1.0
        mass, m1, m2 = field_moments(f)
        a_exp = d - s
    if not 0.0 < a_exp < d:
        raise PreconditionError("riesz_energy_fourier", "spectral singularity is not integrable")
    r2 = _freq_sq(P, h, d)
    r2[(0,) * d] = 1.0
    dens = (F.real ** 2 + F.imag ** 2) * r2 ** (0.5 * (s - d))
    dens[(0,) * d] = 0.0
    delta = 1.0 / (P * h)
    raw = float(np.sum(dens)) * delta ** d
    g0 = coef2 * abs(mass) ** 2
    lap = coef2 * _lap_autocorr(mass, m1, m2)
    corr = (epstein_zeta(d, a_exp).real * delta ** (d - a_exp) * g0
            + epstein_zeta(d, a_exp - 2.0).real * delta ** (d - a_exp + 2.0) * lap / (2.0 * d))
    value = riesz_constant(d, s) * (raw - corr)
    return EnergyResult(value, float(s), "fourier", 0.0, int(np.prod(f.shape)),
                        (time.perf_counter() - t0) * 1e3)


def multiplier_coefficient(z, d):
    """c_z = e^{z^2} pi^{(d-z)/2} / Gamma((d-z)/2): the transform of mu_z is c_z |xi|^{-z} mu^."""
    z = complex(z)
    g = rgamma((d - z) / 2.0)
    if g == 0:
        raise PoleError("riesz_potential_complex", f"Gamma((d-z)/2) has a pole at z={z}")
    return cmath.exp(z * z) * cmath.exp(0.5 * (d - z) * math.log(math.pi)) * g


def _apply_multiplier(f: GridField, order, coef, pad, periodic):
    d = f.dim
    h = f.h
    P = _pad_size(f.shape, pad)
    F = sfft.fftn(f.samples, s=(P,) * d, workers=get_threads())
    r2 = _freq_sq(P, h, d)
    r2[(0,) * d] = 1.0
    mult = coef * np.exp(-0.5 * order * np.log(r2))
    mult[(0,) * d] = 0.0
    u = sfft.ifftn(F * mult, workers=get_threads())
    mass, m1, m2 = field_moments(f)
    if periodic:
        grid = GridSpec(f.origin, h, (P,) * d)
        spec = {"order": complex(order), "coef": complex(coef), "mass": mass, "m1": m1, "m2": m2}
        return GridField(grid, u, periodic=True, spectral=spec)
    u = u[tuple(slice(0, n) for n in f.shape)]
    delta = 1.0 / (P * h)
    ldel = math.log(delta)
    xs = _centered_coords(f.grid)
    q = mass * sum(x * x for x in xs) - 2.0 * sum(x * c for x, c in zip(xs, m1)) + m2
    u = (u - epstein_zeta(d, order) * cmath.exp((d - order) * ldel) * coef * mass
         + epstein_zeta(d, order - 2.0) * cmath.exp((d - order + 2.0) * ldel) * coef
         * _4PI2 * q / (2.0 * d))
    return GridField(f.grid, u)


def riesz_potential_complex(f: GridField, z, pad=2, periodic=False) -> GridField:
    """mu^delta_z = e^{z^2} pi^{z/2}/Gamma(z/2) |x|^{-d+z} * f as a Fourier multiplier.

    By default the result is sampled on the input grid with the lattice-zeta
    corrections applied, so values are pointwise accurate.  With
    ``periodic=True`` the raw spectral synthesis on the padded cube is
    returned instead, tagged with the data :func:`riesz_energy_fourier`
    needs to treat its |xi|^{-z} singularity.
    """
    d = f.dim
    z = complex(z)
    if not -d < z.real < d:
        raise PreconditionError("riesz_potential_complex", f"Re z = {z.real} outside (-{d}, {d})")
    if f.periodic:
        raise PreconditionError("riesz_potential_complex", "input must be a compactly supported field")
    return _apply_multiplier(f, z, multiplier_coefficient(z, d), pad, periodic)


def composition_constant(z, w, d):
    """|C| in |(mu_z)_w| <= |C| * (|.|^{-(d - Re(z+w))} * mu).

    C = e^{z^2+w^2} pi^{(d+z+w)/2} Gamma((d-z-w)/2)
        / (Gamma((d-z)/2) Gamma((d-w)/2) Gamma((z+w)/2)).
    """
    z, w = complex(z), complex(w)
    a = z + w
    val = (cmath.exp(z * z + w * w) * cmath.exp(0.5 * (d + a) * math.log(math.pi))
           * complex_gamma((d - a) / 2.0) * rgamma((d - z) / 2.0) * rgamma((d - w) / 2.0)
           * rgamma(a / 2.0))
    return abs(val)


def _center_cell_moments(d, sigma, m=None):
    # integrals of |x|^{-sigma} and x_k^2 |x|^{-sigma} over [-1/2, 1/2]^d:
    # the inscribed ball in closed form, the rest by a midpoint rule
    m = m or (400 if d <= 2 else 120)
    area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    m0 = area * 0.5 ** (d - sigma) / (d - sigma)
    m2 = area * 0.5 ** (d + 2 - sigma) / (d + 2 - sigma) / d
    t = (np.arange(m) + 0.5) / m - 0.5
    g = np.meshgrid(*([t] * d), indexing="ij")
    r = np.sqrt(sum(a * a for a in g))
    out = r > 0.5
    k = r[out] ** (-sigma)
    m0 += float(np.sum(k)) / m ** d
    m2 += float(np.sum(k * g[0][out] ** 2)) / m ** d
    return m0, np.zeros(d), np.eye(d) * m2


def _cell_moments(offset, sigma, order=10):
    # moments of |x|^{-sigma} about the center of the unit cube at a nonzero offset
    x, wq = np.polynomial.legendre.leggauss(order)
    x, wq = 0.5 * x, 0.5 * wq
    d = len(offset)
    loc = np.meshgrid(*([x] * d), indexing="ij")
    w = np.ones([order] * d)
    for k in range(d):
        shp = [1] * d
        shp[k] = order
        w = w * wq.reshape(shp)
    r = np.sqrt(sum((o + a) ** 2 for o, a in zip(offset, loc)))
    kw = w * r ** (-sigma)
    m0 = float(kw.sum())
    m1 = np.array([float((kw * a).sum()) for a in loc])
    m2 = np.array([[float((kw * a * b).sum()) for b in loc] for a in loc])
    return m0, m1, m2


_STENCILS = {}


def _near_stencil(d, sigma, reach):
    key = (d, round(float(sigma), 12), reach)
    if key not in _STENCILS:
        offs = np.array(np.meshgrid(*([np.arange(-reach, reach + 1)] * d),
                                    indexing="ij")).reshape(d, -1).T
        mom = [_center_cell_moments(d, sigma) if not o.any() else _cell_moments(o, sigma)
               for o in offs]
        _STENCILS[key] = (offs, np.array([m[0] for m in mom]), np.array([m[1] for m in mom]),
                          np.array([m[2] for m in mom]))
    return _STENCILS[key]


def _taylor_near(a, node, offs, m0, m1, m2):
    # sum over stencil cells of the exact kernel integral against the local
    # quadratic model of the field (central differences), in units of h
    d = a.ndim
    pad = np.pad(a, 1)
    shape = np.array(a.shape)
    cells = node + offs
    inside = np.all((cells >= 0) & (cells < shape), axis=1)
    c = cells[inside] + 1
    mm0, mm1, mm2 = m0[inside], m1[inside], m2[inside]

    def at(shift):
        return pad[tuple((c + shift).T)]

    f0 = at(np.zeros(d, dtype=int))
    total = float(np.sum(f0 * mm0))
    eye = np.eye(d, dtype=int)
    for k in range(d):
        fp, fm = at(eye[k]), at(-eye[k])
        total += float(np.sum(0.5 * (fp - fm) * mm1[:, k]))
        total += 0.5 * float(np.sum((fp - 2 * f0 + fm) * mm2[:, k, k]))
        for l in range(k + 1, d):
            mixed = 0.25 * (at(eye[k] + eye[l]) - at(eye[k] - eye[l])
                            - at(eye[l] - eye[k]) + at(-eye[k] - eye[l]))
            total += float(np.sum(mixed * mm2[:, k, l]))
    return total


def grid_amplitude(f: GridField, sigma, probes, reach=6):
    """max over probes of the potential integral |x - y|^{-sigma} |f(x)| dx.

    Far cells act as point masses.  For probes at grid nodes the cells
    within ``reach`` of the probe are integrated exactly against a local
    quadratic model of the field.  Off-node probes clamp the distance at
    the radius that reproduces the average of |x|^{-sigma} over a ball of
    one cell's volume.
    """
    d = f.dim
    h = f.h
    vol = h ** d
    absf = np.abs(f.samples)
    a = absf.reshape(-1)
    keep = a > 0
    nodes = f.grid.nodes()[keep]
    w = a[keep] * vol
    r_eq = (vol / (math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0))) ** (1.0 / d)
    eps = r_eq * ((d - sigma) / d) ** (1.0 / sigma)
    probes = np.ascontiguousarray(np.atleast_2d(probes), dtype=float)
    pot = kernels.riesz_potential(np.ascontiguousarray(nodes), np.ascontiguousarray(w), probes,
                                  float(sigma), float(eps), get_threads())
    offs, m0, m1, m2 = _near_stencil(d, sigma, reach)
    naive = np.where((offs == 0).all(axis=1), eps ** (-sigma),
                     np.maximum(np.sqrt((offs ** 2).sum(axis=1)) * h, eps) ** (-sigma))
    shape = np.array(f.shape)
    for i, y in enumerate(probes):
        idx = (y - f.origin) / h
        node = np.rint(idx)
        if np.abs(idx - node).max() > 1e-9:
            continue
        node = node.astype(int)
        cells = node + offs
        inside = np.all((cells >= 0) & (cells < shape), axis=1)
        pot[i] -= float(np.sum(absf[tuple(cells[inside].T)] * naive[inside])) * vol
        pot[i] += _taylor_near(absf, node, offs, m0, m1, m2) * h ** (d - sigma)
    return float(pot.max())


@dataclass(frozen=True)
class AmplitudeReport:
    sup: float
    z: complex
    w: complex
    constant: Optional[float]
    amplitude: Optional[float]
    bound: Optional[float]

    def record(self):
        def c(v):
            return None if v is None else float(v)
        return {
            "quantity": "amplitude_of_potential",
            "z_re": self.z.real, "z_im": self.z.imag,
            "w_re": self.w.real, "w_im": self.w.imag,
            "value_re": float(self.sup), "value_im": 0.0,
            "constant": c(self.constant), "amplitude": c(self.amplitude), "bound": c(self.bound),
        }


def amplitude_of_potential(f: GridField, z, w, pad=2, top=64, extra_probes=None) -> AmplitudeReport:
    """sup |(f_z)_w| on the grid, with the bound C * A_{d - Re(z+w)}(f).

    The two multipliers are applied as one.  ``Re(z+w) = 0`` is accepted
    for the constant-multiplier case; no bound is reported there.
    """
    d = f.dim
    z, w = complex(z), complex(w)
    a = z + w
    if not 0.0 <= a.real < d:
        raise PreconditionError("amplitude_of_potential", f"Re(z+w) = {a.real} outside (0, {d})")
    coef = multiplier_coefficient(z, d) * multiplier_coefficient(w, d)
    u = _apply_multiplier(f, a, coef, pad, periodic=False)
    mag = np.abs(u.samples)
    sup = float(mag.max())
    if a.real == 0.0:
        return AmplitudeReport(sup, z, w, None, None, None)
    sigma = d - a.real
    nodes = f.grid.nodes()
    k = min(top, mag.size)
    idx = np.unique(np.concatenate([
        np.argpartition(-np.abs(f.samples).reshape(-1), k - 1)[:k],
        np.argpartition(-mag.reshape(-1), k - 1)[:k],
    ]))
    probes = nodes[idx]
    if extra_probes is not None:
        probes = np.vstack([probes, np.atleast_2d(extra_probes)])
    amp = grid_amplitude(f, sigma, probes)
    const = composition_constant(z, w, d)
    return AmplitudeReport(sup, z, w, const, amp, const * amp)


def default_probes(mu: DiscreteMeasure, extra=None):
    """Atoms, plus the midpoint between each atom and its nearest neighbour."""
    from scipy.spatial import cKDTree

    x = mu.positions
    pts = [x]
    if len(mu) > 1:
        _, nn = cKDTree(x).query(x, k=2)
        pts.append(0.5 * (x + x[nn[:, 1]]))
    if extra is not None:
        pts.append(np.atleast_2d(np.asarray(extra, dtype=float)))
    return np.vstack(pts)


def riesz_amplitude(mu: DiscreteMeasure, s, probes=None, eps=0.0, extra=None):
    """max over probes y of sum_i w_i max(|x_i - y|, eps)^{-s}.

    A lower bound for A_s(mu).  With eps = 0 a probe sitting on an atom
    gives +inf.
    """
    _check_order(s, mu.dim)
    if probes is None:
        probes = default_probes(mu, extra)
    else:
        probes = np.atleast_2d(np.asarray(probes, dtype=float))
        if extra is not None:
            probes = np.vstack([probes, np.atleast_2d(extra)])
    if probes.shape[0] == 0:
        raise PreconditionError("riesz_amplitude", "probe set is empty")
    pot = kernels.riesz_potential(np.ascontiguousarray(mu.positions), np.ascontiguousarray(mu.weights),
                                  np.ascontiguousarray(probes, dtype=float), float(s), float(eps),
                                  get_threads())
    return float(pot.max())
