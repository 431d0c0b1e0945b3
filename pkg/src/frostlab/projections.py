"""Pushforwards under orthogonal projections, radial slices and mixed norms."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import kernels
from ._parallel import ordered_map
from .errors import DegeneracyError, PreconditionError
from .grassmann import Frame, GrassmannSample, project_points, sample_grassmann, span_plane
from .measures import DiscreteMeasure
from .special import sphere_area

PLATEAU = 2.0 / 3.0
# the smoothing kernel is a gaussian of standard deviation bandwidth/2 cut at
# 2 x bandwidth; with h_V = bandwidth/2 nothing reaches past 3 x bandwidth
KDE_TRUNCATE = 4.0


def cutoff(r, radius):
    """Smooth radial bump: 1 on [0, 2/3 radius], 0 beyond ``radius``."""
    t = (np.asarray(r, dtype=float) / radius - PLATEAU) / (1.0 - PLATEAU)
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
        b = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class ProjectedDensity:
    frame: Frame
    origin: np.ndarray
    h: float
    shape: tuple
    values: np.ndarray
    bandwidth: float
    cutoff_radius: float

    @property
    def n(self):
        return len(self.shape)

    def mass(self):
        return float(np.sum(self.values)) * self.h ** self.n

    def axis(self, k):
        return self.origin[k] + self.h * np.arange(self.shape[k])

    def at(self, u):
        """Multilinear interpolation at n-vectors ``u`` (shape (m, n))."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        idx = (u - self.origin) / self.h
        hi = np.asarray(self.shape) - 1
        if np.any(idx < -1e-9) or np.any(idx > hi + 1e-9):
            raise PreconditionError("radial_slice", "point projects outside the density grid")
        return ndimage.map_coordinates(self.values, np.clip(idx, 0, hi).T, order=1, mode="nearest")


def _grid_for(center_u, radius, h, n):
    half = int(math.ceil(radius / h)) + 1
    origin = np.asarray(center_u, dtype=float) - half * h
    return origin, (2 * half + 1,) * n


def _density_on(u, w, origin, shape, h, bandwidth):
    binned = kernels.linear_bin(np.ascontiguousarray(u), np.ascontiguousarray(w),
                                np.ascontiguousarray(origin), float(h), shape)
    sm = ndimage.gaussian_filter(binned, 0.5 * bandwidth / h, mode="constant", truncate=KDE_TRUNCATE)
    return sm / h ** len(shape)


class _Projector:
    """Shared geometry for repeated projections of one measure."""

    def __init__(self, mu, bandwidth, h_V=None, psi_radius=None, center=None, extent=None):
        if bandwidth <= 0:
            raise PreconditionError("pushforward_density", "bandwidth must be positive")
        self.h = bandwidth / 2.0 if h_V is None else float(h_V)
        if bandwidth < self.h * (1 - 1e-12):
            raise PreconditionError("pushforward_density", f"bandwidth {bandwidth} < h_V {self.h}")
        self.mu = mu
        self.bandwidth = float(bandwidth)
        self.center = mu.center() if center is None else np.asarray(center, dtype=float)
        supp = mu.support_radius(self.center)
        self.psi_radius = max(1.5 * supp, 1e-300) if psi_radius is None else float(psi_radius)
        if self.psi_radius < 1.5 * supp * (1 - 1e-12):
            raise PreconditionError("pushforward_density", "psi_radius must be >= 1.5 x support radius")
        r = np.sqrt(((mu.positions - self.center) ** 2).sum(axis=1))
        self.weights = mu.weights * cutoff(r, self.psi_radius)
        reach = supp if extent is None else max(supp, float(extent))
        self.radius = reach + 0.5 * (KDE_TRUNCATE + 2.0) * self.bandwidth

    def density(self, V: Frame) -> ProjectedDensity:
        u = project_points(V, self.mu.positions)
        cu = self.center @ V.basis
        origin, shape = _grid_for(cu, self.radius, self.h, V.n)
        vals = _density_on(u, self.weights, origin, shape, self.h, self.bandwidth)
        vals.setflags(write=False)
        return ProjectedDensity(V, origin, self.h, shape, vals, self.bandwidth, self.psi_radius)


def pushforward_density(mu: DiscreteMeasure, V: Frame, h_V=None, bandwidth=1 / 256,
                        psi_radius=None, center=None, extent=None) -> ProjectedDensity:
    """Kernel density of pi_V(psi mu) on a grid in V.

    Atoms are projected, weighted by the cutoff psi about ``center``
    (default: bounding-box center), linearly binned and smoothed with a
    gaussian of standard deviation bandwidth / 2 cut at 2 x bandwidth.
    ``h_V`` defaults to bandwidth / 2.  The grid covers the projected ball
    of radius max(support radius, extent) about the center plus a
    3 x bandwidth margin.
    """
    return _Projector(mu, bandwidth, h_V, psi_radius, center, extent).density(V)


def lp_norm(rho: ProjectedDensity, p):
    """(sum |values|^p h^n)^{1/p}."""
    if p < 1:
        raise PreconditionError("lp_norm", "p must be >= 1")
    if math.isinf(p):
        return float(np.abs(rho.values).max())
    return float(np.sum(np.abs(rho.values) ** p) * rho.h ** rho.n) ** (1.0 / p)


def radial_slice(mu: DiscreteMeasure, y, V: Frame, bandwidth=1 / 256, h_V=None, psi_radius=None):
    """pi^y mu(V): the projected density at pi_V y."""
    y = np.asarray(y, dtype=float)
    c = mu.center()
    ext = float(np.linalg.norm(y - c))
    rho = pushforward_density(mu, V, h_V, bandwidth, psi_radius, c, ext)
    return float(rho.at(project_points(V, y))[0])


def _check_disjoint(mu, nu, bandwidth):
    gap, _ = cKDTree(mu.positions).query(nu.positions, k=1)
    if gap.min() < 2.0 * bandwidth:
        raise PreconditionError("mixed_norm",
                                f"supports are {gap.min():.3g} apart, need >= 2 x bandwidth")


def _slices(mu, nu, G, bandwidth, h_V=None, psi_radius=None):
    # matrix S[V, y] of slice values over the Grassmann sample
    c = mu.center()
    ext = float(np.sqrt(((nu.positions - c) ** 2).sum(axis=1)).max())
    proj = _Projector(mu, bandwidth, h_V, psi_radius, c, ext)

    def one(b):
        V = Frame(b)
        return proj.density(V).at(nu.positions @ b)

    return np.array(ordered_map(one, G.bases)), proj


@dataclass(frozen=True)
class MixedNormReport:
    p: float
    q: float
    value: float
    stderr: float
    frames: int
    nu_samples: int
    seed: int
    bandwidth: float

    def record(self, depth=None):
        return {"p": self.p, "q": self.q, "value": self.value, "stderr": self.stderr,
                "frames": self.frames, "nu_samples": self.nu_samples, "seed": self.seed,
                "depth": depth, "bandwidth": self.bandwidth}


def _mixed_from(S, w, p, q):
    return float(np.sum(w * np.mean(S ** p, axis=0) ** (q / p)))


def mixed_norm(mu, nu, p, q, G: GrassmannSample, bandwidth=1 / 256, h_V=None, batches=16,
               psi_radius=None) -> MixedNormReport:
    """integral over nu of ||pi^y mu||_{L^p(gamma)}^q, gamma replaced by the sample ``G``.

    The standard error comes from batch means over ``batches`` groups of frames.
    """
    if p < 1 or q < 1:
        raise PreconditionError("mixed_norm", "p and q must be >= 1")
    if G.count < 1:
        raise PreconditionError("mixed_norm", "empty Grassmann sample")
    _check_disjoint(mu, nu, bandwidth)
    S, _ = _slices(mu, nu, G, bandwidth, h_V, psi_radius)
    S = np.maximum(S, 0.0)
    value = _mixed_from(S, nu.weights, p, q)
    nb = min(batches, G.count)
    stderr = 0.0
    if nb >= 2:
        parts = [_mixed_from(S[idx], nu.weights, p, q) for idx in np.array_split(np.arange(G.count), nb)]
        stderr = float(np.std(parts, ddof=1) / math.sqrt(nb))
    return MixedNormReport(float(p), float(q), value, stderr, G.count, len(nu), G.seed, float(bandwidth))


@dataclass(frozen=True)
class CheckResult:
    lhs: float
    rhs: float
    relative_error: float

    def record(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "relative_error": self.relative_error}


def orponen_check(mu, nu, p, G: GrassmannSample, bandwidth=1 / 256, h_V=None) -> CheckResult:
    """Both sides of Orponen's formula on the sample ``G``.

    lhs: the mixed norm with q = p, i.e. for each nu-atom y the Grassmann
    mean of pi^y mu(V)^p, then summed against nu.
    rhs: for each frame V, the integral of (pi_V mu)^p against pi_V nu (the
    projected nu-atoms as point masses), then averaged over frames.
    """
    lhs = mixed_norm(mu, nu, p, p, G, bandwidth, h_V).value
    c = mu.center()
    ext = float(np.sqrt(((nu.positions - c) ** 2).sum(axis=1)).max())
    proj = _Projector(mu, bandwidth, h_V, None, c, ext)
    w = nu.weights

    def one(b):
        rho = proj.density(Frame(b))
        vals = np.maximum(rho.at(nu.positions @ b), 0.0)
        return float(np.dot(w, vals ** p))

    rhs = float(np.mean(ordered_map(one, G.bases)))
    return CheckResult(lhs, rhs, abs(lhs - rhs) / abs(rhs))


def average_radial(mu, y, n, G: GrassmannSample, bandwidth=1 / 256, h_V=None) -> CheckResult:
    """Grassmann average of pi^y mu(V) against its closed form.

    The slice y + V^perp has dimension d - n, so the average equals
    (|S^{d-n-1}| / |S^{d-1}|) int |x - y|^{-n} dmu(x).  For d = 2n this is
    the same as (|S^{n-1}| / |S^{d-1}|) int |x - y|^{n-d} dmu(x).
    ``relative_error`` holds lhs/rhs - 1.
    """
    y = np.asarray(y, dtype=float)
    d = mu.dim
    if G.n != n or G.d != d:
        raise PreconditionError("average_radial", "sample does not live in G(d, n)")
    dist = np.sqrt(((mu.positions - y) ** 2).sum(axis=1))
    if dist.min() < 2.0 * bandwidth:
        raise PreconditionError("average_radial", "y is within 2 x bandwidth of the support")
    point = DiscreteMeasure(y[None, :], [1.0], 1.0)
    S, _ = _slices(mu, point, G, bandwidth, h_V)
    lhs = float(np.mean(S[:, 0]))
    rhs = sphere_area(d - n) / sphere_area(d) * float(np.sum(mu.weights * dist ** (-n)))
    return CheckResult(lhs, rhs, lhs / rhs - 1.0)


def kaufman_check(measures, G: GrassmannSample, delta, h_V=None, pad=2):
    """Per measure: mean over lines of ||pi_e mu^delta||_2^2, I_1(mu^delta), and their ratio.

    mu^delta is the gaussian mollification (sigma = delta/2); its projection
    is the one-dimensional gaussian smoothing of the projected atoms with the
    same sigma, i.e. the projected density at bandwidth delta.  The ratio
    tends to 1/pi.
    """
    from .measures import mollify
    from .potentials import riesz_energy_fourier

    if G.d != 2 or G.n != 1:
        raise PreconditionError("kaufman_check", "needs a sample of G(2, 1)")
    bw = float(delta)
    h = bw / 8.0 if h_V is None else h_V
    out = []
    for mu in measures:
        proj = _Projector(mu, bw, h, None, None, None)
        l2 = np.array(ordered_map(lambda b: float(np.sum(proj.density(Frame(b)).values ** 2) * h), G.bases))
        energy = riesz_energy_fourier(mollify(mu, delta), 1.0, pad=pad).real
        out.append({"l2_mean": float(l2.mean()), "l2_stderr": float(l2.std(ddof=1) / math.sqrt(len(l2))),
                    "energy": energy, "ratio": float(l2.mean()) / energy})
    ratios = np.array([o["ratio"] for o in out])
    spread = float((ratios.max() - ratios.min()) / ratios.mean())
    return out, spread


def plane_coverage(E: DiscreteMeasure, y, m, trials, seed, resolution_angle, reference=None,
                   reference_count=2048):
    """Fraction of a reference sample of G(d, m) within ``resolution_angle`` of a spanned plane.

    m-tuples of atoms are drawn from the weights of ``E``; each tuple spans
    span{x_i - y}.  Degenerate tuples are skipped.  Distance between planes
    is the largest principal angle.
    """
    y = np.asarray(y, dtype=float)
    d = E.dim
    if not 1 <= m <= d - 1:
        raise PreconditionError("plane_coverage", "need 1 <= m <= d-1")
    if trials < 1:
        raise PreconditionError("plane_coverage", "trials must be >= 1")
    if reference is None:
        reference = sample_grassmann(d, m, reference_count, np.random.SeedSequence(seed).generate_state(1)[0])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1,))))
    picks = rng.choice(len(E), size=(trials, m), p=E.weights / E.weights.sum())
    planes = []
    for tup in picks:
        try:
            planes.append(span_plane(y, E.positions[tup]).basis)
        except DegeneracyError:
            continue
    if not planes:
        raise DegeneracyError("plane_coverage", "every sampled tuple was degenerate")
    planes = np.array(planes)
    refs = reference.bases
    hit = np.zeros(len(refs), dtype=bool)
    cos_tol = math.cos(resolution_angle)
    if m == 1:
        dots = np.abs(refs[:, :, 0] @ planes[:, :, 0].T)
        hit = (dots >= cos_tol).any(axis=1)
    else:
        for b in planes:
            # all singular values of R^T B must be >= cos(resolution)
            sv = np.linalg.svd(np.einsum("rdk,dl->rkl", refs, b), compute_uv=False)
            hit |= sv.min(axis=1) >= cos_tol
    return float(hit.mean())
