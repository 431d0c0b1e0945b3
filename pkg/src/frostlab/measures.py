"""Discrete measures, Cantor constructions and grid mollification."""
import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import PreconditionError

ATOM_CAP = 2 ** 24


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atom cloud in R^d.

    ``positions`` has shape (N, d); ``weights`` has shape (N,).  Weights
    must be nonnegative and sum to ``declared_mass`` (relative 1e-12).
    """

    positions: np.ndarray
    weights: np.ndarray
    declared_mass: float

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pos.shape[0] != w.shape[0]:
            raise PreconditionError("measure", "positions and weights differ in length")
        if pos.shape[0] == 0:
            raise PreconditionError("measure", "no atoms")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise PreconditionError("measure", "weights must be finite and nonnegative")
        if not np.all(np.isfinite(pos)):
            raise PreconditionError("measure", "positions must be finite")
        mass = float(self.declared_mass)
        if mass <= 0:
            raise PreconditionError("measure", "declared_mass must be positive")
        if abs(w.sum() - mass) > 1e-12 * mass:
            raise PreconditionError(
                "measure", f"weights sum to {w.sum()!r}, declared {mass!r}")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "declared_mass", mass)

    @classmethod
    def from_atoms(cls, positions, weights):
        w = np.asarray(weights, dtype=float)
        return cls(positions, w, float(w.sum()))

    @property
    def dim(self):
        return self.positions.shape[1]

    def __len__(self):
        return self.positions.shape[0]

    def bbox(self):
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def center(self):
        lo, hi = self.bbox()
        return 0.5 * (lo + hi)

    def support_radius(self, center=None):
        c = self.center() if center is None else np.asarray(center, dtype=float)
        return float(np.sqrt(((self.positions - c) ** 2).sum(axis=1)).max())

    def translate(self, v):
        return DiscreteMeasure(self.positions + np.asarray(v, dtype=float),
                               self.weights, self.declared_mass)

    def scale(self, lam):
        """Dilate positions by ``lam`` about the origin (mass unchanged)."""
        return DiscreteMeasure(self.positions * float(lam), self.weights, self.declared_mass)

    def rotate(self, R):
        return DiscreteMeasure(self.positions @ np.asarray(R, dtype=float).T,
                               self.weights, self.declared_mass)

    def with_mass(self, c):
        """Multiply every weight by ``c``."""
        c = float(c)
        return DiscreteMeasure(self.positions, self.weights * c, self.declared_mass * c)


@dataclass(frozen=True)
class CantorSpec:
    d: int
    b: int
    rho: float
    depth: int
    active_axes: Optional[Tuple[int, ...]] = None

    def axes(self):
        return tuple(range(self.d)) if self.active_axes is None else tuple(self.active_axes)

    def axis_dimension(self):
        return math.log(self.b) / math.log(1.0 / self.rho)

    def dimension(self):
        return len(self.axes()) * self.axis_dimension()

    def validate(self, cap=ATOM_CAP):
        if self.d < 1:
            raise PreconditionError("cantor", "d must be positive")
        if self.b < 2:
            raise PreconditionError("cantor", "branch count must be >= 2")
        if not 0.0 < self.rho <= 1.0 / self.b:
            raise PreconditionError("cantor", f"rho must lie in (0, 1/{self.b}]")
        if self.depth < 0:
            raise PreconditionError("cantor", "depth must be >= 0")
        axes = self.axes()
        if not axes or len(set(axes)) != len(axes) or min(axes) < 0 or max(axes) >= self.d:
            raise PreconditionError("cantor", "active_axes must be distinct axes of R^d")
        if self.dimension() > self.d + 1e-12:
            raise PreconditionError("cantor", "target dimension exceeds d")
        count = self.b ** (self.depth * len(axes))
        if count > cap:
            raise PreconditionError("cantor", f"{count} atoms exceeds the cap {cap}")


def _cantor_axis(b, rho, depth):
    # centers of the depth-k cells of the 1D construction on [0, 1]
    gap = (1.0 - rho) / (b - 1)
    left = np.zeros(1)
    length = 1.0
    for _ in range(depth):
        offs = np.arange(b) * gap * length
        left = (left[:, None] + offs[None, :]).reshape(-1)
        length *= rho
    return left + 0.5 * length


def cantor_measure(spec: CantorSpec, cap: int = ATOM_CAP) -> DiscreteMeasure:
    """Equal-weight atoms at the centers of the depth-k cells of a Cantor dust."""
    spec.validate(cap)
    coords = _cantor_axis(spec.b, spec.rho, spec.depth)
    axes = spec.axes()
    grids = np.meshgrid(*([coords] * len(axes)), indexing="ij")
    pos = np.full((coords.size ** len(axes), spec.d), 0.5)
    for j, ax in enumerate(axes):
        pos[:, ax] = grids[j].reshape(-1)
    n = pos.shape[0]
    return DiscreteMeasure(pos, np.full(n, 1.0 / n), 1.0)


def uniform_interval(n, a=0.0, b=1.0):
    """``n`` equal atoms spread uniformly over [a, b] (endpoints included)."""
    x = np.linspace(a, b, n)[:, None]
    return DiscreteMeasure(x, np.full(n, 1.0 / n), 1.0)


def circle_measure(n, radius=1.0, center=(0.0, 0.0)):
    """``n`` equal atoms at equally spaced angles on a circle in R^2."""
    th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    pos = np.column_stack([np.cos(th), np.sin(th)]) * radius + np.asarray(center, dtype=float)
    return DiscreteMeasure(pos, np.full(n, 1.0 / n), 1.0)


def grid_measure(n_per_axis, d, lo=0.0, hi=1.0):
    """Equal atoms on a full tensor grid over [lo, hi]^d."""
    x = np.linspace(lo, hi, n_per_axis)
    g = np.meshgrid(*([x] * d), indexing="ij")
    pos = np.column_stack([a.reshape(-1) for a in g])
    n = pos.shape[0]
    return DiscreteMeasure(pos, np.full(n, 1.0 / n), 1.0)


def frostman_constant(mu: DiscreteMeasure, s, radii, centers=None, chunk=2048):
    """max over centers x and radii r of mu(B(x, r)) / r^s (closed balls)."""
    radii = np.asarray(radii, dtype=float).reshape(-1)
    centers = mu.positions if centers is None else np.atleast_2d(np.asarray(centers, dtype=float))
    if radii.size == 0 or centers.shape[0] == 0:
        raise PreconditionError("frostman_constant", "radii and centers must be nonempty")
    if s <= 0:
        raise PreconditionError("frostman_constant", "s must be positive")
    if np.any(radii <= 0):
        raise PreconditionError("frostman_constant", "radii must be positive")
    # a few ulps of slack so atoms exactly on the sphere are counted
    r2 = (radii * (1.0 + 1e-12)) ** 2
    x, w = mu.positions, mu.weights
    best = 0.0
    for start in range(0, centers.shape[0], chunk):
        c = centers[start:start + chunk]
        dist2 = ((c[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        for r, rr in zip(radii, r2):
            mass = (dist2 <= rr) @ w
            best = max(best, float(mass.max()) / r ** s)
    return best


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class GridSpec:
    origin: np.ndarray
    h: float
    shape: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", _frozen(np.asarray(self.origin, dtype=float).reshape(-1)))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        object.__setattr__(self, "h", float(self.h))
        if self.h <= 0:
            raise PreconditionError("grid", "spacing must be positive")
        if len(self.shape) != self.origin.size or min(self.shape) < 2:
            raise PreconditionError("grid", "shape extents must be >= 2 and match origin")

    @property
    def dim(self):
        return len(self.shape)

    def axis(self, k):
        return self.origin[k] + self.h * np.arange(self.shape[k])

    def upper(self):
        return self.origin + self.h * (np.asarray(self.shape) - 1)

    def center(self):
        return 0.5 * (self.origin + self.upper())

    def nodes(self):
        g = np.meshgrid(*[self.axis(k) for k in range(self.dim)], indexing="ij")
        return np.column_stack([a.reshape(-1) for a in g])


@dataclass(frozen=True)
class GridField:
    """Complex samples on a regular grid; node i sits at origin + h * i.

    ``periodic`` fields live on a periodic box and carry their low-frequency
    data in ``spectral`` (see :func:`frostlab.potentials.riesz_potential_complex`).
    """

    grid: GridSpec
    samples: np.ndarray
    nonnegative: bool = False
    periodic: bool = False
    spectral: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        a = np.array(self.samples, dtype=complex)
        if a.shape != self.grid.shape:
            raise PreconditionError("grid", f"samples shape {a.shape} != grid {self.grid.shape}")
        if self.nonnegative and (np.any(a.imag != 0) or np.any(a.real < 0)):
            raise PreconditionError("grid", "field tagged nonnegative has negative or complex samples")
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    @property
    def dim(self):
        return self.grid.dim

    @property
    def h(self):
        return self.grid.h

    @property
    def origin(self):
        return self.grid.origin

    @property
    def shape(self):
        return self.grid.shape

    def integral(self):
        return complex(self.samples.sum() * self.h ** self.dim)

    def translate(self, v):
        g = GridSpec(self.origin + np.asarray(v, dtype=float), self.h, self.shape)
        return GridField(g, self.samples, self.nonnegative, self.periodic, self.spectral)


def auto_grid(mu: DiscreteMeasure, delta, h=None, margin=3.0):
    """Smallest grid with spacing ``h`` (default delta/2) covering supp mu plus margin*delta."""
    h = delta / 2.0 if h is None else float(h)
    lo, hi = mu.bbox()
    pad = margin * delta + h
    origin = lo - pad
    shape = tuple(int(v) for v in np.ceil((hi + pad - origin) / h).astype(int) + 1)
    return GridSpec(origin, h, shape)


def _gauss_axis(x_atoms, origin, h, count, sigma, radius):
    # offsets are taken in grid units so that translating atoms and grid
    # together leaves the window (and its truncation) unchanged
    k = (x_atoms - origin) / h
    diff = np.arange(count)[None, :] - k[:, None]
    cut = radius / h * (1.0 + 1e-9)
    win = np.where(np.abs(diff) <= cut, np.exp(-0.5 * (diff * (h / sigma)) ** 2), 0.0)
    return win / win.sum(axis=1, keepdims=True)


def _check_grid(mu, delta, grid):
    if grid.dim != mu.dim:
        raise PreconditionError("mollify", "grid dimension differs from the measure")
    if grid.h > delta / 2.0 * (1.0 + 1e-12):
        raise PreconditionError("mollify", f"spacing h={grid.h} exceeds delta/2={delta / 2}")
    lo, hi = mu.bbox()
    tol = 1e-9 * max(1.0, float(np.abs(grid.origin).max()))
    if np.any(lo - 3 * delta < grid.origin - tol) or np.any(hi + 3 * delta > grid.upper() + tol):
        raise PreconditionError("mollify", "grid does not contain the support plus a 3*delta margin")


def mollify(mu: DiscreteMeasure, delta, profile="gaussian", grid: Optional[GridSpec] = None):
    """Sample phi_delta * mu on a grid.

    gaussian: sigma = delta/2, truncated at 3*delta, separable; each atom's
    window is normalized on the grid so mass is exact.  compact-bump:
    exp(-1/(1-|x/delta|^2)) on the ball of radius delta, normalized per atom.
    """
    if delta <= 0:
        raise PreconditionError("mollify", "delta must be positive")
    grid = auto_grid(mu, delta) if grid is None else grid
    _check_grid(mu, delta, grid)
    x, w = mu.positions, mu.weights
    d = mu.dim
    vol = grid.h ** d
    if profile == "gaussian":
        mats = [_gauss_axis(x[:, k], grid.origin[k], grid.h, grid.shape[k], delta / 2.0, 3.0 * delta)
                for k in range(d)]
        if d == 1:
            vals = w @ mats[0]
        elif d == 2:
            vals = (mats[0] * w[:, None]).T @ mats[1]
        else:
            letters = "abcdefgh"[:d]
            expr = "z," + ",".join("z" + c for c in letters) + "->" + letters
            vals = np.einsum(expr, w, *mats, optimize=True)
        vals = vals / vol
    elif profile in ("compact-bump", "bump"):
        vals = np.zeros(grid.shape)
        reach = int(math.ceil(delta / grid.h))
        offs = np.arange(-reach, reach + 1)
        for xi, wi in zip(x, w):
            base = np.rint((xi - grid.origin) / grid.h).astype(int)
            idx = [np.clip(base[k] + offs, 0, grid.shape[k] - 1) for k in range(d)]
            idx = [np.unique(i) for i in idx]
            coords = np.meshgrid(*[grid.origin[k] + grid.h * idx[k] for k in range(d)], indexing="ij")
            r2 = sum(((c - xi[k]) / delta) ** 2 for k, c in enumerate(coords))
            with np.errstate(divide="ignore", over="ignore"):
                bump = np.where(r2 < 1.0, np.exp(-1.0 / (1.0 - np.minimum(r2, 1.0 - 1e-300))), 0.0)
            tot = bump.sum()
            if tot <= 0:
                raise PreconditionError("mollify", "bump window contains no grid nodes; refine h")
            vals[np.ix_(*idx)] += wi * bump / (tot * vol)
    else:
        raise PreconditionError("mollify", f"unknown profile {profile!r}")
    return GridField(grid, np.maximum(vals, 0.0), nonnegative=True)


# ---------------------------------------------------------------- IO


def write_measure_csv(mu: DiscreteMeasure, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"x{k + 1}" for k in range(mu.dim)] + ["w"])
        for p, w in zip(mu.positions, mu.weights):
            wr.writerow([repr(float(v)) for v in p] + [repr(float(w))])


def read_measure_csv(path) -> DiscreteMeasure:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[-1] != "w" or any(h != f"x{k + 1}" for k, h in enumerate(header[:-1])):
        raise PreconditionError("read_measure_csv", f"bad header {header}")
    arr = np.array([[float(v) for v in r] for r in body], dtype=float)
    return DiscreteMeasure.from_atoms(arr[:, :-1], arr[:, -1])


def write_grid_field(f: GridField, path):
    d = f.dim
    with open(path, "wb") as fh:
        fh.write(struct.pack("<q", d))
        fh.write(np.asarray(f.origin, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", f.h))
        fh.write(np.asarray(f.shape, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(f.samples, dtype="<c16").tobytes())


def read_grid_field(path) -> GridField:
    with open(path, "rb") as fh:
        raw = fh.read()
    (d,) = struct.unpack_from("<q", raw, 0)
    off = 8
    origin = np.frombuffer(raw, "<f8", d, off)
    off += 8 * d
    (h,) = struct.unpack_from("<d", raw, off)
    off += 8
    shape = tuple(int(v) for v in np.frombuffer(raw, "<i8", d, off))
    off += 8 * d
    samples = np.frombuffer(raw, "<c16", int(np.prod(shape)), off).reshape(shape)
    return GridField(GridSpec(origin, h, shape), samples)
