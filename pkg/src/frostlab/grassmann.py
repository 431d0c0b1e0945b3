"""Haar sampling of O(d) and G(d, n), projections, spanned planes."""
import csv
from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map
from .errors import DegeneracyError, PreconditionError

CHUNK = 256


@dataclass(frozen=True)
class Frame:
    """Orthonormal basis (d x n) of a subspace V in G(d, n)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[1] < 1 or b.shape[1] > b.shape[0]:
            raise PreconditionError("frame", f"bad basis shape {b.shape}")
        dev = np.abs(b.T @ b - np.eye(b.shape[1])).max()
        if dev > 1e-10:
            raise PreconditionError("frame", f"columns not orthonormal (deviation {dev:.2e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def d(self):
        return self.basis.shape[0]

    @property
    def n(self):
        return self.basis.shape[1]

    def complement(self):
        """Orthonormal basis of the orthogonal complement (d x (d-n))."""
        q, _ = np.linalg.qr(self.basis, mode="complete")
        return q[:, self.n:]


def frame_from_vectors(*cols):
    """Frame spanned by already-orthonormal column vectors."""
    return Frame(np.column_stack([np.asarray(c, dtype=float) for c in cols]))


def _haar_batch(rng, count, d):
    z = rng.standard_normal((count, d, d))
    q, r = np.linalg.qr(z)
    sign = np.sign(np.diagonal(r, axis1=1, axis2=2))
    sign[sign == 0] = 1.0
    return q * sign[:, None, :]


def haar_orthogonal(d, rng=None):
    """One Haar-distributed d x d orthogonal matrix (QR with sign correction)."""
    if d < 1:
        raise PreconditionError("haar_orthogonal", "d must be >= 1")
    rng = np.random.default_rng(rng)
    return _haar_batch(rng, 1, d)[0]


def _chunk_rng(seed, c):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(c,))))


@dataclass(frozen=True)
class GrassmannSample:
    """Quadrature sample of gamma_{d,n}: ``bases`` has shape (count, d, n)."""

    d: int
    n: int
    seed: int
    bases: np.ndarray

    @property
    def count(self):
        return self.bases.shape[0]

    def __len__(self):
        return self.count

    @property
    def frames(self):
        return [Frame(b) for b in self.bases]

    def __getitem__(self, i):
        return Frame(self.bases[i])

    def subset(self, idx):
        b = self.bases[idx]
        b.setflags(write=False)
        return GrassmannSample(self.d, self.n, self.seed, b)


def sample_grassmann(d, n, count, seed) -> GrassmannSample:
    """``count`` frames from the first n columns of independent Haar draws.

    Frames are generated in blocks of 256; block c uses its own Philox stream
    derived from (seed, c), so the output depends only on the seed and any
    prefix of a longer sample equals the shorter sample.
    """
    if not (1 <= n <= d - 1):
        raise PreconditionError("sample_grassmann", f"need 1 <= n <= d-1, got d={d}, n={n}")
    if count < 1:
        raise PreconditionError("sample_grassmann", "count must be positive")
    seed = int(seed)
    nchunks = -(-count // CHUNK)

    def block(c):
        m = min(CHUNK, count - c * CHUNK)
        return _haar_batch(_chunk_rng(seed, c), m, d)[:, :, :n]

    bases = np.ascontiguousarray(np.concatenate(ordered_map(block, range(nchunks))))
    bases.setflags(write=False)
    return GrassmannSample(d, n, seed, bases)


def project_points(V: Frame, points):
    """Coordinates B^T x of pi_V x in the frame basis."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != V.d:
        raise PreconditionError("project_points", f"points have dimension {pts.shape[1]}, frame has {V.d}")
    out = pts @ V.basis
    return out[0] if single else out


def span_plane(y, xs, rel_tol=1e-8) -> Frame:
    """Orthonormal basis of span{x_i - y} by modified Gram-Schmidt."""
    y = np.asarray(y, dtype=float)
    vecs = np.atleast_2d(np.asarray(xs, dtype=float)) - y
    m, d = vecs.shape
    if not (1 <= m <= d - 1):
        raise PreconditionError("span_plane", f"need 1 <= m <= d-1, got m={m}, d={d}")
    scale = float(np.linalg.norm(vecs, axis=1).max())
    if scale == 0.0:
        raise DegeneracyError("span_plane", "all points coincide with y")
    q = vecs.T.copy()
    for j in range(m):
        for i in range(j):
            q[:, j] -= (q[:, i] @ q[:, j]) * q[:, i]
        norm = np.linalg.norm(q[:, j])
        if norm < rel_tol * scale:
            raise DegeneracyError("span_plane", f"residual {norm:.3e} below {rel_tol:g} x scale")
        q[:, j] /= norm
    return Frame(q)


def principal_angles(F1: Frame, F2: Frame):
    """Principal angles (ascending) between two subspaces of equal dimension.

    Small angles come from the sines and large ones from the cosines, which
    keeps full precision at both ends.
    """
    if F1.basis.shape != F2.basis.shape:
        raise PreconditionError("principal_angles", "frames differ in (d, n)")
    a, b = F1.basis, F2.basis
    u, cos, vt = np.linalg.svd(a.T @ b)
    resid = b @ vt.T - a @ (u * cos)
    sin = np.linalg.norm(resid, axis=0)
    cos = np.clip(cos, 0.0, 1.0)
    sin = np.clip(sin, 0.0, 1.0)
    ang = np.where(sin < np.sqrt(0.5), np.arcsin(sin), np.arccos(cos))
    return np.sort(ang)


def write_sample_csv(G: GrassmannSample, path):
    d, n = G.d, G.n
    sep = "_" if d > 9 or n > 9 else ""
    cols = [f"b{i + 1}{sep}{j + 1}" for j in range(n) for i in range(d)]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["d", "n", "seed", "index"] + cols)
        for k, b in enumerate(G.bases):
            wr.writerow([d, n, G.seed, k] + [repr(float(v)) for v in b.reshape(-1, order="F")])


def read_sample_csv(path) -> GrassmannSample:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    d, n, seed = int(rows[0][0]), int(rows[0][1]), int(rows[0][2])
    bases = np.array([np.array([float(v) for v in r[4:]]).reshape((d, n), order="F") for r in rows])
    bases.setflags(write=False)
    return GrassmannSample(d, n, seed, bases)
