"""Pure-Python (numpy) fallback for ``_ckernels``; same signatures."""
import numpy as np

_BLOCK = 512


def riesz_rows(x, w, s, eps, nthreads=1):
    x = np.ascontiguousarray(x, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    n = len(x)
    out = np.empty(n)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        diff = x[start:stop, None, :] - x[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        np.maximum(r2, eps * eps, out=r2)
        with np.errstate(divide="ignore"):
            kern = r2 ** (-0.5 * s)
        if eps == 0.0:
            idx = np.arange(start, stop)
            kern[idx - start, idx] = 0.0
        out[start:stop] = kern @ w
    return out


def riesz_potential(x, w, probes, s, eps, nthreads=1):
    x = np.ascontiguousarray(x, dtype=float)
    probes = np.ascontiguousarray(probes, dtype=float)
    out = np.empty(len(probes))
    for start in range(0, len(probes), _BLOCK):
        stop = min(start + _BLOCK, len(probes))
        diff = probes[start:stop, None, :] - x[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        np.maximum(r2, eps * eps, out=r2)
        with np.errstate(divide="ignore"):
            out[start:stop] = (r2 ** (-0.5 * s)) @ w
    return out


def linear_bin(u, w, origin, h, shape):
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    shape = tuple(int(v) for v in shape)
    dim = u.shape[1]
    pos = (u - np.asarray(origin)) / h
    base = np.clip(np.floor(pos).astype(np.int64), 0, np.array(shape) - 2)
    frac = pos - base
    grid = np.zeros(int(np.prod(shape)))
    for corner in range(1 << dim):
        coef = w.copy()
        flat = np.zeros(len(u), dtype=np.int64)
        for k in range(dim):
            if (corner >> k) & 1:
                coef *= frac[:, k]
                idx = base[:, k] + 1
            else:
                coef *= 1.0 - frac[:, k]
                idx = base[:, k]
            flat = flat * shape[k] + idx
        grid += np.bincount(flat, weights=coef, minlength=grid.size)
    return grid.reshape(shape)


def p_grid_max(d, n, s_mu, s_nu, num, nthreads=1):
    # index * step, matching the compiled loop bit for bit
    s = np.arange(num) * (s_mu / (num - 1))
    t = np.arange(num) * (s_nu / (num - 1))
    excess = t[:, None] + s[None, :] - 2.0 * n
    amp = (2.0 * n / (n + t))[:, None]
    feasible = excess >= -1e-12
    best = (-np.inf, 0, 0, 0)
    for ia in range(num):
        inv = 1.0 / (2.0 * (d - s[ia]))
        val = np.where(feasible, amp * (1.0 + excess * inv), -np.inf)
        k = int(np.argmax(val))
        if val.flat[k] > best[0]:
            it, js = divmod(k, num)
            best = (float(val.flat[k]), js, ia, it)
    return best
