"""Closed-form exponent thresholds, admissible (p, q) regions and figure data.

All suprema are open bounds.  Infinite values are the tagged ``INF``
(a :class:`Bound` with ``infinite=True``), never a float sentinel.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from ._parallel import get_threads
from .errors import PreconditionError

_TOL = 1e-12


@dataclass(frozen=True)
class Bound:
    """An upper bound that is never attained (``open_bound``) or is attained."""

    value: float
    open_bound: bool = True
    infinite: bool = False

    def __float__(self):
        return math.inf if self.infinite else float(self.value)

    def exceeds(self, x):
        """True when x lies strictly inside the bound (x < value)."""
        if self.infinite:
            return True
        return x < self.value if self.open_bound else x <= self.value

    def to_json(self):
        return "inf" if self.infinite else float(self.value)


INF = Bound(math.inf, True, True)


def _bound(v, open_bound=True):
    return INF if math.isinf(v) else Bound(float(v), open_bound)


# ---------------------------------------------------------------- projection theorem


@dataclass(frozen=True)
class ExponentInput:
    d: int
    n: int
    s: float
    t: float
    alpha: float

    def validate(self):
        if self.d < 2 or not 1 <= self.n <= self.d - 1:
            raise PreconditionError("exponents", f"need d >= 2 and 1 <= n <= d-1 (d={self.d}, n={self.n})")
        if not 0 < self.s < self.d:
            raise PreconditionError("exponents", "s must lie in (0, d)")
        if not 0 < self.t <= self.n:
            raise PreconditionError("exponents", "t must lie in (0, n]")
        if not 0 < self.alpha:
            raise PreconditionError("exponents", "alpha must be positive")
        if self.alpha > self.d:
            raise PreconditionError("exponents", "alpha must be < d")
        if self.s + self.t < 2 * self.n - _TOL:
            raise PreconditionError("exponents", "need s + t >= 2n")


def q0(x: ExponentInput) -> Bound:
    """q_0 = 1 + (s + t - 2n) / (2(d - alpha)); INF when alpha >= d - 1e-12."""
    x.validate()
    num = x.s + x.t - 2 * x.n
    if x.d - x.alpha <= _TOL:
        if num <= _TOL:
            return Bound(1.0, False)
        return INF
    return Bound(1.0 + max(num, 0.0) / (2.0 * (x.d - x.alpha)), False)


def p_max(x: ExponentInput) -> Bound:
    """Open upper bound 2n q_0 / (n + t) for p."""
    q = q0(x)
    if q.infinite:
        return INF
    return Bound(2.0 * x.n * q.value / (x.n + x.t))


@dataclass(frozen=True)
class RhsSpec:
    form: str  # "energy" or "amplitude"
    order: float
    q0: float

    def to_json(self):
        return {"form": self.form, "order": self.order, "q0": self.q0}


def theorem1_rhs_spec(x: ExponentInput, q) -> RhsSpec:
    """Which right-hand side applies: I_t(nu)^{1/2} at q = q_0, else A_{max(t, q t/(2 q_0))}(nu)."""
    qq = q0(x)
    if qq.infinite:
        raise PreconditionError("theorem1_rhs_spec", "q_0 is infinite")
    if q < qq.value - _TOL:
        raise PreconditionError("theorem1_rhs_spec", f"q={q} below q_0={qq.value}")
    if abs(q - qq.value) <= _TOL * max(1.0, qq.value):
        return RhsSpec("energy", float(x.t), qq.value)
    return RhsSpec("amplitude", max(x.t, q * x.t / (2.0 * qq.value)), qq.value)


# ---------------------------------------------------------------- Corollaries


@dataclass(frozen=True)
class FrostmanPair:
    s_mu: float
    s_nu: float

    def validate(self, d, n, allow_boundary=False):
        if d < 2 or not 1 <= n <= d - 1:
            raise PreconditionError("pair", f"need d >= 2 and 1 <= n <= d-1 (d={d}, n={n})")
        if not 0 < self.s_nu < n:
            raise PreconditionError("pair", "need 0 < s_nu < n")
        if not self.s_mu < d:
            raise PreconditionError("pair", "need s_mu < d")
        lo = 2 * n - self.s_nu
        ok = self.s_mu >= lo - _TOL if allow_boundary else self.s_mu > lo
        if not ok:
            raise PreconditionError("pair", "need s_mu > 2n - s_nu")


def _P(d, n, s_mu, t):
    return n / (d - s_mu) * (1.0 + (2 * d - 3 * n - s_mu) / (n + t))


def _Q(d, n, s_mu, s_nu, t):
    if t <= 0:
        return math.inf
    return s_nu / (d - s_mu) * (1.0 + (2 * d - 2 * n - s_mu) / t)


@dataclass(frozen=True)
class Coupling:
    """(s_mu - 2d + 3n) / (1 - c p) - n < (2d - 2n - s_mu) / (c' q - 1)."""

    a: float   # s_mu - 2d + 3n
    c: float   # (d - s_mu) / n
    b: float   # 2d - 2n - s_mu
    c2: float  # (d - s_mu) / s_nu
    n: float

    def holds(self, p, q):
        lhs_den = 1.0 - self.c * p
        rhs_den = self.c2 * q - 1.0
        if rhs_den <= 0:
            return True
        if lhs_den >= 0:
            return False
        return self.a / lhs_den - self.n < self.b / rhs_den

    def to_json(self):
        return {"a": self.a, "c": self.c, "b": self.b, "c_prime": self.c2, "n": self.n,
                "inequality": "a/(1-c p) - n < b/(c' q - 1)"}


@dataclass(frozen=True)
class PQRegion:
    d: int
    n: int
    pair: FrostmanPair
    case_label: str
    p_sup: Bound
    q_sup: Bound
    t_low: float
    coupling: Optional[Coupling] = None

    def admissible(self, p, q):
        """Exists t in (max(2n - s_mu, 0), s_nu) with p < P(t) and q < Q(t)."""
        if p < 1 or q < 1:
            return False
        lo, hi = t_interval(self.d, self.n, self.pair.s_mu, self.pair.s_nu, p, q)
        return lo < hi

    def polygon(self, resolution=64):
        """Boundary of the region sampled along t, as (p, q) vertices."""
        d, n, s_mu, s_nu = self.d, self.n, self.pair.s_mu, self.pair.s_nu
        ts = np.linspace(self.t_low, s_nu, resolution)
        pts = [(_P(d, n, s_mu, t), _Q(d, n, s_mu, s_nu, t)) for t in ts]
        return [(float(p), float(q) if math.isfinite(q) else "inf") for p, q in pts]

    def to_json(self):
        return {"d": self.d, "n": self.n, "s_mu": self.pair.s_mu, "s_nu": self.pair.s_nu,
                "case": self.case_label, "p_sup": self.p_sup.to_json(), "q_sup": self.q_sup.to_json(),
                "open_bound": True, "t_low": self.t_low,
                "coupling": None if self.coupling is None else self.coupling.to_json()}


def _solve_gt(A, B, shift, target):
    # {t : A (1 + B/(t + shift)) > target} for t + shift > 0, returned as
    # (lower, upper) limits on t
    c = target / A - 1.0
    if B == 0:
        return (-math.inf, math.inf) if c < 0 else (math.inf, -math.inf)
    if B > 0:
        if c <= 0:
            return -math.inf, math.inf
        return -math.inf, B / c - shift
    if c >= 0:
        return math.inf, -math.inf
    return B / c - shift, math.inf


def t_interval(d, n, s_mu, s_nu, p, q):
    """Open interval of t in which both p < P(t) and q < Q(t) hold."""
    lo, hi = max(2 * n - s_mu, 0.0), s_nu
    plo, phi = _solve_gt(n / (d - s_mu), 2 * d - 3 * n - s_mu, n, p)
    qlo, qhi = _solve_gt(s_nu / (d - s_mu), 2 * d - 2 * n - s_mu, 0.0, q)
    return max(lo, plo, qlo), min(hi, phi, qhi)


def corollary_pq_region(d, n, pair: FrostmanPair) -> PQRegion:
    pair.validate(d, n)
    s_mu, s_nu = pair.s_mu, pair.s_nu
    t_low = max(2 * n - s_mu, 0.0)
    if s_mu <= 2 * d - 3 * n:
        label = "low"
        p_sup = _P(d, n, s_mu, t_low)
        q_sup = _Q(d, n, s_mu, s_nu, t_low)
        coupling = None
    elif s_mu >= 2 * d - 2 * n:
        label = "high"
        p_sup = _P(d, n, s_mu, s_nu)
        q_sup = 2.0 + (s_mu + s_nu - 2 * n) / (d - s_mu)
        coupling = None
    else:
        label = "coupled"
        p_sup = _P(d, n, s_mu, s_nu)
        q_sup = _Q(d, n, s_mu, s_nu, t_low)
        coupling = Coupling(s_mu - 2 * d + 3 * n, (d - s_mu) / n, 2 * d - 2 * n - s_mu,
                            (d - s_mu) / s_nu, float(n))
    return PQRegion(d, n, pair, label, _bound(p_sup), _bound(q_sup), t_low, coupling)


def corollary_p_max(d, n, pair: FrostmanPair, allow_boundary=False) -> Bound:
    """Largest p (open bound) with pi^y mu in L^p(G(d, n)) for some y."""
    pair.validate(d, n, allow_boundary)
    s_mu, s_nu = pair.s_mu, pair.s_nu
    if s_mu >= 2 * d - 3 * n:
        v = 2 * n / (n + s_nu) * (1 + (s_mu + s_nu - 2 * n) / (2 * (d - s_mu)))
    else:
        v = 2 * n / (n + max(2 * n - s_mu, 0.0)) * (1 + max(s_mu - 2 * n, 0.0) / (2 * (d - s_mu)))
    return Bound(v)


@dataclass(frozen=True)
class OptimizeResult:
    s: float
    alpha: float
    t: float
    p: float
    grid_s: float
    grid_alpha: float
    grid_t: float
    grid_p: float
    cell_s: float
    cell_t: float
    lipschitz_slack: float
    alpha_identifiable: bool

    def agrees(self):
        ok = (abs(self.grid_s - self.s) <= self.cell_s * (1 + 1e-9)
              and abs(self.grid_t - self.t) <= self.cell_t * (1 + 1e-9)
              and abs(self.grid_p - self.p) <= 1e-6 + self.lipschitz_slack)
        if self.alpha_identifiable:
            ok = ok and abs(self.grid_alpha - self.alpha) <= self.cell_s * (1 + 1e-9)
        return ok

    def to_json(self):
        return dict(self.__dict__)


def optimize_parameters(d, n, pair: FrostmanPair, grid_resolution=200, allow_boundary=False) -> OptimizeResult:
    """Closed-form maximizer of the critical p next to a brute-force grid maximum.

    The grid scans s, alpha over linspace(0, s_mu) and t over
    linspace(0, s_nu), each with ``grid_resolution`` points, subject to
    s + t >= 2n.
    """
    pair.validate(d, n, allow_boundary)
    s_mu, s_nu = pair.s_mu, pair.s_nu
    if grid_resolution < 2:
        raise PreconditionError("optimize_parameters", "grid_resolution must be >= 2")
    t_star = s_nu if s_mu >= 2 * d - 3 * n else max(0.0, 2 * n - s_mu)
    p_star = _P(d, n, s_mu, t_star)
    val, js, ia, it = kernels.p_grid_max(int(d), int(n), float(s_mu), float(s_nu),
                                         int(grid_resolution), get_threads())
    if not math.isfinite(val):
        raise PreconditionError("optimize_parameters", "no feasible grid point")
    cs = s_mu / (grid_resolution - 1)
    ct = s_nu / (grid_resolution - 1)
    # derivative bounds of the objective on the feasible box (d - alpha >= d - s_mu)
    gap = d - s_mu
    l_s = 1.0 / gap
    l_a = (s_mu + s_nu) / gap ** 2
    l_t = 2.0 / n * (1.0 + (s_mu + s_nu) / (2.0 * gap)) + 1.0 / gap
    lip = (l_s + l_a) * cs + l_t * ct
    identifiable = s_mu + t_star - 2 * n > 10 * (cs + ct)
    return OptimizeResult(s_mu, s_mu, t_star, p_star, js * cs, ia * cs, it * ct, val, cs, ct, lip, identifiable)


# ---------------------------------------------------------------- visibility


@dataclass(frozen=True)
class ExceptionalBound:
    d: int
    m: int

    def __call__(self, dim_e):
        """max{2(d-m) - dimE, (d-m)(dimE - 2m + m(d-dimE)) / (d - m - m(d-dimE)), 0}.

        Returns (value, boundary) where ``boundary`` flags a vanishing
        denominator; the fraction is then left out.
        """
        d, m = self.d, self.m
        terms = [2 * (d - m) - dim_e, 0.0]
        den = d - m - m * (d - dim_e)
        boundary = abs(den) <= 1e-12
        if not boundary:
            terms.append((d - m) * (dim_e - 2 * m + m * (d - dim_e)) / den)
        return max(terms), boundary


@dataclass(frozen=True)
class VisibilityReport:
    d: int
    m: int
    threshold_i: float
    threshold_ii: Optional[float]
    exceptional_bound: ExceptionalBound
    vacuous_i: bool
    vacuous_ii: bool

    def to_json(self):
        return {"d": self.d, "m": self.m, "threshold_i": self.threshold_i,
                "threshold_ii": "not applicable" if self.threshold_ii is None else self.threshold_ii,
                "vacuous_i": self.vacuous_i, "vacuous_ii": self.vacuous_ii}


def visibility_thresholds(d, m) -> VisibilityReport:
    """Dimension thresholds for the m-planes spanned from a point.

    A threshold at or above d cannot be exceeded by dim E and is flagged
    ``vacuous``.
    """
    if d < 2 or not 1 <= m <= d - 1:
        raise PreconditionError("visibility_thresholds", f"need 1 <= m <= d-1 (d={d}, m={m})")
    th1 = max(d - m / (2 * m - 1), 3 * m - d)
    th2 = max(2 * (d - m), d - (2 * m - d) / (m - 1)) if 2 * m > d else None
    return VisibilityReport(d, m, float(th1), None if th2 is None else float(th2),
                            ExceptionalBound(d, m), th1 >= d, th2 is not None and th2 >= d)


def dov_exponent(d, n, s, alpha):
    """q with s = n + (q - 2)(d - alpha)."""
    if alpha >= d:
        raise PreconditionError("dov_exponent", "alpha must be < d")
    if not (n <= s < d) or alpha <= 0:
        raise PreconditionError("dov_exponent", "need n <= s < d and 0 < alpha")
    return 2.0 + (s - n) / (d - alpha)


def sobolev_region(d, n, s, p, q):
    """n/p + (2d - 2n - s)/q > d - s, for 2 <= q <= p <= inf."""
    if q > p:
        raise PreconditionError("sobolev_region", "need q <= p")
    if q < 2:
        raise PreconditionError("sobolev_region", "need q >= 2")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    return n * inv_p + (2 * d - 2 * n - s) / q > d - s


# ---------------------------------------------------------------- figure


def jump_figure_data(d, n, resolution=64):
    """Cell-centered table over (0, d) x (0, n) plus the region polygon.

    Points with s_mu + s_nu <= 2n are labeled infeasible (p = 1); the
    critical segment carries the one-sided limit 2n / (3n - s_mu).
    """
    if resolution < 8:
        raise PreconditionError("jump_figure_data", "resolution must be >= 8")
    if d < 2 or not 1 <= n <= d - 1:
        raise PreconditionError("jump_figure_data", "need 1 <= n <= d-1")
    rows = []
    for i in range(resolution):
        s_mu = (i + 0.5) * d / resolution
        for j in range(resolution):
            s_nu = (j + 0.5) * n / resolution
            if s_mu + s_nu > 2 * n:
                pm = float(corollary_p_max(d, n, FrostmanPair(s_mu, s_nu)))
                rows.append({"s_mu": s_mu, "s_nu": s_nu, "label": "feasible", "p_max": pm})
            else:
                rows.append({"s_mu": s_mu, "s_nu": s_nu, "label": "infeasible", "p_max": 1.0})
    lo, hi = float(n), float(min(2 * n, d))
    segment = []
    for k in range(resolution + 1):
        s_mu = lo + (hi - lo) * k / resolution
        s_nu = 2 * n - s_mu
        if 0 < s_nu < n and s_mu < d:
            segment.append({"s_mu": s_mu, "s_nu": s_nu, "limit": 2 * n / (3 * n - s_mu)})
    if 2 * n > d:
        polygon = [(float(n), float(n)), (float(d), float(n)), (float(d), float(2 * n - d))]
    else:
        polygon = [(float(n), float(n)), (float(d), float(n)), (float(d), 0.0), (float(2 * n), 0.0)]
    return {"d": d, "n": n, "resolution": resolution, "table": rows, "segment": segment, "polygon": polygon}
