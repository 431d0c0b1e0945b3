"""Experiment configuration, dispatch and result emission."""
import copy
import csv
import hashlib
import json
import math
import os
import subprocess
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from ._parallel import threads as thread_scope
from .errors import ConfigError, PreconditionError

KINDS = ("energy", "amplitude", "project", "mixed-norm", "orponen-check", "kaufman-check",
         "radial-average", "mu-z-identity", "exponents", "region", "jump-figure", "visibility", "scan")

# name: (type, default, help).  Types: int, float, str, bool, vector, optional
# variants prefixed with "?" accept null.
SCHEMA = {
    "kind": ("str", None, "experiment kind"),
    "scan_kind": ("?str", None, "base experiment of a scan"),
    "d": ("int", 2, "ambient dimension"),
    "n": ("int", 1, "subspace dimension"),
    "m": ("int", 1, "plane dimension for visibility"),
    "measure": ("?str", None, "cantor | circle | interval | grid | file (null: kind default)"),
    "measure_file": ("?str", None, "CSV of atoms for measure = file"),
    "atoms": ("int", 4000, "atom count for circle, interval and grid measures"),
    "radius": ("float", 1.0, "circle radius"),
    "cantor_b": ("int", 2, "branch count of mu"),
    "cantor_rho": ("float", 1.0 / 3.0, "contraction ratio of mu"),
    "cantor_axes": ("?str", None, "comma separated active axes of mu (null: all)"),
    "depth": ("int", 6, "Cantor depth of mu (and nu unless nu_depth is set)"),
    "atom_cap": ("int", 2 ** 24, "largest allowed atom count"),
    "nu_b": ("int", 2, "branch count of nu"),
    "nu_rho": ("float", 0.2, "contraction ratio of nu"),
    "nu_depth": ("?int", None, "Cantor depth of nu (null: depth)"),
    "nu_shift": ("vector", [1.5, 0.0], "translation of nu"),
    "delta": ("?float", None, "mollification bandwidth (null: half a Cantor cell)"),
    "profile": ("str", "gaussian", "gaussian | compact-bump"),
    "grid_h": ("?float", None, "grid spacing (null: delta/2)"),
    "pad": ("float", 2.0, "zero-padding factor of FFTs"),
    "epsilon": ("?float", None, "kernel clamp of direct sums (null: matched to delta)"),
    "bandwidth": ("float", 1.0 / 256.0, "KDE bandwidth of projected densities"),
    "h_V": ("?float", None, "projected grid spacing (null: bandwidth/2)"),
    "psi_radius": ("?float", None, "cutoff radius (null: 1.5 x support radius)"),
    "frames": ("int", 512, "Grassmann sample size"),
    "seed": ("int", 0, "master seed"),
    "batches": ("int", 16, "batch count of the standard error"),
    "y": ("?vector", None, "probe point (null: origin)"),
    "s": ("float", 0.5, "Riesz order"),
    "t": ("float", 0.8, "Frostman order t of nu in the mixed-norm bound"),
    "alpha": ("float", 1.5, "amplitude order alpha"),
    "p": ("float", 1.3, "Lebesgue exponent p"),
    "q": ("float", 1.3, "outer exponent q"),
    "z_re": ("float", 0.2, "Re z"),
    "z_im": ("float", 0.0, "Im z"),
    "w_re": ("float", 0.3, "Re w"),
    "w_im": ("float", 0.0, "Im w"),
    "s_mu": ("float", 1.5, "Frostman exponent of mu"),
    "s_nu": ("float", 0.8, "Frostman exponent of nu"),
    "dim_e": ("?float", None, "dim E for the exceptional-set bound"),
    "grid_resolution": ("int", 200, "points per axis of the brute-force scan"),
    "resolution": ("int", 64, "table resolution"),
    "trials": ("int", 256, "tuples drawn by plane_coverage"),
    "resolution_angle": ("float", 0.05, "angular resolution of plane_coverage"),
    "out": ("str", "results", "output directory"),
    "threads": ("int", 1, "worker threads"),
}

SOURCE = {
    "energy": "potentials.riesz_energy_direct / potentials.riesz_energy_fourier",
    "amplitude": "potentials.riesz_amplitude",
    "project": "projections.pushforward_density",
    "mixed-norm": "projections.mixed_norm",
    "orponen-check": "projections.orponen_check",
    "kaufman-check": "projections.kaufman_check",
    "radial-average": "projections.average_radial",
    "mu-z-identity": "potentials.riesz_potential_complex / potentials.riesz_energy_fourier",
    "exponents": "exponents",
    "region": "exponents.corollary_pq_region",
    "jump-figure": "exponents.jump_figure_data",
    "visibility": "exponents.visibility_thresholds",
}


def _check_type(name, typ, value, path):
    opt = typ.startswith("?")
    base = typ.lstrip("?")
    if value is None:
        if opt:
            return None
        raise ConfigError(path, "must not be null")
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if base == "vector":
        if not isinstance(value, list) or not value:
            raise ConfigError(path, f"expected a non-empty list of numbers, got {value!r}")
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}[{i}]", f"expected a number, got {v!r}")
        return [float(v) for v in value]
    raise ConfigError(path, f"unknown type {typ}")


def _is_range(typ, value):
    if not isinstance(value, list):
        return False
    if typ.lstrip("?") == "vector":
        return any(isinstance(v, list) for v in value) or not value
    return True


@dataclass
class ExperimentConfig:
    values: Dict[str, Any]
    ranged: Optional[str] = None
    range_values: List[Any] = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("", "configuration must be a JSON object")
        unknown = sorted(set(raw) - set(SCHEMA))
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        if "kind" not in raw:
            raise ConfigError("kind", "missing")
        if raw["kind"] not in KINDS:
            raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
        vals = {k: copy.deepcopy(v[1]) for k, v in SCHEMA.items()}
        ranged, rvals = None, []
        for k, v in raw.items():
            typ = SCHEMA[k][0]
            if _is_range(typ, v):
                if ranged is not None:
                    raise ConfigError(k, f"only one ranged knob is allowed ({ranged} is already ranged)")
                if not v:
                    raise ConfigError(k, "empty range")
                ranged = k
                rvals = [_check_type(k, typ, item, f"{k}[{i}]") for i, item in enumerate(v)]
                vals[k] = rvals[0]
            else:
                vals[k] = _check_type(k, typ, v, k)
        if vals["kind"] == "scan":
            if ranged is None:
                raise ConfigError("kind", "a scan needs exactly one ranged knob")
            if vals["scan_kind"] not in KINDS or vals["scan_kind"] == "scan":
                raise ConfigError("scan_kind", "must name a non-scan experiment kind")
        elif ranged is not None:
            raise ConfigError(ranged, "ranges are only allowed with kind = scan")
        if vals["threads"] < 1:
            raise ConfigError("threads", "must be >= 1")
        if vals["frames"] < 1:
            raise ConfigError("frames", "must be >= 1")
        return cls(vals, ranged, rvals)

    def to_dict(self):
        out = {k: v for k, v in self.values.items() if v != SCHEMA[k][1] or k == "kind"}
        if self.ranged:
            out[self.ranged] = list(self.range_values)
        return out

    def canonical(self):
        vals = dict(self.values)
        # output location and thread count do not change results
        vals.pop("out")
        vals.pop("threads")
        if self.ranged:
            vals[self.ranged] = list(self.range_values)
        return json.dumps(vals, sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_value(self, key, value):
        vals = dict(self.values)
        vals[key] = value
        return ExperimentConfig(vals)


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"no such file {path}")
    except json.JSONDecodeError as e:
        raise ConfigError("--config", f"invalid JSON ({e})")
    return raw


def version_string():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class ResultRecord:
    experiment_id: str
    config_hash: str
    version: str
    wall_time_s: float
    payload: Dict[str, Any]
    csv_header: List[str]
    csv_rows: List[List[Any]]
    config: Dict[str, Any]
    points: List["ResultRecord"] = field(default_factory=list, repr=False)

    def payload_bytes(self):
        return json.dumps(self.payload, sort_keys=True, separators=(",", ":"), allow_nan=True).encode()

    def to_json(self):
        return {"experiment_id": self.experiment_id, "config_hash": self.config_hash,
                "version": self.version, "wall_time_s": self.wall_time_s,
                "config": self.config, "payload": self.payload}

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, self.experiment_id)
        with open(base + ".json", "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(base + ".csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(self.csv_header)
            wr.writerows(self.csv_rows)
        return base + ".json", base + ".csv"


def _q(value, source):
    # one emitted quantity and the operation that produced it
    return {"value": _jsonable(value), "source": source}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if hasattr(v, "to_json"):
        return _jsonable(v.to_json())
    return v


# ---------------------------------------------------------------- builders


def _mu(cfg, default="cantor"):
    from . import measures as M

    kind = cfg["measure"] or default
    d = cfg["d"]
    if kind == "cantor":
        axes = None if cfg["cantor_axes"] is None else tuple(int(a) for a in cfg["cantor_axes"].split(","))
        return M.cantor_measure(M.CantorSpec(d, cfg["cantor_b"], cfg["cantor_rho"], cfg["depth"], axes),
                                cfg["atom_cap"])
    if kind == "circle":
        if d != 2:
            raise ConfigError("measure", "circle needs d = 2")
        return M.circle_measure(cfg["atoms"], cfg["radius"])
    if kind == "interval":
        if d != 1:
            raise ConfigError("measure", "interval needs d = 1")
        return M.uniform_interval(cfg["atoms"])
    if kind == "grid":
        k = max(2, int(round(cfg["atoms"] ** (1.0 / d))))
        return M.grid_measure(k, d)
    if kind == "file":
        if not cfg["measure_file"]:
            raise ConfigError("measure_file", "required when measure = file")
        return M.read_measure_csv(cfg["measure_file"])
    raise ConfigError("measure", f"unknown measure {kind!r}")


def _nu(cfg):
    from . import measures as M

    depth = cfg["nu_depth"] if cfg["nu_depth"] is not None else cfg["depth"]
    nu = M.cantor_measure(M.CantorSpec(cfg["d"], cfg["nu_b"], cfg["nu_rho"], depth), cfg["atom_cap"])
    shift = np.zeros(cfg["d"])
    v = np.asarray(cfg["nu_shift"])
    shift[:min(len(v), cfg["d"])] = v[:cfg["d"]]
    return nu.translate(shift)


def _delta(cfg, default_cell_depth=None):
    if cfg["delta"] is not None:
        return cfg["delta"]
    depth = cfg["depth"] if default_cell_depth is None else default_cell_depth
    return 0.5 * cfg["cantor_rho"] ** depth


def _grid(cfg, mu, delta):
    from .measures import auto_grid

    return auto_grid(mu, delta, cfg["grid_h"])


def _sample(cfg, d, n):
    from .grassmann import sample_grassmann

    return sample_grassmann(d, n, cfg["frames"], cfg["seed"])


# ---------------------------------------------------------------- experiments


def _energy(cfg):
    from .measures import mollify
    from .potentials import matched_epsilon, riesz_energy_direct, riesz_energy_fourier

    mu = _mu(cfg)
    delta = _delta(cfg)
    s = cfg["s"]
    eps = cfg["epsilon"] if cfg["epsilon"] is not None else matched_epsilon(delta, mu.dim, s)
    f = mollify(mu, delta, cfg["profile"], _grid(cfg, mu, delta))
    direct = riesz_energy_direct(mu, s, eps)
    fourier = riesz_energy_fourier(f, s, pad=cfg["pad"])
    rel = abs(fourier.real - direct.real) / direct.real
    payload = {
        "s": s, "delta": delta, "epsilon": eps, "atoms": len(mu),
        "direct": _q(direct.real, "potentials.riesz_energy_direct"),
        "fourier": _q(fourier.real, "potentials.riesz_energy_fourier"),
        "relative_difference": _q(rel, "harness"),
        "value": direct.real,
    }
    header = ["quantity", "s", "method", "epsilon", "value_re", "value_im", "samples", "runtime_ms"]
    rows = [[r["quantity"], r["s"], r["method"], r["epsilon"], r["value_re"], r["value_im"],
             r["samples"], round(r["runtime_ms"], 3)] for r in (direct.record(), fourier.record())]
    return payload, header, rows


def _amplitude(cfg):
    from scipy.spatial import cKDTree

    from .potentials import riesz_amplitude

    mu = _mu(cfg)
    s = cfg["s"]
    if cfg["epsilon"] is not None:
        eps = cfg["epsilon"]
    elif len(mu) > 1:
        eps = float(np.median(cKDTree(mu.positions).query(mu.positions, k=2)[0][:, 1]))
    else:
        eps = 0.0
    extra = None if cfg["y"] is None else np.atleast_2d(cfg["y"])
    val = riesz_amplitude(mu, s, eps=eps, extra=extra)
    payload = {"s": s, "epsilon": eps, "atoms": len(mu), "value": val,
               "amplitude": _q(val, "potentials.riesz_amplitude")}
    header = ["quantity", "s", "method", "epsilon", "value_re", "value_im", "samples", "runtime_ms"]
    return payload, header, [["riesz_amplitude", s, "direct", eps, val, 0.0, len(mu), ""]]


def _project(cfg):
    from .projections import lp_norm, pushforward_density

    mu = _mu(cfg, "circle" if cfg["d"] == 2 else "cantor")
    G = _sample(cfg, mu.dim, cfg["n"])
    rho = pushforward_density(mu, G[0], cfg["h_V"], cfg["bandwidth"], cfg["psi_radius"])
    l1 = lp_norm(rho, 1.0)
    lp = lp_norm(rho, cfg["p"])
    payload = {"p": cfg["p"], "mass": _q(l1, "projections.lp_norm"),
               "lp_norm": _q(lp, "projections.lp_norm"), "value": lp,
               "frame": _q(G[0].basis.tolist(), "grassmann.sample_grassmann"),
               "cells": int(rho.values.size)}
    header = [f"u{k + 1}" for k in range(rho.n)] + ["density"]
    axes = np.meshgrid(*[rho.axis(k) for k in range(rho.n)], indexing="ij")
    coords = np.column_stack([a.reshape(-1) for a in axes])
    rows = [list(map(float, c)) + [float(v)] for c, v in zip(coords, rho.values.reshape(-1))]
    return payload, header, rows


def _mixed(cfg):
    from .projections import mixed_norm

    mu, nu = _mu(cfg), _nu(cfg)
    G = _sample(cfg, cfg["d"], cfg["n"])
    rep = mixed_norm(mu, nu, cfg["p"], cfg["q"], G, cfg["bandwidth"], cfg["h_V"], cfg["batches"],
                     cfg["psi_radius"])
    rec = rep.record(cfg["depth"])
    payload = {"report": _q(rec, "projections.mixed_norm"), "value": rep.value, "stderr": rep.stderr}
    header = ["p", "q", "value", "stderr", "frames", "seed", "depth", "bandwidth"]
    return payload, header, [[rec[k] for k in header]]


def _orponen(cfg):
    from .projections import orponen_check

    mu, nu = _mu(cfg), _nu(cfg)
    G = _sample(cfg, cfg["d"], cfg["n"])
    res = orponen_check(mu, nu, cfg["p"], G, cfg["bandwidth"], cfg["h_V"])
    payload = {"lhs": _q(res.lhs, "projections.mixed_norm"),
               "rhs": _q(res.rhs, "projections.orponen_check"),
               "relative_error": res.relative_error, "value": res.relative_error}
    header = ["p", "q", "value", "stderr", "frames", "seed", "depth", "bandwidth", "lhs", "rhs", "relative_error"]
    row = [cfg["p"], cfg["p"], res.lhs, "", cfg["frames"], cfg["seed"], cfg["depth"], cfg["bandwidth"],
           res.lhs, res.rhs, res.relative_error]
    return payload, header, [row]


def kaufman_measures():
    """The three test measures of the Kaufman check."""
    from .measures import CantorSpec, cantor_measure, circle_measure

    return [cantor_measure(CantorSpec(2, 2, 1.0 / 3.0, 4)),
            circle_measure(2000, 0.4, (0.5, 0.5)),
            cantor_measure(CantorSpec(2, 3, 0.25, 3))]


def _kaufman(cfg):
    from .projections import kaufman_check

    delta = cfg["delta"] if cfg["delta"] is not None else 0.02
    G = _sample(cfg, 2, 1)
    out, spread = kaufman_check(kaufman_measures(), G, delta, h_V=cfg["h_V"], pad=cfg["pad"])
    payload = {"delta": delta, "measures": _q(out, "projections.kaufman_check"),
               "spread": spread, "value": spread, "target_ratio": 1.0 / math.pi}
    header = ["measure", "l2_mean", "l2_stderr", "energy", "ratio"]
    rows = [[i, o["l2_mean"], o["l2_stderr"], o["energy"], o["ratio"]] for i, o in enumerate(out)]
    return payload, header, rows


def _radial(cfg):
    from .projections import average_radial

    mu = _mu(cfg, "circle" if cfg["d"] == 2 else "cantor")
    y = np.zeros(mu.dim) if cfg["y"] is None else np.asarray(cfg["y"])
    G = _sample(cfg, mu.dim, cfg["n"])
    res = average_radial(mu, y, cfg["n"], G, cfg["bandwidth"], cfg["h_V"])
    ratio = res.lhs / res.rhs
    payload = {"lhs": _q(res.lhs, "projections.average_radial"),
               "rhs": _q(res.rhs, "projections.average_radial"), "ratio": ratio, "value": ratio}
    return payload, ["lhs", "rhs", "ratio", "frames", "seed"], [[res.lhs, res.rhs, ratio, cfg["frames"], cfg["seed"]]]


def _muz(cfg):
    from .measures import mollify
    from .potentials import (amplitude_of_potential, matched_epsilon, multiplier_coefficient,
                             riesz_energy_direct, riesz_energy_fourier, riesz_potential_complex)
    from .special import riesz_constant

    depth = cfg["depth"]
    mu = _mu(cfg)
    delta = _delta(cfg)
    d, s = mu.dim, cfg["s"]
    z = complex(cfg["z_re"], cfg["z_im"])
    sr = s - 2.0 * z.real
    f = mollify(mu, delta, cfg["profile"], _grid(cfg, mu, delta))
    # the two sides are evaluated on different padded lattices
    uz = riesz_potential_complex(f, z, pad=cfg["pad"] + 1.0, periodic=True)
    lhs = riesz_energy_fourier(uz, s).real
    rhs = riesz_energy_fourier(f, sr, pad=cfg["pad"]).real
    pred = abs(multiplier_coefficient(z, d)) ** 2 * riesz_constant(d, s) / riesz_constant(d, sr)
    ratio = lhs / rhs
    direct = riesz_energy_direct(mu, sr, matched_epsilon(delta, d, sr)).real
    payload = {"s": s, "z": [z.real, z.imag], "delta": delta, "depth": depth,
               "lhs": _q(lhs, "potentials.riesz_energy_fourier(mu_z)"),
               "rhs": _q(rhs, "potentials.riesz_energy_fourier(mu_delta)"),
               "predicted_ratio": _q(pred, "special.riesz_constant"),
               "ratio": ratio, "relative_error": abs(ratio / pred - 1.0),
               "rhs_direct": _q(direct, "potentials.riesz_energy_direct"),
               "value": abs(ratio / pred - 1.0)}
    w = complex(cfg["w_re"], cfg["w_im"])
    try:
        amp = amplitude_of_potential(f, z, w, pad=cfg["pad"])
        payload["composition"] = _q({"w": [w.real, w.imag], "sup": amp.sup, "bound": amp.bound},
                                    "potentials.amplitude_of_potential")
    except PreconditionError as e:
        payload["composition"] = _q({"error": str(e)}, "potentials.amplitude_of_potential")
    header = ["s", "z_re", "z_im", "lhs", "rhs", "ratio", "predicted", "relative_error"]
    return payload, header, [[s, z.real, z.imag, lhs, rhs, ratio, pred, abs(ratio / pred - 1.0)]]


def _exponents(cfg):
    from . import exponents as X

    d, n = cfg["d"], cfg["n"]
    pair = X.FrostmanPair(cfg["s_mu"], cfg["s_nu"])
    pm = X.corollary_p_max(d, n, pair)
    region = X.corollary_pq_region(d, n, pair)
    opt = X.optimize_parameters(d, n, pair, cfg["grid_resolution"])
    payload = {"d": d, "n": n, "s_mu": pair.s_mu, "s_nu": pair.s_nu,
               "p_max": _q(pm, "exponents.corollary_p_max"),
               "region": _q(region, "exponents.corollary_pq_region"),
               "optimize": _q(opt, "exponents.optimize_parameters"),
               "optimize_agrees": opt.agrees(), "value": float(pm)}
    x = X.ExponentInput(d, n, cfg["s"], cfg["t"], cfg["alpha"])
    try:
        payload["theorem1"] = _q({"q0": X.q0(x), "p_max": X.p_max(x)}, "exponents.q0 / exponents.p_max")
    except PreconditionError as e:
        payload["theorem1"] = _q({"error": str(e)}, "exponents.q0")
    header = ["s_mu", "s_nu", "case", "p_sup", "q_sup"]
    rows = [[pair.s_mu, pair.s_nu, region.case_label, region.p_sup.to_json(), region.q_sup.to_json()]]
    return payload, header, rows


def _region(cfg):
    from . import exponents as X

    d, n = cfg["d"], cfg["n"]
    region = X.corollary_pq_region(d, n, X.FrostmanPair(cfg["s_mu"], cfg["s_nu"]))
    payload = {"region": _q(region, "exponents.corollary_pq_region"),
               "polygon": _q(region.polygon(cfg["resolution"]), "exponents.PQRegion.polygon"),
               "value": float(region.p_sup)}
    header = ["s_mu", "s_nu", "case", "p_sup", "q_sup"]
    return payload, header, [[cfg["s_mu"], cfg["s_nu"], region.case_label, region.p_sup.to_json(),
                              region.q_sup.to_json()]]


def _jump(cfg):
    from . import exponents as X

    d, n = cfg["d"], cfg["n"]
    data = X.jump_figure_data(d, n, cfg["resolution"])
    payload = {"polygon": _q(data["polygon"], "exponents.jump_figure_data"),
               "segment": _q(data["segment"], "exponents.jump_figure_data"),
               "value": len(data["table"])}
    header = ["s_mu", "s_nu", "case", "p_sup", "q_sup"]
    rows = []
    for r in data["table"]:
        if r["label"] == "feasible":
            reg = X.corollary_pq_region(d, n, X.FrostmanPair(r["s_mu"], r["s_nu"]))
            rows.append([r["s_mu"], r["s_nu"], reg.case_label, r["p_max"], reg.q_sup.to_json()])
        else:
            rows.append([r["s_mu"], r["s_nu"], "infeasible", 1.0, 1.0])
    return payload, header, rows


def _visibility(cfg):
    from . import exponents as X

    rep = X.visibility_thresholds(cfg["d"], cfg["m"])
    payload = {"report": _q(rep, "exponents.visibility_thresholds"), "value": rep.threshold_i}
    if cfg["dim_e"] is not None:
        val, boundary = rep.exceptional_bound(cfg["dim_e"])
        payload["exceptional_bound"] = _q({"dim_e": cfg["dim_e"], "value": val, "boundary": boundary},
                                          "exponents.ExceptionalBound")
    if cfg["measure"] is not None:
        from .projections import plane_coverage

        E = _mu(cfg)
        y = np.zeros(E.dim) if cfg["y"] is None else np.asarray(cfg["y"])
        cov = plane_coverage(E, y, cfg["m"], cfg["trials"], cfg["seed"], cfg["resolution_angle"])
        payload["coverage"] = _q(cov, "projections.plane_coverage")
    th2 = rep.threshold_ii if rep.threshold_ii is not None else "not applicable"
    return payload, ["d", "m", "threshold_i", "threshold_ii"], [[rep.d, rep.m, rep.threshold_i, th2]]


RUNNERS = {
    "energy": _energy, "amplitude": _amplitude, "project": _project, "mixed-norm": _mixed,
    "orponen-check": _orponen, "kaufman-check": _kaufman, "radial-average": _radial,
    "mu-z-identity": _muz, "exponents": _exponents, "region": _region, "jump-figure": _jump,
    "visibility": _visibility,
}


def _finish(cfg, kind, payload, header, rows, t0, write):
    h = cfg.hash()
    rec = ResultRecord(f"{kind}-{h[:12]}", h, version_string(), time.perf_counter() - t0,
                       _jsonable(payload), header, [_jsonable(r) for r in rows], cfg.to_dict())
    if write:
        rec.write(cfg["out"])
    return rec


def run(cfg: ExperimentConfig, write=True) -> ResultRecord:
    """Run one experiment and optionally write its JSON and CSV.

    For ``kind = scan`` the returned record is the scan summary; the
    per-point records are in its ``points`` attribute.
    """
    if cfg["kind"] == "scan":
        return _scan(cfg, write)
    t0 = time.perf_counter()
    with thread_scope(cfg["threads"]):
        payload, header, rows = RUNNERS[cfg["kind"]](cfg)
    return _finish(cfg, cfg["kind"], payload, header, rows, t0, write)


def scan(cfg: ExperimentConfig, write=True) -> List[ResultRecord]:
    """Run ``scan_kind`` over the ranged knob and return one record per value.

    A single CSV with one row per value is written.  Every point uses the
    same seed so neighbouring points share their random frames; depth
    scans also report successive ratios.
    """
    return _scan(cfg, write).points


def _scan(cfg, write):
    if cfg["kind"] != "scan" or cfg.ranged is None:
        raise ConfigError("kind", "a scan needs kind = scan and exactly one ranged knob")
    t0 = time.perf_counter()
    kind = cfg["scan_kind"]
    base = dict(cfg.values)
    base["kind"] = kind
    base["scan_kind"] = None
    records = []
    with thread_scope(cfg["threads"]):
        for v in cfg.range_values:
            point = ExperimentConfig(dict(base, **{cfg.ranged: v}))
            t1 = time.perf_counter()
            payload, header, rows = RUNNERS[kind](point)
            records.append(_finish(point, kind, payload, header, rows, t1, False))
    values = [r.payload["value"] for r in records]
    header = [cfg.ranged, "value"]
    rows = [[v, val] for v, val in zip(cfg.range_values, values)]
    if cfg.ranged == "depth":
        header.append("ratio")
        for i, r in enumerate(rows):
            r.append("" if i == 0 or not values[i - 1] else values[i] / values[i - 1])
    payload = {"knob": cfg.ranged, "scan_kind": kind, "values": values,
               "points": [_q(r.payload, f"harness.{kind}") for r in records]}
    rec = _finish(cfg, "scan", payload, header, rows, t0, write)
    rec.points = records
    return rec
