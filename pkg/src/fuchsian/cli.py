"""Scenario runner: every diagnostic as a subcommand writing a JSON report.

Usage::

    fuchsian fundamental --p 2 --d 3 --matrix identity --out run1
    fuchsian --config scenario.json

A config file is one JSON object with a ``version`` field; its entries take
precedence over command-line flags.  ``report.json`` holds ``inputs``,
``results``, ``checks`` and ``provenance`` and is byte-identical for identical
inputs; wall-clock data goes to ``metadata.json``.  Exit status is 0 when all
checks pass, 1 on a failed check or numeric failure, 2 on a config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .anisotropy import AnisotropyMatrix, anorm_inv
from .dilation import OperatorData, weak_fuchsian_probe
from .errors import FuchsianError, InvalidArgument, NumericError
from .fundamental import (FundamentalSolution, capacity_quadrature, flux_integral, hardy_constant,
                          hardy_inequality_check, indicial_roots, weighted_capacity)
from .morrey import Annulus, Ball, GridSpec, MorreyContext, fuchsian_check, morrey_estimate
from .planar import AnnularGrid2D, DiscreteField2D, harnack_ratio, kelvin_residual, minimize_dirichlet
from .potentials import Potential, bump_profile
from .radial import (RadialProblem, SolverSpec, closed_form_dirichlet, conservation_residual,
                     criticality_probe, ratio_limit, solve_radial_dirichlet)

__all__ = ["ScenarioConfig", "ConfigError", "parse_config", "emit_config", "run", "emit_series",
           "main", "SUBCOMMANDS"]

CONFIG_VERSION = 1

SUBCOMMANDS = ("fundamental", "morrey-norm", "fuchsian-check", "dilation-probe", "radial-solve",
               "ratio-limit", "criticality-probe", "solve2d", "harnack", "kelvin-check", "capacity",
               "hardy-check")


class ConfigError(Exception):
    """The scenario description is malformed or inconsistent."""


@dataclass
class ScenarioConfig:
    subcommand: str
    version: int = CONFIG_VERSION
    p: float | None = None
    d: int | None = None
    q: float | None = None
    matrix: Any = "identity"
    potential: dict = field(default_factory=lambda: {"kind": "zero"})
    domain: dict = field(default_factory=dict)
    ladder: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    out: str = "."
    seed: int = 0
    tol_scale: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict) or not data:
            raise ConfigError("config must be a non-empty JSON object")
        if "version" not in data:
            raise ConfigError("config is missing the 'version' field")
        if data["version"] != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {data['version']!r}")
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "subcommand" not in data:
            raise ConfigError("config is missing the 'subcommand' field")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.p is not None and not (isinstance(self.p, (int, float)) and self.p > 1):
            raise ConfigError("p must be a number greater than 1")
        if self.d is not None and not (isinstance(self.d, int) and self.d >= 2):
            raise ConfigError("d must be an integer >= 2")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not (isinstance(self.tol_scale, (int, float)) and self.tol_scale > 0):
            raise ConfigError("tol-scale must be positive")
        for key, val in self.tolerances.items():
            if not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {key!r} must be positive")
        for name in ("potential", "domain", "ladder", "tolerances", "options"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigError(f"{name} must be a JSON object")


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return ScenarioConfig.from_dict(data)


def emit_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"


# -- building blocks from the config -------------------------------------------


def _matrix(cfg: ScenarioConfig, d: int) -> AnisotropyMatrix:
    try:
        A = AnisotropyMatrix.from_spec(cfg.matrix, d)
    except (InvalidArgument, ValueError) as exc:
        raise ConfigError(f"bad matrix: {exc}") from None
    if A.dim != d:
        raise ConfigError("matrix dimension does not match d")
    return A


def _potential(spec: dict, d: int, p: float, matrix: AnisotropyMatrix | None = None) -> Potential:
    m = None if matrix is None or matrix.is_identity() else matrix
    kind = spec.get("kind", "zero")
    try:
        if kind == "zero":
            return Potential.zero(d)
        if kind == "hardy":
            return Potential.hardy(d, p, float(spec["lambda"]), matrix=m)
        if kind == "power_law":
            return Potential.power_law(d, float(spec["coeff"]), float(spec["exponent"]), matrix=m)
        if kind == "constant":
            return Potential.constant(d, float(spec["value"]))
        if kind == "annulus_bump":
            return Potential.annulus_bump(d, spec["centers"], spec["widths"], spec["amplitudes"],
                                          spec.get("shape", "smooth"), matrix=m)
    except KeyError as exc:
        raise ConfigError(f"potential {kind!r} needs parameter {exc}") from None
    raise ConfigError(f"unknown potential kind {kind!r}")


def _ladder(spec: dict, default: tuple[float, float, int]) -> list[float]:
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    start = float(spec.get("start", default[0]))
    factor = float(spec.get("factor", default[1]))
    count = int(spec.get("count", default[2]))
    if start <= 0 or factor <= 0 or count < 1:
        raise ConfigError("ladder needs positive start and factor and count >= 1")
    return [start * factor**n for n in range(count)]


def _need(cfg: ScenarioConfig, default_p: float, default_d: int) -> tuple[float, int]:
    return float(cfg.p if cfg.p is not None else default_p), int(cfg.d if cfg.d is not None else default_d)


class _Report:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.results: dict = {}
        self.checks: list = []
        self.provenance: list = []
        self.series: dict = {}

    def tol(self, name: str, default: float) -> float:
        return float(self.cfg.tolerances.get(name, default)) * float(self.cfg.tol_scale)

    def check(self, name: str, value, reference=None, tolerance=None, passed=None, mode="abs"):
        if passed is None:
            if mode == "abs":
                passed = abs(value - reference) <= tolerance
            elif mode == "rel":
                passed = abs(value - reference) <= tolerance * abs(reference)
            elif mode == "le":
                passed = value <= tolerance
            elif mode == "ge":
                passed = value >= tolerance
        self.checks.append({"name": name, "value": value, "reference": reference,
                            "tolerance": tolerance, "passed": bool(passed)})

    def cite(self, quantity: str, reference, source: str):
        self.provenance.append({"quantity": quantity, "reference": reference, "source": source})

    def to_dict(self) -> dict:
        return {"inputs": self.cfg.to_dict(), "results": self.results, "checks": self.checks,
                "provenance": self.provenance,
                "status": "pass" if all(c["passed"] for c in self.checks) else "fail"}


# -- scenarios ----------------------------------------------------------------


def _fundamental(cfg, rep):
    p, d = _need(cfg, 2, 3)
    A = _matrix(cfg, d)
    fs = FundamentalSolution.create(p, d, A)
    radii = [float(r) for r in cfg.domain.get("radii", [0.25, 1.0, 4.0])]
    tol = rep.tol("flux", 1e-6)
    table = []
    for r in radii:
        val = flux_integral(fs, r)
        table.append({"r": r, "flux": val})
        rep.check(f"flux_r={r:g}", val, -1.0, tol)
    rep.cite("flux", -1.0, "divergence theorem applied to the flux field of mu")
    m_half, m_two = float(fs.radial(0.5)), float(fs.radial(2.0))
    rep.results.update({"constant": fs.constant, "form": fs.form, "alpha": fs.alpha, "flux": table,
                        "sign": {"mu(0.5)": m_half, "mu(2)": m_two, "decreasing": m_two < m_half}})
    rep.check("mu_decreasing_in_rho", m_two < m_half, passed=m_two < m_half)
    if d == 3 and p == 2 and A.is_identity():
        rep.check("constant", fs.constant, 1 / (4 * math.pi), rep.tol("constant", 1e-14), mode="rel")
        rep.cite("constant", 1 / (4 * math.pi), "Newtonian kernel in three dimensions")


def _grid_spec(cfg) -> GridSpec:
    keys = {f.name for f in fields(GridSpec)}
    return GridSpec(**{k: v for k, v in cfg.options.get("grid", {}).items() if k in keys})


def _morrey_norm(cfg, rep):
    p, d = _need(cfg, 2, 3)
    A = _matrix(cfg, d)
    ctx = MorreyContext.create(p, d, cfg.q)
    V = _potential(cfg.potential or {"kind": "constant", "value": 1.0}, d, p, A)
    kind = cfg.domain.get("kind", "ball")
    if kind == "ball":
        window = Ball(d, float(cfg.domain.get("radius", 1.0)), tuple(cfg.domain.get("center", [0.0] * d)))
    elif kind == "annulus":
        window = Annulus(A, float(cfg.domain.get("R", 1.0)))
    else:
        raise ConfigError(f"unknown domain kind {kind!r}")
    est = morrey_estimate(ctx, V, window, _grid_spec(cfg))
    rep.results.update({"value": est.value, "center": list(np.atleast_1d(est.center).tolist()),
                        "radius": est.radius, "levels": est.levels, "converged": est.converged,
                        "q": ctx.q_eff, "regime": ctx.regime})
    rep.check("refinement_converged", est.converged, passed=est.converged)


def _fuchsian_check(cfg, rep):
    p, d = _need(cfg, 2, 3)
    A = _matrix(cfg, d)
    ctx = MorreyContext.create(p, d, cfg.q)
    V = _potential(cfg.potential or {"kind": "hardy", "lambda": 0.1}, d, p, A)
    zeta = cfg.options.get("zeta", "origin")
    radii = _ladder(cfg.ladder, (1.0, 0.5 if zeta == "origin" else 2.0, 6))
    factor = float(cfg.options.get("stability_factor", 10.0))
    res = fuchsian_check(ctx, V, zeta, radii, stability_factor=factor, grid=_grid_spec(cfg))
    rep.results.update(res.to_dict())
    expect = cfg.options.get("expect", True)
    rep.check("is_fuchsian", res.is_fuchsian, expect, passed=res.is_fuchsian == expect)


def _dilation_probe(cfg, rep):
    p, d = _need(cfg, 2, 3)
    A = _matrix(cfg, d)
    V = _potential(cfg.potential or {"kind": "power_law", "coeff": 1.0, "exponent": -1.0}, d, p, A)
    ladders = cfg.ladder.get("stages") or [cfg.ladder or {}]
    R_ladders = [_ladder(s, (1.0, 0.5, 16)) for s in ladders]
    data = OperatorData(p, d, A, V, cfg.options.get("zeta", "origin"))
    thresholds = {k: float(cfg.options[k]) for k in ("vanish_tol", "fixed_tol", "growth_limit")
                  if k in cfg.options}
    res = weak_fuchsian_probe(data, R_ladders, Annulus(A, 1.0), grid=_grid_spec(cfg), **thresholds)
    rep.results.update(res.to_dict())
    expect = cfg.options.get("expect")
    rep.check("weak_fuchsian", res.weak_fuchsian, expect,
              passed=True if expect is None else res.weak_fuchsian == expect)


def _radial_problem(cfg, p, d):
    A = _matrix(cfg, d)
    V = _potential(cfg.potential, d, p)
    dom = cfg.domain
    return RadialProblem(p, d, V, float(dom.get("inner", 0.5)), float(dom.get("outer", 2.0)),
                         float(dom.get("bc_inner", 1.0)), float(dom.get("bc_outer", 0.0)), A)


def _radial_solve(cfg, rep):
    p, d = _need(cfg, 2, 3)
    prob = _radial_problem(cfg, p, d)
    spec = SolverSpec(cells=int(cfg.options.get("cells", 2048)))
    sol = solve_radial_dirichlet(prob, spec)
    cons = conservation_residual(sol)
    rep.results.update({"cells": spec.cells, "u_inner": float(sol.values[0]),
                        "u_outer": float(sol.values[-1]), "flux_inner": float(sol.flux[0]),
                        "conservation_residual": float(np.max(np.abs(cons))), "info": sol.info})
    rep.check("bc_outer", float(sol.values[-1]), prob.bc_outer, rep.tol("bc", 1e-8))
    if prob.potential.is_zero:
        exact = closed_form_dirichlet(p, d, prob.inner, prob.outer, prob.bc_inner, prob.bc_outer)
        err = float(np.max(np.abs(sol.values - exact(sol.grid))))
        rep.results["closed_form_error"] = err
        rep.check("closed_form_error", err, 0.0, rep.tol("closed_form", 1e-6), mode="le")
        rep.cite("closed_form", "a + b mu", "potential-free radial solutions are affine in mu")
    rep.series = sol.as_series()


def _profile_function(spec: dict, p: float, d: int, A):
    kind = spec.get("kind", "affine_mu")
    if kind == "affine_mu":
        fs = FundamentalSolution.create(p, d, A)
        a, b = float(spec.get("a", 0.0)), float(spec.get("b", 1.0))
        return lambda r: a + b * float(fs.radial(r))
    if kind == "power":
        if "gamma" in spec:
            g = float(spec["gamma"])
        else:
            roots = indicial_roots(p, d, float(spec["lambda"])).roots
            if not roots:
                raise ConfigError("no real indicial roots for this lambda")
            g = roots[int(spec.get("root", 0))]
        return lambda r: float(r) ** g
    raise ConfigError(f"unknown profile kind {kind!r}")


def _ratio_limit(cfg, rep):
    p, d = _need(cfg, 2, 3)
    A = _matrix(cfg, d)
    u = _profile_function(cfg.options.get("u", {"kind": "affine_mu", "a": 1.0, "b": 1.0}), p, d, A)
    v = _profile_function(cfg.options.get("v", {"kind": "affine_mu", "a": 0.0, "b": 1.0}), p, d, A)
    zeta = cfg.options.get("zeta", "origin")
    ladder = _ladder(cfg.ladder, (1.0, 0.5 if zeta == "origin" else 2.0, 24))
    diag = ratio_limit(u, v, ladder, zeta, rtol=rep.tol("ratio", 1e-3))
    rep.results.update(diag.to_dict())
    rep.series = {"R": diag.radii, "m_r": diag.m_seq, "M_r": diag.M_seq}
    expect = cfg.options.get("expect")
    rep.check("regular", diag.regular, expect, passed=True if expect is None else diag.regular == expect)


def _criticality_probe(cfg, rep):
    p, d = _need(cfg, 2, 2)
    A = _matrix(cfg, d)
    ks = _ladder(cfg.ladder, (2.0**6, 2.0, 7))
    res = criticality_probe(p, d, A, ks, float(cfg.options.get("probe", 2.0)))
    rep.results.update(res.to_dict())
    rep.check("closed_form_error", res.max_closed_form_error, 0.0, rep.tol("closed_form", 1e-6), mode="le")
    rep.check("extrapolated_limit", res.extrapolated, res.limit, rep.tol("limit", 1e-4))
    rep.check("monotone_approach", res.monotone, passed=res.monotone)
    rep.check("critical_iff_p_ge_d", res.critical, p >= d, passed=res.critical == (p >= d))
    rep.cite("limit", res.limit, "1 when p >= d, mu(probe)/mu(1) when p < d")


def _bc_function(spec: dict, p: float, A: AnisotropyMatrix):
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return (float(spec.get("inner", 1.0)), float(spec.get("outer", 0.0)))
    if kind == "affine_mu":
        fs = FundamentalSolution.create(p, 2, A)
        a, b = float(spec.get("a", 0.0)), float(spec.get("b", 1.0))
        return lambda x: a + b * fs.radial(anorm_inv(A, x))
    if kind == "fourier":
        def make(coef):
            c0, c1, s1 = (list(coef) + [0.0, 0.0, 0.0])[:3]
            return lambda x: c0 + c1 * np.cos(np.arctan2(x[:, 1], x[:, 0])) + s1 * np.sin(
                np.arctan2(x[:, 1], x[:, 0]))
        return (make(spec.get("inner", [2.0, 0.0, 1.0])), make(spec.get("outer", [1.0, 0.5, 0.0])))
    raise ConfigError(f"unknown boundary data kind {kind!r}")


def _solve2d_field(cfg, rep, defaults):
    p, d = _need(cfg, 2, 2)
    if d != 2:
        raise ConfigError("planar solves need d = 2")
    A = _matrix(cfg, 2)
    V = _potential(cfg.potential, 2, p, A)
    dom = cfg.domain
    grid = AnnularGrid2D(A, float(dom.get("inner", defaults[0])), float(dom.get("outer", defaults[1])),
                         float(dom.get("h", defaults[2])))
    bc = _bc_function(cfg.options.get("dirichlet", {"kind": "fourier"}), p, A)
    field_ = minimize_dirichlet(grid, p, V, bc)
    trace = field_.energy_trace
    mono = all(b <= a for a, b in zip(trace[:-1], trace[1:]))
    rep.results.update({"grid": grid.describe(), "energy": field_.info["energy"],
                        "energy_trace": trace, "residual": field_.residual,
                        "iterations": field_.iterations})
    rep.check("el_residual", field_.residual, 0.0, rep.tol("residual", 1e-8), mode="le")
    rep.check("energy_nonincreasing", mono, passed=mono)
    rep.series = {"x": field_.grid.points[:, 0].tolist(), "y": field_.grid.points[:, 1].tolist(),
                  "u": field_.values.tolist()}
    return field_


def _solve2d(cfg, rep):
    _solve2d_field(cfg, rep, (0.5, 2.0, 1 / 32))


def _harnack(cfg, rep):
    p, _ = _need(cfg, 3, 2)
    if not cfg.potential or cfg.potential.get("kind") == "zero":
        cfg.potential = {"kind": "hardy", "lambda": hardy_constant(p, 2) / 2}
    f = _solve2d_field(cfg, rep, (1 / 16, 2.0, 1 / 32))
    rungs = harnack_ratio(f, _ladder(cfg.ladder, (0.25, 2.0, 3)))
    ratios = [r.ratio for r in rungs]
    spread = max(ratios) / min(ratios)
    rep.results["rungs"] = [r.__dict__ for r in rungs]
    rep.results["spread"] = spread
    rep.check("ratio_spread", spread, None, float(cfg.options.get("stability_factor", 2.0)), mode="le")


def _kelvin_check(cfg, rep):
    p, _ = _need(cfg, 2, 2)
    A = _matrix(cfg, 2) if cfg.matrix != "identity" else AnisotropyMatrix.diagonal([4.0, 1.0])
    inner, outer = float(cfg.domain.get("inner", 0.8)), float(cfg.domain.get("outer", 1.25))
    hs = [float(h) for h in cfg.domain.get("h", [1 / 32, 1 / 64, 1 / 128])]
    fs = FundamentalSolution.create(p, 2, A)
    res = []
    for h in hs:
        g = AnnularGrid2D(A, inner, outer, h)
        u = DiscreteField2D(g, fs.radial(g.rho) / fs.constant if p == 2 else fs.radial(g.rho))
        res.append(kelvin_residual(p, A, u))
    orders = [math.log2(a / b) for a, b in zip(res[:-1], res[1:])]
    rep.results.update({"h": hs, "residuals": res, "orders": orders})
    rep.check("observed_order", min(orders), None, float(cfg.options.get("min_order", 0.9)), mode="ge")


def _capacity(cfg, rep):
    p, d = _need(cfg, 3, 2)
    A = _matrix(cfg, d)
    beta = cfg.options.get("beta")
    r, R = float(cfg.domain.get("r", 0.1)), float(cfg.domain.get("R", 1.0))
    closed = weighted_capacity(p, d, beta, r, R, A)
    quad = capacity_quadrature(p, d, beta, r, R, A)
    rep.results.update({"closed_form": closed, "quadrature": quad, "beta": beta if beta is not None else 2 * (p - d)})
    rep.check("closed_vs_quadrature", quad, closed, rep.tol("capacity", 1e-4), mode="rel")


def _hardy_check(cfg, rep):
    p, d = _need(cfg, 2, 3)
    rng = np.random.default_rng(cfg.seed)
    count = int(cfg.options.get("count", 20))
    rows = []
    for i in range(count):
        c = float(rng.uniform(0.2, 0.8))
        w = float(rng.uniform(0.05, min(c, 1 - c)))
        amp = float(rng.uniform(0.5, 2.0))
        lhs, rhs = hardy_inequality_check(p, d, profile=lambda t: amp * float(bump_profile((t - c) / w)),
                                          support=(max(c - w, 0.0), c + w))
        rows.append({"center": c, "width": w, "amplitude": amp, "lhs": lhs, "rhs": rhs})
        rep.check(f"bump_{i}", lhs - rhs, None, 0.0, mode="ge")
    rep.results["bumps"] = rows
    rep.cite("hardy_constant", ((d - p) / p) ** p, "optimal Hardy constant ((d-p)/p)^p")


_RUNNERS = {
    "fundamental": _fundamental, "morrey-norm": _morrey_norm, "fuchsian-check": _fuchsian_check,
    "dilation-probe": _dilation_probe, "radial-solve": _radial_solve, "ratio-limit": _ratio_limit,
    "criticality-probe": _criticality_probe, "solve2d": _solve2d, "harnack": _harnack,
    "kelvin-check": _kelvin_check, "capacity": _capacity, "hardy-check": _hardy_check,
}


# -- output -------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Potential):
        return obj.describe()
    return repr(obj)


def emit_series(series: dict, path) -> Path:
    """Write columns of equal length as CSV with 17 significant digits."""
    path = Path(path)
    cols = list(series)
    if not cols:
        raise InvalidArgument("report has no series data")
    n = len(series[cols[0]])
    if any(len(series[c]) != n for c in cols):
        raise InvalidArgument("series columns differ in length")
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for i in range(n):
                w.writerow(["%.17g" % float(series[c][i]) for c in cols])
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
    return path


def run(cfg: ScenarioConfig) -> tuple[int, dict]:
    """Execute the scenario, write report.json (and series.csv), return (status, report)."""
    cfg.validate()
    rep = _Report(cfg)
    status = 0
    try:
        _RUNNERS[cfg.subcommand](cfg, rep)
    except NumericError as exc:
        rep.check(f"numeric:{type(exc).__name__}", str(exc), passed=False)
        status = 1
    except (InvalidArgument, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    report = _jsonable(rep.to_dict())
    if report["status"] != "pass":
        status = 1
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    meta = {"created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "version": __version__,
            "python": platform.python_version(), "seed": cfg.seed}
    (out / "metadata.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    if rep.series:
        emit_series(rep.series, out / "series.csv")
    return status, report


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fuchsian", description=__doc__.split("\n")[0])
    ap.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON scenario; its fields override flags")
    ap.add_argument("--out", help="output directory (default .)")
    ap.add_argument("--seed", type=int, help="seed for randomized suites (default 0)")
    ap.add_argument("--tol-scale", type=float, help="multiply every tolerance")
    ap.add_argument("--p", type=float)
    ap.add_argument("--d", type=int)
    ap.add_argument("--q", type=float)
    ap.add_argument("--matrix", help="'identity', a diagonal 'a,b,...' or a row-major full list")
    ap.add_argument("--potential", choices=("zero", "hardy", "power_law", "constant", "annulus_bump"))
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--coeff", type=float)
    ap.add_argument("--exponent", type=float)
    ap.add_argument("--value", type=float)
    ap.add_argument("--centers", type=_floats)
    ap.add_argument("--widths", type=_floats)
    ap.add_argument("--amplitudes", type=_floats)
    ap.add_argument("--zeta", choices=("origin", "infinity"))
    ap.add_argument("--inner", type=float)
    ap.add_argument("--outer", type=float)
    ap.add_argument("--h", type=float)
    ap.add_argument("--radii", type=_floats)
    ap.add_argument("--bc-inner", type=float)
    ap.add_argument("--bc-outer", type=float)
    ap.add_argument("--cells", type=int)
    ap.add_argument("--beta", type=float)
    ap.add_argument("--r", type=float)
    ap.add_argument("--R", type=float)
    ap.add_argument("--ladder-start", type=float)
    ap.add_argument("--ladder-factor", type=float)
    ap.add_argument("--ladder-count", type=int)
    ap.add_argument("--count", type=int)
    ap.add_argument("--expect", choices=("true", "false"))
    return ap


def _config_from_args(args) -> dict:
    data: dict = {"version": CONFIG_VERSION}
    if args.subcommand:
        data["subcommand"] = args.subcommand
    for key in ("p", "d", "q", "seed", "out"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.tol_scale is not None:
        data["tol_scale"] = args.tol_scale
    if args.matrix is not None:
        if args.matrix == "identity":
            data["matrix"] = "identity"
        else:
            try:
                data["matrix"] = json.loads(args.matrix) if args.matrix.strip().startswith("[") \
                    else _floats(args.matrix)
            except ValueError:
                raise ConfigError(f"cannot read matrix {args.matrix!r}") from None
    if args.potential is not None:
        pot = {"kind": args.potential}
        for flag, key in (("lam", "lambda"), ("coeff", "coeff"), ("exponent", "exponent"),
                          ("value", "value"), ("centers", "centers"), ("widths", "widths"),
                          ("amplitudes", "amplitudes")):
            if getattr(args, flag) is not None:
                pot[key] = getattr(args, flag)
        data["potential"] = pot
    dom = {}
    for flag, key in (("inner", "inner"), ("outer", "outer"), ("h", "h"), ("radii", "radii"),
                      ("bc_inner", "bc_inner"), ("bc_outer", "bc_outer"), ("r", "r"), ("R", "R")):
        if getattr(args, flag) is not None:
            dom[key] = getattr(args, flag)
    if dom:
        data["domain"] = dom
    lad = {}
    for flag, key in (("ladder_start", "start"), ("ladder_factor", "factor"), ("ladder_count", "count")):
        if getattr(args, flag) is not None:
            lad[key] = getattr(args, flag)
    if lad:
        data["ladder"] = lad
    opts = {}
    if args.zeta is not None:
        opts["zeta"] = args.zeta
    if args.cells is not None:
        opts["cells"] = args.cells
    if args.beta is not None:
        opts["beta"] = args.beta
    if args.count is not None:
        opts["count"] = args.count
    if args.expect is not None:
        opts["expect"] = args.expect == "true"
    if opts:
        data["options"] = opts
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = _config_from_args(args)
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            parsed = parse_config(text).to_dict()
            raw = json.loads(text)
            # fields present in the file win over flags
            data.update({k: parsed[k] for k in raw})
        cfg = ScenarioConfig.from_dict(data)
        status, report = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
    failing = [c["name"] for c in report["checks"] if not c["passed"]]
    if failing:
        print(f"failed: {', '.join(failing)}", file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
