"""End-to-end experiments driven by flat ``key = value`` configuration files.

Each experiment writes ``<out>/<experiment>/*.csv`` and ``summary.json``.
Numeric failures are recorded per run and never abort the remaining runs.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import criteria, spectral
from .errors import ModelSchattenError, ParameterError
from .inner import InnerFunction, counterexample_inner, counterexample_zero
from .level import level_boundary
from .rng import LCG64
from .symbols import Symbol, pullback_measure
from .whitney import build_whitney, validate_whitney

EXPERIMENTS = ("pw-corner", "counterexample53", "hs-crosscheck", "whitney-report")


# ----------------------------------------------------------------------
# configuration
def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _complexes(text: str) -> list[complex]:
    return [complex(x.strip().replace(" ", "")) for x in text.replace(";", ",").split(",")
            if x.strip()]


def _flag(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_THETA_KEYS = {"theta.kind": str, "theta.n": int, "theta.zeros": _complexes,
               "theta.weight": float, "theta.degree": int, "theta.n_zeros": int}
_PHI_KEYS = {"phi.kind": str, "phi.c": float, "phi.center": complex, "phi.radius": float,
             "phi.zeros": _complexes, "phi.constant": complex, "phi.alpha": float}

SCHEMAS = {
    "pw-corner": {"run.alpha": float, "run.p_list": _floats, "run.shells": int,
                  "run.radii": _floats, "run.tol": float},
    "counterexample53": {"run.n_max": int, "run.shells": int, "run.n_zeros": int,
                         "run.block": int, "run.tol": float},
    "hs-crosscheck": {**_THETA_KEYS, **_PHI_KEYS, "run.tol": float, "run.shells": int},
    "whitney-report": {**_THETA_KEYS, **_PHI_KEYS, "run.delta": float, "run.gamma": float,
                       "run.max_depth": int, "run.p_list": _floats, "run.shells": int,
                       "run.nodes": int, "run.adaptive": _flag, "run.resolution": float,
                       "run.tol": float},
}

DEFAULTS = {
    "pw-corner": {"run.alpha": 0.5, "run.p_list": [1.0, 3.0], "run.shells": 20,
                  "run.radii": [0.9, 0.99, 0.999], "run.tol": 1e-6},
    "counterexample53": {"run.n_max": 8, "run.shells": 20, "run.n_zeros": 30, "run.block": 2,
                         "run.tol": 1e-6},
    "hs-crosscheck": {"theta.kind": "monomial", "theta.n": 2, "phi.kind": "scaling",
                      "phi.c": 0.5, "run.tol": 1e-10, "run.shells": 24},
    "whitney-report": {"theta.kind": "monomial", "theta.n": 1, "phi.kind": "identity",
                       "run.delta": 2.0, "run.gamma": 0.5, "run.max_depth": 16,
                       "run.p_list": [2.0], "run.shells": 20, "run.nodes": 4096,
                       "run.adaptive": True, "run.resolution": 1e-3, "run.tol": 1e-6},
}


def read_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines (``#`` comments) into a raw string map."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), delimiters=("=",))
    cp.optionxform = str
    cp.read_string("[config]\n" + text)
    return dict(cp["config"])


@dataclass
class ExperimentConfig:
    """Validated parameters of one experiment."""

    experiment: str
    params: dict = field(default_factory=dict)

    @classmethod
    def build(cls, experiment: str, raw: dict | None = None, tol: float | None = None):
        if experiment not in SCHEMAS:
            raise ParameterError(f"unknown experiment {experiment!r}")
        schema = SCHEMAS[experiment]
        params = dict(DEFAULTS[experiment])
        for key, value in (raw or {}).items():
            if key == "experiment":
                if value != experiment:
                    raise ParameterError(f"config is for {value!r}, not {experiment!r}")
                continue
            if key not in schema:
                raise ParameterError(f"unknown key {key!r} for {experiment}")
            try:
                params[key] = schema[key](value) if isinstance(value, str) else value
            except ValueError as exc:
                raise ParameterError(f"bad value for {key}: {exc}") from None
        if tol is not None:
            params["run.tol"] = float(tol)
        cfg = cls(experiment, params)
        cfg.validate()
        return cfg

    def validate(self):
        p = self.params
        if "run.alpha" in p and not 0 < p["run.alpha"] < 1:
            raise ParameterError("run.alpha must lie in (0, 1)")
        if "run.p_list" in p and (not p["run.p_list"] or min(p["run.p_list"]) <= 0):
            raise ParameterError("run.p_list needs positive values")
        if "run.shells" in p and p["run.shells"] < 1:
            raise ParameterError("run.shells must be positive")
        if self.experiment == "counterexample53":
            if not 3 <= p["run.n_max"] <= 10:
                raise ParameterError("run.n_max must lie in 3..10")
            if p["run.block"] < 1:
                raise ParameterError("run.block must be positive")
        if "run.delta" in p and not p["run.delta"] > 1:
            raise ParameterError("run.delta must exceed 1")

    def get(self, key, default=None):
        return self.params.get(key, default)


def theta_from_config(cfg: ExperimentConfig, seed: int = 0) -> InnerFunction:
    kind = cfg.get("theta.kind")
    if kind == "monomial":
        return InnerFunction.monomial(int(cfg.get("theta.n", 1)))
    if kind == "blaschke":
        return InnerFunction.blaschke(cfg.get("theta.zeros", []))
    if kind == "paley_wiener":
        return InnerFunction.paley_wiener(cfg.get("theta.weight", 1.0))
    if kind == "counterexample":
        return counterexample_inner(cfg.get("theta.n_zeros", 30))
    if kind == "random_blaschke":
        return InnerFunction.blaschke(LCG64(seed).blaschke_zeros(cfg.get("theta.degree", 3)))
    raise ParameterError(f"unknown theta.kind {kind!r}")


def phi_from_config(cfg: ExperimentConfig) -> Symbol:
    kind = cfg.get("phi.kind")
    if kind == "identity":
        return Symbol.identity()
    if kind == "scaling":
        return Symbol.scaling(cfg.get("phi.c", 0.5))
    if kind == "affine":
        return Symbol.affine_disk(cfg.get("phi.center", 0.0), cfg.get("phi.radius", 0.5))
    if kind == "blaschke":
        return Symbol.finite_blaschke(cfg.get("phi.zeros", []), cfg.get("phi.constant", 1.0))
    if kind == "sector":
        return Symbol.sector_map(cfg.get("phi.alpha", 0.5))
    if kind == "corner":
        return Symbol.corner_model(cfg.get("phi.alpha", 0.5))
    raise ParameterError(f"unknown phi.kind {kind!r}")


# ----------------------------------------------------------------------
# output helpers
def _fmt(x) -> str:
    return "inf" if isinstance(x, float) and math.isinf(x) else repr(x)


def _pname(p: float) -> str:
    return f"{p:g}".replace(".", "_")


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, float) and (math.isinf(x) or math.isnan(x)):
        return str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(x.item())
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


class Output:
    """Collects files and run records of one experiment."""

    def __init__(self, root: Path | None, experiment: str):
        self.dir = None if root is None else Path(root) / experiment
        self.files: dict[str, str] = {}
        self.runs: list[dict] = []

    def write(self, name: str, text: str):
        self.files[name] = text
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
            (self.dir / name).write_text(text)

    def run(self, name: str, fn):
        """Call ``fn()``; record success or the error, never raise numeric failures."""
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                result = fn()
            rec = {"run": name, "status": "ok",
                   "warnings": sorted({str(w.message) for w in caught})}
        except (ModelSchattenError, ArithmeticError, ValueError) as exc:
            result = None
            rec = {"run": name, "status": "error", "error": f"{type(exc).__name__}: {exc}"}
        self.runs.append(rec)
        return result

    @property
    def completed(self) -> bool:
        return all(r["status"] == "ok" for r in self.runs)

    def finish(self, cfg: ExperimentConfig, results: dict) -> dict:
        summary = {"experiment": cfg.experiment, "params": cfg.params, "runs": self.runs,
                   "completed": self.completed, "results": results}
        self.write("summary.json", json.dumps(_jsonable(summary), sort_keys=True, indent=2) + "\n")
        return summary


# ----------------------------------------------------------------------
# experiments
def _report_row(rep: criteria.ShellReport, **extra):
    row = dict(extra)
    row.update({"verdict": rep.verdict, "value_or_inf": rep.value_or_inf,
                "ratios": rep.statistic.get("ratios", [])})
    return row


def cmd_pw_corner(cfg: ExperimentConfig, out: Path | None = None, seed: int = 0) -> dict:
    """Hardy test on the corner model and model-space test on the sector map, per p."""
    alpha = cfg.get("run.alpha")
    shells = cfg.get("run.shells")
    tol = cfg.get("run.tol")
    o = Output(out, cfg.experiment)
    pw = InnerFunction.paley_wiener()
    sector = Symbol.sector_map(alpha)
    corner = Symbol.corner_model(alpha)
    rows = []
    for p in cfg.get("run.p_list"):
        tag = _pname(p)
        rep = o.run(f"hardy p={p:g}", lambda: criteria.integral_schatten_hardy(corner, p, shells, tol))
        if rep is not None:
            o.write(f"hardy_corner_p{tag}.csv", rep.to_csv())
            rows.append(_report_row(rep, test="hardy-corner", p=p))
        rep = o.run(f"modelspace p={p:g}",
                    lambda: criteria.integral_schatten_modelspace(pw, None, sector, p, shells,
                                                                  tol=tol))
        if rep is not None:
            o.write(f"modelspace_sector_p{tag}.csv", rep.to_csv())
            rows.append(_report_row(rep, test="modelspace-sector", p=p))
    o.write("verdicts.csv", _table(["test", "p", "verdict", "value_or_inf"],
                                   [[r["test"], r["p"], r["verdict"], r["value_or_inf"]] for r in rows]))
    comp = {}
    # corner model on H2; the sector map touches the circle along an arc, so it is
    # compared on the model space of the Paley-Wiener function instead
    for name, theta, sym in (("sector_modelspace", pw, sector), ("corner_hardy", None, corner)):
        vals = o.run(f"compactness {name}",
                     lambda: criteria.compactness_ratio(theta, sym, cfg.get("run.radii")))
        if vals is not None:
            comp[name] = vals
            o.write(f"compactness_{name}.csv", _table(["r", "ratio"], [list(v) for v in vals]))
    p_star = 2 * alpha / (1 - alpha)
    return o.finish(cfg, {"p_star": p_star, "verdicts": rows, "compactness": comp})


def fit_inverse_n(ns, ts):
    """``c0 = min n t_n``, the least-squares ``c`` in ``t_n ~ c/n`` and the log-log slope."""
    ns = np.asarray(ns, dtype=float)
    ts = np.asarray(ts, dtype=float)
    c0 = float(np.min(ns * ts))
    c = float(np.sum(ts / ns) / np.sum(1.0 / ns**2))
    slope = float(np.polyfit(np.log(ns), np.log(ts), 1)[0]) if ns.size > 1 else math.nan
    return c0, c, slope


def cmd_counterexample53(cfg: ExperimentConfig, out: Path | None = None, seed: int = 0) -> dict:
    """Kernel terms ``t_n`` along the zero sequence and the one-component integral."""
    n_max = cfg.get("run.n_max")
    o = Output(out, cfg.experiment)
    phi = Symbol.affine_disk(0.5, 0.5)
    rows = []
    for n in range(1, n_max + 1):
        d, ang = counterexample_zero(n)
        z = (1.0 - d) * complex(math.cos(ang), math.sin(ang))
        t = o.run(f"t_{n}", lambda: spectral.kernel_term(z, phi, delta=d))
        if t is None:
            warnings.warn(f"kernel term for n={n} dropped", RuntimeWarning, stacklevel=2)
            continue
        # closed form for phi = (1+z)/2: t_n = (1 - |z_n|)/(1 - Re z_n)
        exact = d / (d + (1.0 - d) * 2.0 * math.sin(0.5 * ang) ** 2)
        rows.append([n, d, ang, t, exact, n * t])
    o.write("kernel_terms.csv", _table(["n", "one_minus_abs_z", "arg_z", "t_n", "t_n_closed_form",
                                        "n_t_n"], rows))
    sel = [r for r in rows if r[0] >= 3]
    fit = {}
    if sel:
        c0, c, slope = fit_inverse_n([r[0] for r in sel], [r[3] for r in sel])
        fit = {"c0": c0, "c": c, "loglog_slope": slope,
               "bounded_below": c0 > 0 and slope >= -1.0 - 0.05}
    f = counterexample_inner(cfg.get("run.n_zeros"), exact=True)
    rep = o.run("onecomp-integral",
                lambda: criteria.hs_lower(f, phi, cfg.get("run.shells"), cfg.get("run.tol")))
    integral = {}
    if rep is not None:
        rep = rep.reblocked(cfg.get("run.block"))
        o.write("onecomp_integral.csv", rep.to_csv())
        integral = {"verdict": rep.verdict, "value_or_inf": rep.value_or_inf,
                    "ratios": rep.statistic.get("ratios", []), "block": rep.block}
    conclusion = {"series_terms_bounded_below": bool(fit.get("bounded_below", False)),
                  "integral_converging": integral.get("verdict") == "converging"}
    return o.finish(cfg, {"fit": fit, "integral": integral, "conclusion": conclusion})


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def cmd_hs_crosscheck(cfg: ExperimentConfig, out: Path | None = None, seed: int = 0) -> dict:
    """Spectral, pullback and Stanton routes to the HS norm, and the two HS bounds."""
    o = Output(out, cfg.experiment)
    f = theta_from_config(cfg, seed)
    s = phi_from_config(cfg)
    if not f.is_finite_blaschke:
        raise ParameterError("hs-crosscheck needs a finite Blaschke theta")
    tol = cfg.get("run.tol")
    routes = {}
    sv = o.run("spectral", lambda: spectral.compop_gram(f, s, tol=tol))
    if sv is not None:
        routes["spectral"] = spectral.schatten_norm(sv, 2) ** 2
        o.write("spectrum.csv", sv.to_csv())
    v = o.run("pullback", lambda: spectral.hs_pullback(f, s, tol=tol))
    if v is not None:
        routes["pullback"] = v
    v = o.run("stanton", lambda: criteria.hs_stanton(f, s, shells=cfg.get("run.shells")))
    if v is not None:
        routes["stanton"] = v
    o.write("hs_routes.csv", _table(["route", "value"], [[k, routes[k]] for k in sorted(routes)]))
    names = sorted(routes)
    agree = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if math.isinf(routes[a]) or math.isinf(routes[b]):
                agree.append([a, b, math.nan, "skipped"])
            else:
                e = _rel(routes[a], routes[b])
                agree.append([a, b, e, "yes" if e <= 1e-4 else "no"])
    o.write("hs_agreement.csv", _table(["route_a", "route_b", "rel_err", "agree"], agree))
    bounds = {}
    for name, fn in (("upper", criteria.hs_upper), ("lower", criteria.hs_lower)):
        rep = o.run(f"hs-{name}", lambda: fn(f, s, cfg.get("run.shells")))
        if rep is not None:
            o.write(f"hs_{name}.csv", rep.to_csv())
            bounds[name] = {"verdict": rep.verdict, "value_or_inf": rep.value_or_inf}
    return o.finish(cfg, {"routes": routes,
                          "agreement": [{"a": a, "b": b, "rel_err": e, "agree": g}
                                        for a, b, e, g in agree],
                          "bounds": bounds})


def _finite(rep: criteria.ShellReport, exhaustive: bool) -> bool | None:
    if rep.verdict == "converging" or (exhaustive and rep.verdict != "diverging"):
        return True
    if rep.verdict == "diverging":
        return False
    return None


def cmd_whitney_report(cfg: ExperimentConfig, out: Path | None = None, seed: int = 0) -> dict:
    """Whitney decomposition, its validation, and Luecking sums beside the integral test."""
    o = Output(out, cfg.experiment)
    f = theta_from_config(cfg, seed)
    s = phi_from_config(cfg)
    dom = level_boundary(f, cfg.get("run.delta"), resolution=cfg.get("run.resolution"))
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        dec = build_whitney(dom, gamma=cfg.get("run.gamma"), max_depth=cfg.get("run.max_depth"))
    rep = validate_whitney(dec, dom)
    o.write("boxes.csv", dec.to_csv())
    o.write("level_curve.csv", _table(["x", "y", "on_spectrum"],
                                      [[float(v.real), float(v.imag), int(b)]
                                       for v, b in zip(dom.vertices, dom.on_spectrum)]))
    m = o.run("pullback", lambda: pullback_measure(s, nodes=cfg.get("run.nodes"), bins=dec,
                                                     adaptive=cfg.get("run.adaptive")))
    rows = []
    if m is not None:
        o.write("measure.csv", m.to_csv())
        exhaustive = not dec.residual
        for p in cfg.get("run.p_list"):
            tag = _pname(p)
            lu = o.run(f"luecking p={p:g}", lambda: criteria.luecking_sum(m, dec, p))
            it = o.run(f"integral p={p:g}",
                       lambda: criteria.integral_schatten_modelspace(
                           f, dom, s, p, cfg.get("run.shells"), tol=cfg.get("run.tol")))
            if lu is None or it is None:
                continue
            o.write(f"luecking_p{tag}.csv", lu.to_csv())
            o.write(f"integral_p{tag}.csv", it.to_csv())
            fl, fi = _finite(lu, exhaustive), _finite(it, False)
            rows.append({"p": p, "luecking_verdict": lu.verdict, "luecking_value": lu.value_or_inf,
                         "integral_verdict": it.verdict, "integral_value": it.value_or_inf,
                         "agree": fl is not None and fl == fi})
    o.write("agreement.csv", _table(["p", "luecking_verdict", "luecking_value", "integral_verdict",
                                     "integral_value", "agree"],
                                    [[r["p"], r["luecking_verdict"], r["luecking_value"],
                                      r["integral_verdict"], r["integral_value"], r["agree"]]
                                     for r in rows]))
    whitney = {"boxes": len(dec.boxes), "residual": len(dec.residual), "a": rep.a, "b": rep.b,
               "c": rep.c, "m": rep.m, "M": rep.M, "multiplicity": rep.multiplicity,
               "coverage": rep.coverage, "passed": rep.passed, "failures": list(rep.failures)}
    return o.finish(cfg, {"whitney": whitney, "agreement": rows})


COMMANDS = {"pw-corner": cmd_pw_corner, "counterexample53": cmd_counterexample53,
            "hs-crosscheck": cmd_hs_crosscheck, "whitney-report": cmd_whitney_report}


def run_experiment(experiment: str, raw: dict | None = None, out: Path | None = None,
                   seed: int = 0, tol: float | None = None) -> dict:
    cfg = ExperimentConfig.build(experiment, raw, tol)
    return COMMANDS[experiment](cfg, out, seed)
