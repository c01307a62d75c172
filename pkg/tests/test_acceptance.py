"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import math
import time
import warnings

import numpy as np
import pytest

from modelschatten.criteria import (compactness_ratio, hs_lower, hs_stanton,
                                    integral_schatten_hardy, integral_schatten_modelspace,
                                    luecking_sum)
from modelschatten.inner import (InnerFunction, counterexample_inner, counterexample_zero,
                                 dk_sandwich, kernel_laplacian_diag)
from modelschatten.level import level_boundary
from modelschatten.spectral import (E2Disk, KTheta, PointMassMeasure, compop_gram, embed_gram,
                                    hs_pullback, kernel_term, schatten_norm)
from modelschatten.symbols import Symbol, nevanlinna, nevanlinna_oracle, pullback_measure
from modelschatten.whitney import ahlfors_ratio, build_whitney, validate_whitney

PW = InnerFunction.paley_wiener()
ALPHAS = (1 / 3, 1 / 2, 2 / 3)


def _report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def _disk(rng, n, r=1.0):
    return r * np.sqrt(rng.uniform(size=n)) * np.exp(2j * math.pi * rng.uniform(size=n))


def _p_star(alpha):
    return 2 * alpha / (1 - alpha)


@pytest.fixture(scope="module")
def pw_dom():
    return level_boundary(PW, math.exp(0.5))


@pytest.fixture(scope="module")
def pw_whitney(pw_dom):
    return build_whitney(pw_dom, gamma=0.5, max_depth=16)


@pytest.fixture(scope="module")
def sector_verdicts():
    t0 = time.perf_counter()
    out = {}
    for alpha in ALPHAS:
        for p in (_p_star(alpha) / 2, 2 * _p_star(alpha)):
            out[alpha, p] = integral_schatten_modelspace(PW, None, Symbol.sector_map(alpha), p,
                                                         shells=20)
    out["seconds"] = time.perf_counter() - t0
    return out


def test_criterion_1_diagonal_spectrum(capsys):
    t0 = time.perf_counter()
    sv = compop_gram(InnerFunction.monomial(5), Symbol.scaling(0.5))
    dt = time.perf_counter() - t0
    err = float(np.max(np.abs(np.array(sv.values) - 0.5 ** np.arange(5))))
    _report(capsys, 1, err <= 1e-8 and dt < 1.0, f"max err {err:.1e}, {dt:.3f} s")


def test_criterion_2_three_hs_routes(capsys):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(10):
        f = InnerFunction.blaschke(_disk(rng, int(rng.integers(1, 5)), 0.9))
        for s in (Symbol.scaling(0.5), Symbol.affine_disk(0.25, 0.25),
                  Symbol.finite_blaschke(_disk(rng, 2, 0.8), np.exp(2j * math.pi * rng.uniform()))):
            v = (schatten_norm(compop_gram(f, s), 2) ** 2, hs_pullback(f, s), hs_stanton(f, s))
            worst = max(worst, max(abs(a - b) / max(a, b) for a in v for b in v))
    dt = time.perf_counter() - t0
    _report(capsys, 2, worst <= 1e-4 and dt < 60, f"worst rel err {worst:.1e}, {dt:.1f} s")


def test_criterion_3_counting_oracle(capsys):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(10):
        s = Symbol.finite_blaschke(_disk(rng, int(rng.integers(1, 5)), 0.9),
                                   np.exp(2j * math.pi * rng.uniform()))
        z = _disk(rng, 100, 0.95)
        exact = nevanlinna(s, z)
        oracle = np.array([nevanlinna_oracle(s, w) for w in z])
        worst = max(worst, float(np.max(np.abs(exact - oracle))))
    z = _disk(rng, 100, 0.95)
    half = Symbol.affine_disk(0.5, 0.5)
    closed = np.where(np.abs(z - 0.5) < 0.5, -np.log(np.abs(2 * z - 1)), 0.0)
    sq = Symbol.finite_blaschke([0.0, 0.0])
    for s, ref in ((half, closed), (sq, 2 * np.log(1 / np.sqrt(np.abs(z))))):
        worst = max(worst, float(np.max(np.abs(nevanlinna(s, z) - ref))))
        worst = max(worst, max(abs(nevanlinna_oracle(s, w) - r) for w, r in zip(z[:20], ref[:20])))
    _report(capsys, 3, worst <= 1e-6, f"worst abs err {worst:.1e}")


def test_criterion_4_laplacian_sandwich(capsys):
    rng = np.random.default_rng(4)
    bad = 0
    for i in range(10):
        f = InnerFunction.blaschke(_disk(rng, int(rng.integers(1, 7)), 0.95))
        z = _disk(rng, 10_000, 0.999)
        lo, hi = dk_sandwich(f, z)
        dk = kernel_laplacian_diag(f, z)
        slack = 1e-12 * np.maximum(1.0, hi)
        bad += int(np.sum((dk < lo - slack) | (dk > hi + slack)))
    _report(capsys, 4, bad == 0, f"{bad} violations")


def test_criterion_5_paley_wiener_thresholds(capsys, sector_verdicts):
    got = {}
    for alpha in ALPHAS:
        ps = _p_star(alpha)
        got[alpha] = (sector_verdicts[alpha, ps / 2].verdict, sector_verdicts[alpha, 2 * ps].verdict)
    dt = sector_verdicts["seconds"]
    ok = all(v == ("diverging", "converging") for v in got.values()) and dt < 300
    detail = ", ".join(f"alpha={a:.3g}: {v[0]}/{v[1]}" for a, v in got.items())
    _report(capsys, 5, ok, f"{detail}; {dt:.1f} s")


def test_criterion_6_corner_hardy(capsys):
    corner = Symbol.corner_model(0.5)
    verdicts = [integral_schatten_hardy(corner, p, shells=20).verdict for p in (1, 2, 6)]
    radii = [0.9, 0.99, 0.999]
    comp = {"sector on model space": compactness_ratio(PW, Symbol.sector_map(0.5), radii),
            "corner on Hardy space": compactness_ratio(None, corner, radii)}
    decreasing = {k: [v[1] for v in vals] for k, vals in comp.items()}
    ok = verdicts == ["diverging"] * 3 and all(
        all(b < a for a, b in zip(r, r[1:])) and r[-1] < 0.5 * r[0] for r in decreasing.values())
    detail = f"verdicts {verdicts}; " + "; ".join(
        f"{k}: " + ", ".join(f"{x:.3g}" for x in r) for k, r in decreasing.items())
    _report(capsys, 6, ok, detail)


def test_criterion_7_counterexample(capsys):
    half = Symbol.affine_disk(0.5, 0.5)
    ns = np.arange(3, 9)
    ts = []
    for n in ns:
        d, ang = counterexample_zero(int(n))
        ts.append(kernel_term((1 - d) * np.exp(1j * ang), half, delta=d))
    nt = ns * np.array(ts)
    c0 = float(nt.min())
    slope = float(np.polyfit(np.log(ns), np.log(ts), 1)[0])
    rep = hs_lower(counterexample_inner(30, exact=True), half, shells=20).reblocked(2)
    ok = c0 > 0 and slope >= -1.0 - 1e-9 and rep.verdict == "converging"
    _report(capsys, 7, ok, f"min n t_n = {c0:.4f}, log-log slope {slope:.3f}, "
                           f"integral {rep.verdict} ({rep.value_or_inf:.4g})")


def _comparability(seed, count):
    rng = np.random.default_rng(seed)
    out = {1: [], 2: [], 4: []}
    while len(out[1]) < count:
        z = _disk(rng, 5, 0.99)
        if np.any(np.abs(z - 1) < 0.05):
            continue
        m = PointMassMeasure(tuple((w, float(c)) for w, c in zip(z, rng.uniform(0.1, 1, 5))))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            a = embed_gram(KTheta(PW), m)
            b = embed_gram(E2Disk(-1.0, 2.0), m)
        for p in out:
            out[p].append(schatten_norm(a, p) / schatten_norm(b, p))
    return {p: max(max(v), 1 / min(v)) for p, v in out.items()}


def test_criterion_8_comparability(capsys):
    c50, c100 = _comparability(8, 50), _comparability(8, 100)
    drift = {p: abs(c100[p] - c50[p]) / c50[p] for p in c50}
    ok = all(math.isfinite(c) for c in c100.values()) and max(drift.values()) < 0.25
    detail = "; ".join(f"p={p}: C={c50[p]:.3f}->{c100[p]:.3f}" for p in c50)
    _report(capsys, 8, ok, detail)


def test_criterion_9_luecking_agreement(capsys, pw_whitney, sector_verdicts):
    rows = []
    for alpha in ALPHAS:
        m = pullback_measure(Symbol.sector_map(alpha), bins=pw_whitney, adaptive=True)
        for p in (_p_star(alpha) / 2, 2 * _p_star(alpha)):
            lu = luecking_sum(m, pw_whitney, p).verdict
            rows.append((alpha, p, lu, sector_verdicts[alpha, p].verdict))
    ok = all(lu == it and lu != "inconclusive" for *_, lu, it in rows)
    detail = ", ".join(f"a={a:.3g} p={p:.3g}: {lu}/{it}" for a, p, lu, it in rows)
    _report(capsys, 9, ok, detail)


def test_criterion_10_whitney_validity(capsys):
    lines, ok = [], True
    for name, f in (("z", InnerFunction.monomial(1)), ("z^2", InnerFunction.monomial(2)),
                    ("pw", PW)):
        for delta in (math.exp(0.5), 2.0):
            dom = level_boundary(f, delta)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                dec = build_whitney(dom, gamma=0.5, max_depth=16)
            rep = validate_whitney(dec, dom)
            consts = (rep.a, rep.b, rep.c, rep.m, rep.M)
            ahl = ahlfors_ratio(dom.vertices)
            good = rep.passed and all(math.isfinite(c) for c in consts) and ahl <= math.pi + 0.05
            ok &= good
            lines.append(f"{name} d={delta:.3g}: {'ok' if good else 'bad'} "
                         f"c={rep.c:.3g} ahlfors={ahl:.4f}")
    _report(capsys, 10, ok, "; ".join(lines))
