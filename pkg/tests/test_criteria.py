import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modelschatten.criteria import (ShellReport, berezin_norm_sq, berezin_test, compactness_ratio,
                                    disk_of, hs_bounds, hs_stanton, integral_schatten_hardy,
                                    integral_schatten_modelspace, luecking_sum, shell_verdict,
                                    sufficient_sp)
from modelschatten.errors import (BinningMismatch, NumericError, ParameterError,
                                  UnsupportedDomain)
from modelschatten.inner import InnerFunction
from modelschatten.level import level_boundary
from modelschatten.spectral import compop_gram, hs_pullback
from modelschatten.symbols import EmpiricalMeasure, Symbol, pullback_measure
from modelschatten.whitney import build_whitney

# Reference values for theta = z^2, phi = z/2, computed independently with
# one-dimensional adaptive quadrature of the radial profile (N vanishes for
# |z| > 1/2 and the integrands are radial).
REF_KERNEL_P2 = 0.15116373697916663
REF_UPPER = 0.15385575291041462
REF_HARDY_P2 = 0.15525385144627857
REF_SUFF_P2 = 0.5
REF_SUFF_P4 = 0.5165966028511246

Z2 = InnerFunction.monomial(2)
HALF = Symbol.scaling(0.5)
PW = InnerFunction.paley_wiener()


@pytest.fixture(scope="module")
def pw_dom():
    return level_boundary(PW, math.exp(0.5))


# ---------------------------------------------------------------- verdicts
def test_verdict_geometric_converges():
    v, st_ = shell_verdict(0.5 ** np.arange(12))
    assert v == "converging"
    assert st_["ratios"] == pytest.approx([0.5] * 5)


def test_verdict_constant_diverges():
    assert shell_verdict(np.ones(12))[0] == "diverging"
    assert shell_verdict(1.1 ** np.arange(12))[0] == "diverging"


def test_verdict_short_or_unconverged_is_inconclusive():
    assert shell_verdict(0.5 ** np.arange(4))[0] == "inconclusive"
    ok = np.ones(12, dtype=bool)
    ok[-2] = False
    assert shell_verdict(0.5 ** np.arange(12), ok)[0] == "inconclusive"


def test_verdict_blocks_remove_parity_oscillation():
    inc = 0.8 ** np.arange(20) * np.where(np.arange(20) % 2 == 0, 1.0, 0.05)
    assert shell_verdict(inc)[0] == "inconclusive"
    v, stats = shell_verdict(inc, block=2)
    assert v == "converging" and stats["block"] == 2
    with pytest.raises(ParameterError):
        shell_verdict(inc, block=0)


def test_verdict_slow_decay_is_not_converging():
    # ratios above the threshold but decaying: neither rule fires
    assert shell_verdict(0.95 ** np.arange(20))[0] == "inconclusive"


@given(st.lists(st.floats(0.0, 1e6, allow_nan=False), min_size=1, max_size=30))
def test_report_cumulative_is_prefix_sum(inc):
    n = len(inc)
    rep = ShellReport(np.zeros(n), np.ones(n), np.array(inc), np.ones(n, dtype=bool))
    cum = rep.cumulative
    assert np.all(np.diff(cum) >= 0)
    assert cum[-1] == pytest.approx(rep.total, rel=1e-12, abs=1e-12)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["shell_index", "inner_radius", "outer_radius", "increment",
                       "cumulative", "verdict_flag"]
    assert len(rows) == n + 1
    assert rep.verdict in ("converging", "diverging", "inconclusive")


def test_report_rejects_negative_increment():
    with pytest.raises(NumericError):
        ShellReport(np.zeros(2), np.ones(2), np.array([1.0, -1.0]), np.ones(2, dtype=bool))


def test_report_json_reports_infinity():
    rep = ShellReport(np.zeros(12), np.ones(12), np.ones(12), np.ones(12, dtype=bool),
                      label="demo", params={"p": 1})
    d = json.loads(rep.to_json())
    assert d == {"experiment": "demo", "params": {"p": 1}, "verdict": "diverging",
                 "value_or_inf": "inf"}


# ---------------------------------------------------------------- compactness
def test_compactness_identity_is_log():
    rs = [0.5, 0.9, 0.99]
    out = compactness_ratio(InnerFunction.monomial(1), Symbol.identity(), rs)
    for r, v in out:
        assert v == pytest.approx(math.log(1 / r), rel=1e-12)


def test_compactness_scaling_vanishes_outside_image():
    out = compactness_ratio(PW, Symbol.scaling(0.5), [0.6, 0.9])
    assert [v for _, v in out] == [0.0, 0.0]


def test_compactness_half_disk_not_compact():
    out = compactness_ratio(PW, Symbol.affine_disk(0.5, 0.5), [0.9, 0.99, 0.999])
    vals = [v for _, v in out]
    assert vals[0] > vals[1] > vals[2] > 1.0
    assert vals[2] == pytest.approx(1.0, abs=5e-3)


def test_compactness_rejects_bad_radius():
    with pytest.raises(ParameterError):
        compactness_ratio(PW, HALF, [1.0])


# ---------------------------------------------------------------- integral tests
def test_modelspace_reference_value():
    rep = integral_schatten_modelspace(Z2, None, HALF, 2)
    assert rep.verdict == "converging"
    assert rep.total == pytest.approx(REF_KERNEL_P2, rel=1e-6)


def test_hardy_reference_value():
    rep = integral_schatten_hardy(HALF, 2)
    assert rep.verdict == "converging"
    assert rep.total == pytest.approx(REF_HARDY_P2, rel=1e-6)


def test_refinement_moves_increments_within_tolerance():
    a = integral_schatten_modelspace(Z2, None, HALF, 2, tol=1e-6)
    b = integral_schatten_modelspace(Z2, None, HALF, 2, tol=1e-11, nmax=128)
    assert np.max(np.abs(a.increments - b.increments)) <= 1e-6 * b.total


def test_forms_agree_for_monomial():
    # for theta = z^2 the printed form differs, the kernel form is the reference
    printed = integral_schatten_modelspace(Z2, None, HALF, 2, form="printed")
    assert printed.total < REF_KERNEL_P2
    with pytest.raises(ParameterError):
        integral_schatten_modelspace(Z2, None, HALF, 2, form="distance")
    with pytest.raises(ParameterError):
        integral_schatten_modelspace(Z2, None, HALF, 0.0)


def test_paley_wiener_sector_threshold():
    sec = Symbol.sector_map(0.5)
    assert integral_schatten_modelspace(PW, None, sec, 3).verdict == "converging"
    assert integral_schatten_modelspace(PW, None, sec, 1).verdict == "diverging"


def test_paley_wiener_sector_distance_form(pw_dom):
    sec = Symbol.sector_map(0.5)
    assert integral_schatten_modelspace(PW, pw_dom, sec, 3, form="distance").verdict == \
        "converging"
    assert integral_schatten_modelspace(PW, pw_dom, sec, 1, form="distance").verdict == \
        "diverging"


def test_hardy_identity_diverges():
    assert integral_schatten_hardy(Symbol.identity(), 2).verdict == "diverging"


@pytest.mark.parametrize("p", [1, 2, 6])
def test_corner_model_in_no_schatten_class(p):
    assert integral_schatten_hardy(Symbol.corner_model(1 / 3), p).verdict == "diverging"


# ---------------------------------------------------------------- Hilbert-Schmidt
@pytest.mark.parametrize("f, s, expected", [
    (InnerFunction.monomial(1), Symbol.affine_disk(0.3, 0.5), 1.0),
    (Z2, HALF, 1.25),
    (InnerFunction.monomial(3), Symbol.identity(), 3.0),
    (Z2, Symbol.finite_blaschke([0.5]), 2.0),
])
def test_stanton_examples(f, s, expected):
    assert hs_stanton(f, s) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("zeros, s", [
    ([0.3 + 0.2j, -0.5], Symbol.affine_disk(0.2 - 0.1j, 0.6)),
    ([0.0, 0.7j, -0.4 + 0.1j], Symbol.finite_blaschke([0.2, -0.3j])),
    ([0.3 + 0.2j, -0.5], Symbol.sector_map(0.5)),
    ([0.6], Symbol.affine_disk(0.5, 0.5)),
])
def test_stanton_three_routes(zeros, s):
    f = InnerFunction.blaschke(zeros)
    stanton = hs_stanton(f, s)
    pull = hs_pullback(f, s)
    spec = float(np.sum(np.array(compop_gram(f, s).values) ** 2))
    assert stanton == pytest.approx(pull, abs=1e-5)
    assert stanton == pytest.approx(spec, rel=1e-4)


def test_hs_bounds_reference_and_order():
    upper, lower = hs_bounds(Z2, HALF)
    assert upper.total == pytest.approx(REF_UPPER, rel=1e-6)
    assert lower.total == pytest.approx(REF_KERNEL_P2, rel=1e-6)
    assert 0 <= lower.total <= upper.total


def test_hs_bounds_trivial_model_space():
    upper, lower = hs_bounds(InnerFunction.monomial(1), Symbol.affine_disk(0.2, 0.5))
    assert upper.verdict == lower.verdict == "converging"
    assert lower.total <= upper.total


@pytest.mark.parametrize("p, b, ref", [(2, 0.4, REF_SUFF_P2), (4, 0.25, REF_SUFF_P4)])
def test_sufficient_reference_values(p, b, ref):
    rep = sufficient_sp(Z2, HALF, p, b=b)
    assert rep.verdict == "converging"
    assert rep.total == pytest.approx(ref, rel=1e-6)


def test_sufficient_consistent_with_spectrum():
    sv = np.array(compop_gram(Z2, HALF).values)
    assert sv == pytest.approx([1.0, 0.5], abs=1e-12)
    assert np.isfinite(sufficient_sp(Z2, HALF, 4).total)


def test_sufficient_paley_wiener_sector():
    rep = sufficient_sp(PW, Symbol.sector_map(0.5), 6, one_component=True)
    assert rep.verdict == "converging"


def test_sufficient_rejects_parameters():
    with pytest.raises(ParameterError):
        sufficient_sp(Z2, HALF, 1.5)
    with pytest.raises(ParameterError):
        sufficient_sp(Z2, HALF, 2, b=0.5)


# ---------------------------------------------------------------- Berezin
def test_berezin_origin_paley_wiener(pw_dom):
    c, R = disk_of(pw_dom)
    assert c == pytest.approx(-1.0, abs=1e-9) and R == pytest.approx(2.0, abs=1e-9)
    bv = Symbol.affine_disk(0.25, 0.25).boundary(np.linspace(0, 2 * math.pi, 64,
                                                             endpoint=False))
    # G_0 = 1 and the weight is 1/R
    assert berezin_norm_sq(c, R, bv, 0.0)[0] == pytest.approx(0.5, rel=1e-14)


def test_berezin_constant_symbol_is_rotation_invariant():
    dom = level_boundary(InnerFunction.monomial(1), 2.0)
    c, R = disk_of(dom)
    bv = np.zeros(64, dtype=complex)
    z = 0.7 * np.exp(1j * np.linspace(0, 2 * math.pi, 9))
    vals = berezin_norm_sq(c, R, bv, z)
    assert np.ptp(vals) < 1e-9
    assert vals[0] == pytest.approx((1 - 0.49) / 2, rel=1e-6)


def test_berezin_against_pullback(pw_dom):
    s = Symbol.affine_disk(0.25, 0.25)
    lhs = berezin_test(PW, pw_dom, s, 2, "H").total
    rhs = hs_pullback(PW, s)
    ratio = lhs / rhs
    print(f"Berezin H / pullback HS ratio = {ratio:.4f}")
    assert 0.01 < ratio < 100


def test_berezin_verdicts(pw_dom):
    s = Symbol.affine_disk(0.25, 0.25)
    assert berezin_test(PW, pw_dom, s, 2, "G").verdict == "diverging"
    assert berezin_test(PW, pw_dom, s, 3, "G").verdict == "converging"
    assert berezin_test(PW, pw_dom, s, 1, "H").verdict == "converging"


def test_berezin_rejects_inputs(pw_dom):
    with pytest.raises(ParameterError):
        berezin_test(PW, pw_dom, HALF, 0.5)
    f = InnerFunction.blaschke([0.5, -0.5])
    with pytest.raises(UnsupportedDomain):
        berezin_test(f, level_boundary(f, 1.5), HALF, 2)


# ---------------------------------------------------------------- Luecking sums
@pytest.fixture(scope="module")
def four_boxes():
    return build_whitney(level_boundary(InnerFunction.monomial(1), 2.0), gamma=0.5)


def test_luecking_four_boxes(four_boxes):
    m = pullback_measure(Symbol.identity(), nodes=1024, bins=four_boxes)
    d = four_boxes.boxes[0].G.diam
    rep = luecking_sum(m, four_boxes, 2)
    assert rep.total == pytest.approx(4 * (math.pi / 2) / d, rel=1e-13)
    assert rep.total == pytest.approx(4 * (math.pi / 2) / math.sqrt(2), rel=1e-13)


def test_luecking_empty_and_point_mass(four_boxes):
    assert luecking_sum(EmpiricalMeasure(), four_boxes, 2).total == 0.0
    m = EmpiricalMeasure.point_masses([0.8 * np.exp(0.3j)], [2 * math.pi])
    d = four_boxes.boxes[0].G.diam
    assert luecking_sum(m, four_boxes, 2).total == pytest.approx(2 * math.pi / d)


def test_luecking_binning_mismatch(four_boxes, pw_dom):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        other = build_whitney(pw_dom, max_depth=4)
    m = pullback_measure(Symbol.identity(), nodes=1024, bins=other)
    with pytest.raises(BinningMismatch):
        luecking_sum(m, four_boxes, 2)
    with pytest.raises(ParameterError):
        luecking_sum(m, other, 0.0)
