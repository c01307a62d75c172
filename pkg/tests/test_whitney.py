import csv
import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modelschatten.errors import ParameterError
from modelschatten.inner import InnerFunction
from modelschatten.level import level_boundary
from modelschatten.whitney import (CarlesonSquare, WhitneyBox, WhitneyDecomposition,
                                   ahlfors_ratio, box_diameter, build_whitney, distance_bounds,
                                   overlap_multiplicity, uniform_decomposition, validate_whitney)


@pytest.fixture(scope="module")
def far_circle():
    dom = level_boundary(InnerFunction.monomial(1), 2.0)
    return dom, build_whitney(dom, gamma=0.5)


@pytest.fixture(scope="module")
def pw():
    dom = level_boundary(InnerFunction.paley_wiener(), math.exp(0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        dec = build_whitney(dom, gamma=0.5, max_depth=12)
    return dom, dec


def test_square_geometry():
    sq = CarlesonSquare(0.0, math.pi / 2, 0.5)
    assert sq.r_lo == 0.5 and sq.is_square
    assert sq.area == pytest.approx(0.25 * 0.75)
    # farthest pair: outer corners
    assert sq.diam == pytest.approx(2 * math.sin(math.pi / 4))
    up = sq.upper_half()
    assert up.top == 0.75 and up.height == 0.25
    kids = sq.children()
    assert sum(k.area for k in kids) + up.area == pytest.approx(sq.area)
    assert sq.dilate(3.0).arc_length == pytest.approx(3 * math.pi / 2)


@given(st.floats(1e-4, math.pi), st.floats(1e-4, 0.9))
def test_diameter_against_brute_force(arc, h):
    r = np.linspace(1 - h, 1, 40)
    t = np.linspace(0, arc, 60)
    z = (r[:, None] * np.exp(1j * t[None])).ravel()
    brute = np.max(np.abs(z[:, None] - z[None, :]))
    assert float(box_diameter(arc, 1 - h, 1.0)) == pytest.approx(brute, rel=1e-9)


def test_half_open_convention():
    sq = CarlesonSquare(math.pi / 4, math.pi / 2, 0.5)
    assert sq.contains(1.0)  # closed top, left edge included
    assert not sq.contains(1j)  # right edge excluded
    assert not sq.contains(0.5)  # bottom excluded


def test_invalid_parameters(far_circle):
    dom, _ = far_circle
    with pytest.raises(ParameterError):
        build_whitney(dom, gamma=0.0)
    with pytest.raises(ParameterError):
        build_whitney(dom, a=1.0)
    with pytest.raises(ParameterError):
        build_whitney(dom, max_depth=0)
    with pytest.raises(ParameterError):
        CarlesonSquare(0.0, 7.0, 0.5)


def test_far_circle_gives_four_good_quadrants(far_circle):
    dom, dec = far_circle
    assert len(dec) == 4
    assert all(b.kind == "good" and b.depth == 0 for b in dec.boxes)
    assert dec.residual == ()
    rep = validate_whitney(dec, dom)
    assert rep.passed and rep.c <= 2.0


def test_near_unit_level_subdivides_to_cap():
    dom = level_boundary(InnerFunction.monomial(1), 1.0001)
    with pytest.warns(RuntimeWarning):
        dec = build_whitney(dom, gamma=1.0, max_depth=8)
    assert all(b.kind == "upper-half" for b in dec.boxes)
    counts = np.bincount([b.depth for b in dec.boxes])
    assert counts.tolist() == [4 * 2**m for m in range(8)]
    assert len(dec.residual) == 4 * 2**8


def test_paley_wiener_concentrates_near_one(pw):
    _, dec = pw
    depth = np.array([b.depth for b in dec.boxes])
    ang = np.abs(np.angle(np.exp(1j * np.array([b.G.arc_center for b in dec.boxes]))))
    for m in range(2, 13):
        assert ang[depth == m].max() <= 4.0 * 2.0 ** (-m / 2)
    assert all(abs(np.angle(np.exp(1j * s.arc_center))) < 0.05 for s in dec.residual)


def test_paley_wiener_validates(pw):
    dom, dec = pw
    rep = validate_whitney(dec, dom)
    assert rep.passed
    assert all(math.isfinite(x) for x in (rep.a, rep.b, rep.c))
    assert rep.multiplicity == 1
    assert rep.coverage == pytest.approx(1.0, abs=1e-12)
    # the conservative distance keeps dist/d bounded below uniformly in depth
    ratio = np.array([b.dist / b.G.diam for b in dec.boxes])
    depth = np.array([b.depth for b in dec.boxes])
    assert rep.m == pytest.approx(ratio.min())
    assert rep.m > 0.05
    deep = [ratio[depth == m].min() for m in range(6, 12)]
    assert max(deep) - min(deep) < 0.01 * min(deep)


def test_box_touching_boundary_fails(pw):
    dom, dec = pw
    sq = CarlesonSquare(0.0, 0.1, 0.05)  # contains the tangency point 1
    rep = validate_whitney(dec, dom, boxes=[WhitneyBox(sq, sq, "good", 0, 0.0)])
    assert not rep.passed
    assert math.isinf(rep.c)
    assert any("condition (i)" in f for f in rep.failures)


def test_two_sided_distance_bounds(pw):
    dom, dec = pw
    b = distance_bounds(dec, dom)
    assert np.all(b[:, 0] <= b[:, 1])
    assert np.all(b[:, 1] <= b[:, 2])


def test_coverage_by_location(pw):
    _, dec = pw
    rng = np.random.default_rng(3)
    z = np.sqrt(rng.uniform(0.25, 1.0, 4000)) * np.exp(2j * math.pi * rng.uniform(size=4000))
    idx, in_res = dec.locate(z)
    assert np.all((idx >= 0) | in_res)
    hit = idx >= 0
    for j, w in zip(idx[hit][:500], z[hit][:500]):
        assert dec.boxes[j].G.contains(w)


def test_overlap_conventions():
    q = uniform_decomposition(0)
    assert overlap_multiplicity(q, q) == 1
    assert overlap_multiplicity(q, uniform_decomposition(2)) == 16
    empty = WhitneyDecomposition((), 0.5, 2.0, 3.0, 1)
    assert overlap_multiplicity(q, empty) == 0
    left = WhitneyDecomposition(q.boxes[:1], 0.5, 2.0, 3.0, 1, (), _index={"generic": True})
    right = WhitneyDecomposition(q.boxes[2:3], 0.5, 2.0, 3.0, 1, (), _index={"generic": True})
    assert overlap_multiplicity(left, right) == 0


def test_csv_columns(pw):
    _, dec = pw
    rows = list(csv.reader(io.StringIO(dec.to_csv())))
    assert rows[0] == ["box_id", "kind", "depth", "arc_center", "arc_length", "diam",
                       "dist_to_boundary"]
    assert len(rows) == len(dec) + 1


def test_ahlfors_unit_circle():
    circ = np.exp(2j * math.pi * np.arange(4000) / 4000)
    assert ahlfors_ratio(circ) == pytest.approx(math.pi, rel=1e-5)


def test_ahlfors_segment_at_most_two():
    seg = np.linspace(-1, 1, 200).astype(complex) * np.exp(0.3j)
    r = ahlfors_ratio(seg, include_off_curve=True, closed=False)
    assert 1.9 < r <= 2.0 + 1e-9


def test_ahlfors_paley_wiener_circle(pw):
    dom, _ = pw
    assert ahlfors_ratio(dom.vertices) == pytest.approx(math.pi, rel=1e-5)
