import math

import numpy as np
import pytest

from modelschatten.errors import ParameterError, SpectrumError
from modelschatten.inner import InnerFunction, distance_to_spectrum
from modelschatten.level import check_level_domain, dist_and_surrogate, level_boundary

PW_DELTA = math.exp(0.5)


@pytest.fixture(scope="module")
def pw_domain():
    return InnerFunction.paley_wiener(), level_boundary(InnerFunction.paley_wiener(), PW_DELTA)


@pytest.mark.parametrize("n, delta, radius", [(1, 1.5, 1.5), (2, 1.2, math.sqrt(1.2))])
def test_monomial_levels_are_circles(n, delta, radius):
    dom = level_boundary(InnerFunction.monomial(n), delta)
    c, r, err = dom.circle_fit()
    assert abs(c) < 1e-12
    assert r == pytest.approx(radius, abs=1e-12)
    assert err < 1e-10
    assert np.allclose(np.abs(dom.vertices), radius, atol=1e-10)


def test_paley_wiener_level_is_tangent_circle(pw_domain):
    _, dom = pw_domain
    c, r, _ = dom.circle_fit()
    assert c == pytest.approx(-1.0, abs=1e-10)
    assert r == pytest.approx(2.0, abs=1e-10)
    assert int(dom.on_spectrum.sum()) == 1
    assert abs(dom.vertices[dom.on_spectrum][0] - 1) < 1e-12


def test_level_error_and_circle_inside(pw_domain):
    f, dom = pw_domain
    lev, inside = check_level_domain(f, dom)
    assert inside
    assert lev <= dom.tolerance
    v = dom.vertices[~dom.on_spectrum]
    far = distance_to_spectrum(f, v) > 0.05
    assert np.max(np.abs(np.abs(f(v[far])) - PW_DELTA)) < 1e-9


def test_rejects_delta_at_most_one():
    with pytest.raises(ParameterError):
        level_boundary(InnerFunction.monomial(1), 1.0)


def test_surrogate_identity():
    f = InnerFunction.monomial(1)
    d, s = dist_and_surrogate(f, level_boundary(f, 2.0), 0.5)
    assert d == pytest.approx(1.5, abs=1e-6)
    assert s == pytest.approx(1.0, rel=1e-14)


def test_surrogate_paley_wiener_origin(pw_domain):
    f, dom = pw_domain
    d, s = dist_and_surrogate(f, dom, 0.0)
    assert d == pytest.approx(1.0, abs=1e-9)
    assert s == pytest.approx(1.0 / (1.0 - math.exp(-2.0)), rel=1e-13)


@pytest.mark.parametrize("r", [0.9, 0.99, 0.999])
def test_ratio_tends_to_half_along_radius(pw_domain, r):
    f, dom = pw_domain
    d, s = dist_and_surrogate(f, dom, r)
    # the boundary circle passes through 1, so dist = 1 - r exactly
    exact = (1 - r) * (1 - abs(f(r)) ** 2) / (1 - r * r)
    assert d / s == pytest.approx(exact, rel=1e-6)
    assert abs(d / s - 0.5) < 0.6 * (1 - r)


def test_surrogate_undefined_near_spectrum(pw_domain):
    f, dom = pw_domain
    with pytest.raises(SpectrumError):
        dist_and_surrogate(f, dom, 1.0 - 1e-5)


@pytest.mark.parametrize("f, delta", [
    (InnerFunction.monomial(1), 2.0),
    (InnerFunction.blaschke([0.3 + 0.4j, -0.5]), 1.5),
    (InnerFunction.paley_wiener(), PW_DELTA),
])
def test_dist_and_surrogate_comparable(f, delta):
    dom = level_boundary(f, delta)
    r = np.linspace(0, 1, 81)
    t = np.linspace(0, 2 * math.pi, 181)[:-1]
    z = (r[:, None] * np.exp(1j * t[None])).ravel()
    z = z[distance_to_spectrum(f, z) > 0.05]
    d, s = dist_and_surrogate(f, dom, z)
    q = d / s
    C = max(q.max(), 1 / q.min())
    print(f"comparability constant C = {C:.4f}")
    assert C < 3.0


def test_distance_is_conservative(pw_domain):
    _, dom = pw_domain
    z = np.array([0.0, 0.5j, -0.3 + 0.2j])
    exact = np.abs(2.0 - np.abs(z + 1.0))
    assert np.all(dom.distance(z, conservative=True) <= exact + 1e-12)
    assert np.allclose(dom.distance(z), exact, atol=1e-6)
