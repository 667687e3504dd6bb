import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from qmcar import densities as D
from qmcar.nets import sobol_points


@pytest.fixture(scope="module")
def ex1():
    return D.example1_density()


@pytest.fixture(scope="module")
def ex2():
    return D.example2_density_and_proposal()


# -- example 1 ----------------------------------------------------------------

def test_ex1_values(ex1):
    assert ex1(np.zeros(4))[0] == pytest.approx(1.0)
    assert ex1.bound_L == 1.0
    assert ex1.total_mass == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert ex1.mass(np.ones(4))[0] == pytest.approx(ex1.total_mass, abs=1e-15)


def test_ex1_total_mass_by_quadrature(ex1):
    assert D.numeric_box_mass(ex1.evaluate, np.ones(4)) == pytest.approx(1 - math.exp(-1), abs=1e-8)


def test_ex1_box_half(ex1):
    t = np.array([0.5, 1, 1, 1])
    assert ex1.mass(t)[0] == pytest.approx(D.numeric_box_mass(ex1.evaluate, t), abs=1e-8)


def test_ex1_box_mass_against_quadrature(ex1):
    rng = np.random.default_rng(11)
    for t in rng.random((100, 4)):
        assert abs(ex1.mass(t)[0] - D.numeric_box_mass(ex1.evaluate, t, 1e-10)) < 1e-8


def test_ex1_bounded_by_L(ex1):
    x = sobol_points(14, 4)
    assert np.all(ex1(x) <= ex1.bound_L)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.integers(0, 3), st.floats(0, 1))
def test_ex1_box_mass_monotone(t, j, bump):
    ex1 = D.example1_density()
    t = np.array(t)
    t2 = t.copy()
    t2[j] = min(1.0, t2[j] + bump)
    assert ex1.mass(t2)[0] >= ex1.mass(t)[0] - 1e-15


# -- example 2 ----------------------------------------------------------------

def test_ex2_inverse_cdf_values(ex2):
    _, H = ex2
    inv = H.marginal_inverse_cdf[0]
    assert inv(np.array([0.75]))[0] == pytest.approx(2.0)
    assert inv(np.array([0.5]))[0] == pytest.approx(1.0)
    assert inv(np.array([0.0]))[0] == 0.0


def test_ex2_total_mass(ex2):
    psi, _ = ex2
    assert psi.total_mass == pytest.approx(1.0, abs=1e-12)
    est = integrate.dblquad(lambda y, x: psi(np.array([[x, y]]))[0], 0, np.inf, 0, np.inf,
                            epsabs=1e-10)[0]
    assert est == pytest.approx(1.0, abs=1e-7)


def test_ex2_proposal_shape(ex2):
    _, H = ex2
    pts = np.array([[0.5, 0.5], [0.5, 2.0], [2.0, 0.5], [2.0, 4.0]])
    np.testing.assert_allclose(H.evaluate(pts), [0.25, 0.25 / 4, 0.25 / 4, 0.25 / 64])
    # integrates to one
    est = integrate.dblquad(lambda y, x: H.evaluate(np.array([[x, y]]))[0], 0, np.inf, 0, np.inf)[0]
    assert est == pytest.approx(1.0, abs=1e-7)


def test_ex2_box_mass_against_quadrature(ex2):
    psi, _ = ex2

    # x = v^2 removes the square-root kink at the axes, so quadrature converges fast
    def smooth(v):
        return psi.evaluate(v ** 2) * 4 * v[:, 0] * v[:, 1]

    rng = np.random.default_rng(5)
    for t in rng.uniform(0, 6, size=(100, 2)):
        assert abs(psi.mass(t)[0] - D.numeric_box_mass(smooth, np.sqrt(t), 1e-10)) < 1e-8


def test_ex2_box_mass_at_largest_anchor(ex2):
    psi, _ = ex2
    assert psi.mass(np.array([np.inf, np.inf]))[0] == pytest.approx(psi.total_mass, abs=1e-6)
    assert psi.mass(np.array([1e6, 1e6]))[0] == pytest.approx(psi.total_mass, abs=1e-6)


def test_ex2_bound_holds_on_million_points(ex2):
    psi, H = ex2
    u = sobol_points(20, 2)
    z = H.inverse_cdf(u)
    assert np.all(psi(z) <= psi.bound_L * H.evaluate(z))


def test_ex2_bound_is_tight_within_slack(ex2):
    psi, H = ex2
    u = sobol_points(16, 2)[1:]
    z = H.inverse_cdf(u)
    ratio = np.max(psi(z) / H.evaluate(z))
    assert ratio <= psi.bound_L <= 1.02 * ratio


@pytest.mark.parametrize("u", [0.05, 0.2, 0.35, 0.45, 0.55, 0.7, 0.9, 0.99])
def test_ex2_marginal_product_check(ex2, u):
    _, H = ex2
    inv, cdf, pdf = H.marginal_inverse_cdf[0], H.marginal_cdf[0], H.marginal_pdf[0]
    x = inv(np.array([u]))[0]
    h = 1e-6 * max(1.0, x)
    fd = (cdf(np.array([x + h]))[0] - cdf(np.array([x - h]))[0]) / (2 * h)
    assert fd == pytest.approx(pdf(np.array([x]))[0], rel=1e-5)


@given(st.floats(0, 1 - 1e-9), st.floats(0, 1 - 1e-9))
def test_ex2_inverse_cdf_monotone_and_inverts(a, b):
    _, H = D.example2_density_and_proposal()
    inv, cdf = H.marginal_inverse_cdf[0], H.marginal_cdf[0]
    xa, xb = inv(np.array([a, b]))
    if a <= b:
        assert xa <= xb
    assert cdf(np.array([xa]))[0] == pytest.approx(a, abs=1e-12)


# -- example 3 ----------------------------------------------------------------

def test_ex3_values():
    dec = D.example3_decomposition()
    assert dec.psi(0.0) == 0.0
    q = math.pi / 4
    assert dec.psi(q) - dec.components[0].pdf(q) == pytest.approx(0.0, abs=1e-15)
    closed = (1 - math.cos(4)) / 4 + 1 / 3
    assert dec.total_mass() == pytest.approx(closed, abs=1e-14)
    assert closed == pytest.approx(0.746744, abs=1e-6)
    assert integrate.quad(dec.psi, 0, 1)[0] == pytest.approx(closed, abs=1e-12)


def test_ex3_cdf_matches_quadrature():
    dec = D.example3_decomposition()
    total = dec.total_mass()
    for x in np.linspace(0, 1, 100):
        assert dec.cdf(x) == pytest.approx(integrate.quad(dec.psi, 0, x)[0] / total, abs=1e-12)


def test_ex3_density_model():
    m = D.example3_density()
    assert m.dimension == 1
    x = np.linspace(0, 1, 10001)[:, None]
    assert np.all(m(x) <= m.bound_L)
    assert m.mass(np.array([[1.0]]))[0] == pytest.approx(m.total_mass)


def test_ex3_psi_below_x2_exactly_on_S():
    dec = D.example3_decomposition()
    x = np.linspace(0, 1, 4001)
    below = dec.psi(x) < x ** 2
    q = math.pi / 4
    assert np.all(below[x > q + 1e-9])
    assert not np.any(below[x < q - 1e-9])


# -- numeric box mass ------------------------------------------------------------

def test_numeric_box_mass_trivial():
    one = lambda x: np.ones(len(x))
    assert D.numeric_box_mass(one, [0.5, 0.5]) == pytest.approx(0.25, abs=1e-12)
    assert D.numeric_box_mass(one, [0.5, 0.0]) == 0.0
    assert D.numeric_box_mass(one, [0.2, 0.5, 0.5]) == pytest.approx(0.05, abs=1e-12)
    with pytest.raises(ValueError):
        D.numeric_box_mass(one, [0.5], tolerance=0)


def test_numeric_box_mass_accuracy_error():
    wild = lambda x: 1.0 / np.sqrt(np.abs(x[:, 0] - 0.3) + 1e-300)
    with pytest.raises(D.AccuracyError) as info:
        D.numeric_box_mass(wild, [1.0, 1.0, 1.0], tolerance=1e-12, budget=20)
    assert np.isfinite(info.value.estimate)


def test_mass_falls_back_to_quadrature():
    m = D.DensityModel(2, D.UNIT_CUBE, lambda x: x[:, 0] + x[:, 1], bound_L=2.0, total_mass=1.0)
    assert m.mass(np.array([0.5, 1.0]))[0] == pytest.approx(0.125 + 0.25, abs=1e-9)


def test_real_density_needs_proposal():
    with pytest.raises(ValueError):
        D.DensityModel(1, D.REAL_SPACE, lambda x: x[:, 0], 1.0, 1.0)


# -- bound parameters -------------------------------------------------------------

def test_bound_parameters():
    b = D.BoundParameters(p=1, q=1, t=0, L=1.0, C=1.0)
    assert b.upper_bound(2, 4) == pytest.approx(8 * 2 * 1 * 4 ** -0.5)
    with pytest.raises(ValueError):
        D.BoundParameters(p=1, q=2, t=0, L=1, C=1)
    with pytest.raises(ValueError):
        D.BoundParameters(p=0, q=0, t=0, L=1, C=1)
