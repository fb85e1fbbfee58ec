import math

import numpy as np
import pytest
import scipy.integrate

from uqcov.density import DomainError, Exponential, Gaussian, PolyTail
from uqcov.transform import (
    PolyGrowth,
    ScaledInverseCdf,
    TransformConstructionError,
    TransformedIntegrand,
    transformed_integrand,
)

ALL_TRANSFORMS = [
    ScaledInverseCdf(Exponential(1.0), 1.0),
    ScaledInverseCdf(Exponential(2.0), 2.5),
    ScaledInverseCdf(Gaussian(1.0), 1.0),
    ScaledInverseCdf(Gaussian(0.5), 1.5),
    PolyGrowth(1.0, PolyTail(3.0)),
    PolyGrowth(2.0, PolyTail(4.0)),
]


def _cube_points(transform, m=9):
    t = np.linspace(0.05, 0.95, m)
    if transform.domain.cube_side[0] < 0.0:
        t -= 0.5
    return t


def _first(x):
    return x[:, 0]


def test_nu():
    assert ScaledInverseCdf(Exponential(1.0)).nu(1.0 - 1.0 / math.e) == pytest.approx(1.0)
    assert ScaledInverseCdf(Exponential(1.0), 2.0).nu(0.5) == pytest.approx(
        2.0 * math.log(2.0)
    )
    assert PolyGrowth(1.0, PolyTail(3.0)).nu(0.5) == pytest.approx(1.0)
    assert ScaledInverseCdf(Gaussian(1.0)).nu(0.0) == 0.0


@pytest.mark.parametrize("transform", ALL_TRANSFORMS, ids=str)
def test_nu_increasing(transform):
    t = _cube_points(transform, 101)
    assert np.all(np.diff(transform.nu(t)) > 0.0)
    np.testing.assert_allclose(transform.inverse(transform.nu(t)), t, atol=1e-12)


def test_nu_endpoints():
    with pytest.raises(DomainError):
        ScaledInverseCdf(Exponential()).nu(1.0)
    with pytest.raises(DomainError):
        ScaledInverseCdf(Gaussian()).nu(-0.5)
    with pytest.raises(DomainError):
        PolyGrowth(1.0, PolyTail()).nu(np.array([0.2, 1.0]))


def test_nu_prime():
    assert ScaledInverseCdf(Exponential(1.0)).nu_prime(0.0) == pytest.approx(1.0)
    assert PolyGrowth(1.0, PolyTail(3.0)).nu_prime(0.0) == pytest.approx(1.0)
    assert ScaledInverseCdf(Gaussian(1.0)).nu_prime(0.0) == pytest.approx(
        math.sqrt(2.0 * math.pi)
    )


@pytest.mark.parametrize("transform", ALL_TRANSFORMS, ids=str)
def test_nu_prime_matches_difference_quotient(transform):
    t = _cube_points(transform)
    h = 1e-6
    numeric = (transform.nu(t + h) - transform.nu(t - h)) / (2.0 * h)
    np.testing.assert_allclose(transform.nu_prime(t), numeric, rtol=1e-6)
    x = transform.nu(t)
    np.testing.assert_allclose(
        np.exp(transform.log_jacobian_at(x)), transform.nu_prime(t), rtol=1e-10
    )


def test_unit_weight():
    for density in (Exponential(3.0), Gaussian(0.2), PolyTail(5.0)):
        transform = ScaledInverseCdf(density, 1.0)
        t = _cube_points(transform)
        np.testing.assert_allclose(transform.weight(t), 1.0, rtol=1e-12)
        np.testing.assert_array_equal(transform.weight_prime(t), 0.0)


def test_weight():
    assert ScaledInverseCdf(Exponential(1.0), 2.0).weight(0.0) == pytest.approx(2.0)

    transform = ScaledInverseCdf(Exponential(1.5), 2.5)
    t = np.linspace(0.0, 0.99, 34)
    np.testing.assert_allclose(transform.weight(t), 2.5 * (1.0 - t) ** 1.5, rtol=1e-12)

    transform = PolyGrowth(2.0, PolyTail(4.0))
    np.testing.assert_allclose(transform.weight(t), 6.0 * (1.0 - t) ** 5, rtol=1e-12)


@pytest.mark.parametrize("transform", ALL_TRANSFORMS, ids=str)
def test_weight_integrates_to_one(transform):
    lo, hi = transform.domain.cube_side
    value, _ = scipy.integrate.quad(transform.weight, lo, hi, epsabs=0, epsrel=1e-12)
    assert value == pytest.approx(1.0, abs=1e-10)


def test_weight_prime_closed_forms():
    t = np.linspace(0.0, 0.95, 20)

    a = 2.5
    transform = ScaledInverseCdf(Exponential(1.0), a)
    np.testing.assert_allclose(
        transform.weight_prime(t), -a * (a - 1.0) * (1.0 - t) ** (a - 2.0), rtol=1e-12
    )

    b, c = 2.0, 4.0
    k = b * (c - 1.0)
    transform = PolyGrowth(b, PolyTail(c))
    np.testing.assert_allclose(
        transform.weight_prime(t), -k * (k - 1.0) * (1.0 - t) ** (k - 2.0), rtol=1e-12
    )


@pytest.mark.parametrize(
    ("transform", "density"),
    [
        (ScaledInverseCdf(Exponential(1.0), 2.5), Exponential(1.0)),
        (ScaledInverseCdf(Exponential(1.0), 2.0), Exponential(3.0)),
        (ScaledInverseCdf(Gaussian(1.0), 1.5), Gaussian(1.0)),
        (ScaledInverseCdf(Gaussian(1.0), 1.2), Gaussian(0.7)),
        (PolyGrowth(1.5, PolyTail(4.0)), PolyTail(4.0)),
        (PolyGrowth(1.5, PolyTail(4.0)), PolyTail(3.0)),
    ],
    ids=str,
)
def test_weight_prime_matches_difference_quotient(transform, density):
    t = _cube_points(transform)
    h = 1e-6
    numeric = (transform.weight(t + h, density) - transform.weight(t - h, density)) / (
        2.0 * h
    )
    analytic = transform.weight_prime(t, density)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)

    nonzero = np.abs(analytic) > 0.0
    x = transform.nu(t)
    np.testing.assert_allclose(
        np.exp(transform.log_abs_weight_prime_at(x, density))[nonzero],
        np.abs(analytic)[nonzero],
        rtol=1e-9,
    )


def test_construction_errors():
    with pytest.raises(TransformConstructionError):
        ScaledInverseCdf(Exponential(), 0.5)
    with pytest.raises(TransformConstructionError):
        ScaledInverseCdf(Gaussian(), math.inf)
    with pytest.raises(TransformConstructionError):
        PolyGrowth(0.0, PolyTail())
    with pytest.raises(TransformConstructionError):
        PolyGrowth(1.0, Exponential())
    with pytest.raises(TransformConstructionError):
        PolyGrowth(1.0, PolyTail()).weight(0.5, Exponential())
    with pytest.raises(TransformConstructionError):
        ScaledInverseCdf(Exponential()).weight(0.5, Gaussian())


def test_transformed_integrand_exponential():
    a = 2.0
    transform = ScaledInverseCdf(Exponential(1.0), a)
    g = TransformedIntegrand.homogeneous(_first, transform, Exponential(1.0), 1)
    t = np.linspace(0.0, 0.99, 12)
    np.testing.assert_allclose(
        g(t), -(a**2) * np.log1p(-t) * (1.0 - t) ** (a - 1.0), rtol=1e-12, atol=1e-15
    )


def test_transformed_integrand_gaussian():
    a = 1.5
    transform = ScaledInverseCdf(Gaussian(1.0), a)
    g = TransformedIntegrand.homogeneous(
        lambda x: np.abs(x[:, 0]), transform, Gaussian(1.0), 1
    )
    t = np.linspace(-0.49, 0.49, 15)
    nu = transform.nu(t)
    expected = a * np.abs(nu) * np.exp(-(nu**2) / 2.0 * (1.0 - 1.0 / a**2))
    np.testing.assert_allclose(g(t), expected, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize(
    ("f", "transform", "density", "exact"),
    [
        (_first, ScaledInverseCdf(Exponential(1.0), 2.0), Exponential(1.0), 1.0),
        (_first, ScaledInverseCdf(Exponential(2.0), 3.0), Exponential(2.0), 2.0),
        (
            lambda x: np.abs(x[:, 0]),
            ScaledInverseCdf(Gaussian(1.0), 1.5),
            Gaussian(1.0),
            math.sqrt(2.0 / math.pi),
        ),
        (
            lambda x: x[:, 0] ** 2,
            ScaledInverseCdf(Gaussian(2.0), 2.0),
            Gaussian(2.0),
            4.0,
        ),
        (_first, PolyGrowth(2.0, PolyTail(4.0)), PolyTail(4.0), 0.5),
    ],
)
def test_integral_is_preserved(f, transform, density, exact):
    g = TransformedIntegrand.homogeneous(f, transform, density, 1)
    lo, hi = transform.domain.cube_side
    value, _ = scipy.integrate.quad(g, lo, hi, epsabs=0, epsrel=1e-12, limit=200)
    assert value == pytest.approx(exact, rel=1e-10)


def test_anchored_integrand_vanishes_at_origin():
    g = TransformedIntegrand.homogeneous(
        lambda x: np.prod(x, axis=1),
        ScaledInverseCdf(Exponential(1.0), 2.0),
        Exponential(1.0),
        2,
    )
    assert g(np.array([0.0, 0.3])) == 0.0
    assert g(np.array([[0.0, 0.3], [0.4, 0.0]])).tolist() == [0.0, 0.0]


def test_transformed_integrand_shapes():
    g = TransformedIntegrand.homogeneous(
        lambda x: np.sum(x, axis=1),
        ScaledInverseCdf(Exponential(1.0), 2.0),
        Exponential(1.0),
        3,
    )
    assert g.dim == 3
    assert isinstance(g(np.array([0.1, 0.2, 0.3])), float)
    assert g(np.full((5, 3), 0.25)).shape == (5,)

    x, w = g.map_to_domain(np.full((2, 3), 0.5))
    assert x.shape == (2, 3)
    np.testing.assert_allclose(w, 1.0)
    with pytest.raises(TransformConstructionError):
        g(np.zeros((4, 2)))

    g1 = TransformedIntegrand.homogeneous(
        _first, ScaledInverseCdf(Exponential(1.0)), Exponential(1.0), 1
    )
    assert g1(np.array([0.1, 0.2])).shape == (2,)
    assert isinstance(g1(0.5), float)


def test_mixed_coordinates():
    g = transformed_integrand(
        lambda x: x[:, 0] * np.abs(x[:, 1]),
        [ScaledInverseCdf(Exponential(1.0), 2.0), ScaledInverseCdf(Gaussian(1.0), 1.5)],
        [Exponential(1.0), Gaussian(1.0)],
    )
    assert g.domains[0].cube_side == (0.0, 1.0)
    assert g.domains[1].cube_side == (-0.5, 0.5)

    value, _ = scipy.integrate.dblquad(
        lambda s, t: g(np.array([t, s])), 0.0, 1.0, -0.5, 0.5, epsabs=1e-11
    )
    assert value == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-6)


def test_transformed_integrand_errors():
    with pytest.raises(TransformConstructionError):
        transformed_integrand(_first, [ScaledInverseCdf(Exponential())], [])
    with pytest.raises(TransformConstructionError):
        transformed_integrand(_first, [ScaledInverseCdf(Exponential())], [Gaussian()])
    with pytest.raises(TransformConstructionError):
        transformed_integrand(_first, [], [])
    with pytest.raises(TransformConstructionError):
        TransformedIntegrand.homogeneous(
            _first, ScaledInverseCdf(Exponential()), Exponential(), 0
        )
