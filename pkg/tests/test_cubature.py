import math

import numpy as np
import pytest
import scipy.special

from uqcov import cubature
from uqcov.analysis import optimal_a
from uqcov.base import constants
from uqcov.cubature import (
    CubatureError,
    GeneratingVector,
    GeneratingVectorError,
    LatticeRule,
    MidpointRule,
    NonFiniteIntegrandError,
    RuleFamily,
    builtin_korobov_vector,
    convergence_table,
    integrate_weighted,
    korobov_multiplier,
    load_generating_vector,
    make_rule,
    random_shift,
    search_korobov_multiplier,
)
from uqcov.density import Domain, Exponential, Gaussian
from uqcov.transform import ScaledInverseCdf, TransformedIntegrand

INF = math.inf
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _linear(x):
    return x[:, 0]


def _abs(x):
    return np.abs(x[:, 0])


def _prod(x):
    return np.prod(x, axis=1)


def _test1_error(n, a):
    d = Exponential(1.0)
    value = integrate_weighted(_linear, [d], [ScaledInverseCdf(d, a)], MidpointRule(n))
    return abs(value - 1.0)


def _test2_error(n, a):
    d = Gaussian(1.0)
    value = integrate_weighted(_abs, [d], [ScaledInverseCdf(d, a)], MidpointRule(n))
    return abs(value - SQRT_2_OVER_PI)


@pytest.fixture(scope="module")
def a_star_exp():
    return optimal_a(Exponential(1.0), INF)[0]


@pytest.fixture(scope="module")
def a_star_gauss():
    return optimal_a(Gaussian(1.0), INF)[0]


# -- nodes -----------------------------------------------------------------------------


def test_midpoint_nodes():
    np.testing.assert_allclose(MidpointRule(2).nodes(1), [[0.25], [0.75]])
    np.testing.assert_allclose(
        MidpointRule(2).nodes(1, [Domain.REAL_LINE]), [[-0.25], [0.25]]
    )
    np.testing.assert_allclose(
        MidpointRule(4).nodes(2),
        [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]],
    )
    assert MidpointRule(27).points_per_axis(3) == 3
    assert MidpointRule(4096).points_per_axis(2) == 64


def test_midpoint_rejects_non_powers():
    with pytest.raises(CubatureError):
        MidpointRule(3).nodes(2)
    with pytest.raises(CubatureError):
        MidpointRule(10).apply(lambda t: t[:, 0], dim=3)
    with pytest.raises(CubatureError):
        MidpointRule(0)


def test_lattice_nodes():
    np.testing.assert_allclose(
        LatticeRule(4, (1,)).nodes(1), [[0.0], [0.25], [0.5], [0.75]]
    )
    np.testing.assert_allclose(
        LatticeRule(5, (1, 2)).nodes(2),
        [[0.0, 0.0], [0.2, 0.4], [0.4, 0.8], [0.6, 0.2], [0.8, 0.6]],
    )
    shifted = LatticeRule(4, (1,), shift=(0.125,)).nodes(1)
    np.testing.assert_allclose(shifted[:, 0], [0.125, 0.375, 0.625, 0.875])


def test_nodes_stay_inside_cube():
    for rule in (MidpointRule(64), LatticeRule(64, (1, 19), shift=(0.3, 0.7))):
        dim = 1 if isinstance(rule, MidpointRule) else 2
        nodes = rule.nodes(dim)
        assert nodes.shape == (64, dim)
        assert np.all((nodes >= 0.0) & (nodes < 1.0))


def test_lattice_real_line_boundary():
    rule = LatticeRule(4, (1,))
    with pytest.raises(CubatureError, match="node 0"):
        rule.nodes(1, [Domain.REAL_LINE])

    clipped = LatticeRule(4, (1,), clip_eps=1e-12).nodes(1, [Domain.REAL_LINE])
    assert clipped[0, 0] == pytest.approx(-0.5 + 1e-12, abs=0.0)
    np.testing.assert_allclose(clipped[1:, 0], [-0.25, 0.0, 0.25])

    # shifted nodes do not reach the boundary
    nodes = LatticeRule(4, (1,), shift=(0.125,)).nodes(1, [Domain.REAL_LINE])
    assert np.all(nodes > -0.5)


def test_lattice_configuration_errors():
    with pytest.raises(CubatureError):
        LatticeRule(4, (1,), shift=(1.0,))
    with pytest.raises(CubatureError):
        LatticeRule(4, (1,), clip_eps=0.5)
    with pytest.raises(CubatureError):
        LatticeRule(4, (1,)).nodes(2)
    with pytest.raises(CubatureError):
        LatticeRule(4, (1, 3), shift=(0.1,)).nodes(2)
    with pytest.raises(CubatureError):
        MidpointRule(4).nodes(1, [Domain.HALF_LINE, Domain.HALF_LINE])


# -- applying rules --------------------------------------------------------------------


def test_apply():
    assert MidpointRule(1).apply(lambda t: t, dim=1) == 0.5
    assert MidpointRule(8).apply(lambda t: 3.0, dim=1) == 3.0
    assert LatticeRule(16, (1, 5)).apply(lambda t: np.full(len(t), -2.5), dim=2) == -2.5
    # midpoint is exact for linear functions
    assert MidpointRule(7).apply(lambda t: 2.0 * t + 1.0, dim=1) == pytest.approx(2.0)
    assert MidpointRule(9).apply(lambda t: t[:, 0] * t[:, 1], dim=2) == (
        pytest.approx(0.25)
    )

    with pytest.raises(CubatureError):
        MidpointRule(4).apply(lambda t: t)


def test_non_finite_integrand():
    with pytest.raises(NonFiniteIntegrandError, match="node 1"):
        MidpointRule(4).apply(lambda t: 1.0 / (t - 0.375), dim=1)
    with pytest.raises(CubatureError):
        MidpointRule(4).apply(lambda t: np.full_like(t, np.nan), dim=1)


def test_apply_with_threads(monkeypatch):
    g = TransformedIntegrand.homogeneous(
        _prod, ScaledInverseCdf(Exponential(1.0), 2.5), Exponential(1.0), 2
    )
    rule = make_rule(RuleFamily.LATTICE, 2**12, 2)
    serial = rule.apply(g)

    monkeypatch.setattr(constants, "NODE_BLOCK_SIZE", 100)
    monkeypatch.setenv(constants.THREADS_ENV_VAR, "4")
    assert rule.apply(g) == serial
    monkeypatch.setenv(constants.THREADS_ENV_VAR, "1")
    assert rule.apply(g) == serial


def test_apply_transformed_integrand_dimension():
    g = TransformedIntegrand.homogeneous(
        _prod, ScaledInverseCdf(Exponential(1.0)), Exponential(1.0), 2
    )
    with pytest.raises(CubatureError):
        MidpointRule(16).apply(g, dim=3)


# -- weighted integrals ----------------------------------------------------------------


def test_integrate_weighted_exponential(a_star_exp):
    assert _test1_error(10**3, a_star_exp) == pytest.approx(2.958141e-07, rel=1e-4)


@pytest.mark.parametrize(
    ("n", "a", "expected"),
    [
        (10, 1.0, 3.424093e-02),
        (10, 1.5, 1.118346e-02),
        (10**4, 1.0, 3.465694e-05),
        (10**5, 1.0, 3.465732e-06),
    ],
)
def test_exponential_table(n, a, expected):
    assert _test1_error(n, a) == pytest.approx(expected, rel=1e-4)


def test_exponential_table_optimal_scale(a_star_exp):
    assert _test1_error(10**5, a_star_exp) == pytest.approx(2.596101e-11, rel=1e-3)


def _gaussian_abs_midpoint(n, a):
    # closed form of g for f = |x| under the scaled Gaussian map, summed directly
    t = (np.arange(n) + 0.5) / n - 0.5
    y = math.sqrt(2.0) * scipy.special.erfinv(2.0 * t)
    g = a * np.abs(a * y) * np.exp(-0.5 * (a * a - 1.0) * y * y)
    return math.fsum(g) / n


@pytest.mark.parametrize("n", [10, 10**2, 10**4])
@pytest.mark.parametrize("a", [1.0, 1.5, math.sqrt(2.0), 3.0])
def test_integrate_weighted_gaussian(n, a):
    d = Gaussian(1.0)
    value = integrate_weighted(_abs, [d], [ScaledInverseCdf(d, a)], MidpointRule(n))
    assert value == pytest.approx(_gaussian_abs_midpoint(n, a), rel=1e-10)


def test_gaussian_table():
    assert _test2_error(10**2, math.sqrt(2.0)) == pytest.approx(3.975057e-04, rel=1e-5)


def test_gaussian_table_optimal_scale(a_star_gauss):
    reference = abs(_gaussian_abs_midpoint(10**5, a_star_gauss) - SQRT_2_OVER_PI)
    error = _test2_error(10**5, a_star_gauss)
    assert error == pytest.approx(reference, rel=1e-2)
    assert error == pytest.approx(6.10475e-11, rel=1e-2)


def test_integrate_weighted_mixed():
    densities = [Exponential(1.0), Gaussian(1.0)]
    transforms = [ScaledInverseCdf(densities[0], 2.5), ScaledInverseCdf(densities[1], 1.7)]
    value = integrate_weighted(
        lambda x: x[:, 0] * np.abs(x[:, 1]), densities, transforms, MidpointRule(512**2)
    )
    assert value == pytest.approx(SQRT_2_OVER_PI, rel=1e-4)


def test_convergence_orders(a_star_exp):
    d = Exponential(1.0)
    ns = [10**2, 10**3, 10**4, 10**5]

    g = TransformedIntegrand.homogeneous(_linear, ScaledInverseCdf(d, a_star_exp), d, 1)
    table = convergence_table(g, MidpointRule, ns, 1.0)
    assert list(table.columns) == ["n", "abs_error", "observed_order"]
    assert math.isnan(table["observed_order"].iloc[0])
    assert table["observed_order"].iloc[1:].min() >= 1.9

    g = TransformedIntegrand.homogeneous(_linear, ScaledInverseCdf(d, 1.0), d, 1)
    orders = convergence_table(g, MidpointRule, ns, 1.0)["observed_order"].iloc[1:]
    assert orders.between(0.9, 1.1).all()


@pytest.mark.parametrize("scale", ["optimal", 2.0])
def test_gaussian_convergence_order(a_star_gauss, scale):
    # the kink of |x| sits on a cell boundary for even n, so the rate stays quadratic
    d = Gaussian(1.0)
    a = a_star_gauss if scale == "optimal" else scale
    g = TransformedIntegrand.homogeneous(_abs, ScaledInverseCdf(d, a), d, 1)
    table = convergence_table(g, MidpointRule, [10**2, 10**3, 10**4], SQRT_2_OVER_PI)
    assert table["observed_order"].iloc[1:].between(1.9, 2.1).all()


def test_convergence_table_degenerate_reference():
    reference = MidpointRule(4).apply(lambda t: t**2, dim=1)
    table = convergence_table(lambda t: t**2, MidpointRule, [4, 4], reference, dim=1)
    assert table["abs_error"].tolist() == [0.0, 0.0]
    assert table["observed_order"].isna().all()


# -- generating vectors ----------------------------------------------------------------


def test_load_generating_vector(tmp_path):
    single = tmp_path / "z.txt"
    single.write_text("1\n182667\n")
    assert load_generating_vector(single).components == (1, 182667)

    two_columns = tmp_path / "z2.txt"
    two_columns.write_text("1 1\n2 182667\n\n")
    vector = load_generating_vector(two_columns, n=2**20)
    assert vector.components == (1, 182667)
    assert vector.declared_n == 2**20
    assert vector.source == str(two_columns)


@pytest.mark.parametrize(
    ("content", "message"),
    [
        ("", "no generating vector"),
        ("1\nabc\n", ":2:"),
        ("1 1\n3 5\n", "expected index 2"),
        ("1 1\n2\n", ":2:"),
        ("1 2 3\n", ":1:"),
        ("1\n0\n", "positive"),
    ],
)
def test_load_generating_vector_errors(tmp_path, content, message):
    path = tmp_path / "z.txt"
    path.write_text(content)
    with pytest.raises(GeneratingVectorError, match=message):
        load_generating_vector(path)


def test_load_generating_vector_missing_file(tmp_path):
    with pytest.raises(GeneratingVectorError):
        load_generating_vector(tmp_path / "missing.txt")


def test_generating_vector_check(caplog):
    vector = GeneratingVector((1, 3, 5), declared_n=16, source="test")
    vector.check(16, 3)
    with pytest.raises(GeneratingVectorError):
        vector.check(16, 4)

    with caplog.at_level("WARNING", logger="uqcov"):
        vector.check(15, 2)
    assert "constructed for n=16" in caplog.text
    assert "not coprime" in caplog.text

    with pytest.raises(GeneratingVectorError):
        GeneratingVector(())
    with pytest.raises(GeneratingVectorError):
        GeneratingVector((1, -3))


def test_builtin_korobov_vector():
    assert builtin_korobov_vector(8, 2, multiplier=3).components == (1, 3)
    assert builtin_korobov_vector(16, 3, multiplier=5).components == (1, 5, 9)
    assert builtin_korobov_vector(1024, 1).components == (1,)

    vector = builtin_korobov_vector(2**10, 4)
    assert len(vector) == 4
    assert vector.components[0] == 1
    assert all(math.gcd(c, 2**10) == 1 for c in vector.components)
    assert vector.source.startswith("builtin:korobov")

    with pytest.raises(GeneratingVectorError):
        builtin_korobov_vector(1000, 2)
    with pytest.raises(GeneratingVectorError):
        builtin_korobov_vector(2**21, 2)


def _p2(n, a, dim):
    z = np.array([pow(a, j, n) for j in range(dim)])
    x = (np.arange(n)[:, None] * z % n) / n
    factors = 1.0 + 2.0 * math.pi**2 * (x * x - x + 1.0 / 6.0)
    return np.mean(np.prod(factors, axis=1)) - 1.0


@pytest.mark.parametrize("n", [2**6, 2**10, 2**12])
@pytest.mark.parametrize("dim", [2, 4, 8])
def test_korobov_table_matches_search(n, dim):
    a = korobov_multiplier(n, dim)
    assert a % 2 == 1
    assert 3 <= a < n // 2
    searched = search_korobov_multiplier(n, dim)
    assert _p2(n, a, dim) <= _p2(n, searched, dim) * (1.0 + 1e-9)


def test_korobov_multiplier_lookup(monkeypatch):
    assert korobov_multiplier(2**10, 4) == 493
    assert builtin_korobov_vector(2**10, 4).components == (1, 493, 361, 821)

    def no_search(n, dim):
        raise AssertionError(f"searched n={n}, dim={dim}")

    monkeypatch.setattr(cubature, "search_korobov_multiplier", no_search)
    assert korobov_multiplier(2**20, 3) == 241111
    assert korobov_multiplier(2**17, 8) == 18725
    with pytest.raises(AssertionError, match="dim=9"):
        korobov_multiplier(2**10, 9)
    with pytest.raises(AssertionError, match="n=4,"):
        korobov_multiplier(4, 2)


def test_one_dimensional_lattice_is_rectangle_rule():
    rule = make_rule("lattice", 8, 1)
    np.testing.assert_allclose(rule.nodes(1)[:, 0], np.arange(8) / 8)


def test_make_rule():
    assert isinstance(make_rule("midpoint", 16, 2), MidpointRule)
    rule = make_rule(RuleFamily.LATTICE, 16, 2, vector=GeneratingVector((1, 5)))
    assert isinstance(rule, LatticeRule)
    assert rule.z == (1, 5)
    with pytest.raises(ValueError):
        make_rule("sparse-grid", 16, 2)
    with pytest.raises(GeneratingVectorError):
        make_rule("lattice", 16, 3, vector=GeneratingVector((1, 5)))


def test_random_shift():
    shift = random_shift(3, seed=42)
    assert len(shift) == 3
    assert all(0.0 <= s < 1.0 for s in shift)
    assert random_shift(3, seed=42) == shift


@pytest.mark.parametrize("dim", [3, 4])
def test_lattice_product_integrand(a_star_exp, dim):
    # product test with the builtin vector
    d = Exponential(1.0)
    n = 2**15
    rule = make_rule(RuleFamily.LATTICE, n, dim)
    errors = {}
    for a in (a_star_exp, 1.0):
        transforms = [ScaledInverseCdf(d, a)] * dim
        value = integrate_weighted(_prod, [d] * dim, transforms, rule)
        errors[a] = abs(value - 1.0)
    assert errors[a_star_exp] <= 1e-4
    assert errors[a_star_exp] * 100.0 <= errors[1.0]
