"""Worst-case analysis of scaled change of variables.

For a density ρ, a transform ν and an exponent p the three auxiliary functions

    h₀(t) = w(t)·|ν(t)|^{1/p*},   h₁(t) = w(t)·ν′(t)^{1/p*},   h₂(t) = w′(t)·|ν(t)|^{1/p*}

(w = ρ∘ν·ν′) control how much the transform inflates the norm of an integrand.  The
factor C₁,ₚ(ν) is bounded by sup|h₁| + ‖h₂‖_{L_p}; in d dimensions the factor is the
d-th power (or the product of the per-coordinate factors).

Closed forms are used for the exponential and Gaussian densities with the scaled
inverse-cdf transform and for the polynomial tail density with ν_b.  Everything else
is computed numerically in the domain coordinate x = ν(t), where

    sup_B |h(t)| = sup_D |h(ν^{-1}(x))|   and   ∫_B |h(t)|^p dt = ∫_D |h|^p / ν′ dx.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.integrate
import scipy.optimize

from uqcov.base import constants
from uqcov.density import Density, Domain, Exponential, Gaussian, PolyTail
from uqcov.transform import PolyGrowth, ScaledInverseCdf, Transform

ScalarFunction = Callable[[np.ndarray], np.ndarray]
Interval = Tuple[float, float]


class UnsupportedDensityError(NotImplementedError):
    """The requested quantity is not available for this density."""

    ...


class NormMethod(enum.Enum):
    """How a norm was obtained."""

    CLOSED_FORM = "closed_form"
    NUMERIC = "numeric"


@dataclasses.dataclass(frozen=True)
class PExponent:
    """Integrability exponent p in [1, ∞] together with its conjugate p*."""

    p: float

    def __post_init__(self):
        if math.isnan(self.p) or self.p < 1.0:
            raise ValueError(f"p must be in [1, inf], got {self.p}")

    @classmethod
    def parse(cls, value: Union[str, float, int, PExponent]) -> PExponent:
        """Create from a number or a string such as ``"2"``, ``"inf"`` or ``"∞"``."""
        if isinstance(value, PExponent):
            return value
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinity", "∞", "+inf"):
                return cls(math.inf)
            try:
                return cls(float(text))
            except ValueError:
                raise ValueError(f"cannot parse p from {value!r}") from None
        return cls(float(value))

    @property
    def p_star(self) -> float:
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    @property
    def inv_p_star(self) -> float:
        """1/p* = 1 - 1/p, i.e. 0 for p = 1 and 1 for p = ∞."""
        return 1.0 - 1.0 / self.p

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.p)

    @property
    def is_integer(self) -> bool:
        return not self.is_infinite and float(self.p).is_integer()

    def __str__(self) -> str:
        return "inf" if self.is_infinite else f"{self.p:g}"


PLike = Union[PExponent, float, int, str]


@dataclasses.dataclass(frozen=True)
class NormReport:
    """h-function norms of a (density, transform, p) triple and the C₁,ₚ bound."""

    h0_sup: float
    h1_sup: float
    h2_lp: float
    c1p_bound: float
    method: NormMethod
    p: PExponent


class WeightedNorm(NamedTuple):
    """Result of :func:`std_change_weighted_norm`."""

    value: float
    diverged: bool


# -- numeric sup and L_p norms ---------------------------------------------------------


def _grids(interval: Interval, scale: float):
    """Interior grid and the point sequences approaching each end of the interval.

    Finite ends are approached by halving the distance, infinite ends by doubling.
    Every sequence is ordered towards its end.  Endpoints themselves are never
    included.
    """
    lo, hi = interval
    halvings = 2.0 ** -np.arange(1, constants.ENDPOINT_HALVINGS + 1)
    doublings = 2.0 ** np.arange(1, constants.INFINITE_END_DOUBLINGS + 1)
    span = constants.SUP_GRID_SPAN * scale
    n = constants.SUP_GRID_SIZE

    if math.isfinite(lo) and math.isfinite(hi):
        width = hi - lo
        interior = np.linspace(lo, hi, n + 2)[1:-1]
        return interior, [lo + width * halvings, hi - width * halvings]
    if math.isfinite(lo):
        interior = lo + span * np.arange(1, n + 1) / n
        return interior, [lo + span * halvings, lo + span * doublings]
    if math.isfinite(hi):
        interior = hi - span * np.arange(1, n + 1) / n
        return interior, [hi - span * halvings, hi - span * doublings]
    interior = np.linspace(-span, span, n)
    return interior, [-span * doublings, span * doublings]


def _evaluate(g: ScalarFunction, points: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.abs(np.asarray(g(points), dtype=float)).reshape(points.shape)


def _blows_up(values: np.ndarray, interior_max: float) -> bool:
    if not np.all(np.isfinite(values)):
        return True
    end = values[-1]
    if end > constants.DIVERGENCE_CAP * max(1.0, interior_max):
        return True
    still_growing = end - values[-2] > constants.ENDPOINT_RELATIVE_INCREMENT * end
    return bool(end >= values.max() and end > 0.0 and still_growing)


def numeric_sup(g: ScalarFunction, interval: Interval, scale: float = 1.0) -> float:
    """Supremum of |g| over an open interval.

    g is evaluated on a dense uniform grid plus point sequences approaching both ends
    (halving the distance to finite ends, doubling towards infinite ones).  The
    largest grid value is polished with a bounded golden-section/Brent search between
    its grid neighbours.

    Args:
        g:  Vectorized function.
        interval:  (lo, hi), ends may be infinite.
        scale:  Length scale of g, sizes the uniform grid on infinite intervals.

    Returns:
        The supremum, or ``inf`` if g blows up towards one of the ends (non-finite
        values, values exceeding ``DIVERGENCE_CAP`` times the interior maximum, or
        values still growing at the last refinement).
    """
    interior, sequences = _grids(interval, scale)
    interior_values = _evaluate(g, interior)
    if not np.all(np.isfinite(interior_values)):
        return math.inf
    interior_max = float(interior_values.max())

    sequence_values = [_evaluate(g, seq) for seq in sequences]
    if any(_blows_up(values, interior_max) for values in sequence_values):
        return math.inf

    points = np.concatenate([interior, *sequences])
    values = np.concatenate([interior_values, *sequence_values])
    order = np.argsort(points)
    points, values = points[order], values[order]

    k = int(np.argmax(values))
    best = float(values[k])
    left = points[max(k - 1, 0)]
    right = points[min(k + 1, len(points) - 1)]
    if right > left:

        def negative(s: float) -> float:
            value = _evaluate(g, np.array([s]))[0]
            return -value if math.isfinite(value) else 0.0

        result = scipy.optimize.minimize_scalar(
            negative,
            bounds=(left, right),
            method="bounded",
            options={"xatol": max(1e-15, 1e-12 * (right - left))},
        )
        best = max(best, -float(result.fun))
    return best


def _quad_breakpoints(interval: Interval, scale: float) -> list:
    lo, hi = interval
    span = constants.SUP_GRID_SPAN * scale
    if math.isfinite(lo) and math.isfinite(hi):
        return [lo, hi]
    if math.isfinite(lo):
        return [lo, lo + span, math.inf]
    if math.isfinite(hi):
        return [-math.inf, hi - span, hi]
    return [-math.inf, -span, 0.0, span, math.inf]


def _integrable_at_ends(
    g: ScalarFunction, interval: Interval, p: float, scale: float
) -> bool:
    # distance-to-end (or |x| at infinity) times |g|^p must decay towards every end
    lo, hi = interval
    _, sequences = _grids(interval, scale)
    ends = [lo, hi]
    for seq, end in zip(sequences, ends):
        with np.errstate(all="ignore"):
            values = _evaluate(g, seq) ** p
            weights = np.abs(seq) if math.isinf(end) else np.abs(end - seq)
            mass = values * weights
        if not np.all(np.isfinite(mass)):
            return False
        if mass[-1] > 0.0 and mass[-1] >= mass[-4] * (1.0 - 1e-9):
            return False
    return True


def _quad(integrand, a: float, b: float, limit: int):
    result = scipy.integrate.quad(
        integrand,
        a,
        b,
        epsabs=constants.QUAD_EPSABS,
        epsrel=constants.QUAD_EPSREL,
        limit=limit,
        full_output=1,
    )
    # a fourth entry (message) is only present if QUADPACK reports a problem
    return result[0], len(result) <= 3


def numeric_lp(
    g: ScalarFunction, interval: Interval, p: float, scale: float = 1.0
) -> float:
    """L_p norm of g over an interval by adaptive Gauss-Kronrod quadrature.

    Pieces that QUADPACK does not resolve are retried with a larger subdivision limit.
    ``p = inf`` delegates to :func:`numeric_sup`.

    Returns:
        The norm, or ``inf`` if the integral diverges.
    """
    logger = logging.getLogger("uqcov")
    if math.isinf(p):
        return numeric_sup(g, interval, scale)
    if not _integrable_at_ends(g, interval, p, scale):
        return math.inf

    def integrand(s: float) -> float:
        return float(_evaluate(g, np.array([s]))[0]) ** p

    breakpoints = _quad_breakpoints(interval, scale)
    total = 0.0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        value, converged = _quad(integrand, a, b, constants.QUAD_LIMIT)
        if not converged:
            value, converged = _quad(integrand, a, b, constants.QUAD_REFINED_LIMIT)
        if not math.isfinite(value):
            return math.inf
        if not converged:
            logger.debug("quadrature on [%g, %g] did not fully converge", a, b)
        total += value
    return total ** (1.0 / p)


# -- h-functions -----------------------------------------------------------------------


def _is_standard_pair(d: Density, tr: Transform) -> bool:
    if isinstance(tr, ScaledInverseCdf):
        return tr.base == d and isinstance(d, (Exponential, Gaussian))
    return isinstance(tr, PolyGrowth) and tr.base == d


def _domain_scale(d: Density, tr: Transform) -> float:
    return d.scale * tr.a if isinstance(tr, ScaledInverseCdf) else d.scale


def _log_h(which: int, d: Density, tr: Transform, p: PExponent, x: np.ndarray):
    q = p.inv_p_star
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if which == 2:
            log_value = tr.log_abs_weight_prime_at(x, d)
        else:
            log_value = tr.log_weight_at(x, d)
        if q > 0.0:
            if which == 1:
                log_value = log_value + q * tr.log_jacobian_at(x)
            else:
                log_value = log_value + q * np.log(np.abs(x))
    return log_value


def _numeric_h(which: int, d: Density, tr: Transform, p: PExponent) -> float:
    interval = d.domain.support
    scale = _domain_scale(d, tr)
    if which < 2 or p.is_infinite:
        return numeric_sup(
            lambda x: np.exp(_log_h(which, d, tr, p, x)), interval, scale=scale
        )

    def scaled(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(_log_h(2, d, tr, p, x) - tr.log_jacobian_at(x) / p.p)

    return numeric_lp(scaled, interval, p.p, scale=scale)


def _factorial_root(p: float) -> float:
    """((p-1)!)^{1/p} via log-gamma."""
    return math.exp(math.lgamma(p) / p)


def _closed_h0(d: Density, tr: Transform, p: PExponent) -> Optional[float]:
    if not isinstance(tr, ScaledInverseCdf) or not _is_standard_pair(d, tr):
        return None
    a, q = tr.a, p.inv_p_star
    if q == 0.0:
        return a
    if a <= 1.0:
        return math.inf
    if isinstance(d, Exponential):
        return a ** (1.0 + q) * (d.lam / (math.e * p.p_star * (a - 1.0))) ** q
    return a * (a * d.sigma / math.sqrt(math.e * p.p_star * (a * a - 1.0))) ** q


def _closed_h1(d: Density, tr: Transform, p: PExponent) -> Optional[float]:
    if not _is_standard_pair(d, tr):
        return None
    q = p.inv_p_star
    if isinstance(tr, PolyGrowth):
        b, c = tr.b, tr.base.c
        if b * c - (b + 1.0) * (1.0 + q) < 0.0:
            return math.inf
        return (c - 1.0) * b ** (1.0 + q)
    a = tr.a
    if isinstance(d, Exponential):
        return a ** (1.0 + q) * d.lam**q if a >= 1.0 + q else math.inf
    if a * a < 1.0 + q:
        return math.inf
    return a ** (1.0 + q) * (d.sigma * math.sqrt(2.0 * math.pi)) ** q


def _closed_h2(d: Density, tr: Transform, p: PExponent) -> Optional[float]:
    if not _is_standard_pair(d, tr):
        return None
    q = p.inv_p_star

    if isinstance(tr, PolyGrowth):
        if not p.is_infinite:
            return None
        b, c = tr.b, tr.base.c
        k = b * (c - 1.0)
        if k == 1.0:
            return 0.0
        if b * (c - 2.0) < 2.0:
            return math.inf
        ratio = (b * (c - 2.0) - 2.0) / (k - 2.0)
        return b * b * (c - 1.0) * (k - 1.0) / (k - 2.0) * ratio ** (c - 2.0 - 2.0 / b)

    a = tr.a
    if a == 1.0:
        # w ≡ 1
        return 0.0
    if not (p.is_infinite or p.is_integer):
        return None

    if isinstance(d, Exponential):
        lam = d.lam
        if p.is_infinite:
            if a <= 2.0:
                return math.inf
            return a * a * (a - 1.0) * lam / ((a - 2.0) * math.e)
        if a <= 1.0 + q:
            return math.inf
        return (
            (a - 1.0)
            * a ** (1.0 + q)
            / (p.p * (a - 2.0) + 1.0)
            * lam**q
            * _factorial_root(p.p)
        )

    sigma = d.sigma
    if p.is_infinite:
        if a * a <= 2.0:
            return math.inf
        c2 = math.sqrt(2.0 * math.pi) * a * a * (a * a - 1.0) / sigma
        return c2 / math.e * 2.0 * sigma**2 / (a * a - 2.0)
    if a * a <= 1.0 + q:
        return math.inf
    c3 = (
        math.sqrt(2.0 * math.pi)
        * a ** (1.0 + q)
        * (a * a - 1.0)
        * sigma**q
        / (p.p * (a * a - 2.0) + 1.0)
    )
    return c3 * 2.0 * _factorial_root(p.p) / (2.0 * math.pi) ** (1.0 / (2.0 * p.p))


_CLOSED_FORMS = {0: _closed_h0, 1: _closed_h1, 2: _closed_h2}


def _h_norm(
    which: int, d: Density, tr: Transform, p: PLike, method: Optional[NormMethod]
) -> Tuple[float, NormMethod]:
    logger = logging.getLogger("uqcov")
    p = PExponent.parse(p)
    tr.check_density(d)

    if method is not NormMethod.NUMERIC:
        value = _CLOSED_FORMS[which](d, tr, p)
        if value is not None:
            return value, NormMethod.CLOSED_FORM
        if method is NormMethod.CLOSED_FORM:
            raise UnsupportedDensityError(
                f"no closed form for h{which} with {d}, {tr}, p={p}"
            )

    logger.debug("computing h%d numerically for %s, %s, p=%s", which, d, tr, p)
    return _numeric_h(which, d, tr, p), NormMethod.NUMERIC


def h0_sup(
    d: Density, tr: Transform, p: PLike, method: Optional[NormMethod] = None
) -> float:
    """ess-sup of ρ(ν(t))ν′(t)|ν(t)|^{1/p*} over B.

    Args:
        d:  Weight density.
        tr:  Transform compatible with d.
        p:  Exponent.
        method:  Force ``NUMERIC`` evaluation, or require ``CLOSED_FORM``.  By default
            the closed form is used when available.

    Returns:
        The norm, ``inf`` in divergent cases.
    """
    return _h_norm(0, d, tr, p, method)[0]


def h1_sup(
    d: Density, tr: Transform, p: PLike, method: Optional[NormMethod] = None
) -> float:
    """ess-sup of ρ(ν(t))ν′(t)^{1+1/p*} over B (see :func:`h0_sup`)."""
    return _h_norm(1, d, tr, p, method)[0]


def h2_lp(
    d: Density, tr: Transform, p: PLike, method: Optional[NormMethod] = None
) -> float:
    """L_p norm of (ρ(ν(t))ν′(t))′·|ν(t)|^{1/p*} over B (see :func:`h0_sup`)."""
    return _h_norm(2, d, tr, p, method)[0]


def c1p_bound(
    d: Density, tr: Transform, p: PLike, method: Optional[NormMethod] = None
) -> NormReport:
    """Upper bound of C₁,ₚ(ν) as sup|h₁| + ‖h₂‖_{L_p}.

    The report is marked ``CLOSED_FORM`` only if all norms came from closed forms.
    """
    p = PExponent.parse(p)
    h0, m0 = _h_norm(0, d, tr, p, method)
    h1, m1 = _h_norm(1, d, tr, p, method)
    h2, m2 = _h_norm(2, d, tr, p, method)
    closed = all(m is NormMethod.CLOSED_FORM for m in (m0, m1, m2))
    return NormReport(
        h0_sup=h0,
        h1_sup=h1,
        h2_lp=h2,
        c1p_bound=h1 + h2,
        method=NormMethod.CLOSED_FORM if closed else NormMethod.NUMERIC,
        p=p,
    )


def cdp_bound(report: Union[NormReport, Sequence[NormReport]], dim: int = 1) -> float:
    """C_{d,p} bound: the univariate bound to the power dim.

    For heterogeneous coordinates pass one report per coordinate; the result is then
    the product of their bounds and dim is ignored.
    """
    if isinstance(report, NormReport):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        return report.c1p_bound**dim
    return math.prod(r.c1p_bound for r in report)


def j1_norm(p: PLike, domain: Domain = Domain.HALF_LINE) -> float:
    """Operator norm of the plain integral over the cube side B."""
    p = PExponent.parse(p)
    value = 1.0 if p.p == 1.0 else (1.0 + p.p_star) ** (-1.0 / p.p_star)
    return value if domain is Domain.HALF_LINE else value / 2.0


def integral_norm_bound(
    report: NormReport, domain: Domain = Domain.HALF_LINE, dim: int = 1
) -> float:
    """Bound (‖J₁‖·C₁,ₚ)^dim of the norm of the weighted integral on D^dim."""
    return (j1_norm(report.p, domain) * report.c1p_bound) ** dim


def transformed_error_bound(cube_error: float, report: NormReport, dim: int = 1) -> float:
    """Worst-case error on D^dim implied by the worst-case error of the cube rule."""
    return cube_error * cdp_bound(report, dim)


# -- optimal scale ---------------------------------------------------------------------


def _exponential_optimum_formula(p: float) -> float:
    f = _factorial_root(p)
    numerator = (
        2.0 * p * (2.0 * p - 1.0) ** 2
        + (7.0 * p * p - 6.0 * p + 1.0) * f
        + math.sqrt(p - 1.0)
        * math.sqrt(f)
        * math.sqrt(
            4.0 * p * p * (2.0 * p - 1.0) ** 2
            + (17.0 * p**3 - 19.0 * p * p + 7.0 * p - 1.0) * f
        )
    )
    return numerator / (2.0 * p * (2.0 * p - 1.0) * (p + f))


def _scale_threshold(d: Density, p: PExponent) -> float:
    """Smallest a for which the closed-form bound is finite (exclusive)."""
    if isinstance(d, Exponential):
        return 2.0 if p.is_infinite else 1.0 + p.inv_p_star
    return math.sqrt(2.0) if p.is_infinite else math.sqrt(1.0 + p.inv_p_star)


def _minimize_bound(d: Density, p: PExponent) -> float:
    def objective(a: float) -> float:
        value = c1p_bound(d, ScaledInverseCdf(d, a), p).c1p_bound
        return min(value, 1e300)

    lower = _scale_threshold(d, p)
    result = scipy.optimize.minimize_scalar(
        objective,
        bounds=(lower * (1.0 + 1e-9), constants.MAX_SCALE),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(result.x)


def optimal_a(d: Density, p: PLike) -> Tuple[float, float]:
    """Scale a* minimizing the C₁,ₚ bound of ν_a, and the bound at a*.

    Closed forms are used for the exponential density (p = ∞ and integer p) and the
    Gaussian density (p = ∞ and p = 2).  The general integer-p exponential formula is
    cross-checked against a numeric minimization and replaced by it on disagreement.
    Other cases are minimized numerically over (threshold, 64].

    Raises:
        UnsupportedDensityError: for densities other than exponential and Gaussian.
    """
    logger = logging.getLogger("uqcov")
    p = PExponent.parse(p)
    if not isinstance(d, (Exponential, Gaussian)):
        raise UnsupportedDensityError(f"no optimal scale available for {d}")

    if p.p == 1.0:
        # the standard change has C = 1
        a_star = 1.0
    elif isinstance(d, Exponential):
        if p.is_infinite:
            a_star = 2.0 + 4.0 / (math.sqrt(17.0 + 16.0 * math.e) + 1.0)
        elif p.p == 2.0:
            a_star = (53.0 + math.sqrt(217.0)) / 36.0
        elif p.is_integer:
            a_star = _exponential_optimum_formula(p.p)
            a_numeric = _minimize_bound(d, p)
            if abs(a_star - a_numeric) > constants.OPTIMUM_CROSS_CHECK_RTOL * a_star:
                logger.warning(
                    "closed-form optimum %.10g for p=%s disagrees with numeric"
                    " minimization (%.10g), using the latter",
                    a_star,
                    p,
                    a_numeric,
                )
                a_star = a_numeric
        else:
            a_star = _minimize_bound(d, p)
    elif p.is_infinite:
        a_star = math.sqrt(2.0 + 2.0 / math.sqrt(2.0 + math.e))
    elif p.p == 2.0:
        a_star = 1.5
    else:
        a_star = _minimize_bound(d, p)

    bound = c1p_bound(d, ScaledInverseCdf(d, a_star), p).c1p_bound
    logger.debug("optimal scale for %s, p=%s: a*=%.12g, C=%.12g", d, p, a_star, bound)
    return a_star, bound


# -- operator norm of the weighted integral --------------------------------------------


def kappa(x: float, z: float) -> int:
    """Kernel κ(x, z) of the weighted integral on the anchored space."""
    if x > z >= 0.0:
        return 1
    if x < z < 0.0:
        return -1
    return 0


def _kernel_tail(d: Density, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0.0, d.sf(z), -np.asarray(d.cdf(z)))


def kernel_integral(d: Density, z: float) -> float:
    """∫_D κ(x, z) ρ(x) dx evaluated by adaptive quadrature."""
    if z >= 0.0:
        value, _ = scipy.integrate.quad(
            d.pdf, z, math.inf, epsabs=0.0, epsrel=1e-13, limit=200
        )
        return value
    if d.domain is Domain.HALF_LINE:
        return 0.0
    value, _ = scipy.integrate.quad(
        d.pdf, -math.inf, z, epsabs=0.0, epsrel=1e-13, limit=200
    )
    return -value


def operator_norm_I1(d: Density, p: PLike) -> float:
    """Norm of the univariate weighted integral as an operator on the anchored space.

    1 for p = 1, ``(λ/p*)^{1/p*}`` for the exponential density, and otherwise the L_{p*}
    norm of z ↦ ∫ κ(x, z) ρ(x) dx by quadrature.
    """
    p = PExponent.parse(p)
    if p.p == 1.0:
        return 1.0
    if isinstance(d, Exponential):
        return (d.lam / p.p_star) ** (1.0 / p.p_star)
    return numeric_lp(
        lambda z: _kernel_tail(d, z), d.domain.support, p.p_star, scale=d.scale
    )


def std_change_weighted_norm(
    fprime_abs: ScalarFunction, d: Density, p: PLike
) -> WeightedNorm:
    """Norm of the transformed integrand for the standard change of variables (a = 1).

    Equals (∫_D |f′|^p ρ^{-p/p*} dx)^{1/p}, resp. ess-sup |f′/ρ| for p = ∞.  An infinite
    value shows that the standard change does not map f into the cube space.
    """
    p = PExponent.parse(p)
    q = p.inv_p_star

    def integrand(x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            log_f = np.log(np.abs(np.asarray(fprime_abs(x), dtype=float)))
            return np.exp(log_f - q * d._logpdf(np.asarray(x, dtype=float)))

    if p.is_infinite:
        value = numeric_sup(integrand, d.domain.support, scale=d.scale)
    else:
        value = numeric_lp(integrand, d.domain.support, p.p, scale=d.scale)
    return WeightedNorm(value, math.isinf(value))
