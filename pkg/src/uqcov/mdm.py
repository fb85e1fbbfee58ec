"""Multivariate decomposition method for integrands with product weights.

An integrand f on D^ℕ (finitely supported in practice) is split into its anchored
components f_u, each depending only on the coordinates in u and vanishing if one of
them is 0.  Only the subsets u in the active set are integrated, each with its own
number of cubature points n_u.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from uqcov.analysis import PExponent, PLike, c1p_bound, operator_norm_I1
from uqcov.base import constants
from uqcov.cubature import GeneratingVector, RuleFamily, make_rule
from uqcov.density import Density
from uqcov.transform import Integrand, Transform, TransformedIntegrand

Subset = Tuple[int, ...]


class MdmConfigurationError(ValueError):
    """Weights, tolerance or enumeration limits do not allow a finite active set."""

    ...


class AnchoredCostError(MdmConfigurationError):
    """Anchored component requested for a subset too large to evaluate."""

    ...


def subset_order(u: Subset) -> Tuple[int, Subset]:
    """Sort key: by cardinality, then lexicographically."""
    return (len(u), u)


class ProductWeights(ABC):
    """Product weights γ_u = ∏_{j∈u} γ_j with a non-increasing sequence γ_j."""

    q: float

    @abstractmethod
    def gamma(self, j: int) -> float:
        """γ_j for the 1-based coordinate index j."""

    @abstractmethod
    def check_summable(self) -> None:
        """Raise MdmConfigurationError if Σ γ_j^{q*} diverges."""

    @property
    def q_star(self) -> float:
        return PExponent(self.q).p_star

    def subset_weight(self, u: Sequence[int]) -> float:
        return math.prod(self.gamma(j) for j in u)


@dataclasses.dataclass(frozen=True)
class PowerLaw(ProductWeights):
    """γ_j = j^{-β}."""

    beta: float
    q: float = 2.0

    def __post_init__(self):
        if not self.beta > 0.0:
            raise MdmConfigurationError(f"beta must be positive, got {self.beta}")
        PExponent(self.q)

    def gamma(self, j: int) -> float:
        return float(j) ** -self.beta

    def check_summable(self) -> None:
        if self.beta * self.q_star <= 1.0:
            raise MdmConfigurationError(
                f"weights j^-{self.beta:g} are not {self.q_star:g}-summable"
                " (beta * q* must exceed 1)"
            )


@dataclasses.dataclass(frozen=True)
class TruncatedWeights(ProductWeights):
    """Explicit weights γ_1, …, γ_J; all later weights are 0."""

    values: Tuple[float, ...]
    q: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(v <= 0.0 for v in self.values):
            raise MdmConfigurationError("weights must be positive")
        if any(b > a for a, b in zip(self.values, self.values[1:])):
            raise MdmConfigurationError("weights must be non-increasing")
        PExponent(self.q)

    def gamma(self, j: int) -> float:
        return self.values[j - 1] if j <= len(self.values) else 0.0

    def check_summable(self) -> None:
        pass


@dataclasses.dataclass(frozen=True)
class ActiveSet:
    """Subsets u with γ_u·‖I₁‖^{|u|} > ε, ordered by (|u|, elements)."""

    subsets: Tuple[Subset, ...]
    epsilon: float
    norm_I1: float
    weights: ProductWeights
    criterion_value: Dict[Subset, float]

    def __contains__(self, u) -> bool:
        return tuple(u) in self.criterion_value

    def __iter__(self):
        return iter(self.subsets)

    def __len__(self) -> int:
        return len(self.subsets)

    @property
    def superposition_dimension(self) -> int:
        return max(len(u) for u in self.subsets)


def _extension_boost(weights: ProductWeights, norm_i1: float) -> List[float]:
    """boost[j] = ∏_{i≥j} max(1, ‖I₁‖γ_i), the largest factor by which extending a
    subset with indices ≥ j can increase its criterion (1 beyond the list)."""
    factors = []
    j = 1
    while norm_i1 * weights.gamma(j) > 1.0:
        if j > constants.MAX_COORDINATE_INDEX:
            raise MdmConfigurationError(
                "norm of the integral times the weights stays above 1 beyond"
                f" coordinate {constants.MAX_COORDINATE_INDEX}"
            )
        factors.append(norm_i1 * weights.gamma(j))
        j += 1
    boost = [1.0] * (len(factors) + 2)
    for i in range(len(factors), 0, -1):
        boost[i] = boost[i + 1] * factors[i - 1]
    return boost


def active_set(weights: ProductWeights, norm_I1: float, eps: float) -> ActiveSet:
    """Enumerate Act(ε) = {u : γ_u‖I₁‖^{|u|} > ε} by pruned depth-first search.

    Subsets are extended by indices larger than their maximum.  A branch is cut once
    no extension can exceed ε, which for ‖I₁‖γ_j ≤ 1 is as soon as the extended
    subset itself fails.

    Raises:
        MdmConfigurationError: for eps <= 0, non-summable weights, or if the
            enumeration exceeds the subset size or coordinate index limits.
    """
    logger = logging.getLogger("uqcov")
    if not eps > 0.0:
        raise MdmConfigurationError(f"eps must be positive, got {eps}")
    weights.check_summable()
    if norm_I1 > 1.0:
        logger.warning(
            "norm of the univariate integral is %.6g > 1, the active set need not"
            " be downward closed",
            norm_I1,
        )

    boost = _extension_boost(weights, norm_I1)

    def boost_at(j: int) -> float:
        return boost[j] if j < len(boost) else 1.0

    criterion = {(): 1.0}
    stack = [((), 1.0)]
    while stack:
        u, value = stack.pop()
        j = (u[-1] if u else 0) + 1
        while True:
            extended = value * norm_I1 * weights.gamma(j)
            if extended * boost_at(j + 1) <= eps:
                break
            if j > constants.MAX_COORDINATE_INDEX:
                raise MdmConfigurationError(
                    f"active set reaches beyond coordinate"
                    f" {constants.MAX_COORDINATE_INDEX}, increase eps"
                )
            v = u + (j,)
            if len(v) > constants.MAX_SUBSET_SIZE:
                raise MdmConfigurationError(
                    f"active set contains subsets with more than"
                    f" {constants.MAX_SUBSET_SIZE} elements, increase eps"
                )
            if extended > eps:
                criterion[v] = extended
            stack.append((v, extended))
            j += 1

    subsets = tuple(sorted(criterion, key=subset_order))
    logger.debug("active set for eps=%g: %d subsets", eps, len(subsets))
    return ActiveSet(subsets, eps, norm_I1, weights, criterion)


def superposition_dimension(
    weights: ProductWeights, norm_I1: float, eps: float
) -> int:
    """d(ε), the largest cardinality in the active set."""
    return active_set(weights, norm_I1, eps).superposition_dimension


def power_law_superposition_dimension(
    beta: float, norm_I1: float, eps: float
) -> int:
    """max{k : ‖I₁‖^k/(k!)^β > ε} for power law weights, 0 if no k ≥ 1 qualifies."""
    log_eps = math.log(eps)
    log_norm = math.log(norm_I1)
    best = 0
    for k in range(1, constants.MAX_SUBSET_SIZE + 1):
        if k * log_norm - beta * math.lgamma(k + 1) > log_eps:
            best = k
    return best


# -- anchored decomposition ------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class AnchoredComponent:
    """f_u as a function of the coordinates in u.

    f_u(x_u) = Σ_{v⊆u} (-1)^{|u|-|v|} f(x_v; 0), where f(x_v; 0) sets all coordinates
    outside v to 0.  f takes points of shape (m, dim).
    """

    f: Integrand
    u: Subset
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(self.u))
        if len(self.u) > constants.MAX_SUBSET_SIZE:
            raise AnchoredCostError(
                f"anchored component of a subset with {len(self.u)} elements needs"
                f" 2^{len(self.u)} evaluations per point"
            )

    @property
    def vanishes(self) -> bool:
        """True if u contains coordinates f does not depend on."""
        return any(j > self.dim for j in self.u)

    def __call__(self, x_u: np.ndarray) -> np.ndarray:
        points = np.asarray(x_u, dtype=float)
        if points.ndim < 2:
            points = points.reshape(1, len(self.u))
        m = points.shape[0]
        if self.vanishes:
            return np.zeros(m)

        # one evaluation of f per subset v of u
        total = np.zeros(m)
        k = len(self.u)
        for size in range(k + 1):
            for positions in itertools.combinations(range(k), size):
                anchored = np.zeros((m, self.dim))
                for i in positions:
                    anchored[:, self.u[i] - 1] = points[:, i]
                values = np.asarray(self.f(anchored), dtype=float).reshape(-1)
                total = total + (-1.0) ** (k - size) * values
        return total


def anchored_component(
    f: Integrand, u: Sequence[int], x_u: Union[Sequence[float], np.ndarray], dim: int
) -> Union[float, np.ndarray]:
    """Evaluate the anchored component f_u at x_u.

    Args:
        f:  Function of points with shape (m, dim).
        u:  Subset of 1-based coordinate indices.
        x_u:  One point (length |u|) or an array of shape (m, |u|).
        dim:  Number of coordinates f depends on.

    Raises:
        AnchoredCostError: if |u| exceeds the subset size limit.
    """
    component = AnchoredComponent(f, tuple(u), dim)
    values = component(x_u)
    if np.ndim(x_u) <= 1:
        return float(values[0])
    return values


# -- sample allocation -----------------------------------------------------------------


def _round_up(x: float, family: RuleFamily, size: int) -> int:
    """Smallest admissible n ≥ x: a power of 2, and a size-th power for midpoint."""
    if x <= 1.0:
        return 1
    exponent = math.ceil(math.log2(x))
    if family is RuleFamily.MIDPOINT and size > 1:
        exponent = size * math.ceil(exponent / size)
    return 1 << exponent


def _round_down(x: int, family: RuleFamily, size: int) -> int:
    """Largest admissible n ≤ x."""
    exponent = int(math.floor(math.log2(x)))
    if family is RuleFamily.MIDPOINT and size > 1:
        exponent = size * (exponent // size)
    return 1 << exponent


@dataclasses.dataclass(frozen=True)
class MdmPlan:
    """Number of cubature points per active subset and the resulting error bound."""

    active: ActiveSet
    n: Dict[Subset, int]
    estimates: Dict[Subset, float]
    error_bound: float
    target: float
    rule_family: RuleFamily

    @property
    def cost(self) -> int:
        return sum(self.n.values())

    @property
    def is_feasible(self) -> bool:
        return self.error_bound <= self.target


def allocate_samples(
    active: ActiveSet,
    eps: float,
    c1p: float,
    rule_family: Union[RuleFamily, str] = RuleFamily.LATTICE,
    alpha: float = 1.0,
    max_n: Optional[int] = None,
) -> MdmPlan:
    """Choose n_u for every active subset.

    With the error model γ_u·c1p^{|u|}·n_u^{-α} per subset, n_u is taken proportional
    to (γ_u c1p^{|u|})^{q*/(αq*+1)} and rounded up to a power of 2; the smallest
    proportionality factor for which (Σ_u (γ_u c1p^{|u|} n_u^{-α})^{q*})^{1/q*} does
    not exceed ε/2^{1/q*} is used.  For q* = ∞ every subset gets the smallest n_u with
    γ_u c1p^{|u|} n_u^{-α} ≤ ε/2.  The empty set is integrated exactly with n = 1.

    With max_n given, no subset gets more than max_n points.  mdm_integrate passes
    the largest n of the builtin Korobov vectors (2^20) for lattice rules without an
    explicit generating vector.  Capped subsets are logged as a warning and the
    returned plan reports the resulting error bound, so it may not be feasible.
    """
    logger = logging.getLogger("uqcov")
    family = RuleFamily(rule_family)
    q_star = active.weights.q_star
    if not c1p > 0.0 or not math.isfinite(c1p):
        raise MdmConfigurationError(f"c1p must be positive and finite, got {c1p}")
    if max_n is not None and max_n < 1:
        raise MdmConfigurationError(f"max_n must be positive, got {max_n}")

    scales = {
        u: active.weights.subset_weight(u) * c1p ** len(u) for u in active if u
    }

    def estimates_for(n: Dict[Subset, int]) -> Dict[Subset, float]:
        return {u: b * n[u] ** -alpha for u, b in scales.items()}

    def error_of(n: Dict[Subset, int]) -> float:
        values = estimates_for(n).values()
        if math.isinf(q_star):
            return max(values, default=0.0)
        return math.fsum(e**q_star for e in values) ** (1.0 / q_star)

    if math.isinf(q_star):
        target = eps / 2.0
        n = {
            u: _round_up((b / target) ** (1.0 / alpha), family, len(u))
            for u, b in scales.items()
        }
    else:
        target = eps / 2.0 ** (1.0 / q_star)
        exponent = q_star / (alpha * q_star + 1.0)

        def allocation(s: float) -> Dict[Subset, int]:
            return {u: _round_up(s * b**exponent, family, len(u)) for u, b in scales.items()}

        low, high = 0.0, 1.0
        while error_of(allocation(high)) > target:
            low, high = high, 2.0 * high
        for _ in range(60):
            middle = 0.5 * (low + high)
            if error_of(allocation(middle)) > target:
                low = middle
            else:
                high = middle
        n = allocation(high)

    if max_n is not None:
        capped = [u for u, k in n.items() if k > max_n]
        if capped:
            logger.warning(
                "%d active subsets need more than %d points and are capped, the"
                " error target %.6g is not met",
                len(capped),
                max_n,
                target,
            )
            for u in capped:
                n[u] = _round_down(max_n, family, len(u))

    estimates = estimates_for(n)
    error = error_of(n)
    n[()] = 1
    estimates[()] = 0.0
    return MdmPlan(active, n, estimates, error, target, family)


# -- integration -----------------------------------------------------------------------


def mdm_integrate(
    f: Integrand,
    density: Density,
    transform: Transform,
    weights: ProductWeights,
    eps: float,
    dim: int,
    p: PLike = math.inf,
    rule_family: Union[RuleFamily, str] = RuleFamily.LATTICE,
    c1p: Optional[float] = None,
    alpha: float = 1.0,
    norm_I1: Optional[float] = None,
    vector: Optional[GeneratingVector] = None,
    clip_eps: Optional[float] = None,
) -> Tuple[float, MdmPlan]:
    """Approximate the weighted integral of f by Σ_{u∈Act(ε)} Q_{|u|,n_u}(f_u).

    Args:
        f:  Integrand taking points of shape (m, dim).
        density:  Weight density of every coordinate.
        transform:  Change of variables of every coordinate.
        weights:  Product weights.
        eps:  Error tolerance.
        dim:  Number of coordinates f depends on.  Components of subsets with larger
            indices vanish and are skipped.
        p:  Exponent of the function space.
        rule_family:  Cubature rule used for the components.
        c1p:  Bound of the transform's norm inflation, computed if not given.
        alpha:  Assumed convergence rate of the cubature rule.
        norm_I1:  Norm of the univariate integral, computed if not given.
        vector:  Generating vector for lattice rules (builtin Korobov vectors if None).
        clip_eps:  Moves lattice nodes off the boundary of real line coordinates.

    Returns:
        Tuple of the approximation and the plan used.
    """
    logger = logging.getLogger("uqcov")
    if norm_I1 is None:
        norm_I1 = operator_norm_I1(density, p)
    if c1p is None:
        c1p = c1p_bound(density, transform, p).c1p_bound

    active = active_set(weights, norm_I1, eps)
    family = RuleFamily(rule_family)
    max_n = None
    if family is RuleFamily.LATTICE and vector is None:
        max_n = constants.MAX_KOROBOV_N
    plan = allocate_samples(active, eps, c1p, family, alpha, max_n=max_n)
    logger.info(
        "mdm: %d active subsets, d(eps)=%d, %d integrand evaluations",
        len(active),
        active.superposition_dimension,
        plan.cost,
    )

    contributions = []
    for u in active:
        if not u:
            contributions.append(float(np.asarray(f(np.zeros((1, dim)))).reshape(-1)[0]))
            continue
        component = AnchoredComponent(f, u, dim)
        if component.vanishes:
            continue
        rule = make_rule(
            plan.rule_family, plan.n[u], len(u), vector, clip_eps=clip_eps
        )
        g = TransformedIntegrand.homogeneous(component, transform, density, len(u))
        contributions.append(rule.apply(g))
    return math.fsum(contributions), plan
