"""Change of variables ν: B → D and the transformed integrand on the unit cube.

Substituting x = ν(t) turns the weighted integral of f over D^d into the plain
integral of

    g(t) = f(ν₁(t₁), …, ν_d(t_d)) · ∏_j ρ_j(ν_j(t_j)) ν_j′(t_j)

over the cube B^d.  The factor w(t) = ρ(ν(t)) ν′(t) is called the weight of the
transform.  Weights are evaluated in log space so that the ratio ρ(ay)/ρ(y) does not
overflow close to the singular endpoints.

Besides the cube coordinate t, every transform can also be evaluated in the domain
coordinate x = ν(t) (methods ending in ``_at``).  The worst-case analysis uses these
since t loses resolution close to the singular end of B while x does not.
"""

from __future__ import annotations

import dataclasses
import math
from abc import ABC, abstractmethod
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from uqcov.density import (
    ArrayLike,
    Density,
    Domain,
    DomainError,
    PolyTail,
    _as_array,
    _restore,
)

#: Integrand on D^d: maps an array of shape (m, d) to an array of shape (m,).
Integrand = Callable[[np.ndarray], np.ndarray]


class TransformConstructionError(ValueError):
    """Invalid transform parameters or incompatible transform/density combination."""

    ...


def _errstate():
    return np.errstate(divide="ignore", over="ignore", invalid="ignore")


@dataclasses.dataclass(frozen=True)
class Transform(ABC):
    """Strictly increasing change of variables from the cube side B onto D."""

    @property
    @abstractmethod
    def density(self) -> Density:
        """The density the transform is built from."""

    @property
    def domain(self) -> Domain:
        return self.density.domain

    def check_density(self, density: Density) -> None:
        """Raise if density cannot be used as weight together with this transform."""
        if density.domain is not self.domain:
            raise TransformConstructionError(
                f"{self} maps onto {self.domain.value} but {density} lives on"
                f" {density.domain.value}"
            )

    def _check_cube(self, t: np.ndarray) -> None:
        if self.domain is Domain.HALF_LINE:
            inside = (t >= 0.0) & (t < 1.0)
        else:
            inside = (t > -0.5) & (t < 0.5)
        if not np.all(inside):
            raise DomainError(f"{self}: cube coordinate outside the open cube side")

    def nu(self, t: ArrayLike) -> ArrayLike:
        """ν(t).

        Raises:
            DomainError: if t is outside B (in particular at a singular endpoint).
        """
        t_arr = _as_array(t)
        self._check_cube(t_arr)
        return _restore(self._nu(t_arr), t)

    def nu_prime(self, t: ArrayLike) -> ArrayLike:
        t_arr = _as_array(t)
        self._check_cube(t_arr)
        return _restore(np.exp(self._log_nu_prime(t_arr)), t)

    def weight(self, t: ArrayLike, density: Optional[Density] = None) -> ArrayLike:
        """Jacobian weight w(t) = ρ(ν(t)) ν′(t).

        Args:
            t:  Cube coordinate(s).
            density:  Weight density ρ.  Defaults to the density of the transform.
        """
        rho = self._weight_density(density)
        t_arr = _as_array(t)
        self._check_cube(t_arr)
        with _errstate():
            log_w = rho._logpdf(self._nu(t_arr)) + self._log_nu_prime(t_arr)
        return _restore(np.exp(log_w), t)

    def weight_prime(self, t: ArrayLike, density: Optional[Density] = None) -> ArrayLike:
        """Derivative of the Jacobian weight with respect to t."""
        rho = self._weight_density(density)
        t_arr = _as_array(t)
        self._check_cube(t_arr)
        with _errstate():
            value = self._weight_prime(t_arr, rho)
        return _restore(value, t)

    def _weight_density(self, density: Optional[Density]) -> Density:
        if density is None:
            return self.density
        self.check_density(density)
        return density

    # -- domain coordinate forms -------------------------------------------------------

    def log_weight_at(self, x: np.ndarray, density: Density) -> np.ndarray:
        """log w at the cube point mapped to x."""
        with _errstate():
            return density._logpdf(x) + self.log_jacobian_at(x)

    @abstractmethod
    def inverse(self, x: ArrayLike) -> ArrayLike:
        """ν^{-1}(x)."""

    @abstractmethod
    def log_jacobian_at(self, x: np.ndarray) -> np.ndarray:
        """log ν′(ν^{-1}(x))."""

    @abstractmethod
    def log_abs_weight_prime_at(self, x: np.ndarray, density: Density) -> np.ndarray:
        """log |w′| at the cube point mapped to x (-inf where w′ vanishes)."""

    @abstractmethod
    def _nu(self, t: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _log_nu_prime(self, t: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _weight_prime(self, t: np.ndarray, density: Density) -> np.ndarray:
        pass


@dataclasses.dataclass(frozen=True)
class ScaledInverseCdf(Transform):
    """ν_a(t) = a·Φ_ρ^{-1}(t) on [0, 1), resp. a·Φ_ρ^{-1}(t + 1/2) on (-1/2, 1/2).

    a = 1 is the standard change of variables with unit weight.
    """

    base: Density
    a: float = 1.0

    def __post_init__(self):
        if not isinstance(self.base, Density):
            raise TransformConstructionError(f"{self.base!r} is not a density")
        if not self.a >= 1.0 or not math.isfinite(self.a):
            raise TransformConstructionError(f"scale a must be >= 1, got {self.a}")

    @property
    def density(self) -> Density:
        return self.base

    def _base_quantile(self, t: np.ndarray) -> np.ndarray:
        if self.domain is Domain.HALF_LINE:
            return self.base._inv_cdf(t)
        return _as_array(self.base.centered_quantile(t))

    def _nu(self, t):
        return self.a * self._base_quantile(t)

    def _log_nu_prime(self, t):
        return math.log(self.a) - self.base._logpdf(self._base_quantile(t))

    def _weight_prime(self, t, density):
        y = self._base_quantile(t)
        log_base = self.base._logpdf(y)
        log_w = density._logpdf(self.a * y) + math.log(self.a) - log_base
        # exactly zero for a = 1 and density == base
        slope = self.a * density._dlogpdf(self.a * y) - self.base._dlogpdf(y)
        return np.exp(log_w - log_base) * slope

    def inverse(self, x: ArrayLike) -> ArrayLike:
        x_arr = _as_array(x)
        if self.domain is Domain.HALF_LINE:
            return _restore(self.base.cdf(x_arr / self.a), x)
        return _restore(_as_array(self.base.cdf(x_arr / self.a)) - 0.5, x)

    def log_jacobian_at(self, x):
        return math.log(self.a) - self.base._logpdf(x / self.a)

    def log_abs_weight_prime_at(self, x, density):
        y = x / self.a
        slope = self.a * density._dlogpdf(x) - self.base._dlogpdf(y)
        with _errstate():
            return (
                self.log_weight_at(x, density)
                - self.base._logpdf(y)
                + np.log(np.abs(slope))
            )


@dataclasses.dataclass(frozen=True)
class PolyGrowth(Transform):
    """ν_b(t) = (1 - t)^{-b} - 1 on [0, 1), paired with polynomial tail densities."""

    b: float
    base: PolyTail

    def __post_init__(self):
        if not isinstance(self.base, PolyTail):
            raise TransformConstructionError(
                f"PolyGrowth can only be paired with PolyTail densities, got {self.base}"
            )
        if not self.b > 0.0 or not math.isfinite(self.b):
            raise TransformConstructionError(f"exponent b must be > 0, got {self.b}")

    @property
    def density(self) -> Density:
        return self.base

    def check_density(self, density: Density) -> None:
        if not isinstance(density, PolyTail):
            raise TransformConstructionError(
                f"PolyGrowth can only be paired with PolyTail densities, got {density}"
            )

    @property
    def _decay(self) -> float:
        # w(t) = b(c-1)(1-t)^{b(c-1)-1} for the own density
        return self.b * (self.base.c - 1.0)

    def _nu(self, t):
        return np.expm1(-self.b * np.log1p(-t))

    def _log_nu_prime(self, t):
        return math.log(self.b) - (self.b + 1.0) * np.log1p(-t)

    def _weight_prime(self, t, density):
        if density == self.base:
            k = self._decay
            return -k * (k - 1.0) * np.exp((k - 2.0) * np.log1p(-t))
        log_w = density._logpdf(self._nu(t)) + self._log_nu_prime(t)
        slope = density._dlogpdf(self._nu(t)) * np.exp(self._log_nu_prime(t)) + (
            self.b + 1.0
        ) / (1.0 - t)
        return np.exp(log_w) * slope

    def inverse(self, x: ArrayLike) -> ArrayLike:
        return _restore(-np.expm1(-np.log1p(_as_array(x)) / self.b), x)

    def log_jacobian_at(self, x):
        return math.log(self.b) + (self.b + 1.0) / self.b * np.log1p(x)

    def log_abs_weight_prime_at(self, x, density):
        with _errstate():
            if density == self.base:
                k = self._decay
                return np.log(k * abs(k - 1.0)) - (k - 2.0) / self.b * np.log1p(x)
            slope = density._dlogpdf(x) * np.exp(self.log_jacobian_at(x)) + (
                self.b + 1.0
            ) * np.exp(np.log1p(x) / self.b)
            return self.log_weight_at(x, density) + np.log(np.abs(slope))


@dataclasses.dataclass(frozen=True)
class TransformedIntegrand:
    """g(t) = f(ν(t))·∏_j w_j(t_j) on the cube B^d.

    Calling the object with an array of shape (m, d) returns the m values of g.  A
    one-dimensional array of length d (or a float when d = 1) is treated as a single
    point; for d = 1 a one-dimensional array holds m points.
    """

    f: Integrand
    transforms: Tuple[Transform, ...]
    densities: Tuple[Density, ...]

    def __post_init__(self):
        object.__setattr__(self, "transforms", tuple(self.transforms))
        object.__setattr__(self, "densities", tuple(self.densities))
        if not self.transforms:
            raise TransformConstructionError("at least one coordinate is required")
        if len(self.transforms) != len(self.densities):
            raise TransformConstructionError(
                f"got {len(self.transforms)} transforms but {len(self.densities)}"
                " densities"
            )
        for transform, density in zip(self.transforms, self.densities):
            transform.check_density(density)

    @classmethod
    def homogeneous(
        cls, f: Integrand, transform: Transform, density: Density, dim: int
    ) -> TransformedIntegrand:
        """Same transform and density in every coordinate."""
        if dim < 1:
            raise TransformConstructionError(f"dimension must be >= 1, got {dim}")
        return cls(f, (transform,) * dim, (density,) * dim)

    @property
    def dim(self) -> int:
        return len(self.transforms)

    @property
    def domains(self) -> Tuple[Domain, ...]:
        return tuple(t.domain for t in self.transforms)

    def _as_points(self, t: ArrayLike) -> np.ndarray:
        t_arr = _as_array(t)
        if t_arr.ndim == 0 or (t_arr.ndim == 1 and self.dim == 1):
            return t_arr.reshape(-1, 1)
        if t_arr.ndim == 1:
            return t_arr.reshape(1, -1)
        return t_arr

    def map_to_domain(self, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """Map cube points to domain points.

        Returns:
            Tuple (x, w) with the points x = ν(t) of shape (m, d) and the product of
            the weights of shape (m,).
        """
        points = self._as_points(t)
        if points.shape[1] != self.dim:
            raise TransformConstructionError(
                f"expected points with {self.dim} coordinates, got {points.shape[1]}"
            )
        x = np.empty_like(points)
        w = np.ones(points.shape[0])
        for j, (transform, density) in enumerate(zip(self.transforms, self.densities)):
            x[:, j] = transform.nu(points[:, j])
            w *= transform.weight(points[:, j], density)
        return x, w

    def __call__(self, t: ArrayLike) -> ArrayLike:
        x, w = self.map_to_domain(t)
        values = np.asarray(self.f(x), dtype=float).reshape(-1) * w
        t_arr = np.asarray(t)
        if t_arr.ndim == 0 or (t_arr.ndim == 1 and self.dim > 1):
            return float(values[0])
        return values


def transformed_integrand(
    f: Integrand, transforms: Sequence[Transform], densities: Sequence[Density]
) -> TransformedIntegrand:
    """Build the transformed integrand of f for per-coordinate transforms/densities.

    Raises:
        TransformConstructionError: on length or domain mismatch.
    """
    return TransformedIntegrand(f, tuple(transforms), tuple(densities))
