"""Equal-weight cubature rules on the unit cube and their use for weighted integrals.

Rules produce nodes on [0, 1)^d.  Coordinates whose domain is the real line are
shifted to the centered cube side (-1/2, 1/2) before the integrand is evaluated.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import functools
import logging
import math
import os
import pathlib
from abc import ABC, abstractmethod
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from uqcov.base import constants
from uqcov.base.utils import get_num_threads
from uqcov.density import Density, Domain
from uqcov.transform import Integrand, Transform, TransformedIntegrand, transformed_integrand

CubeFunction = Callable[[np.ndarray], Union[np.ndarray, float]]


class CubatureError(ValueError):
    """Invalid rule configuration or a node the integrand cannot be evaluated at."""

    ...


class NonFiniteIntegrandError(CubatureError):
    """The integrand returned inf or NaN at a cubature node."""

    ...


class GeneratingVectorError(ValueError):
    """Malformed or unsuitable generating vector."""

    ...


class RuleFamily(enum.Enum):
    MIDPOINT = "midpoint"
    LATTICE = "lattice"


@dataclasses.dataclass(frozen=True)
class GeneratingVector:
    """Generating vector z of a rank-1 lattice rule."""

    components: Tuple[int, ...]
    declared_n: Optional[int] = None
    source: str = "builtin"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(int(c) for c in self.components))
        if not self.components:
            raise GeneratingVectorError(f"{self.source}: empty generating vector")
        if any(c <= 0 for c in self.components):
            raise GeneratingVectorError(
                f"{self.source}: components must be positive integers"
            )

    def __len__(self) -> int:
        return len(self.components)

    def check(self, n: int, dim: int) -> None:
        """Check that the vector is usable for n points in dim dimensions.

        Components that are not coprime with n only produce a warning.

        Raises:
            GeneratingVectorError: if the vector has fewer than dim components.
        """
        if len(self) < dim:
            raise GeneratingVectorError(
                f"{self.source}: generating vector has {len(self)} components,"
                f" dimension {dim} requested"
            )
        if self.declared_n is not None and self.declared_n != n:
            logging.getLogger("uqcov").warning(
                "%s: vector was constructed for n=%d, used with n=%d",
                self.source,
                self.declared_n,
                n,
            )
        for j, component in enumerate(self.components[:dim], start=1):
            if math.gcd(component, n) != 1:
                logging.getLogger("uqcov").warning(
                    "%s: component %d (%d) is not coprime with n=%d",
                    self.source,
                    j,
                    component,
                    n,
                )


class CubatureRule(ABC):
    """Equal-weight rule Q(g) = (1/n)·Σ g(t_i) on the unit cube."""

    n: int
    #: Distance by which RealLine coordinates at the cube boundary -1/2 are moved
    #: inwards.  None means such nodes are rejected.
    clip_eps: Optional[float] = None

    @abstractmethod
    def _cube_block(self, start: int, stop: int, dim: int) -> np.ndarray:
        """Nodes start..stop-1 in [0, 1)^dim as an array of shape (stop-start, dim)."""

    def _check_dim(self, dim: int) -> None:
        if dim < 1:
            raise CubatureError(f"dimension must be >= 1, got {dim}")

    def _block(
        self, start: int, stop: int, dim: int, domains: Sequence[Domain]
    ) -> np.ndarray:
        points = self._cube_block(start, stop, dim)
        for j, domain in enumerate(domains):
            if domain is Domain.HALF_LINE:
                continue
            column = points[:, j] - 0.5
            at_boundary = column <= -0.5
            if np.any(at_boundary):
                if self.clip_eps is None:
                    i = int(np.flatnonzero(at_boundary)[0])
                    raise CubatureError(
                        f"node {start + i} {tuple(points[i])} has coordinate {j + 1}"
                        " at the boundary -1/2 of a real line axis; set a clip"
                        " epsilon to move it inwards"
                    )
                column[at_boundary] = -0.5 + self.clip_eps
            points[:, j] = column
        return points

    def nodes(self, dim: int, domains: Optional[Sequence[Domain]] = None) -> np.ndarray:
        """All n nodes in deterministic order, shape (n, dim).

        Args:
            dim:  Dimension of the cube.
            domains:  Domain of every coordinate.  Real line coordinates are shifted
                to (-1/2, 1/2).  Defaults to the half line for all coordinates.

        Raises:
            CubatureError: if the rule does not support dim, or a node lies on the
                boundary -1/2 of a real line coordinate and no clip is configured.
        """
        self._check_dim(dim)
        domains = self._resolve_domains(dim, domains)
        return self._block(0, self.n, dim, domains)

    @staticmethod
    def _resolve_domains(
        dim: int, domains: Optional[Sequence[Domain]]
    ) -> Tuple[Domain, ...]:
        if domains is None:
            return (Domain.HALF_LINE,) * dim
        domains = tuple(domains)
        if len(domains) != dim:
            raise CubatureError(f"got {len(domains)} domains for dimension {dim}")
        return domains

    def apply(
        self,
        g: Union[TransformedIntegrand, CubeFunction],
        dim: Optional[int] = None,
        domains: Optional[Sequence[Domain]] = None,
    ) -> float:
        """Apply the rule to g.

        Args:
            g:  A :class:`TransformedIntegrand` (dimension and domains are taken from
                it) or a vectorized cube function.  Cube functions receive an array of
                shape (m,) for dim = 1 and (m, dim) otherwise.
            dim:  Dimension, required for cube functions.
            domains:  Coordinate domains for cube functions (default half line).

        Returns:
            (1/n)·Σ g(t_i), summed exactly in node order.

        Raises:
            NonFiniteIntegrandError: if g is not finite at some node.
        """
        if isinstance(g, TransformedIntegrand):
            if dim is not None and dim != g.dim:
                raise CubatureError(f"integrand has dimension {g.dim}, not {dim}")
            dim, domains = g.dim, g.domains
        if dim is None:
            raise CubatureError("dim is required for plain cube functions")
        self._check_dim(dim)
        domains = self._resolve_domains(dim, domains)

        def evaluate(bounds: Tuple[int, int]) -> np.ndarray:
            start, stop = bounds
            points = self._block(start, stop, dim, domains)
            with np.errstate(all="ignore"):
                values = np.asarray(g(points[:, 0] if dim == 1 else points), dtype=float)
            values = np.broadcast_to(values.reshape(-1), (stop - start,))
            bad = np.flatnonzero(~np.isfinite(values))
            if bad.size:
                i = int(bad[0])
                raise NonFiniteIntegrandError(
                    f"integrand value {values[i]} at node {start + i}"
                    f" {tuple(points[i])}"
                )
            return values

        block = constants.NODE_BLOCK_SIZE
        blocks = [(s, min(s + block, self.n)) for s in range(0, self.n, block)]
        num_threads = min(get_num_threads(), len(blocks))
        if num_threads > 1:
            with concurrent.futures.ThreadPoolExecutor(num_threads) as executor:
                # map keeps the block order, so the sum is independent of the workers
                results = list(executor.map(evaluate, blocks))
        else:
            results = [evaluate(b) for b in blocks]

        return math.fsum(np.concatenate(results)) / self.n


@dataclasses.dataclass(frozen=True)
class MidpointRule(CubatureRule):
    """Midpoint rule with nodes (i + 1/2)/n; tensor product of n^{1/d} points for d > 1."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise CubatureError(f"number of points must be >= 1, got {self.n}")

    def points_per_axis(self, dim: int) -> int:
        m = round(self.n ** (1.0 / dim))
        for candidate in (m - 1, m, m + 1):
            if candidate >= 1 and candidate**dim == self.n:
                return candidate
        raise CubatureError(f"n={self.n} is not a {dim}-th power, no tensor midpoint rule")

    def _check_dim(self, dim: int) -> None:
        super()._check_dim(dim)
        self.points_per_axis(dim)

    def _cube_block(self, start, stop, dim):
        m = self.points_per_axis(dim)
        index = np.arange(start, stop)
        digits = np.unravel_index(index, (m,) * dim)
        return np.column_stack([(k + 0.5) / m for k in digits]).astype(float)


@dataclasses.dataclass(frozen=True)
class LatticeRule(CubatureRule):
    """Rank-1 lattice rule with nodes frac(i·z/n + shift)."""

    n: int
    z: Tuple[int, ...]
    shift: Optional[Tuple[float, ...]] = None
    clip_eps: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise CubatureError(f"number of points must be >= 1, got {self.n}")
        object.__setattr__(self, "z", tuple(int(c) for c in self.z))
        if self.shift is not None:
            object.__setattr__(self, "shift", tuple(float(s) for s in self.shift))
            if not all(0.0 <= s < 1.0 for s in self.shift):
                raise CubatureError(f"shift must lie in [0, 1), got {self.shift}")
        if self.clip_eps is not None and not 0.0 < self.clip_eps < 0.5:
            raise CubatureError(f"clip epsilon must be in (0, 1/2), got {self.clip_eps}")

    @classmethod
    def from_vector(
        cls,
        n: int,
        vector: GeneratingVector,
        dim: int,
        shift: Optional[Sequence[float]] = None,
        clip_eps: Optional[float] = None,
    ) -> LatticeRule:
        vector.check(n, dim)
        return cls(
            n,
            vector.components,
            tuple(shift) if shift is not None else None,
            clip_eps,
        )

    def _check_dim(self, dim: int) -> None:
        super()._check_dim(dim)
        if len(self.z) < dim:
            raise CubatureError(
                f"generating vector has {len(self.z)} components, dimension {dim}"
            )
        if self.shift is not None and len(self.shift) < dim:
            raise CubatureError(f"shift has {len(self.shift)} components, dimension {dim}")

    def _cube_block(self, start, stop, dim):
        index = np.arange(start, stop, dtype=np.int64)
        z = np.asarray(self.z[:dim], dtype=np.int64)
        points = ((index[:, None] * z[None, :]) % self.n) / self.n
        if self.shift is not None:
            points = np.mod(points + np.asarray(self.shift[:dim]), 1.0)
        return points


def random_shift(dim: int, seed: Optional[int] = None) -> Tuple[float, ...]:
    """Uniform random shift in [0, 1)^dim."""
    rng = np.random.default_rng(seed)
    return tuple(float(s) for s in rng.random(dim))


def integrate_weighted(
    f: Integrand,
    densities: Sequence[Density],
    transforms: Sequence[Transform],
    rule: CubatureRule,
) -> float:
    """Approximate ∫ f(x)∏ρ_j(x_j) dx by applying rule to the transformed integrand."""
    return rule.apply(transformed_integrand(f, transforms, densities))


# -- generating vectors ----------------------------------------------------------------


def load_generating_vector(
    path: Union[str, os.PathLike], n: Optional[int] = None
) -> GeneratingVector:
    """Read a generating vector from a text file.

    The file contains either one component per line or two whitespace separated
    columns ``<index> <component>`` with 1-based, consecutive indices.  Blank lines
    are ignored.

    Args:
        path:  File to read.
        n:  Number of points the vector was constructed for, if known.

    Raises:
        GeneratingVectorError: on malformed lines (with the line number), index gaps
            or an empty file.
    """
    path = pathlib.Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise GeneratingVectorError(f"{path}: {e.strerror}") from e

    components = []
    columns = None
    for line_number, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if columns is None:
            columns = len(fields)
        if len(fields) != columns or columns > 2:
            raise GeneratingVectorError(
                f"{path}:{line_number}: expected {columns if columns <= 2 else 1}"
                f" column(s), got {len(fields)}"
            )
        try:
            values = [int(field) for field in fields]
        except ValueError:
            raise GeneratingVectorError(
                f"{path}:{line_number}: not an integer: {line.strip()!r}"
            ) from None
        if columns == 2 and values[0] != len(components) + 1:
            raise GeneratingVectorError(
                f"{path}:{line_number}: expected index {len(components) + 1},"
                f" got {values[0]}"
            )
        if values[-1] <= 0:
            raise GeneratingVectorError(
                f"{path}:{line_number}: component must be positive, got {values[-1]}"
            )
        components.append(values[-1])

    if not components:
        raise GeneratingVectorError(f"{path}: no generating vector components found")
    return GeneratingVector(tuple(components), declared_n=n, source=str(path))


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _p2_criterion(n: int, z: np.ndarray) -> float:
    """Worst-case criterion P₂ of the lattice rule (n, z) for smoothness one."""
    k = np.arange(n, dtype=np.int64)
    x = ((k[:, None] * z[None, :]) % n) / n
    bernoulli = x * x - x + 1.0 / 6.0
    return float(np.mean(np.prod(1.0 + 2.0 * math.pi**2 * bernoulli, axis=1)) - 1.0)


# P₂-optimal Korobov multipliers by log2(n), one entry per dimension 2, ..., 8.  Up to
# n = 2^16 the search was exhaustive over the odd a in [3, n/2); above, 512 evenly
# spread odd candidates were compared.
KOROBOV_TABLE: Dict[int, Tuple[int, ...]] = {
    3: (3, 3, 3, 3, 3, 3, 3),
    4: (7, 3, 3, 3, 3, 3, 3),
    5: (7, 3, 3, 5, 3, 3, 3),
    6: (27, 5, 3, 5, 11, 11, 11),
    7: (47, 25, 21, 3, 5, 5, 11),
    8: (99, 83, 39, 21, 77, 45, 75),
    9: (189, 185, 187, 151, 3, 165, 11),
    10: (275, 323, 493, 189, 171, 141, 141),
    11: (857, 753, 137, 755, 363, 3, 443),
    12: (1557, 751, 1191, 755, 1293, 1363, 3),
    13: (3455, 1503, 2613, 3333, 2501, 3979, 1365),
    14: (6915, 1951, 3779, 3217, 4851, 453, 8039),
    15: (12545, 8895, 4843, 1975, 12753, 1811, 8345),
    16: (25015, 15395, 19303, 10759, 957, 15389, 18347),
    17: (49761, 11673, 37577, 34371, 61301, 50915, 18725),
    18: (76693, 120811, 38475, 90545, 25907, 19239, 39245),
    19: (122607, 115425, 199043, 4105, 132867, 199557, 43607),
    20: (384751, 241111, 319087, 487351, 161083, 329347, 171343),
}
KOROBOV_TABLE_DIMS = range(2, 9)


def korobov_multiplier(n: int, dim: int) -> int:
    """Korobov multiplier for n points in dim dimensions.

    Taken from ``KOROBOV_TABLE`` for n = 2^3, ..., 2^20 and dim = 2, ..., 8, otherwise
    from :func:`search_korobov_multiplier`.
    """
    exponent = n.bit_length() - 1
    if _is_power_of_two(n) and exponent in KOROBOV_TABLE and dim in KOROBOV_TABLE_DIMS:
        return KOROBOV_TABLE[exponent][dim - KOROBOV_TABLE_DIMS.start]
    return search_korobov_multiplier(n, dim)


@functools.lru_cache(maxsize=None)
def search_korobov_multiplier(n: int, dim: int) -> int:
    """Korobov multiplier a minimizing P₂ over a bounded set of odd candidates.

    Candidates are evenly spread over the odd numbers in [3, n/2); their number is
    limited so that the search costs at most ``KOROBOV_SEARCH_BUDGET`` operations.
    """
    odd = np.arange(3, max(n // 2, 3), 2)
    if odd.size == 0:
        return 1
    budget = constants.KOROBOV_SEARCH_BUDGET // (n * max(dim, 1))
    count = max(
        constants.MIN_KOROBOV_CANDIDATES,
        min(constants.MAX_KOROBOV_CANDIDATES, budget),
    )
    if odd.size > count:
        odd = odd[np.unique(np.linspace(0, odd.size - 1, count).round().astype(int))]

    best, best_value = 1, math.inf
    for a in odd:
        z = np.array([pow(int(a), j, n) for j in range(dim)], dtype=np.int64)
        value = _p2_criterion(n, z)
        if value < best_value:
            best, best_value = int(a), value
    logging.getLogger("uqcov").debug(
        "korobov multiplier for n=%d, d=%d: %d (P2=%.6g)", n, dim, best, best_value
    )
    return best


def builtin_korobov_vector(
    n: int, dim: int, multiplier: Optional[int] = None
) -> GeneratingVector:
    """Korobov generating vector z_j = a^{j-1} mod n.

    Args:
        n:  Number of points, a power of 2 not larger than 2^20.
        dim:  Number of components.
        multiplier:  Korobov multiplier a.  Looked up with
            :func:`korobov_multiplier` if not given.

    Raises:
        GeneratingVectorError: if n is not an admissible power of 2.
    """
    if not _is_power_of_two(n) or n > constants.MAX_KOROBOV_N:
        raise GeneratingVectorError(
            f"builtin vectors require n to be a power of 2 <= {constants.MAX_KOROBOV_N},"
            f" got {n}"
        )
    if dim < 1:
        raise GeneratingVectorError(f"dimension must be >= 1, got {dim}")
    if dim == 1 or n == 1:
        return GeneratingVector((1,) * dim, declared_n=n, source="builtin:korobov")
    a = korobov_multiplier(n, dim) if multiplier is None else multiplier
    components = tuple(pow(a, j, n) for j in range(dim))
    return GeneratingVector(components, declared_n=n, source=f"builtin:korobov(a={a})")


def make_rule(
    family: Union[RuleFamily, str],
    n: int,
    dim: int,
    vector: Optional[GeneratingVector] = None,
    shift: Optional[Sequence[float]] = None,
    clip_eps: Optional[float] = None,
) -> CubatureRule:
    """Rule of the given family with n points for dim dimensions.

    Lattice rules use vector, or the builtin Korobov vector if none is given.
    """
    family = RuleFamily(family)
    if family is RuleFamily.MIDPOINT:
        return MidpointRule(n)
    if vector is None:
        vector = builtin_korobov_vector(n, dim)
    return LatticeRule.from_vector(n, vector, dim, shift, clip_eps)


def convergence_table(
    g: Union[TransformedIntegrand, CubeFunction],
    rule_factory: Callable[[int], CubatureRule],
    ns: Sequence[int],
    reference: float,
    dim: Optional[int] = None,
) -> pd.DataFrame:
    """Absolute errors of a family of rules and the observed convergence order.

    The order in row i is log(e_{i-1}/e_i)/log(n_i/n_{i-1}); it is NaN in the first
    row and wherever an error vanishes.

    Returns:
        DataFrame with the columns ``n``, ``abs_error`` and ``observed_order``.
    """
    errors = [abs(rule_factory(n).apply(g, dim) - reference) for n in ns]
    orders = [math.nan]
    for (n0, e0), (n1, e1) in zip(zip(ns, errors), zip(ns[1:], errors[1:])):
        if e0 > 0.0 and e1 > 0.0:
            orders.append(math.log(e0 / e1) / math.log(n1 / n0))
        else:
            orders.append(math.nan)
    return pd.DataFrame({"n": list(ns), "abs_error": errors, "observed_order": orders})
