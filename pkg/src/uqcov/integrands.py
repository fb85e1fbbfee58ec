"""Test integrands with known weighted integrals, addressed by name on the command line."""

from __future__ import annotations

import typing

import numpy as np

from uqcov.density import Density

BUILTIN_PREFIX = "builtin:"


class BuiltinIntegrand(typing.NamedTuple):
    """Integrand of points with shape (m, d) and its exact weighted integral."""

    name: str
    f: typing.Callable[[np.ndarray], np.ndarray]
    #: Exact value of ∫ f ρ_d for the product of the given density in d dimensions.
    exact: typing.Callable[[Density, int], float]
    description: str


def _linear(x: np.ndarray) -> np.ndarray:
    return x[:, 0]


def _abs(x: np.ndarray) -> np.ndarray:
    return np.abs(x[:, 0])


def _prod(x: np.ndarray) -> np.ndarray:
    return np.prod(x, axis=1)


def _sum(x: np.ndarray) -> np.ndarray:
    return np.sum(x, axis=1)


BUILTIN_INTEGRANDS: typing.Dict[str, BuiltinIntegrand] = {
    b.name: b
    for b in (
        BuiltinIntegrand(
            "linear", _linear, lambda d, dim: d.mean(), "f(x) = x_1"
        ),
        BuiltinIntegrand("abs", _abs, lambda d, dim: d.abs_mean(), "f(x) = |x_1|"),
        BuiltinIntegrand(
            "prod", _prod, lambda d, dim: d.mean() ** dim, "f(x) = x_1 · … · x_d"
        ),
        BuiltinIntegrand(
            "sum", _sum, lambda d, dim: dim * d.mean(), "f(x) = x_1 + … + x_d"
        ),
    )
}


def get_builtin(name: str) -> BuiltinIntegrand:
    """Look up a builtin integrand by ``NAME`` or ``builtin:NAME``.

    Raises:
        KeyError: if the name is unknown.
    """
    key = name[len(BUILTIN_PREFIX) :] if name.startswith(BUILTIN_PREFIX) else name
    try:
        return BUILTIN_INTEGRANDS[key]
    except KeyError:
        raise KeyError(
            f"unknown integrand {name!r}, available:"
            f" {', '.join(BUILTIN_PREFIX + k for k in BUILTIN_INTEGRANDS)}"
        ) from None
