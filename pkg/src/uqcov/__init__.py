"""Integration over unbounded domains with scaled changes of variables."""

import contextlib
import importlib.metadata

from .analysis import NormReport, PExponent, c1p_bound, operator_norm_I1, optimal_a
from .cubature import LatticeRule, MidpointRule, integrate_weighted
from .density import Exponential, Gaussian, PolyTail
from .mdm import PowerLaw, mdm_integrate
from .transform import PolyGrowth, ScaledInverseCdf, transformed_integrand

# The version is set based on git at install time, so we get it from the metadata of the
# installed package here.  If this file is imported without the package being installed,
# this will fail.  In that case, catch the error and do not set __version__ at all.
with contextlib.suppress(importlib.metadata.PackageNotFoundError):
    __version__ = importlib.metadata.version(__package__)

__all__ = [
    "Exponential",
    "Gaussian",
    "LatticeRule",
    "MidpointRule",
    "NormReport",
    "PExponent",
    "PolyGrowth",
    "PolyTail",
    "PowerLaw",
    "ScaledInverseCdf",
    "c1p_bound",
    "integrate_weighted",
    "mdm_integrate",
    "operator_norm_I1",
    "optimal_a",
    "transformed_integrand",
]
