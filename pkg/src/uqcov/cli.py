"""Reproduce the error tables of scaled changes of variables and run ad-hoc integrations.

Subcommands:

  test1      midpoint errors for f(x) = x with the exponential density
  test2      midpoint errors for f(x) = |x| with the Gaussian density
  test3      lattice rule errors for f(x) = x_1 ⋯ x_d with the exponential density
  astar      optimal scale a* and the bound of C_{1,p}(ν_{a*})
  norms      h-function norms and the C_{1,p} bound of one transform
  dofeps     superposition dimension d(ε) for power law weights
  integrate  integrate a builtin function with a given rule
  mdm        integrate a builtin function with the multivariate decomposition method

Parameters are taken from the command line flags, from ``--settings FILE`` and from
trailing ``KEY=VALUE`` arguments (in increasing order of precedence: file, KEY=VALUE,
flags).
"""

from __future__ import annotations

import argparse
import enum
import logging
import math
import os
import sys
import typing

import colorama
import pandas as pd

from uqcov import cubature, mdm
from uqcov.analysis import (
    NormReport,
    PExponent,
    c1p_bound,
    j1_norm,
    operator_norm_I1,
    optimal_a,
)
from uqcov.base import constants
from uqcov.base.settings import SettingsError, read_settings
from uqcov.base.utils import styled
from uqcov.density import Density, Exponential, Gaussian, PolyTail
from uqcov.integrands import get_builtin
from uqcov.transform import PolyGrowth, ScaledInverseCdf, Transform, TransformedIntegrand

DECADES = (10, 100, 1000, 10_000, 100_000)
POWERS_OF_TWO = tuple(2**k for k in range(10, 16))


class OutputFormat(enum.Enum):
    TABLE = "table"
    CSV = "csv"


class ExperimentConfig(typing.NamedTuple):
    """Validated parameters of one subcommand run."""

    subcommand: str
    density: str
    lam: float
    sigma: float
    c: float
    p: PExponent
    a: typing.Union[float, str]
    b: typing.Optional[float]
    n: int
    ns: typing.Tuple[int, ...]
    dims: typing.Tuple[int, ...]
    beta: float
    betas: typing.Tuple[float, ...]
    q: float
    eps: float
    gen_vector: typing.Optional[str]
    output_format: OutputFormat
    out: typing.Optional[str]
    shift: typing.Union[None, str, typing.Tuple[float, ...]]
    seed: typing.Optional[int]
    clip_eps: typing.Optional[float]
    dump_integrand: typing.Optional[str]
    f: str
    rule: cubature.RuleFamily

    @classmethod
    def from_settings(
        cls, subcommand: str, settings: typing.Mapping[str, typing.Any]
    ) -> ExperimentConfig:
        """Validate merged settings and fill in the defaults of the subcommand.

        Raises:
            SettingsError: naming the offending flag.
        """
        values = {**DEFAULTS, **SUBCOMMAND_DEFAULTS.get(subcommand, {}), **settings}

        if values["density"] not in DENSITIES:
            raise SettingsError(
                f"--density: expected one of {', '.join(DENSITIES)},"
                f" got {values['density']!r}"
            )
        try:
            p = PExponent.parse(values["p"])
        except ValueError as e:
            raise SettingsError(f"--p: {e}") from e

        a = values["a"]
        if a != "auto":
            a = _number("a", a, float)
            if a < 1.0:
                raise SettingsError(f"--a: scale must be >= 1 or 'auto', got {a}")

        try:
            output_format = OutputFormat(values["format"])
        except ValueError:
            raise SettingsError(
                f"--format: expected 'table' or 'csv', got {values['format']!r}"
            ) from None
        try:
            rule = cubature.RuleFamily(values["rule"])
        except ValueError:
            raise SettingsError(
                f"--rule: expected 'midpoint' or 'lattice', got {values['rule']!r}"
            ) from None

        shift = values["shift"]
        if shift is not None and shift != "random":
            shift = _number_list("shift", shift, float)

        eps = _number("eps", values["eps"], float)
        if not eps > 0.0:
            raise SettingsError(f"--eps: must be positive, got {eps}")

        return cls(
            subcommand=subcommand,
            density=values["density"],
            lam=_positive("lambda", values["lam"]),
            sigma=_positive("sigma", values["sigma"]),
            c=_number("c", values["c"], float),
            p=p,
            a=a,
            b=None if values["b"] is None else _positive("b", values["b"]),
            n=_count("n", values["n"]),
            ns=tuple(_count("ns", n) for n in _number_list("ns", values["ns"], int)),
            dims=tuple(
                _count("dims", d) for d in _number_list("dims", values["dims"], int)
            ),
            beta=_positive("beta", values["beta"]),
            betas=tuple(
                _positive("betas", b) for b in _number_list("betas", values["betas"], float)
            ),
            q=_number("q", values["q"], float),
            eps=eps,
            gen_vector=values["gen_vector"],
            output_format=output_format,
            out=values["out"],
            shift=shift,
            seed=None if values["seed"] is None else _number("seed", values["seed"], int),
            clip_eps=(
                None
                if values["clip_eps"] is None
                else _number("clip_eps", values["clip_eps"], float)
            ),
            dump_integrand=values["dump_integrand"],
            f=values["f"],
            rule=rule,
        )


DENSITIES = ("exp", "gauss", "polytail")

DEFAULTS: typing.Dict[str, typing.Any] = {
    "density": "exp",
    "lam": 1.0,
    "sigma": 1.0,
    "c": 3.0,
    "p": "inf",
    "a": "auto",
    "b": None,
    "n": 4096,
    "ns": DECADES,
    "dims": (1,),
    "beta": 2.0,
    "betas": (2.0, 3.0, 4.0, 5.0),
    "q": 2.0,
    "eps": 1e-2,
    "gen_vector": None,
    "format": "table",
    "out": None,
    "shift": None,
    "seed": None,
    "clip_eps": None,
    "dump_integrand": None,
    "f": "builtin:linear",
    "rule": "midpoint",
}

SUBCOMMAND_DEFAULTS: typing.Dict[str, typing.Dict[str, typing.Any]] = {
    "test2": {"density": "gauss"},
    "test3": {"ns": POWERS_OF_TWO, "dims": (3, 4), "rule": "lattice"},
    "dofeps": {"lam": 2.0, "p": 2, "eps": 1e-4},
    "mdm": {"f": "builtin:prod", "dims": (3,), "rule": "lattice"},
}

#: Settings each subcommand reads, besides format and out.
USED_SETTINGS: typing.Dict[str, typing.Tuple[str, ...]] = {
    "test1": ("lam", "p", "ns"),
    "test2": ("sigma", "p", "ns"),
    "test3": ("lam", "p", "ns", "dims", "gen_vector", "shift", "seed"),
    "astar": ("density", "lam", "sigma", "p"),
    "norms": ("density", "lam", "sigma", "c", "p", "a", "b"),
    "dofeps": ("density", "lam", "sigma", "c", "p", "eps", "betas", "q"),
    "integrate": (
        "density", "lam", "sigma", "c", "p", "a", "b", "n", "dims", "f", "rule",
        "gen_vector", "shift", "seed", "clip_eps", "dump_integrand",
    ),
    "mdm": (
        "density", "lam", "sigma", "c", "p", "a", "b", "dims", "f", "rule", "beta",
        "q", "eps", "gen_vector", "clip_eps",
    ),
}  # fmt: skip


def _flag(key: str) -> str:
    return "--" + ("lambda" if key == "lam" else key.replace("_", "-"))


def _number(key: str, value, kind):
    try:
        number = kind(value)
    except (TypeError, ValueError):
        raise SettingsError(f"{_flag(key)}: expected a number, got {value!r}") from None
    if kind is int and isinstance(value, float) and not value.is_integer():
        raise SettingsError(f"{_flag(key)}: expected an integer, got {value!r}")
    return number


def _positive(key: str, value) -> float:
    number = _number(key, value, float)
    if not number > 0.0:
        raise SettingsError(f"{_flag(key)}: must be positive, got {value!r}")
    return number


def _count(key: str, value) -> int:
    number = _number(key, value, int)
    if number < 1:
        raise SettingsError(f"{_flag(key)}: must be >= 1, got {value!r}")
    return number


def _number_list(key: str, value, kind) -> list:
    if isinstance(value, str):
        items: typing.Iterable = [v for v in value.split(",") if v.strip()]
    elif isinstance(value, (list, tuple)):
        items = value
    else:
        items = [value]
    numbers = [_number(key, v, kind) for v in items]
    if not numbers:
        raise SettingsError(f"{_flag(key)}: expected at least one value")
    return numbers


# -- building blocks -------------------------------------------------------------------


def _make_density(config: ExperimentConfig) -> Density:
    if config.density == "exp":
        return Exponential(config.lam)
    if config.density == "gauss":
        return Gaussian(config.sigma)
    if config.c <= 2.0:
        raise SettingsError(f"--c: polytail requires c > 2, got {config.c}")
    return PolyTail(config.c)


def _make_transform(config: ExperimentConfig, density: Density) -> Transform:
    if isinstance(density, PolyTail):
        if config.a != "auto":
            raise SettingsError("--a: not used with the polytail density, use --b")
        b = config.b if config.b is not None else max(1.0, 2.0 / (config.c - 2.0))
        return PolyGrowth(b, density)
    if config.b is not None:
        raise SettingsError("--b: only used with the polytail density")
    a = optimal_a(density, config.p)[0] if config.a == "auto" else config.a
    return ScaledInverseCdf(density, a)


def _make_rule(
    config: ExperimentConfig,
    n: int,
    dim: int,
    vector: typing.Optional[cubature.GeneratingVector],
) -> cubature.CubatureRule:
    shift = config.shift
    if shift == "random":
        shift = cubature.random_shift(dim, config.seed)
    if config.rule is cubature.RuleFamily.MIDPOINT:
        if shift is not None or config.clip_eps is not None:
            raise SettingsError("--shift: shifts and clipping need --rule lattice")
        return cubature.MidpointRule(n)
    if vector is None:
        vector = cubature.builtin_korobov_vector(n, dim)
    return cubature.LatticeRule.from_vector(n, vector, dim, shift, config.clip_eps)


def _load_vector(config: ExperimentConfig) -> typing.Optional[cubature.GeneratingVector]:
    if config.gen_vector is None:
        return None
    return cubature.load_generating_vector(config.gen_vector)


def _single_dim(config: ExperimentConfig) -> int:
    if len(config.dims) != 1:
        raise SettingsError(f"--dims: {config.subcommand} takes a single dimension")
    return config.dims[0]


def _error_columns(
    density: Density,
    columns: typing.Sequence[typing.Tuple[str, float]],
    f,
    reference: float,
    rules: typing.Callable[[int, int], cubature.CubatureRule],
    ns: typing.Sequence[int],
    dim: int,
) -> pd.DataFrame:
    logger = logging.getLogger("uqcov")
    table = {"n": list(ns)}
    for label, a in columns:
        logger.info("column %s (a=%.12g)", label, a)
        g = TransformedIntegrand.homogeneous(f, ScaledInverseCdf(density, a), density, dim)
        table[label] = [abs(rules(n, dim).apply(g) - reference) for n in ns]
    return pd.DataFrame(table)


# -- subcommands -----------------------------------------------------------------------

Frames = typing.List[typing.Tuple[str, pd.DataFrame]]


def run_test1(config: ExperimentConfig) -> Frames:
    density = Exponential(config.lam)
    linear = get_builtin("linear")
    columns = [("a=a*", optimal_a(density, config.p)[0]), ("a=1.5", 1.5), ("a=1", 1.0)]
    frame = _error_columns(
        density,
        columns,
        linear.f,
        linear.exact(density, 1),
        lambda n, dim: cubature.MidpointRule(n),
        config.ns,
        1,
    )
    return [("midpoint rule, f(x) = x, exponential density", frame)]


def run_test2(config: ExperimentConfig) -> Frames:
    density = Gaussian(config.sigma)
    absolute = get_builtin("abs")
    columns = [
        ("a=a*", optimal_a(density, config.p)[0]),
        ("a=sqrt2", math.sqrt(2.0)),
        ("a=1", 1.0),
    ]
    frame = _error_columns(
        density,
        columns,
        absolute.f,
        absolute.exact(density, 1),
        lambda n, dim: cubature.MidpointRule(n),
        config.ns,
        1,
    )
    return [("midpoint rule, f(x) = |x|, Gaussian density", frame)]


def run_test3(config: ExperimentConfig) -> Frames:
    density = Exponential(config.lam)
    product = get_builtin("prod")
    vector = _load_vector(config)
    columns = [("a=a*", optimal_a(density, config.p)[0]), ("a=1.5", 1.5), ("a=1", 1.0)]
    lattice = config._replace(rule=cubature.RuleFamily.LATTICE)

    frames = []
    for dim in config.dims:
        frame = _error_columns(
            density,
            columns,
            product.f,
            product.exact(density, dim),
            lambda n, d: _make_rule(lattice, n, d, vector),
            config.ns,
            dim,
        )
        frame.insert(0, "d", dim)
        frames.append(frame)
    source = vector.source if vector is not None else "builtin Korobov vectors"
    return [
        (f"lattice rule ({source}), f(x) = x_1 ⋯ x_d", pd.concat(frames, ignore_index=True))
    ]


def _scale_power(density: Density, p: PExponent) -> float:
    return density.scale**p.inv_p_star


def run_astar(config: ExperimentConfig) -> Frames:
    density = _make_density(config)
    a_star, bound = optimal_a(density, config.p)
    frame = pd.DataFrame(
        {
            "density": [config.density],
            "p": [str(config.p)],
            "a_star": [a_star],
            "c1p_bound": [bound],
            "bound_per_scale": [bound / _scale_power(density, config.p)],
        }
    )
    return [("optimal scale", frame)]


def _norms_frame(config: ExperimentConfig, report: NormReport, density: Density):
    return pd.DataFrame(
        {
            "h0_sup": [report.h0_sup],
            "h1_sup": [report.h1_sup],
            "h2_lp": [report.h2_lp],
            "c1p_bound": [report.c1p_bound],
            "method": [report.method.value],
            "norm_I1": [operator_norm_I1(density, config.p)],
            "norm_J1": [j1_norm(config.p, density.domain)],
        }
    )


def run_norms(config: ExperimentConfig) -> Frames:
    density = _make_density(config)
    transform = _make_transform(config, density)
    report = c1p_bound(density, transform, config.p)
    return [(f"{transform}, p={config.p}", _norms_frame(config, report, density))]


def run_dofeps(config: ExperimentConfig) -> Frames:
    density = _make_density(config)
    norm = operator_norm_I1(density, config.p)
    rows = []
    for beta in config.betas:
        active = mdm.active_set(mdm.PowerLaw(beta, config.q), norm, config.eps)
        rows.append(
            {
                "beta": beta,
                "d_eps": active.superposition_dimension,
                "active_subsets": len(active),
            }
        )
    return [(f"superposition dimension, eps={config.eps:g}", pd.DataFrame(rows))]


def run_integrate(config: ExperimentConfig) -> Frames:
    density = _make_density(config)
    transform = _make_transform(config, density)
    integrand = get_builtin(config.f)
    dim = _single_dim(config)
    rule = _make_rule(config, config.n, dim, _load_vector(config))

    g = TransformedIntegrand.homogeneous(integrand.f, transform, density, dim)
    value = rule.apply(g)
    exact = integrand.exact(density, dim)

    if config.dump_integrand is not None:
        if dim != 1:
            raise SettingsError("--dump-integrand: only available for --dims 1")
        t = rule.nodes(1, g.domains)[:, 0]
        pd.DataFrame({"t": t, "g": g(t)}).to_csv(
            config.dump_integrand, index=False, float_format="%.17g"
        )

    frame = pd.DataFrame(
        {
            "n": [rule.n],
            "value": [value],
            "exact": [exact],
            "abs_error": [abs(value - exact)],
        }
    )
    return [(f"{integrand.description}, {transform}", frame)]


def run_mdm(config: ExperimentConfig) -> Frames:
    density = _make_density(config)
    transform = _make_transform(config, density)
    integrand = get_builtin(config.f)
    dim = _single_dim(config)
    weights = mdm.PowerLaw(config.beta, config.q)

    value, plan = mdm.mdm_integrate(
        integrand.f,
        density,
        transform,
        weights,
        config.eps,
        dim,
        p=config.p,
        rule_family=config.rule,
        vector=_load_vector(config),
        clip_eps=config.clip_eps,
    )
    exact = integrand.exact(density, dim)

    plan_frame = pd.DataFrame(
        {
            "subset": ["{" + ",".join(map(str, u)) + "}" for u in plan.active],
            "gamma": [weights.subset_weight(u) for u in plan.active],
            "criterion": [plan.active.criterion_value[u] for u in plan.active],
            "n": [plan.n[u] for u in plan.active],
            "estimate": [plan.estimates[u] for u in plan.active],
        }
    )
    summary = pd.DataFrame(
        {
            "value": [value],
            "exact": [exact],
            "abs_error": [abs(value - exact)],
            "error_bound": [plan.error_bound],
            "target": [plan.target],
            "cost": [plan.cost],
        }
    )
    return [("mdm plan", plan_frame), ("mdm result", summary)]


RUNNERS: typing.Dict[str, typing.Callable[[ExperimentConfig], Frames]] = {
    "test1": run_test1,
    "test2": run_test2,
    "test3": run_test3,
    "astar": run_astar,
    "norms": run_norms,
    "dofeps": run_dofeps,
    "integrate": run_integrate,
    "mdm": run_mdm,
}


# -- command line ----------------------------------------------------------------------

SUBCOMMAND_HELP = {
    "test1": "Midpoint errors, exponential density.",
    "test2": "Midpoint errors, Gaussian density.",
    "test3": "Lattice rule errors for a product in d dimensions.",
    "astar": "Optimal scale and norm bound.",
    "norms": "h-function norms of one transform.",
    "dofeps": "Superposition dimension for power law weights.",
    "integrate": "Integrate a builtin function.",
    "mdm": "Integrate with the multivariate decomposition method.",
}


def render(frames: Frames, output_format: OutputFormat) -> str:
    """Render result frames as aligned text tables or CSV."""
    parts = []
    for title, frame in frames:
        if output_format is OutputFormat.CSV:
            parts.append(frame.to_csv(index=False, float_format="%.17g"))
        else:
            text = frame.to_string(index=False, float_format=lambda v: f"{v:.6e}")
            parts.append(f"{title}\n{text}\n")
    return "\n".join(parts)


def init_logging() -> None:
    """Log to stderr, level from UQCOV_LOG_LEVEL."""
    level = os.environ.get(constants.LOG_LEVEL_ENV_VAR, constants.DEFAULT_LOG_LEVEL)
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=level.upper(),
        stream=sys.stderr,
    )


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    add = parser.add_argument
    add("--density", choices=DENSITIES, help="Weight density.")
    add("--lambda", dest="lam", type=float, help="Scale λ of the exponential density.")
    add("--sigma", type=float, help="Standard deviation σ of the Gaussian density.")
    add("--c", type=float, help="Tail exponent c > 2 of the polytail density.")
    add("--p", help="Exponent p in [1, inf] of the function space.")
    add("--a", help="Scale a >= 1 of the change of variables, or 'auto' for a*.")
    add("--b", type=float, help="Exponent b of the polytail change of variables.")
    add("--n", type=int, help="Number of cubature points.")
    add("--ns", help="Comma separated list of numbers of points.")
    add("--dims", help="Comma separated list of dimensions.")
    add("--beta", type=float, help="Decay β of the power law weights j^-β.")
    add("--betas", help="Comma separated list of decays β.")
    add("--q", type=float, help="Exponent q of the weighted function space.")
    add("--eps", type=float, help="Error tolerance ε.")
    add("--gen-vector", metavar="PATH", help="Generating vector file of a lattice rule.")
    add("--format", choices=[f.value for f in OutputFormat], help="Output format.")
    add("--out", metavar="PATH", help="Write the output to PATH instead of stdout.")
    add("--shift", help="Lattice shift: comma separated values in [0, 1) or 'random'.")
    add("--seed", type=int, help="Seed of the random shift.")
    add("--clip-eps", type=float, help="Move real line nodes at -1/2 inwards by this.")
    add("--dump-integrand", metavar="PATH", help="Write (t, g(t)) at the nodes as CSV.")
    add("--f", help="Integrand, e.g. builtin:prod.")
    add("--rule", choices=[r.value for r in cubature.RuleFamily], help="Rule family.")
    add("--settings", metavar="FILE", help="Settings file (json, yaml or toml).")
    add(
        "overrides",
        nargs="*",
        metavar="KEY=VALUE",
        help="Settings overriding those of the settings file.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uqcov",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        _add_common_arguments(subparsers.add_parser(name, help=SUBCOMMAND_HELP[name]))
    return parser


def parse_config(argv: typing.Optional[typing.Sequence[str]] = None) -> ExperimentConfig:
    """Parse the command line into a validated configuration.

    Raises:
        SettingsError: on invalid or incompatible parameters.
    """
    args = vars(build_parser().parse_args(argv))
    subcommand = args.pop("subcommand")
    settings_file = args.pop("settings")
    overrides = args.pop("overrides")

    settings = read_settings(settings_file, overrides, allowed_keys=DEFAULTS.keys())
    settings.update({key: value for key, value in args.items() if value is not None})

    used = set(USED_SETTINGS[subcommand]) | {"format", "out"}
    for key in settings:
        if key not in used:
            raise SettingsError(f"{_flag(key)}: not used by {subcommand}")
    return ExperimentConfig.from_settings(subcommand, settings)


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    init_logging()
    try:
        config = parse_config(argv)
        output = render(RUNNERS[config.subcommand](config), config.output_format)
        if config.out is not None:
            with open(config.out, "w") as f:
                f.write(output)
        else:
            sys.stdout.write(output)
    except (
        SettingsError,
        ValueError,
        KeyError,
        NotImplementedError,
        OSError,
    ) as e:
        message = e.args[0] if isinstance(e, KeyError) and e.args else str(e)
        if sys.stderr.isatty():
            message = styled(message, colorama.Fore.RED)
        print(f"uqcov: error: {message}", file=sys.stderr)
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
