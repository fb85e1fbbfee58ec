"""Constants shared by the numerical modules and the command line tool."""

#: Environment variable capping the number of worker threads that evaluate cubature
#: nodes.  Defaults to a single worker.
THREADS_ENV_VAR = "UQCOV_THREADS"
#: Environment variable selecting the log level of the command line tool.
LOG_LEVEL_ENV_VAR = "UQCOV_LOG_LEVEL"
DEFAULT_LOG_LEVEL = "WARNING"

#: Number of cubature nodes evaluated per task.
NODE_BLOCK_SIZE = 1 << 16

#: A numerically evaluated norm is declared infinite once the values approaching a
#: singular end exceed this factor times the interior maximum.
DIVERGENCE_CAP = 1e6
#: Relative increment below which values approaching an endpoint count as converged.
ENDPOINT_RELATIVE_INCREMENT = 1e-8
#: Number of halvings of the distance used to approach a finite endpoint.
ENDPOINT_HALVINGS = 52
#: Number of doublings used to approach an infinite endpoint.  The range stays
#: moderate so that rounding in exponents cannot fake a blow-up.
INFINITE_END_DOUBLINGS = 24
#: Points of the uniform interior grid of numeric_sup.
SUP_GRID_SIZE = 4097
#: Multiple of the problem scale covered by the uniform grid on infinite intervals.
SUP_GRID_SPAN = 16.0

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 200
#: Subdivision limit of the second, refined quadrature attempt.
QUAD_REFINED_LIMIT = 2000

#: Upper end of the interval searched for the optimal scale a*.
MAX_SCALE = 64.0
#: Closed-form optima are accepted if they agree with a numeric minimization to this
#: relative tolerance.
OPTIMUM_CROSS_CHECK_RTOL = 1e-5

#: Largest subset handled by the anchored decomposition (2^|u| evaluations).
MAX_SUBSET_SIZE = 30
#: Largest coordinate index visited while enumerating active sets.
MAX_COORDINATE_INDEX = 10**6

#: Largest n for which builtin Korobov vectors are provided.
MAX_KOROBOV_N = 2**20
#: Work budget (candidates * n * d) of the Korobov multiplier search.
KOROBOV_SEARCH_BUDGET = 2**24
MIN_KOROBOV_CANDIDATES = 32
MAX_KOROBOV_CANDIDATES = 256
