"""Base modules of uqcov that are shared by the numerical modules and the CLI."""

# NOTE FOR DEVELOPERS: do not import numpy or scipy in this sub-package.
