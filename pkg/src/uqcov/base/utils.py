import os

import colorama

from uqcov.base import constants


def styled(text: str, *args) -> str:
    """Little helper to apply color/style using colorama on a string.

    It simply prepends all given args to text and appends ``colorama.Style.RESET_ALL``.
    """
    return "".join([*args, text, colorama.Style.RESET_ALL])


def get_num_threads() -> int:
    """Get the number of worker threads allowed by the environment.

    Reads :data:`~uqcov.base.constants.THREADS_ENV_VAR`.  Unset, empty or invalid
    values fall back to a single worker.
    """
    value = os.environ.get(constants.THREADS_ENV_VAR, "").strip()
    try:
        num_threads = int(value)
    except ValueError:
        return 1
    return max(num_threads, 1)
