from __future__ import annotations

import ast
import os
import pathlib
from typing import Any, Collection, Iterable, MutableMapping, Optional, Union

import smart_settings

#: File extensions accepted for settings files (everything smart_settings can read).
SETTINGS_FILE_SUFFIXES = (".json", ".yml", ".yaml", ".toml")


class SettingsError(Exception):
    """Custom error for anything related to the settings."""

    ...


def is_settings_file(path: Union[str, os.PathLike]) -> bool:
    """Check if path names an existing settings file of a supported type.

    Raises:
        FileNotFoundError: if the suffix is supported but the file does not exist.
    """
    path = pathlib.Path(path)
    if path.suffix not in SETTINGS_FILE_SUFFIXES:
        return False
    if not path.is_file():
        raise FileNotFoundError(f"{path}: No such settings file found")
    return True


def add_cmd_line_params(
    base_dict: MutableMapping[str, Any],
    extra_flags: Iterable[str],
    allowed_keys: Optional[Collection[str]] = None,
) -> None:
    """Apply overrides of the form ``<key>=<value>`` to base_dict.

    Values are parsed with ``ast.literal_eval``.  Bare words that are not Python
    literals (e.g. ``inf``, ``auto`` or ``gauss``) are kept as strings.  Dashes in keys
    are mapped to underscores so that flag names can be used as keys.

    Raises:
        SettingsError: if an override is malformed or names an unknown key.
    """
    for extra_flag in extra_flags:
        key, eq, value = extra_flag.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()

        if not key or not eq or not value:
            raise SettingsError(f"{extra_flag}: expected the format '<key>=<value>'")
        if allowed_keys is not None and key not in allowed_keys:
            raise SettingsError(f"{key}: unknown setting")

        try:
            base_dict[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            base_dict[key] = value


def read_settings(
    settings_file: Optional[Union[str, os.PathLike]],
    overrides: Optional[list[str]] = None,
    allowed_keys: Optional[Collection[str]] = None,
) -> dict[str, Any]:
    """Read experiment settings from a file and/or command line overrides.

    Args:
        settings_file:  Path to a json/yaml/toml file loaded with smart_settings.  May
            be None, in which case only the overrides are used.
        overrides:  List of ``<key>=<value>`` strings applied on top of the file.
        allowed_keys:  If given, reject keys (in the file or the overrides) that are
            not contained.

    Returns:
        Plain dictionary with the merged settings.
    """
    overrides = overrides or []

    def check_keys(orig_dict):
        if allowed_keys is None:
            return
        for key in orig_dict:
            if key not in allowed_keys:
                raise SettingsError(f"{key}: unknown setting in {settings_file}")

    def add_overrides(orig_dict):
        add_cmd_line_params(orig_dict, overrides, allowed_keys)

    if settings_file is None:
        settings: dict[str, Any] = {}
        add_overrides(settings)
        return settings

    try:
        if not is_settings_file(settings_file):
            raise SettingsError(
                f"--settings: {settings_file} is not a supported settings file"
            )
        loaded = smart_settings.load(
            os.fspath(settings_file),
            make_immutable=False,
            dynamic=False,
            post_unpack_hooks=[check_keys, add_overrides],
        )
    except SettingsError:
        raise
    except Exception as e:
        raise SettingsError(f"--settings: failed to read {settings_file}: {e}") from e

    return dict(loaded)
