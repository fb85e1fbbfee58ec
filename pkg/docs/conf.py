"""Sphinx configuration of the uqcov documentation."""

from __future__ import annotations

import re

import docutils.nodes
import sphinx.addnodes

project = "uqcov"
author = "uqcov developers"
copyright = "2026, uqcov developers"  # noqa: A001
release = "0.1.0"
version = "0.1"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx_immaterial",
]
master_doc = "index"
exclude_patterns = ["_build"]

autodoc_member_order = "bysource"
napoleon_google_docstring = True

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
}

html_theme = "sphinx_immaterial"
html_theme_options = {
    "palette": {"primary": "indigo", "accent": "teal"},
    "features": ["navigation.sections", "navigation.top", "toc.follow"],
}

object_description_options = [
    ("std:confval", dict(toc_icon_class="data", toc_icon_text="S")),
]

# "name", "name: type", "name = default" or "name: type = default"
_SETTING_SIGNATURE = re.compile(r"([a-zA-Z0-9_.]+)\s*(?::([^=]+))?\s*(?:=(.+))?")


def _parse_setting(env, sig, node):
    m = _SETTING_SIGNATURE.match(sig)
    assert m is not None
    name, value_type, default = m.groups()

    node += sphinx.addnodes.desc_name(name, name)
    if value_type is not None:
        node += sphinx.addnodes.desc_sig_punctuation(" : ", " : ")
        node += sphinx.addnodes.desc_type("", value_type.strip())
    if default is not None:
        node += sphinx.addnodes.desc_sig_punctuation(" = ", " = ")
        node += docutils.nodes.literal(default, default.strip(), classes=["code"])
    return name


def setup(app):
    # settings of the command line tool, see configuration.rst
    app.add_object_type(
        "confval",
        "confval",
        objname="setting",
        indextemplate="pair: %s; setting",
        parse_node=_parse_setting,
    )
