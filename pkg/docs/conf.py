# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys

sys.path.insert(0, os.path.abspath(".."))


# -- Project information -----------------------------------------------------

project = "sap"
copyright = "2026, sap developers"
author = "sap developers"


# -- General configuration ---------------------------------------------------

master_doc = "index"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
]

templates_path = []

exclude_patterns = []


# -- Options for HTML output -------------------------------------------------

html_theme = "alabaster"

autodoc_member_order = "bysource"

intersphinx_mapping = {
    "Python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "mpmath": ("https://mpmath.org/doc/current/", None),
    "marshmallow": ("https://marshmallow.readthedocs.io/en/stable/", None),
}

html_theme_options = {
    "description": "exact enumeration of square-lattice self-avoiding polygons",
    "description_font_style": "italic",
}
