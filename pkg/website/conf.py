# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------

project = "Keller-Segel Lab"
copyright = "2024, the kslab developers"
author = "the kslab developers"

# The full version, including alpha/beta/rc tags
release = "0.1.0"


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx_rtd_theme",
    "sphinx.ext.githubpages",
    "sphinx_copybutton",
    "myst_parser",
]

myst_enable_extensions = [
    "amsmath",  # Parse amsmath equations, e.g. \begin{align} 2 = 2 \end{align}
    "dollarmath",  # Parse $2 = 2$ and $$2 = 2$$
    "colon_fence",  # Enables directives using ::: and md-figure directive
    "attrs_inline",
    "attrs_block",
]

templates_path = ["_templates"]

# List of patterns, relative to source directory, that match files and
# directories to ignore when looking for source files.
# This pattern also affects html_static_path and html_extra_path.
exclude_patterns = []

# -- Options for HTML output -------------------------------------------------

# The theme to use for HTML and HTML Help pages.  See the documentation for
# a list of builtin themes.
html_theme = "sphinx_rtd_theme"
