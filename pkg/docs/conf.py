#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# rumor documentation build configuration file.
#
# setup.py doc overrides project, copyright, version, and release.

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

# -- General configuration ------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.napoleon']
templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'rumor'
copyright = 'Rumor Developers'
author = 'Rumor Developers'
version = '0.1'
release = '0.1'

language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'
todo_include_todos = False

# Heavy numerical dependencies need not be installed to build the docs.
autodoc_mock_imports = ['networkx', 'numpy', 'scipy']

# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'
html_static_path = []
htmlhelp_basename = 'rumordoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}
latex_documents = [
    (master_doc, 'rumor.tex', 'rumor Documentation',
     'Rumor Developers', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'rumor', 'rumor Documentation', [author], 1)
]

# -- Options for Texinfo output -------------------------------------------

texinfo_documents = [
    (master_doc, 'rumor', 'rumor Documentation',
     author, 'rumor', 'Privacy audits of gossip protocols.',
     'Miscellaneous'),
]
