#
# ecgcrypt documentation build configuration file.
#
# All configuration values have a default; values that are commented out
# serve to show the default.

import sys
import os

# the package lives two levels up
sys.path.insert(0, os.path.abspath('../../'))

# -- General configuration ------------------------------------------------

needs_sphinx = '1.8'

extensions = [
    'sphinx.ext.todo',
    'sphinx.ext.viewcode',
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
]

# To avoid having to install these on ReadTheDocs. numpy is imported at module level.
autodoc_mock_imports = [
    'click',
    'jinja2',
    'boltons',
    'scipy',
]

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

# General information about the project.
project = u'ecgcrypt'
copyright = u'2026, ecgcrypt developers'
author = u'ecgcrypt developers'

# The short X.Y version.
version = ''
# The full version, including alpha/beta/rc tags.
release = '0.1.0'

language = 'en'

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

pygments_style = 'sphinx'

todo_include_todos = True

# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'

html_static_path = ['_static']

htmlhelp_basename = 'ecgcryptdoc'

# -- Options for LaTeX output ---------------------------------------------

latex_documents = [
    (master_doc, 'ecgcrypt.tex', u'ecgcrypt Documentation',
     u'ecgcrypt developers', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'ecgcrypt', u'ecgcrypt Documentation',
     [author], 1)
]
