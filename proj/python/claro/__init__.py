"""Model-agnostic explanations for tabular pricing models.

Thin re-export of the compiled extension. The heavy lifting (data
handling, model fitting, explainers, SVG rendering) happens in C++;
every function here is deterministic for a fixed seed.
"""

try:
    from ._claro import *  # noqa: F401,F403  (installed package layout)
    from ._claro import __doc__  # noqa: F401
except ImportError:  # pragma: no cover - in-tree builds put _claro on sys.path
    from _claro import *  # noqa: F401,F403
    from _claro import __doc__  # noqa: F401
