"""Explicit asymptotically conical Ricci-flat Kahler metrics on canonical
bundles of flag varieties, with numerical verification tooling.

Subpackages by responsibility:

* :mod:`flagcone.lie` -- root-system data for the supported base manifolds.
* :mod:`flagcone.potential` -- the radial potential: numeric solver, radical
  closed forms, fractional-power asymptotics.
* :mod:`flagcone.geometry` -- chart-level metric tensors and curvature.
* :mod:`flagcone.verify` -- verification suites (Ricci-flatness, volume
  identity, decay-rate fits, closed-form cross-checks).
* :mod:`flagcone.cli` -- batch command line interface.
"""

__version__ = "0.1.0"

from . import lie, potential  # noqa: F401
