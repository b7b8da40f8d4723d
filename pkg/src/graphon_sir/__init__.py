"""graphon-sir: SIR epidemics on large graphs and their graphon limits.

Subpackages
-----------
graphon   kernel families, cell averages, trims, norms, degree diagnostics
graphs    deterministic dense graph generators
sampling  random and averaged graph samplers driven by a kernel
sir       the coupled s/i/r integrator (fixed-step RK4 / 8th order)
cutnorm   cut-norm and cut-distance diagnostics
analysis  convergence and Monte Carlo studies
cli       the ``graphon-sir`` command line front end
"""

from . import analysis, cutnorm, graphon, graphs, sampling, sir  # noqa: F401

__version__ = "0.1.0"
