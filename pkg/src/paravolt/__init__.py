"""paravolt: paracontrolled analysis of convolution-type Volterra equations.

Modules
-------
gridfn     periodic grid functions, norms, shifts, dilations, vector fields
spectral   dyadic partition, Littlewood-Paley blocks, Besov norms, regularity fits
paracalc   paraproducts, resonant term, convolution, commutators
kernels    step, fractional and cutoff kernels with regularity reports
roughpath  convolutional rough paths: smooth lift and stochastic series
solver     Young, jumps and paracontrolled Picard solvers, localization, continuity probe
models     noise samplers, application drivers and the direct quadrature oracle
cli        the ``paravolt`` command

The hot loops live in the compiled ``_kernels`` extension; ``_core.BACKEND``
reports whether it or the numpy fallback is in use.
"""
from ._core import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
