"""boltzcf: the homogeneous Boltzmann equation for Maxwellian molecules,
solved and dissected in Fourier (characteristic-function) variables.

Subpackages cover the angular kernel, endpoint-singular quadrature, spectral
constants, radial characteristic functions with their weighted sup-metric,
time evolution (Wild series and adaptive stepping), the self-similar profile
series, and a reproducible experiment CLI.
"""

from ._fast import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
