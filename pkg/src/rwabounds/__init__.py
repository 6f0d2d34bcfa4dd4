"""Superoperator evolution with certified approximation-error bounds.

Subpackages cover construction of Lindblad-type generators on vectorized
operator spaces, their spectral resolution, time-ordered propagation,
diamond-norm machinery, closed-form error bounds for averaged and pinched
effective generators, and the Redfield-to-secular pipeline, plus a CLI that
sweeps the worked examples and checks every bound against the measured
distance.
"""

from ._kernels import BACKEND as kernel_backend

__all__ = ["kernel_backend"]
__version__ = "0.1.0"
