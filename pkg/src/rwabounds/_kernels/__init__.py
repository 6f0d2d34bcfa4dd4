"""RK4 stepping kernels: compiled extension with a numpy fallback.

The compiled kernel is preferred; set ``RWABOUNDS_FORCE_NUMPY=1`` to force
the fallback (used by the benchmark and the equivalence tests).
"""

import os

if os.environ.get("RWABOUNDS_FORCE_NUMPY"):
    from ._step_np import BACKEND, rk4_lincomb
else:
    try:
        from ._step_cy import BACKEND, rk4_lincomb
    except ImportError:
        from ._step_np import BACKEND, rk4_lincomb

__all__ = ["rk4_lincomb", "BACKEND"]
