"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``EPISTOCH_BACKEND=python`` to force the fallback.
"""
import os

kernels = None
if os.environ.get("EPISTOCH_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as kernels
    except ImportError:  # extension not built
        kernels = None
if kernels is None:
    from . import _pykernels as kernels

BACKEND = kernels.BACKEND
