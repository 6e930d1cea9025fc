"""Hot numeric kernels: FK/IK batches and trajectory profile planning/stepping.

The backend is picked once at import from ``VRTELEOP_BACKEND`` (see
``vrteleop._backend``). Both backends stay importable as ``kernels.nb`` and
``kernels.np`` for cross-checking and benchmarking.
"""
from .._backend import BACKEND, HAS_NUMBA
from . import _np as np
from ._layout import LIMITS, NPROF, OK, SINGULAR, UNREACHABLE

if HAS_NUMBA:
    from . import _nb as nb
else:  # pragma: no cover - depends on environment
    nb = None

_impl = nb if BACKEND == "numba" else np

fk_batch = _impl.fk_batch
ik_batch = _impl.ik_batch
arm_angle_batch = _impl.arm_angle_batch
plan = _impl.plan
sample = _impl.sample
simulate = _impl.simulate

__all__ = [
    "BACKEND", "LIMITS", "NPROF", "OK", "SINGULAR", "UNREACHABLE",
    "arm_angle_batch", "fk_batch", "ik_batch", "nb", "np", "plan", "sample", "simulate",
]
