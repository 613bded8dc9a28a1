"""Hot kernels with a numba backend and a pure-numpy fallback.

The backend is fixed at import time (``BOOLFLOW_DISABLE_NUMBA=1`` selects
numpy).  Public functions here broadcast their arguments, hand contiguous
1-D float64 arrays to the backend, and restore the broadcast shape.
"""

import numpy as np

from .._accel import USE_NUMBA
from . import _numpy
from . import _scalar as scalar

if USE_NUMBA:
    from . import _numba as _impl

    BACKEND = "numba"
else:
    _impl = _numpy
    BACKEND = "numpy"


def _flat(*args):
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=np.float64) for a in args])
    shape = arrs[0].shape
    return shape, [np.ascontiguousarray(a).ravel() for a in arrs]


def _unary(name):
    def fn(a, backend=None):
        impl = _impl if backend is None else _backend(backend)
        shape, (flat,) = _flat(a)
        return getattr(impl, name)(flat).reshape(shape)

    fn.__name__ = name
    return fn


def _binary(name):
    def fn(a, b, backend=None):
        impl = _impl if backend is None else _backend(backend)
        shape, (fa, fb) = _flat(a, b)
        return getattr(impl, name)(fa, fb).reshape(shape)

    fn.__name__ = name
    return fn


def _backend(name):
    if name == "numpy":
        return _numpy
    if name == "numba":
        if not USE_NUMBA:
            raise ValueError("the numba backend is unavailable (numba missing or "
                             "BOOLFLOW_DISABLE_NUMBA is set)")
        from . import _numba

        return _numba
    raise ValueError(f"unknown backend {name!r}")


h2_inv = _unary("h2_inv")
big_l_inv = _unary("big_l_inv")
eta = _unary("eta")
jl = _unary("jl")
phi = _binary("phi")
sym_kl = _binary("sym_kl")
kappa = _binary("kappa")
perspective = _binary("perspective")

# cheap elementwise maps stay numpy on both backends
h2 = _numpy.h2
j = _numpy.j
big_l = _numpy.big_l


def smooth(tables, p, backend=None):
    impl = _impl if backend is None else _backend(backend)
    return impl.smooth(np.ascontiguousarray(tables, dtype=np.float64), float(p))


def kl_edge_sum(v, backend=None):
    impl = _impl if backend is None else _backend(backend)
    return impl.kl_edge_sum(np.ascontiguousarray(v, dtype=np.float64))


def hel_edge_sum(d, backend=None):
    impl = _impl if backend is None else _backend(backend)
    return impl.hel_edge_sum(np.ascontiguousarray(d, dtype=np.float64))


__all__ = [
    "BACKEND", "USE_NUMBA", "scalar", "h2", "j", "big_l", "h2_inv", "big_l_inv", "eta", "jl",
    "phi", "sym_kl", "kappa", "perspective", "smooth", "kl_edge_sum", "hel_edge_sum",
]
