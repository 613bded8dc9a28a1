"""Numba array loops over the scalar kernels in ``_scalar``."""

import numpy as np
from numba import njit

from . import _scalar as s


def _elementwise1(scalar):
    @njit(cache=True, nogil=True)
    def kernel(a):
        out = np.empty(a.shape[0])
        for i in range(a.shape[0]):
            out[i] = scalar(a[i])
        return out

    return kernel


def _elementwise2(scalar):
    @njit(cache=True, nogil=True)
    def kernel(a, b):
        out = np.empty(a.shape[0])
        for i in range(a.shape[0]):
            out[i] = scalar(a[i], b[i])
        return out

    return kernel


h2_inv = _elementwise1(s.h2_inv)
big_l_inv = _elementwise1(s.big_l_inv)
eta = _elementwise1(s.eta)
jl = _elementwise1(s.jl)
phi = _elementwise2(s.phi)
sym_kl = _elementwise2(s.sym_kl)
kappa = _elementwise2(s.kappa)
perspective = _elementwise2(s.perspective)


@njit(cache=True, nogil=True)
def smooth(tables, p):
    b, size = tables.shape
    v = tables.copy()
    q = 1.0 - p
    stride = 1
    while stride < size:
        for r in range(b):
            for x in range(size):
                if x & stride == 0:
                    y = x | stride
                    lo = v[r, x]
                    hi = v[r, y]
                    v[r, x] = q * lo + p * hi
                    v[r, y] = p * lo + q * hi
        stride <<= 1
    return v


@njit(cache=True, nogil=True)
def _edge_sum(v, fv):
    b, size = v.shape
    out = np.zeros(b)
    for r in range(b):
        total = 0.0
        stride = 1
        while stride < size:
            for x in range(size):
                if x & stride == 0:
                    y = x | stride
                    total += (v[r, x] - v[r, y]) * (fv[r, x] - fv[r, y])
            stride <<= 1
        out[r] = total / size
    return out


@njit(cache=True, nogil=True)
def kl_edge_sum(v):
    b, size = v.shape
    fv = np.empty((b, size))
    for r in range(b):
        for x in range(size):
            fv[r, x] = -s.j(v[r, x])
    return _edge_sum(v, fv)


@njit(cache=True, nogil=True)
def hel_edge_sum(d):
    b, size = d.shape
    fv = np.empty((b, size))
    for r in range(b):
        for x in range(size):
            fv[r, x] = s.hel_slope(d[r, x])
    return _edge_sum(d, fv)
