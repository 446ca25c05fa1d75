# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled partial-trace kernel.

``rho[keep_off[i] + trace_off[t], keep_off[j] + trace_off[t]]`` summed over
``t`` gives entry ``(i, j)`` of the reduced matrix. Offsets are the
mixed-radix contributions of the kept and traced digits, so no
high-rank tensor is ever materialised.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def ptrace_offsets(const double complex[:, ::1] rho,
                   const cnp.int64_t[::1] keep_off,
                   const cnp.int64_t[::1] trace_off):
    cdef Py_ssize_t nk = keep_off.shape[0]
    cdef Py_ssize_t nt = trace_off.shape[0]
    cdef Py_ssize_t i, j, t
    cdef cnp.int64_t ki, kj, tt
    cdef double complex acc
    out = np.empty((nk, nk), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for i in range(nk):
            ki = keep_off[i]
            for j in range(i, nk):
                kj = keep_off[j]
                acc = 0
                for t in range(nt):
                    tt = trace_off[t]
                    acc = acc + rho[ki + tt, kj + tt]
                o[i, j] = acc
                if j != i:
                    o[j, i] = acc.conjugate()
    return out


def ptrace_offsets_general(const double complex[:, ::1] rho,
                           const cnp.int64_t[::1] keep_off,
                           const cnp.int64_t[::1] trace_off):
    """Same contraction without assuming Hermiticity (used for operators)."""
    cdef Py_ssize_t nk = keep_off.shape[0]
    cdef Py_ssize_t nt = trace_off.shape[0]
    cdef Py_ssize_t i, j, t
    cdef cnp.int64_t ki, kj, tt
    cdef double complex acc
    out = np.empty((nk, nk), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for i in range(nk):
            ki = keep_off[i]
            for j in range(nk):
                kj = keep_off[j]
                acc = 0
                for t in range(nt):
                    tt = trace_off[t]
                    acc = acc + rho[ki + tt, kj + tt]
                o[i, j] = acc
    return out
