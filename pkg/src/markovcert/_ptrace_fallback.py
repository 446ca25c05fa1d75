"""Numpy fallback for the partial-trace kernel (same signatures as ``_ptrace``)."""

import numpy as np


def ptrace_offsets_general(rho, keep_off, trace_off):
    nk = len(keep_off)
    out = np.zeros((nk, nk), dtype=np.complex128)
    # loop over the shorter index set; the other one is vectorised
    if len(trace_off) <= nk:
        for t in trace_off:
            idx = keep_off + t
            out += rho[np.ix_(idx, idx)]
    else:
        for i in range(nk):
            rows = keep_off[i] + trace_off
            for j in range(nk):
                out[i, j] = rho[rows, keep_off[j] + trace_off].sum()
    return out


def ptrace_offsets(rho, keep_off, trace_off):
    out = ptrace_offsets_general(rho, keep_off, trace_off)
    return 0.5 * (out + out.conj().T)
