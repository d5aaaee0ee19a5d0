# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte-Carlo kernels. Signatures mirror :mod:`qsteer.kernels._pykernels`."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def respond(const double complex[:, ::1] psi, const double complex[:, ::1] frame, bint pick_max):
    cdef Py_ssize_t n = psi.shape[0]
    cdef Py_ssize_t d = psi.shape[1]
    cdef Py_ssize_t i, j, a, best_a
    cdef double complex amp
    cdef double ov, best
    out = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] out_v = out
    if frame.shape[0] != d or frame.shape[1] != d:
        raise ValueError("frame must be a d x d matrix matching psi")
    for i in range(n):
        best_a = 0
        best = 0.0
        for a in range(d):
            amp = 0.0
            for j in range(d):
                amp = amp + frame[j, a].conjugate() * psi[i, j]
            ov = amp.real * amp.real + amp.imag * amp.imag
            if a == 0:
                best = ov
            elif pick_max:
                if ov > best:
                    best = ov
                    best_a = a
            else:
                if ov < best:
                    best = ov
                    best_a = a
        out_v[i] = best_a
    return out


def accumulate_outer(const double complex[:, ::1] psi, const Py_ssize_t[::1] labels, Py_ssize_t n_labels):
    cdef Py_ssize_t n = psi.shape[0]
    cdef Py_ssize_t d = psi.shape[1]
    cdef Py_ssize_t i, j, k, lab
    cdef double complex x
    if labels.shape[0] != n:
        raise ValueError("labels must have one entry per sample")
    sums = np.zeros((n_labels, d, d), dtype=np.complex128)
    sq = np.zeros((n_labels, d, d), dtype=np.float64)
    counts = np.zeros(n_labels, dtype=np.int64)
    cdef double complex[:, :, ::1] s_v = sums
    cdef double[:, :, ::1] q_v = sq
    cdef long long[::1] c_v = counts
    for i in range(n):
        lab = labels[i]
        if lab < 0 or lab >= n_labels:
            raise ValueError("label out of range")
        c_v[lab] += 1
        for j in range(d):
            for k in range(d):
                x = psi[i, j] * psi[i, k].conjugate()
                s_v[lab, j, k] = s_v[lab, j, k] + x
                q_v[lab, j, k] += x.real * x.real + x.imag * x.imag
    return sums, sq, counts
