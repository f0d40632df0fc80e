# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Pure-Python twins live in ``graphceps._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, log, exp, INFINITY

cnp.import_array()


def jacobi_eigh(cnp.ndarray a_in, double rel_tol=1e-12, int max_sweeps=100):
    """Cyclic Jacobi diagonalization of a real symmetric matrix.

    Returns ``(w, v, sweeps)`` with eigenvalues ``w`` in the order they sit
    on the diagonal after convergence (unsorted) and eigenvectors as the
    columns of ``v``.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a_arr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double fro = 0.0, off, apq, tau, t, c, s, x, y

    for p in range(n):
        for q in range(n):
            fro += a[p, q] * a[p, q]
    fro = sqrt(fro)
    cdef double thresh = rel_tol * fro

    while sweep < max_sweeps:
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += a[p, q] * a[p, q]
        if sqrt(off) <= thresh:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    x = a[k, p]
                    y = a[k, q]
                    a[k, p] = c * x - s * y
                    a[k, q] = s * x + c * y
                for k in range(n):
                    x = a[p, k]
                    y = a[q, k]
                    a[p, k] = c * x - s * y
                    a[q, k] = s * x + c * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    x = v[k, p]
                    y = v[k, q]
                    v[k, p] = c * x - s * y
                    v[k, q] = s * x + c * y

    w = np.array([a_arr[k, k] for k in range(n)], dtype=np.float64)
    return w, v_arr, sweep


def diag_gmm_logpdf(cnp.ndarray x_in, cnp.ndarray means_in, cnp.ndarray inv_var_in,
                    cnp.ndarray log_const_in):
    """Per-component and total log-density of a diagonal GMM.

    ``log_const[m]`` must already hold ``log w_m - 0.5 * sum(log(2 pi var_m))``.
    Returns ``(comp, total)`` of shapes ``(T, M)`` and ``(T,)``.
    """
    cdef double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, ::1] mu = np.ascontiguousarray(means_in, dtype=np.float64)
    cdef double[:, ::1] prec = np.ascontiguousarray(inv_var_in, dtype=np.float64)
    cdef double[::1] lc = np.ascontiguousarray(log_const_in, dtype=np.float64)
    cdef Py_ssize_t t_len = x.shape[0], dim = x.shape[1], m_len = mu.shape[0]
    comp_arr = np.empty((t_len, m_len), dtype=np.float64)
    total_arr = np.empty(t_len, dtype=np.float64)
    cdef double[:, ::1] comp = comp_arr
    cdef double[::1] total = total_arr
    cdef Py_ssize_t i, m, d
    cdef double acc, diff, top, ssum

    for i in range(t_len):
        top = -INFINITY
        for m in range(m_len):
            acc = 0.0
            for d in range(dim):
                diff = x[i, d] - mu[m, d]
                acc += diff * diff * prec[m, d]
            acc = lc[m] - 0.5 * acc
            comp[i, m] = acc
            if acc > top:
                top = acc
        if top == -INFINITY:
            total[i] = -INFINITY
            continue
        ssum = 0.0
        for m in range(m_len):
            ssum += exp(comp[i, m] - top)
        total[i] = top + log(ssum)
    return comp_arr, total_arr
