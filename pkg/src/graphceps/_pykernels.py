"""Pure-Python implementations of the compiled kernels in ``_kernels.pyx``.

Same algorithms, same argument conventions; used when the extension is not
built or when ``GRAPHCEPS_BACKEND=python`` is set.
"""

import math

import numpy as np


def jacobi_eigh(a_in, rel_tol=1e-12, max_sweeps=100):
    a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    n = a.shape[0]
    v = np.eye(n)
    thresh = rel_tol * math.sqrt(float(np.sum(a * a)))
    offdiag = ~np.eye(n, dtype=bool)

    sweep = 0
    while sweep < max_sweeps:
        if math.sqrt(float(np.sum(a[offdiag] ** 2))) <= thresh:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    return np.diag(a).copy(), v, sweep


def diag_gmm_logpdf(x, means, inv_var, log_const):
    x = np.asarray(x, dtype=np.float64)
    diff = x[:, None, :] - np.asarray(means)[None, :, :]
    comp = np.asarray(log_const)[None, :] - 0.5 * np.einsum("tmd,md->tm", diff * diff, inv_var)
    top = comp.max(axis=1)
    safe_top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        total = safe_top + np.log(np.exp(comp - safe_top[:, None]).sum(axis=1))
    return comp, total
