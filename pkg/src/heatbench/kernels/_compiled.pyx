# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_reference``.

Recurrent matrix products go through BLAS dgemm; gate nonlinearities and
state updates are fused per step, which removes the per-timestep temporaries
that dominate the numpy version.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, tanh, log1p, fabs
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "compiled"


cdef inline double _sig(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _logsig(double x) noexcept nogil:
    # -log(1 + exp(-x)) without overflow
    if x >= 0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef inline void _mm(bint ta, bint tb, int M, int N, int K,
                     double* A, int lda, double* B, int ldb,
                     double beta, double* C, int ldc) noexcept nogil:
    """Row-major C = op(A) @ op(B) + beta * C, mapped onto column-major dgemm."""
    cdef char opa = b'T' if tb else b'N'
    cdef char opb = b'T' if ta else b'N'
    cdef double one = 1.0
    dgemm(&opa, &opb, &N, &M, &K, &one, B, &ldb, A, &lda, &beta, C, &ldc)


def lstm_forward(gx, U):
    cdef double[:, :, ::1] g = np.ascontiguousarray(gx, dtype=np.float64)
    cdef double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef int Bn = g.shape[0], T = g.shape[1], G = g.shape[2]
    cdef int H = G // 4
    acts_arr = np.empty((Bn, T, G))
    c_arr = np.zeros((Bn, T + 1, H))
    h_arr = np.zeros((Bn, T + 1, H))
    pre_arr = np.empty((Bn, G))
    cdef double[:, :, ::1] acts = acts_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] h = h_arr
    cdef double[:, ::1] pre = pre_arr
    cdef int t, b, j
    cdef double ig, fg, gg, og, cn
    with nogil:
        for t in range(T):
            for b in range(Bn):
                for j in range(G):
                    pre[b, j] = g[b, t, j]
            if H > 0:
                _mm(False, False, Bn, G, H, &h[0, t, 0], (T + 1) * H, &u[0, 0], G, 1.0, &pre[0, 0], G)
            for b in range(Bn):
                for j in range(H):
                    ig = _sig(pre[b, j])
                    fg = _sig(pre[b, H + j])
                    gg = tanh(pre[b, 2 * H + j])
                    og = _sig(pre[b, 3 * H + j])
                    cn = fg * c[b, t, j] + ig * gg
                    c[b, t + 1, j] = cn
                    h[b, t + 1, j] = og * tanh(cn)
                    acts[b, t, j] = ig
                    acts[b, t, H + j] = fg
                    acts[b, t, 2 * H + j] = gg
                    acts[b, t, 3 * H + j] = og
    return h_arr[:, 1:].copy(), (acts_arr, c_arr, h_arr)


def lstm_backward(dh_seq, U, cache):
    acts_arr, c_arr, h_arr = cache
    cdef double[:, :, ::1] dhs = np.ascontiguousarray(dh_seq, dtype=np.float64)
    cdef double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef double[:, :, ::1] acts = acts_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] h = h_arr
    cdef int Bn = acts.shape[0], T = acts.shape[1], G = acts.shape[2]
    cdef int H = G // 4
    dgx_arr = np.empty((Bn, T, G))
    dU_arr = np.zeros((H, G))
    dh_next_arr = np.zeros((Bn, H))
    dc_next_arr = np.zeros((Bn, H))
    cdef double[:, :, ::1] dgx = dgx_arr
    cdef double[:, ::1] dU = dU_arr
    cdef double[:, ::1] dh_next = dh_next_arr
    cdef double[:, ::1] dc_next = dc_next_arr
    cdef int t, b, j
    cdef double ig, fg, gg, og, dh, tc, dc
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(Bn):
                for j in range(H):
                    ig = acts[b, t, j]
                    fg = acts[b, t, H + j]
                    gg = acts[b, t, 2 * H + j]
                    og = acts[b, t, 3 * H + j]
                    dh = dhs[b, t, j] + dh_next[b, j]
                    tc = tanh(c[b, t + 1, j])
                    dc = dc_next[b, j] + dh * og * (1.0 - tc * tc)
                    dgx[b, t, j] = dc * gg * ig * (1.0 - ig)
                    dgx[b, t, H + j] = dc * c[b, t, j] * fg * (1.0 - fg)
                    dgx[b, t, 2 * H + j] = dc * ig * (1.0 - gg * gg)
                    dgx[b, t, 3 * H + j] = dh * tc * og * (1.0 - og)
                    dc_next[b, j] = dc * fg
            if H > 0:
                _mm(True, False, H, G, Bn, &h[0, t, 0], (T + 1) * H, &dgx[0, t, 0], T * G,
                    1.0, &dU[0, 0], G)
                _mm(False, True, Bn, H, G, &dgx[0, t, 0], T * G, &u[0, 0], G,
                    0.0, &dh_next[0, 0], H)
    return dgx_arr, dU_arr


def slstm_forward(gx, R):
    cdef double[:, :, ::1] g = np.ascontiguousarray(gx, dtype=np.float64)
    cdef double[:, :, ::1] r = np.ascontiguousarray(R, dtype=np.float64)
    cdef int Bn = g.shape[0], T = g.shape[1], G = g.shape[2]
    cdef int D = G // 4
    cdef int NH = r.shape[0], DH = r.shape[1]
    acts_arr = np.empty((Bn, T, 5 * D))
    c_arr = np.zeros((Bn, T + 1, D))
    n_arr = np.zeros((Bn, T + 1, D))
    h_arr = np.zeros((Bn, T + 1, D))
    pre_arr = np.empty((Bn, G))
    m_arr = np.zeros((Bn, D))
    cdef double[:, :, ::1] acts = acts_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] n = n_arr
    cdef double[:, :, ::1] h = h_arr
    cdef double[:, ::1] pre = pre_arr
    cdef double[:, ::1] m = m_arr
    cdef int t, b, j, hd, gt
    cdef double z, it, ft, og, logf, mnew, ip, fp, cn, nn
    with nogil:
        for t in range(T):
            for b in range(Bn):
                for j in range(G):
                    pre[b, j] = g[b, t, j]
            for hd in range(NH):
                for gt in range(4):
                    _mm(False, False, Bn, DH, DH, &h[0, t, hd * DH], (T + 1) * D,
                        &r[hd, 0, gt * DH], 4 * DH, 1.0, &pre[0, gt * D + hd * DH], G)
            for b in range(Bn):
                for j in range(D):
                    z = tanh(pre[b, j])
                    it = pre[b, D + j]
                    ft = pre[b, 2 * D + j]
                    og = _sig(pre[b, 3 * D + j])
                    logf = _logsig(ft)
                    if t == 0:
                        mnew = it
                        fp = 0.0
                    else:
                        mnew = logf + m[b, j]
                        if it > mnew:
                            mnew = it
                        fp = exp(logf + m[b, j] - mnew)
                    ip = exp(it - mnew)
                    cn = fp * c[b, t, j] + ip * z
                    nn = fp * n[b, t, j] + ip
                    c[b, t + 1, j] = cn
                    n[b, t + 1, j] = nn
                    h[b, t + 1, j] = og * cn / nn
                    m[b, j] = mnew
                    acts[b, t, j] = z
                    acts[b, t, D + j] = ip
                    acts[b, t, 2 * D + j] = fp
                    acts[b, t, 3 * D + j] = og
                    acts[b, t, 4 * D + j] = _sig(ft)
    return h_arr[:, 1:].copy(), (acts_arr, c_arr, n_arr, h_arr)


def slstm_backward(dh_seq, R, cache):
    acts_arr, c_arr, n_arr, h_arr = cache
    cdef double[:, :, ::1] dhs = np.ascontiguousarray(dh_seq, dtype=np.float64)
    cdef double[:, :, ::1] r = np.ascontiguousarray(R, dtype=np.float64)
    cdef double[:, :, ::1] acts = acts_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] n = n_arr
    cdef double[:, :, ::1] h = h_arr
    cdef int Bn = acts.shape[0], T = acts.shape[1]
    cdef int D = acts.shape[2] // 5
    cdef int G = 4 * D
    cdef int NH = r.shape[0], DH = r.shape[1]
    dgx_arr = np.empty((Bn, T, G))
    dR_arr = np.zeros((NH, DH, 4 * DH))
    dh_next_arr = np.zeros((Bn, D))
    dc_next_arr = np.zeros((Bn, D))
    dn_next_arr = np.zeros((Bn, D))
    cdef double[:, :, ::1] dgx = dgx_arr
    cdef double[:, :, ::1] dR = dR_arr
    cdef double[:, ::1] dh_next = dh_next_arr
    cdef double[:, ::1] dc_next = dc_next_arr
    cdef double[:, ::1] dn_next = dn_next_arr
    cdef int t, b, j, hd, gt
    cdef double z, ip, fp, og, sf, ct, nt, dh, dc, dn
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(Bn):
                for j in range(D):
                    z = acts[b, t, j]
                    ip = acts[b, t, D + j]
                    fp = acts[b, t, 2 * D + j]
                    og = acts[b, t, 3 * D + j]
                    sf = acts[b, t, 4 * D + j]
                    ct = c[b, t + 1, j]
                    nt = n[b, t + 1, j]
                    dh = dhs[b, t, j] + dh_next[b, j]
                    dc = dc_next[b, j] + dh * og / nt
                    dn = dn_next[b, j] - dh * og * ct / (nt * nt)
                    dgx[b, t, j] = dc * ip * (1.0 - z * z)
                    dgx[b, t, D + j] = (dc * z + dn) * ip
                    dgx[b, t, 2 * D + j] = (dc * c[b, t, j] + dn * n[b, t, j]) * fp * (1.0 - sf)
                    dgx[b, t, 3 * D + j] = dh * ct / nt * og * (1.0 - og)
                    dc_next[b, j] = dc * fp
                    dn_next[b, j] = dn * fp
            for hd in range(NH):
                for gt in range(4):
                    _mm(True, False, DH, DH, Bn, &h[0, t, hd * DH], (T + 1) * D,
                        &dgx[0, t, gt * D + hd * DH], T * G, 1.0, &dR[hd, 0, gt * DH], 4 * DH)
                    _mm(False, True, Bn, DH, DH, &dgx[0, t, gt * D + hd * DH], T * G,
                        &r[hd, 0, gt * DH], 4 * DH, 0.0 if gt == 0 else 1.0, &dh_next[0, hd * DH], D)
    return dgx_arr, dR_arr


def conv_forward(x, w):
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef int Bn = xv.shape[0], T = xv.shape[1], C = xv.shape[2], K = wv.shape[1]
    out_arr = np.zeros((Bn, T, C))
    cdef double[:, :, ::1] out = out_arr
    cdef int b, t, ch, j, src
    cdef double acc
    with nogil:
        for b in range(Bn):
            for t in range(T):
                for ch in range(C):
                    acc = 0.0
                    for j in range(K):
                        src = t - K + 1 + j
                        if src >= 0:
                            acc = acc + wv[ch, j] * xv[b, src, ch]
                    out[b, t, ch] = acc
    return out_arr


def conv_backward(g, x, w):
    cdef double[:, :, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef int Bn = xv.shape[0], T = xv.shape[1], C = xv.shape[2], K = wv.shape[1]
    dx_arr = np.zeros((Bn, T, C))
    dw_arr = np.zeros((C, K))
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, ::1] dw = dw_arr
    cdef int b, t, ch, j, src
    cdef double gval
    with nogil:
        for b in range(Bn):
            for t in range(T):
                for ch in range(C):
                    gval = gv[b, t, ch]
                    for j in range(K):
                        src = t - K + 1 + j
                        if src >= 0:
                            dx[b, src, ch] += gval * wv[ch, j]
                            dw[ch, j] += gval * xv[b, src, ch]
    return dx_arr, dw_arr
