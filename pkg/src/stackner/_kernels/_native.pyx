# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of `stackner._kernels.reference`.

Same functions, same contracts, same update order; see the reference
module for documentation. Kept free of the numpy C API on purpose: all
allocation happens through normal numpy calls, the loops run on typed
memoryviews.
"""
import numpy as np

from libc.math cimport exp, log, tanh

BACKEND_NAME = "native"

cdef double _Z_MAX = 30.0


cdef inline double _sig(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def lstm_cell_forward(double[:, ::1] xw, double[:, ::1] wh,
                      double[::1] h0, double[::1] c0):
    cdef Py_ssize_t T = xw.shape[0]
    cdef Py_ssize_t H4 = xw.shape[1]
    cdef Py_ssize_t H = H4 // 4
    h_arr = np.empty((T, H))
    c_arr = np.empty((T, H))
    g_arr = np.empty((T, H4))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] gates = g_arr
    cdef double[::1] ph, pc
    cdef Py_ssize_t t, j, k
    cdef double acc, ig, fg, gg, og, ct
    for t in range(T):
        ph = h0 if t == 0 else h[t - 1]
        pc = c0 if t == 0 else c[t - 1]
        for j in range(H4):
            acc = xw[t, j]
            for k in range(H):
                acc += wh[j, k] * ph[k]
            gates[t, j] = acc  # raw preactivation, replaced below
        for j in range(H):
            ig = _sig(gates[t, j])
            fg = _sig(gates[t, H + j])
            gg = tanh(gates[t, 2 * H + j])
            og = _sig(gates[t, 3 * H + j])
            ct = fg * pc[j] + ig * gg
            c[t, j] = ct
            h[t, j] = og * tanh(ct)
            gates[t, j] = ig
            gates[t, H + j] = fg
            gates[t, 2 * H + j] = gg
            gates[t, 3 * H + j] = og
    return h_arr, c_arr, g_arr


def lstm_cell_backward(double[:, ::1] dh_out, double[:, ::1] gates,
                       double[:, ::1] c, double[:, ::1] h,
                       double[:, ::1] wh, double[::1] h0, double[::1] c0):
    cdef Py_ssize_t T = dh_out.shape[0]
    cdef Py_ssize_t H = dh_out.shape[1]
    da_arr = np.empty((T, 4 * H))
    dwh_arr = np.zeros((4 * H, H))
    dhn_arr = np.zeros(H)
    dcn_arr = np.zeros(H)
    cdef double[:, ::1] da = da_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] dh_next = dhn_arr
    cdef double[::1] dc_next = dcn_arr
    cdef double[::1] ph, pc
    cdef Py_ssize_t t, j, k
    cdef double ig, fg, gg, og, tc, dh, do, dc, di, dg, df, acc
    for t in range(T - 1, -1, -1):
        ph = h0 if t == 0 else h[t - 1]
        pc = c0 if t == 0 else c[t - 1]
        for j in range(H):
            ig = gates[t, j]
            fg = gates[t, H + j]
            gg = gates[t, 2 * H + j]
            og = gates[t, 3 * H + j]
            tc = tanh(c[t, j])
            dh = dh_out[t, j] + dh_next[j]
            do = dh * tc
            dc = dc_next[j] + dh * og * (1.0 - tc * tc)
            di = dc * gg
            dg = dc * ig
            df = dc * pc[j]
            dc_next[j] = dc * fg
            da[t, j] = di * ig * (1.0 - ig)
            da[t, H + j] = df * fg * (1.0 - fg)
            da[t, 2 * H + j] = dg * (1.0 - gg * gg)
            da[t, 3 * H + j] = do * og * (1.0 - og)
        for j in range(4 * H):
            for k in range(H):
                dwh[j, k] += da[t, j] * ph[k]
        for k in range(H):
            acc = 0.0
            for j in range(4 * H):
                acc += wh[j, k] * da[t, j]
            dh_next[k] = acc
    return da_arr, dwh_arr, dhn_arr, dcn_arr


def crf_forward(double[:, ::1] emissions, double[:, ::1] transitions,
                Py_ssize_t start, Py_ssize_t stop):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t L = emissions.shape[1]
    alpha_arr = np.empty((T, L))
    cdef double[:, ::1] alpha = alpha_arr
    cdef Py_ssize_t t, i, j
    cdef double m, s, v
    for j in range(L):
        alpha[0, j] = transitions[start, j] + emissions[0, j]
    for t in range(1, T):
        for j in range(L):
            m = alpha[t - 1, 0] + transitions[0, j]
            for i in range(1, L):
                v = alpha[t - 1, i] + transitions[i, j]
                if v > m:
                    m = v
            s = 0.0
            for i in range(L):
                s += exp(alpha[t - 1, i] + transitions[i, j] - m)
            alpha[t, j] = emissions[t, j] + m + log(s)
    m = alpha[T - 1, 0] + transitions[0, stop]
    for j in range(1, L):
        v = alpha[T - 1, j] + transitions[j, stop]
        if v > m:
            m = v
    s = 0.0
    for j in range(L):
        s += exp(alpha[T - 1, j] + transitions[j, stop] - m)
    return m + log(s), alpha_arr


def crf_backward(double[:, ::1] emissions, double[:, ::1] transitions,
                 Py_ssize_t start, Py_ssize_t stop,
                 double[:, ::1] alpha, double logz):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t L = emissions.shape[1]
    cdef Py_ssize_t S = transitions.shape[0]
    beta_arr = np.empty((T, L))
    dem_arr = np.empty((T, L))
    dtrans_arr = np.zeros((S, S))
    cdef double[:, ::1] beta = beta_arr
    cdef double[:, ::1] dem = dem_arr
    cdef double[:, ::1] dtrans = dtrans_arr
    cdef Py_ssize_t t, i, j
    cdef double m, s, v
    for j in range(L):
        beta[T - 1, j] = transitions[j, stop]
    for t in range(T - 2, -1, -1):
        for i in range(L):
            m = transitions[i, 0] + emissions[t + 1, 0] + beta[t + 1, 0]
            for j in range(1, L):
                v = transitions[i, j] + emissions[t + 1, j] + beta[t + 1, j]
                if v > m:
                    m = v
            s = 0.0
            for j in range(L):
                s += exp(transitions[i, j] + emissions[t + 1, j] + beta[t + 1, j] - m)
            beta[t, i] = m + log(s)
    for t in range(T):
        for j in range(L):
            dem[t, j] = exp(alpha[t, j] + beta[t, j] - logz)
    for j in range(L):
        dtrans[start, j] = dem[0, j]
        dtrans[j, stop] = dem[T - 1, j]
    for t in range(T - 1):
        for i in range(L):
            for j in range(L):
                dtrans[i, j] += exp(alpha[t, i] + transitions[i, j]
                                    + emissions[t + 1, j] + beta[t + 1, j] - logz)
    return dem_arr, dtrans_arr


def crf_viterbi(double[:, ::1] emissions, double[:, ::1] transitions,
                Py_ssize_t start, Py_ssize_t stop):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t L = emissions.shape[1]
    v_arr = np.empty(L)
    w_arr = np.empty(L)
    bp_arr = np.zeros((T, L), dtype=np.int64)
    path_arr = np.empty(T, dtype=np.int64)
    cdef double[::1] v = v_arr
    cdef double[::1] w = w_arr
    cdef long[:, ::1] bp = bp_arr
    cdef long[::1] path = path_arr
    cdef Py_ssize_t t, i, j, best
    cdef double m, sc, score
    for j in range(L):
        v[j] = transitions[start, j] + emissions[0, j]
    for t in range(1, T):
        for j in range(L):
            best = 0
            m = v[0] + transitions[0, j]
            for i in range(1, L):
                sc = v[i] + transitions[i, j]
                if sc > m:  # strict: ties keep the lower index
                    m = sc
                    best = i
            bp[t, j] = best
            w[j] = emissions[t, j] + m
        for j in range(L):
            v[j] = w[j]
    best = 0
    score = v[0] + transitions[0, stop]
    for j in range(1, L):
        sc = v[j] + transitions[j, stop]
        if sc > score:
            score = sc
            best = j
    path[T - 1] = best
    for t in range(T - 1, 0, -1):
        path[t - 1] = bp[t, path[t]]
    return path_arr, score


def sgns_step(double[:, ::1] syn0, double[:, ::1] syn1,
              long[::1] comp_ids, long[::1] comp_off,
              long[::1] tgt_rows, double[::1] tgt_labels, long[::1] tgt_off,
              double lr):
    cdef Py_ssize_t n_pairs = comp_off.shape[0] - 1
    cdef Py_ssize_t D = syn0.shape[1]
    v_arr = np.empty(D)
    e_arr = np.empty(D)
    cdef double[::1] v = v_arr
    cdef double[::1] neu1e = e_arr
    cdef Py_ssize_t j, k, d, p
    cdef long r
    cdef double z, f, g, label, loss = 0.0
    for j in range(n_pairs):
        for d in range(D):
            v[d] = 0.0
            neu1e[d] = 0.0
        for p in range(comp_off[j], comp_off[j + 1]):
            r = comp_ids[p]
            for d in range(D):
                v[d] += syn0[r, d]
        for k in range(tgt_off[j], tgt_off[j + 1]):
            r = tgt_rows[k]
            if r < 0:
                continue
            label = tgt_labels[k]
            z = 0.0
            for d in range(D):
                z += v[d] * syn1[r, d]
            if z > _Z_MAX:
                z = _Z_MAX
            elif z < -_Z_MAX:
                z = -_Z_MAX
            f = 1.0 / (1.0 + exp(-z))
            if label == 1.0:
                loss -= log(f)
            else:
                loss -= log(1.0 - f)
            g = (label - f) * lr
            for d in range(D):
                neu1e[d] += g * syn1[r, d]
                syn1[r, d] += g * v[d]
        for p in range(comp_off[j], comp_off[j + 1]):
            r = comp_ids[p]
            for d in range(D):
                syn0[r, d] += neu1e[d]
    return loss
