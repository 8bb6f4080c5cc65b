"""Pure-numpy reference implementation of the hot kernels.

The compiled backend (`_native`) exposes the same functions with the same
signatures; which one the package uses is decided once at import time in
`stackner._kernels`. All arrays are float64 and C-contiguous. Randomness
(negative sampling, window shrinking, shuffling) happens in the callers,
so both backends compute the same mathematical update given the same
inputs.

Gate order throughout is i, f, g, o (input, forget, cell, output).
"""
import numpy as np

BACKEND_NAME = "python"

_Z_MAX = 30.0  # logit clip for the logistic loss


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def lstm_cell_forward(xw, wh, h0, c0):
    """Run the sequential part of an LSTM over a precomputed input projection.

    xw : (T, 4H) input preactivations, i.e. x @ Wx.T + b
    wh : (4H, H) hidden-to-hidden weights
    h0, c0 : (H,) initial states

    Returns (h, c, gates): hidden states (T, H), cell states (T, H) and
    post-activation gates (T, 4H). The caller keeps the BLAS-heavy
    input/output projections outside this kernel.
    """
    T, H4 = xw.shape
    H = H4 // 4
    h = np.empty((T, H))
    c = np.empty((T, H))
    gates = np.empty((T, H4))
    h_prev = h0
    c_prev = c0
    for t in range(T):
        a = xw[t] + wh @ h_prev
        i = _sigmoid(a[:H])
        f = _sigmoid(a[H:2 * H])
        g = np.tanh(a[2 * H:3 * H])
        o = _sigmoid(a[3 * H:])
        c_t = f * c_prev + i * g
        h_t = o * np.tanh(c_t)
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = g
        gates[t, 3 * H:] = o
        c[t] = c_t
        h[t] = h_t
        h_prev = h_t
        c_prev = c_t
    return h, c, gates


def lstm_cell_backward(dh_out, gates, c, h, wh, h0, c0):
    """Backward pass matching `lstm_cell_forward`.

    dh_out : (T, H) loss gradient w.r.t. every emitted hidden state.

    Returns (da, dwh, dh0, dc0) where da is the (T, 4H) gradient w.r.t.
    the gate preactivations; the caller finishes with
    dWx = da.T @ x, db = da.sum(0), dx = da @ Wx.
    """
    T, H = dh_out.shape
    da = np.empty((T, 4 * H))
    dwh = np.zeros_like(wh)
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i = gates[t, :H]
        f = gates[t, H:2 * H]
        g = gates[t, 2 * H:3 * H]
        o = gates[t, 3 * H:]
        c_prev = c[t - 1] if t > 0 else c0
        h_prev = h[t - 1] if t > 0 else h0
        tc = np.tanh(c[t])
        dh = dh_out[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        da_t = da[t]
        da_t[:H] = di * i * (1.0 - i)
        da_t[H:2 * H] = df * f * (1.0 - f)
        da_t[2 * H:3 * H] = dg * (1.0 - g * g)
        da_t[3 * H:] = do * o * (1.0 - o)
        dwh += np.outer(da_t, h_prev)
        dh_next = wh.T @ da_t
    return da, dwh, dh_next, dc_next


def _lse(v):
    m = np.max(v)
    return m + np.log(np.sum(np.exp(v - m)))


def crf_forward(emissions, transitions, start, stop):
    """Forward algorithm in log space.

    emissions : (T, L); transitions : (S, S) with S >= L and `start`,
    `stop` indexing the boundary states. Returns (logZ, alpha) with
    alpha (T, L) the log-space forward lattice.
    """
    T, L = emissions.shape
    alpha = np.empty((T, L))
    alpha[0] = transitions[start, :L] + emissions[0]
    for t in range(1, T):
        scores = alpha[t - 1][:, None] + transitions[:L, :L]
        m = scores.max(axis=0)
        alpha[t] = emissions[t] + m + np.log(np.exp(scores - m).sum(axis=0))
    logz = _lse(alpha[T - 1] + transitions[:L, stop])
    return float(logz), alpha


def crf_backward(emissions, transitions, start, stop, alpha, logz):
    """Marginals of the CRF, i.e. the gradient of logZ.

    Returns (dem, dtrans): dem[t, j] = P(y_t = j) and dtrans the expected
    edge counts (same shape as `transitions`, boundary rows included).
    """
    T, L = emissions.shape
    S = transitions.shape[0]
    beta = np.empty((T, L))
    beta[T - 1] = transitions[:L, stop]
    for t in range(T - 2, -1, -1):
        scores = transitions[:L, :L] + (emissions[t + 1] + beta[t + 1])[None, :]
        m = scores.max(axis=1)
        beta[t] = m + np.log(np.exp(scores - m[:, None]).sum(axis=1))
    dem = np.exp(alpha + beta - logz)
    dtrans = np.zeros((S, S))
    dtrans[start, :L] = dem[0]
    dtrans[:L, stop] = dem[T - 1]
    for t in range(T - 1):
        edge = np.exp(alpha[t][:, None] + transitions[:L, :L]
                      + (emissions[t + 1] + beta[t + 1])[None, :] - logz)
        dtrans[:L, :L] += edge
    return dem, dtrans


def crf_viterbi(emissions, transitions, start, stop):
    """Highest-scoring tag path; ties resolve to the lower tag index.

    Returns (path, score) with path an int64 array of length T.
    """
    T, L = emissions.shape
    v = transitions[start, :L] + emissions[0]
    bp = np.zeros((T, L), dtype=np.int64)
    for t in range(1, T):
        scores = v[:, None] + transitions[:L, :L]
        # np.argmax keeps the first (lowest-index) maximum
        bp[t] = np.argmax(scores, axis=0)
        v = emissions[t] + scores[bp[t], np.arange(L)]
    final = v + transitions[:L, stop]
    last = int(np.argmax(final))
    path = np.empty(T, dtype=np.int64)
    path[T - 1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = bp[t, path[t]]
    return path, float(final[last])


def sgns_step(syn0, syn1, comp_ids, comp_off, tgt_rows, tgt_labels, tgt_off, lr):
    """One SGD sweep of the negative-sampling logistic loss.

    Pair j composes its input vector as the sum of syn0 rows
    comp_ids[comp_off[j]:comp_off[j+1]] and scores it against syn1 rows
    tgt_rows[tgt_off[j]:tgt_off[j+1]] with binary tgt_labels (1 for the
    observed context, 0 for noise); target rows < 0 are skipped. Both
    matrices are updated in place, mirroring the classic word2vec update
    order (output rows first, composed input rows afterwards). Returns
    the summed loss.
    """
    loss = 0.0
    n_pairs = comp_off.shape[0] - 1
    for j in range(n_pairs):
        rows = comp_ids[comp_off[j]:comp_off[j + 1]]
        v = syn0[rows].sum(axis=0)
        neu1e = np.zeros_like(v)
        for k in range(tgt_off[j], tgt_off[j + 1]):
            r = tgt_rows[k]
            if r < 0:
                continue
            label = tgt_labels[k]
            u = syn1[r]
            z = min(max(float(v @ u), -_Z_MAX), _Z_MAX)
            f = 1.0 / (1.0 + np.exp(-z))
            loss -= np.log(f) if label == 1.0 else np.log(1.0 - f)
            g = (label - f) * lr
            neu1e += g * u
            syn1[r] = u + g * v
        for r in rows:
            syn0[r] += neu1e
    return float(loss)
