"""Pure-numpy recurrent and convolution kernels.

Vectorised over the batch, looping over time. The compiled backend must
reproduce these to floating-point round-off; tests compare the two.
"""

import numpy as np

NAME = "python"


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(gx, U):
    """gx: (B, T, 4H) input projections, gate order i, f, g, o. U: (H, 4H)."""
    B, T, G = gx.shape
    H = G // 4
    acts = np.empty((B, T, G))
    c = np.zeros((B, T + 1, H))
    h = np.zeros((B, T + 1, H))
    for t in range(T):
        pre = gx[:, t] + h[:, t] @ U
        i = _sigmoid(pre[:, :H])
        f = _sigmoid(pre[:, H:2 * H])
        g = np.tanh(pre[:, 2 * H:3 * H])
        o = _sigmoid(pre[:, 3 * H:])
        c[:, t + 1] = f * c[:, t] + i * g
        h[:, t + 1] = o * np.tanh(c[:, t + 1])
        acts[:, t, :H] = i
        acts[:, t, H:2 * H] = f
        acts[:, t, 2 * H:3 * H] = g
        acts[:, t, 3 * H:] = o
    return h[:, 1:].copy(), (acts, c, h)


def lstm_backward(dh_seq, U, cache):
    acts, c, h = cache
    B, T, G = acts.shape
    H = G // 4
    dgx = np.empty((B, T, G))
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i = acts[:, t, :H]
        f = acts[:, t, H:2 * H]
        g = acts[:, t, 2 * H:3 * H]
        o = acts[:, t, 3 * H:]
        dh = dh_seq[:, t] + dh_next
        tc = np.tanh(c[:, t + 1])
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dpre = dgx[:, t]
        dpre[:, :H] = dc * g * i * (1.0 - i)
        dpre[:, H:2 * H] = dc * c[:, t] * f * (1.0 - f)
        dpre[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dpre[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dU += h[:, t].T @ dpre
        dh_next = dpre @ U.T
    return dgx, dU


def _head_matmul(hprev, R):
    """Block-diagonal recurrent product: (B, NH*DH) x (NH, DH, 4DH) -> (B, 4*NH*DH) in gate-major order."""
    B = hprev.shape[0]
    NH, DH, _ = R.shape
    rec = np.einsum("bnk,nkj->bnj", hprev.reshape(B, NH, DH), R)  # (B, NH, 4DH)
    return rec.reshape(B, NH, 4, DH).transpose(0, 2, 1, 3).reshape(B, 4 * NH * DH)


def slstm_forward(gx, R):
    """gx: (B, T, 4D) with gate order z, i, f, o; R: (NH, DH, 4DH).

    Exponential input gate and sigmoid forget gate in log space, with the
    running-max stabiliser. The stabiliser cancels in h = o * c / n, so it is
    treated as a constant in the backward pass.
    """
    B, T, G = gx.shape
    D = G // 4
    acts = np.empty((B, T, 5 * D))  # z, i', f', o, sigmoid(f~)
    c = np.zeros((B, T + 1, D))
    n = np.zeros((B, T + 1, D))
    h = np.zeros((B, T + 1, D))
    m = np.zeros((B, D))
    for t in range(T):
        pre = gx[:, t] + _head_matmul(h[:, t], R)
        z = np.tanh(pre[:, :D])
        it = pre[:, D:2 * D]
        ft = pre[:, 2 * D:3 * D]
        o = _sigmoid(pre[:, 3 * D:])
        logf = -np.logaddexp(0.0, -ft)
        if t == 0:
            m_new = it
            fp = np.zeros_like(it)
        else:
            m_new = np.maximum(logf + m, it)
            fp = np.exp(logf + m - m_new)
        ip = np.exp(it - m_new)
        c[:, t + 1] = fp * c[:, t] + ip * z
        n[:, t + 1] = fp * n[:, t] + ip
        h[:, t + 1] = o * c[:, t + 1] / n[:, t + 1]
        m = m_new
        acts[:, t, :D] = z
        acts[:, t, D:2 * D] = ip
        acts[:, t, 2 * D:3 * D] = fp
        acts[:, t, 3 * D:4 * D] = o
        acts[:, t, 4 * D:] = _sigmoid(ft)
    return h[:, 1:].copy(), (acts, c, n, h)


def slstm_backward(dh_seq, R, cache):
    acts, c, n, h = cache
    B, T, G5 = acts.shape
    D = G5 // 5
    NH, DH, _ = R.shape
    dgx = np.empty((B, T, 4 * D))
    dR = np.zeros_like(R)
    dh_next = np.zeros((B, D))
    dc_next = np.zeros((B, D))
    dn_next = np.zeros((B, D))
    for t in range(T - 1, -1, -1):
        z = acts[:, t, :D]
        ip = acts[:, t, D:2 * D]
        fp = acts[:, t, 2 * D:3 * D]
        o = acts[:, t, 3 * D:4 * D]
        sf = acts[:, t, 4 * D:]
        ct, nt = c[:, t + 1], n[:, t + 1]
        dh = dh_seq[:, t] + dh_next
        dc = dc_next + dh * o / nt
        dn = dn_next - dh * o * ct / (nt * nt)
        dpre = dgx[:, t]
        dpre[:, :D] = dc * ip * (1.0 - z * z)
        dpre[:, D:2 * D] = (dc * z + dn) * ip
        dpre[:, 2 * D:3 * D] = (dc * c[:, t] + dn * n[:, t]) * fp * (1.0 - sf)
        dpre[:, 3 * D:] = dh * ct / nt * o * (1.0 - o)
        dc_next = dc * fp
        dn_next = dn * fp
        dpre_heads = dpre.reshape(B, 4, NH, DH).transpose(0, 2, 1, 3).reshape(B, NH, 4 * DH)
        hprev = h[:, t].reshape(B, NH, DH)
        dR += np.einsum("bnk,bnj->nkj", hprev, dpre_heads)
        dh_next = np.einsum("bnj,nkj->bnk", dpre_heads, R).reshape(B, D)
    return dgx, dR


def conv_forward(x, w):
    """x: (B, T, C); w: (C, K). out[t] = sum_j w[:, j] * x[t - K + 1 + j] with zero left padding."""
    B, T, C = x.shape
    K = w.shape[1]
    out = np.zeros((B, T, C))
    for j in range(K):
        shift = K - 1 - j
        if shift >= T:
            continue
        out[:, shift:] += x[:, :T - shift] * w[:, j]
    return out


def conv_backward(g, x, w):
    B, T, C = x.shape
    K = w.shape[1]
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    for j in range(K):
        shift = K - 1 - j
        if shift >= T:
            continue
        dx[:, :T - shift] += g[:, shift:] * w[:, j]
        dw[:, j] = np.einsum("btc,btc->c", g[:, shift:], x[:, :T - shift])
    return dx, dw
