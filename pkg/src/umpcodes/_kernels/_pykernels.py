"""Pure-Python/numpy reference kernels.

Same contracts as the compiled ``_ckernels`` module; used when the extension
is not built, and as the cross-check in the test suite.

Trellis conventions shared by both backends: ``labels[state, u]`` is the
output label (bit ``j`` = output of generator ``j``) for input ``u`` from
``state``; the next state is ``(u << (nu - 1)) | (state >> 1)``, so the two
predecessors of state ``s`` are ``(s << 1) & mask`` and that plus one, both
reached with input ``s >> (nu - 1)``.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def _label_signs(n_out: int) -> np.ndarray:
    lab = np.arange(1 << n_out)[:, None]
    bits = (lab >> np.arange(n_out)[None, :]) & 1
    return 1.0 - 2.0 * bits


def _trellis_tables(labels: np.ndarray):
    ns = labels.shape[0]
    nu = ns.bit_length() - 1
    states = np.arange(ns)
    p0 = (states << 1) & (ns - 1)
    p1 = p0 | 1
    u = states >> (nu - 1)
    return p0, p1, u, labels[p0, u], labels[p1, u]


def viterbi(ysec: np.ndarray, labels: np.ndarray, k: int):
    """ML path through a zero-tail trellis.

    ``ysec[b, t, j]`` is the (already scaled, offset-adjusted, depunctured)
    channel value for output ``j`` of section ``t``. Returns the unpunctured
    codeword bits, the path metric and the message bits. On equal metrics the
    predecessor whose shifted-out bit is 0 wins.
    """
    ysec = np.ascontiguousarray(ysec, dtype=np.float64)
    B, S, n_out = ysec.shape
    ns = labels.shape[0]
    p0, p1, u, lab0, lab1 = _trellis_tables(labels)
    signs = _label_signs(n_out)
    tail = u == 1
    M = np.full((B, ns), -np.inf)
    M[:, 0] = 0.0
    decisions = np.zeros((S, B, ns), dtype=bool)
    for t in range(S):
        lm = ysec[:, t, :] @ signs.T
        c0 = M[:, p0] + lm[:, lab0]
        c1 = M[:, p1] + lm[:, lab1]
        d = c1 > c0
        M = np.where(d, c1, c0)
        if t >= k:
            M[:, tail] = -np.inf
        decisions[t] = d
    metric = M[:, 0].copy()

    bits = np.zeros((B, S * n_out), dtype=np.uint8)
    msg = np.zeros((B, k), dtype=np.uint8)
    shifts = np.arange(n_out)
    rows = np.arange(B)
    s = np.zeros(B, dtype=np.int64)
    for t in range(S - 1, -1, -1):
        d = decisions[t, rows, s]
        prev = np.where(d, p1[s], p0[s])
        inp = u[s]
        lab = labels[prev, inp]
        bits[:, t * n_out:(t + 1) * n_out] = (lab[:, None] >> shifts) & 1
        if t < k:
            msg[:, t] = inp
        s = prev
    return bits, metric, msg


def forward(ysec: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """log of the sum over all trellis paths of exp(path metric)."""
    ysec = np.ascontiguousarray(ysec, dtype=np.float64)
    B, S, n_out = ysec.shape
    ns = labels.shape[0]
    p0, p1, u, lab0, lab1 = _trellis_tables(labels)
    signs = _label_signs(n_out)
    tail = u == 1
    M = np.full((B, ns), -np.inf)
    M[:, 0] = 0.0
    with np.errstate(invalid="ignore"):
        for t in range(S):
            lm = ysec[:, t, :] @ signs.T
            M = np.logaddexp(M[:, p0] + lm[:, lab0], M[:, p1] + lm[:, lab1])
            if t >= k:
                M[:, tail] = -np.inf
    return M[:, 0].copy()


def _scl_one(llr: np.ndarray, frozen: np.ndarray, masks: list[int], L: int):
    n = llr.size
    m = n.bit_length() - 1
    # per path: alpha[d] (d = 1..m), betaL[d] (d = 1..m), u, syndrome, metric
    paths = [{
        "alpha": [llr] + [np.zeros(n >> d) for d in range(1, m + 1)],
        "beta": [None] + [np.zeros(n >> d, dtype=np.uint8) for d in range(1, m + 1)],
        "u": np.zeros(n, dtype=np.uint8),
        "synd": 0,
        "pm": 0.0,
    }]

    def leaf_llr(p, i):
        a = p["alpha"]
        if i == 0:
            start = 0
        else:
            tz = (i & -i).bit_length() - 1
            start = m - 1 - tz
            half = n >> (start + 1)
            par = a[start]
            a[start + 1] = par[half:] + (1.0 - 2.0 * p["beta"][start + 1]) * par[:half]
            start += 1
        for d in range(start, m):
            half = n >> (d + 1)
            x, y = a[d][:half], a[d][half:]
            a[d + 1] = np.sign(x) * np.sign(y) * np.minimum(np.abs(x), np.abs(y))
        return float(a[m][0])

    def combine(p, i, bit):
        x = np.array([bit], dtype=np.uint8)
        d, idx = m, i
        while d > 0 and idx & 1:
            x = np.concatenate([p["beta"][d] ^ x, x])
            d -= 1
            idx >>= 1
        if d > 0:
            p["beta"][d] = x

    def clone(p):
        return {
            "alpha": [p["alpha"][0]] + [a.copy() for a in p["alpha"][1:]],
            "beta": [None] + [b.copy() for b in p["beta"][1:]],
            "u": p["u"].copy(),
            "synd": p["synd"],
            "pm": p["pm"],
        }

    for i in range(n):
        lls = [leaf_llr(p, i) for p in paths]
        if frozen[i]:
            for p, l in zip(paths, lls):
                if l < 0:
                    p["pm"] += -l
                combine(p, i, 0)
            continue
        cand = []
        for pi, (p, l) in enumerate(zip(paths, lls)):
            cand.append(p["pm"] + (-l if l < 0 else 0.0))
            cand.append(p["pm"] + (l if l > 0 else 0.0))
        order = np.argsort(np.asarray(cand), kind="stable")[:L]
        new = []
        for c in order:
            pi, bit = divmod(int(c), 2)
            q = clone(paths[pi])
            q["pm"] = cand[c]
            q["u"][i] = bit
            if bit:
                q["synd"] ^= masks[i]
            combine(q, i, bit)
            new.append(q)
        paths = new

    best, best_corr = None, -np.inf
    for p in paths:
        if p["synd"] != 0:
            continue
        x = polar_transform_bits(p["u"])
        corr = float(np.dot(llr, 1.0 - 2.0 * x))
        if corr > best_corr:
            best, best_corr = p, corr
    if best is None:
        return np.zeros(n, dtype=np.uint8), False
    return best["u"], True


def polar_transform_bits(u: np.ndarray) -> np.ndarray:
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    h = 1
    while h < n:
        x = x.reshape(x.shape[:-1] + (n // (2 * h), 2, h))
        x[..., 0, :] ^= x[..., 1, :]
        x = x.reshape(x.shape[:-3] + (n,))
        h *= 2
    return x


def scl(llr: np.ndarray, frozen: np.ndarray, synd_mask: np.ndarray, list_size: int):
    """CRC-aided successive-cancellation list decoding (min-sum updates).

    ``synd_mask[i]`` is the CRC-syndrome contribution of a one at leaf ``i``
    (zero on frozen leaves); a path is CRC-valid iff its accumulated syndrome
    is zero. Among valid survivors the one with the largest channel
    correlation is returned. Returns ``(u, ok)`` with ``ok`` False on erasure.
    """
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    frozen = np.asarray(frozen, dtype=np.uint8)
    masks = [int(v) for v in np.asarray(synd_mask, dtype=np.uint64)]
    B, n = llr.shape
    out = np.zeros((B, n), dtype=np.uint8)
    ok = np.zeros(B, dtype=np.uint8)
    for b in range(B):
        u, good = _scl_one(llr[b], frozen, masks, int(list_size))
        out[b] = u
        ok[b] = good
    return out, ok
