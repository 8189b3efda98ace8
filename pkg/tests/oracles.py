"""Brute-force reference computations used as test oracles.

Everything here enumerates codebooks explicitly and shares no code with the
library beyond plain numpy.
"""

import itertools

import numpy as np
from scipy.special import logsumexp


def all_messages(k):
    return np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8).reshape(-1, k)


def span(g):
    """Every codeword of the row space of ``g`` as a set of tuples."""
    g = np.asarray(g, dtype=np.int64)
    if g.shape[0] == 0:
        return {tuple([0] * g.shape[1])}
    words = (all_messages(g.shape[0]).astype(np.int64) @ g) % 2
    return {tuple(int(b) for b in w) for w in words}


def rank_by_span(g):
    return int(np.log2(len(span(g))))


def kernel_set(h, n):
    """All x in GF(2)^n with h x^T = 0."""
    h = np.asarray(h, dtype=np.int64).reshape(-1, n)
    words = all_messages(n).astype(np.int64)
    ok = ~((words @ h.T) % 2).any(axis=1)
    return {tuple(int(b) for b in w) for w in words[ok]}


def coset_set(g, v):
    v = np.asarray(v, dtype=np.int64)
    return {tuple((np.array(c) + v) % 2) for c in span(g)}


def octal_taps(g, nu):
    """Tap vector (coefficient of D^0 first) in the MSB-first octal convention."""
    return np.array([(g >> (nu - d)) & 1 for d in range(nu + 1)], dtype=np.int64)


def conv_encode(generators, nu, msg):
    """Zero-tail convolutional encoding by polynomial multiplication."""
    msg = np.concatenate([np.asarray(msg, dtype=np.int64), np.zeros(nu, dtype=np.int64)])
    streams = [np.convolve(msg, octal_taps(g, nu))[: len(msg)] % 2 for g in generators]
    return np.stack(streams, axis=1).reshape(-1).astype(np.uint8)


def ztcc_codebook(generators, nu, k, n):
    full = (k + nu) * len(generators)
    p = full - n
    drop = {(l * full) // p for l in range(p)} if p else set()
    keep = [i for i in range(full) if i not in drop]
    return np.array([conv_encode(generators, nu, m)[keep] for m in all_messages(k)], dtype=np.uint8)


def correlation_metrics(codebook, y, sigma, offset=None):
    cb = codebook if offset is None else codebook ^ np.asarray(offset, dtype=np.uint8)
    return (1.0 - 2.0 * cb) @ np.asarray(y, dtype=np.float64) / sigma**2


def brute_log_sum(codebook, y, sigma, offset=None):
    return float(logsumexp(correlation_metrics(codebook, y, sigma, offset)))


def crc_by_long_division(bits, poly):
    """Remainder of bits(x) * x^r modulo poly(x) via Python integer polynomials."""
    r = poly.bit_length() - 1
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    value <<= r
    while value.bit_length() > r:
        value ^= poly << (value.bit_length() - 1 - r)
    return [(value >> (r - 1 - j)) & 1 for j in range(r)]


def kron_polar_matrix(n):
    f = np.array([[1, 0], [1, 1]], dtype=np.int64)
    g = np.array([[1]], dtype=np.int64)
    while g.shape[0] < n:
        g = np.kron(g, f)
    return g


def sc_decode(llr, frozen):
    """Recursive successive-cancellation decoding with min-sum updates; returns u."""
    llr = np.asarray(llr, dtype=np.float64)
    n = len(llr)
    if n == 1:
        if frozen[0]:
            return np.zeros(1, dtype=np.uint8)
        return np.array([1 if llr[0] < 0 else 0], dtype=np.uint8)
    a, b = llr[: n // 2], llr[n // 2:]
    f = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    u_left = sc_decode(f, frozen[: n // 2])
    x_left = (u_left.astype(np.int64) @ kron_polar_matrix(n // 2)) % 2
    g = b + (1 - 2 * x_left) * a
    u_right = sc_decode(g, frozen[n // 2:])
    return np.concatenate([u_left, u_right]).astype(np.uint8)
