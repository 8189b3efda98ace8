"""CRC-aided polar codes with SCL decoding.

Encoding follows the 5G NR mother-code layout without rate matching: the
``k + r`` most reliable positions of the length-``n`` mother code carry the
message followed by its CRC (ascending index order, no CRC interleaving), the
rest are frozen to zero, and ``x = u G_n`` with ``G_n`` the ``log2 n``-fold
Kronecker power of ``[[1, 0], [1, 1]]`` (no bit reversal).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from ._kernels._pykernels import polar_transform_bits
from .gf2 import as_bits
from .nr_tables import RELIABILITY_SEQUENCE


@dataclass(frozen=True)
class CrcSpec:
    """CRC generator polynomial; bit ``r`` (the leading term) must be set."""

    polynomial: int

    def __post_init__(self):
        if self.polynomial < 2:
            raise ValueError("CRC polynomial must have degree >= 1")
        if not self.polynomial & 1:
            raise ValueError("CRC polynomial must have a nonzero constant term")

    @classmethod
    def from_hex(cls, text: str | int) -> "CrcSpec":
        if isinstance(text, int):
            return cls(text)
        try:
            return cls(int(str(text), 16))
        except ValueError:
            raise ValueError(f"CRC polynomial must be hexadecimal, got {text!r}") from None

    @property
    def length(self) -> int:
        return self.polynomial.bit_length() - 1

    def __str__(self) -> str:
        return f"0x{self.polynomial:X}"


def crc_remainder(bits, crc: CrcSpec) -> np.ndarray:
    """Remainder of ``bits(x) * x^r`` modulo the generator (first bit = highest degree)."""
    r = crc.length
    reg = 0
    top = 1 << r
    for b in as_bits(bits):
        reg = (reg << 1) | int(b)
        if reg & top:
            reg ^= crc.polynomial
    for _ in range(r):
        reg <<= 1
        if reg & top:
            reg ^= crc.polynomial
    return np.array([(reg >> (r - 1 - j)) & 1 for j in range(r)], dtype=np.uint8)


def crc_encode(msg, crc: CrcSpec) -> np.ndarray:
    msg = as_bits(msg)
    return np.concatenate([msg, crc_remainder(msg, crc)])


def crc_check(word, crc: CrcSpec) -> bool:
    word = as_bits(word)
    r = crc.length
    return bool(np.array_equal(crc_remainder(word[:-r], crc), word[-r:]))


def crc_syndrome_masks(total_len: int, crc: CrcSpec) -> np.ndarray:
    """``x^(total_len - 1 - j) mod g(x)`` for each position ``j`` of a CRC word.

    A word is CRC-valid iff the XOR of the masks of its one-positions is 0.
    """
    r = crc.length
    top = 1 << r
    masks = np.zeros(total_len, dtype=np.uint64)
    reg = 1
    for j in range(total_len - 1, -1, -1):
        masks[j] = reg
        reg <<= 1
        if reg & top:
            reg ^= crc.polynomial
    return masks


def polar_transform(u) -> np.ndarray:
    """``u G_n``; works on the last axis and is its own inverse."""
    u = np.asarray(u, dtype=np.uint8)
    n = u.shape[-1]
    if n < 1 or n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    return polar_transform_bits(u)


def nr_reliability_order(n: int) -> np.ndarray:
    """Mother-code indices below ``n``, least reliable first."""
    if n > len(RELIABILITY_SEQUENCE) or n & (n - 1):
        raise ValueError(f"5G NR sequence defined for powers of two up to 1024, got {n}")
    seq = np.asarray(RELIABILITY_SEQUENCE)
    return seq[seq < n]


def bhattacharyya_reliability_order(n: int, design_z: float = 0.5) -> np.ndarray:
    """BEC Bhattacharyya construction, least reliable first."""
    if n < 1 or n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    m = n.bit_length() - 1
    z = np.empty(n)
    for i in range(n):
        zi = design_z
        for level in range(m - 1, -1, -1):
            zi = zi * zi if (i >> level) & 1 else 2 * zi - zi * zi
        z[i] = zi
    return np.argsort(-z, kind="stable")


CONSTRUCTIONS = {
    "5g": nr_reliability_order,
    "bhattacharyya": bhattacharyya_reliability_order,
}


@dataclass(frozen=True)
class PolarSpec:
    n: int
    k: int
    crc: CrcSpec
    list_size: int = 32
    construction: str = "5g"
    info_set: tuple[int, ...] = field(default=(), compare=False, init=False)

    def __post_init__(self):
        if isinstance(self.crc, (str, int)):
            object.__setattr__(self, "crc", CrcSpec.from_hex(self.crc))
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"mother length must be a power of two, got {self.n}")
        if self.k < 1 or self.k + self.crc.length > self.n:
            raise ValueError(f"k={self.k} with a {self.crc.length}-bit CRC does not fit n={self.n}")
        if self.list_size < 1:
            raise ValueError("list size must be positive")
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        order = CONSTRUCTIONS[self.construction](self.n)
        object.__setattr__(self, "info_set", tuple(sorted(int(i) for i in order[-self.n_info:])))

    @property
    def n_info(self) -> int:
        return self.k + self.crc.length

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        fz = np.ones(self.n, dtype=np.uint8)
        fz[list(self.info_set)] = 0
        return fz

    @property
    def frozen_set(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.frozen_mask))

    @cached_property
    def syndrome_masks(self) -> np.ndarray:
        masks = np.zeros(self.n, dtype=np.uint64)
        masks[list(self.info_set)] = crc_syndrome_masks(self.n_info, self.crc)
        return masks

    @cached_property
    def generator_matrix(self) -> np.ndarray:
        return np.stack([encode(self, row) for row in np.eye(self.k, dtype=np.uint8)])

    def __str__(self) -> str:
        return f"CA-polar ({self.n},{self.k}) CRC {self.crc} L={self.list_size}"


def encode(spec: PolarSpec, msg) -> np.ndarray:
    msg = as_bits(msg, spec.k)
    u = np.zeros(spec.n, dtype=np.uint8)
    u[list(spec.info_set)] = crc_encode(msg, spec.crc)
    return polar_transform(u)


def encode_batch(spec: PolarSpec, msgs: np.ndarray) -> np.ndarray:
    msgs = np.asarray(msgs, dtype=np.uint8)
    return ((msgs.astype(np.int64) @ spec.generator_matrix) & 1).astype(np.uint8)


@dataclass(frozen=True)
class SclOutcome:
    codeword: np.ndarray | None
    message: np.ndarray | None

    @property
    def erasure(self) -> bool:
        return self.codeword is None


def scl_decode_batch(spec: PolarSpec, llrs, offset=None, list_size: int | None = None):
    """Decode rows of LLRs. Returns (codewords, messages, ok).

    With ``offset`` the code is the coset ``C + offset``: LLR signs are flipped
    where the offset is one and the offset is added back to the codewords.
    Rows with ``ok`` False are erasures (no CRC-valid list entry).
    """
    llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    if llrs.shape[1] != spec.n:
        raise ValueError(f"got {llrs.shape[1]} LLRs, expected n={spec.n}")
    if offset is not None:
        llrs = llrs * (1.0 - 2.0 * np.asarray(offset, dtype=np.float64))
    L = spec.list_size if list_size is None else list_size
    u, ok = _kernels.scl(llrs, spec.frozen_mask, spec.syndrome_masks, L)
    cw = polar_transform(u)
    if offset is not None:
        cw ^= np.asarray(offset, dtype=np.uint8)
    msgs = u[:, list(spec.info_set)][:, :spec.k]
    return cw, msgs, ok.astype(bool)


def scl_decode(spec: PolarSpec, llrs, offset=None, list_size: int | None = None) -> SclOutcome:
    cw, msg, ok = scl_decode_batch(spec, np.asarray(llrs)[None, :], offset, list_size)
    if not ok[0]:
        return SclOutcome(None, None)
    return SclOutcome(cw[0], msg[0])
