"""Punctured zero-tail convolutional codes.

Generators are given in octal. Bit ``nu`` of the generator integer (the most
significant bit of the ``nu + 1``-bit window) is the tap on the current input,
bit 0 the tap on the input ``nu`` steps back, so ``[133, 171]`` is the usual
NASA pair. Per input step the encoder emits one bit per generator, in the
given order; ``nu`` zero bits flush the register back to state 0; the
positions listed in ``puncture`` are then deleted to land on exactly ``n``
bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .gf2 import as_bits


def parse_octal_generators(text: str) -> tuple[int, ...]:
    """``"133,171"`` -> ``(0o133, 0o171)``."""
    parts = [p.strip() for p in str(text).replace(" ", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError("no generator polynomials given")
    try:
        return tuple(int(p, 8) for p in parts)
    except ValueError:
        raise ValueError(f"generators must be octal numbers, got {text!r}") from None


def format_octal_generators(gens) -> str:
    return ",".join(format(g, "o") for g in gens)


def even_puncture_pattern(full_length: int, n: int) -> tuple[int, ...]:
    """Drop ``P = full_length - n`` positions at ``floor(l * full_length / P)``."""
    p = full_length - n
    if p < 0:
        raise ValueError(f"cannot puncture {full_length} bits up to {n}")
    return tuple((l * full_length) // p for l in range(p))


@dataclass(frozen=True)
class ZtccSpec:
    generators: tuple[int, ...]
    nu: int
    k: int
    n: int
    puncture: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(int(g) for g in self.generators))
        if self.nu < 1:
            raise ValueError("memory nu must be at least 1")
        if self.k < 1:
            raise ValueError("need at least one message bit")
        for g in self.generators:
            if g <= 0 or g >= 1 << (self.nu + 1):
                raise ValueError(f"generator {g:o} (octal) does not fit memory {self.nu}")
        full = (self.k + self.nu) * self.rate_inverse
        if full < self.n:
            raise ValueError(f"unpunctured length {full} is shorter than n={self.n}")
        if self.puncture is None:
            object.__setattr__(self, "puncture", even_puncture_pattern(full, self.n))
        else:
            pat = tuple(sorted(int(p) for p in self.puncture))
            if len(set(pat)) != full - self.n or (pat and (pat[0] < 0 or pat[-1] >= full)):
                raise ValueError(f"puncture pattern must list {full - self.n} distinct positions in [0, {full})")
            object.__setattr__(self, "puncture", pat)

    @classmethod
    def from_octal(cls, generators: str, nu: int, k: int, n: int, puncture=None) -> "ZtccSpec":
        return cls(parse_octal_generators(generators), nu, k, n, puncture)

    @property
    def rate_inverse(self) -> int:
        return len(self.generators)

    @property
    def sections(self) -> int:
        return self.k + self.nu

    @property
    def full_length(self) -> int:
        return self.sections * self.rate_inverse

    @cached_property
    def kept(self) -> np.ndarray:
        keep = np.ones(self.full_length, dtype=bool)
        keep[list(self.puncture)] = False
        return np.flatnonzero(keep)

    @cached_property
    def trellis(self) -> "Trellis":
        return Trellis.build(self.generators, self.nu)

    @cached_property
    def generator_matrix(self) -> np.ndarray:
        """k x n binary generator matrix of the punctured code."""
        return encode_unpunctured(self, np.eye(self.k, dtype=np.uint8))[:, self.kept]

    def __str__(self) -> str:
        return f"ZTCC[{format_octal_generators(self.generators)}] nu={self.nu} ({self.n},{self.k})"


@dataclass(frozen=True)
class Trellis:
    """Time-invariant section of a feedforward convolutional code.

    ``labels[s, u]`` and ``next_state[s, u]`` describe the branch leaving
    state ``s`` with input ``u``; ``predecessors[s]`` lists the two states
    entering ``s``. During the ``nu`` tail sections only ``u = 0`` is allowed.
    """

    nu: int
    n_out: int
    labels: np.ndarray
    next_state: np.ndarray
    predecessors: np.ndarray

    @classmethod
    def build(cls, generators, nu: int) -> "Trellis":
        ns = 1 << nu
        labels = np.zeros((ns, 2), dtype=np.int64)
        nxt = np.zeros((ns, 2), dtype=np.int64)
        for s in range(ns):
            for u in (0, 1):
                reg = (u << nu) | s
                lab = 0
                for j, g in enumerate(generators):
                    lab |= ((reg & g).bit_count() & 1) << j
                labels[s, u] = lab
                nxt[s, u] = reg >> 1
        preds = np.zeros((ns, 2), dtype=np.int64)
        for s in range(ns):
            base = (s << 1) & (ns - 1)
            preds[s] = (base, base | 1)
        return cls(nu, len(generators), labels, nxt, preds)

    @property
    def num_states(self) -> int:
        return 1 << self.nu


def encode_unpunctured(spec: ZtccSpec, msg) -> np.ndarray:
    """Shift-register encoding of one or more messages (rows), no puncturing."""
    msg = np.atleast_2d(np.asarray(msg, dtype=np.uint8))
    if msg.shape[1] != spec.k:
        raise ValueError(f"message length {msg.shape[1]} != k={spec.k}")
    tr = spec.trellis
    B = msg.shape[0]
    out = np.zeros((B, spec.sections, spec.rate_inverse), dtype=np.uint8)
    state = np.zeros(B, dtype=np.int64)
    shifts = np.arange(spec.rate_inverse)
    for t in range(spec.sections):
        u = msg[:, t].astype(np.int64) if t < spec.k else np.zeros(B, dtype=np.int64)
        lab = tr.labels[state, u]
        out[:, t, :] = (lab[:, None] >> shifts) & 1
        state = tr.next_state[state, u]
    return out.reshape(B, spec.full_length)


def encode(spec: ZtccSpec, msg) -> np.ndarray:
    msg = as_bits(msg, spec.k)
    return encode_unpunctured(spec, msg[None, :])[0, spec.kept]


def encode_batch(spec: ZtccSpec, msgs: np.ndarray) -> np.ndarray:
    """Encode message rows via the generator matrix."""
    msgs = np.asarray(msgs, dtype=np.uint8)
    return ((msgs.astype(np.int64) @ spec.generator_matrix) & 1).astype(np.uint8)


def _sections(spec: ZtccSpec, y: np.ndarray, sigma: float, flip=None) -> np.ndarray:
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[1] != spec.n:
        raise ValueError(f"received {y.shape[1]} values, expected n={spec.n}")
    scaled = y / sigma**2
    if flip is not None:
        scaled = scaled * (1.0 - 2.0 * np.asarray(flip, dtype=np.float64))
    full = np.zeros((y.shape[0], spec.full_length))
    full[:, spec.kept] = scaled
    return full.reshape(y.shape[0], spec.sections, spec.rate_inverse)


def viterbi_decode_batch(spec: ZtccSpec, y, sigma: float, offset=None):
    """Batch ML decoding. Returns (codewords, metrics, messages).

    ``offset`` selects the coset ``C + offset``: the decoder runs on
    sign-flipped observations and the offset is added back to the codewords.
    Metrics are <y, modulate(c)> / sigma^2.
    """
    bits, metric, msg = _kernels.viterbi(_sections(spec, y, sigma, offset), spec.trellis.labels, spec.k)
    cw = bits[:, spec.kept]
    if offset is not None:
        cw ^= np.asarray(offset, dtype=np.uint8)
    return cw, metric, msg


def viterbi_decode(spec: ZtccSpec, y, sigma: float, offset=None) -> tuple[np.ndarray, float]:
    cw, metric, _ = viterbi_decode_batch(spec, np.asarray(y)[None, :], sigma, offset)
    return cw[0], float(metric[0])


def forward_log_likelihood_batch(spec: ZtccSpec, y, sigma: float, offset=None) -> np.ndarray:
    """log sum_c exp(<y, modulate(c)> / sigma^2) over the (coset) codebook."""
    return _kernels.forward(_sections(spec, y, sigma, offset), spec.trellis.labels, spec.k)


def forward_log_likelihood(spec: ZtccSpec, y, sigma: float, offset=None) -> float:
    return float(forward_log_likelihood_batch(spec, np.asarray(y)[None, :], sigma, offset)[0])
