"""Two-class coset UMP codes and their two-step decoders.

Class ``i`` transmits ``u G_i + v_i``. Decoding first picks a class with a
likelihood-ratio test against a threshold, then returns the ML (ZTCC) or
SCL (polar) codeword of that class.

Threshold convention: the stored ``log_threshold`` is the operational one,
compared directly against ``l_0 - l_1`` where ``l_i`` is the log of the sum
(LRT) or max (ALRT) of ``exp(<y, modulate(x)> / sigma^2)`` over class ``i``.
The textbook test with the ``1 / |C_i|`` averaging factors kept uses
``log T_avg = log T_op - (k_0 - k_1) log 2``; see ``averaged_log_threshold``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Union

import numpy as np

from . import polar, ztcc
from .channel import RngStream
from .gf2 import BitMatrix, CosetIntersection, coset_intersection, parity_check_from_generator, syndrome
from .polar import PolarSpec
from .ztcc import ZtccSpec

BaseCode = Union[ZtccSpec, PolarSpec]
LN2 = math.log(2.0)


class Hypothesis(IntEnum):
    H0 = 0
    H1 = 1
    ERASURE = 2


TEST_MODES = ("lrt", "alrt")


def averaged_log_threshold(log_t_op: float, k0: int, k1: int) -> float:
    return log_t_op - (k0 - k1) * LN2


def operational_log_threshold(log_t_avg: float, k0: int, k1: int) -> float:
    return log_t_avg + (k0 - k1) * LN2


def _base_encode_batch(base: BaseCode, msgs: np.ndarray) -> np.ndarray:
    if isinstance(base, ZtccSpec):
        return ztcc.encode_batch(base, msgs)
    return polar.encode_batch(base, msgs)


@dataclass(frozen=True, eq=False)
class CosetCode:
    base: BaseCode
    offset: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.offset, dtype=np.uint8).copy()
        if v.shape != (self.base.n,):
            raise ValueError(f"offset must have {self.base.n} bits, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "offset", v)

    @classmethod
    def linear(cls, base: BaseCode) -> "CosetCode":
        return cls(base, np.zeros(base.n, dtype=np.uint8))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def k(self) -> int:
        return self.base.k

    @property
    def size(self) -> int:
        return 1 << self.k

    @property
    def generator(self) -> np.ndarray:
        return self.base.generator_matrix

    @cached_property
    def parity_check(self) -> BitMatrix:
        return parity_check_from_generator(self.generator)

    @cached_property
    def _h_array(self) -> np.ndarray:
        return self.parity_check.to_array().astype(np.int64)

    @cached_property
    def syndrome(self) -> np.ndarray:
        return syndrome(self.parity_check, self.offset)

    def with_offset(self, offset) -> "CosetCode":
        return CosetCode(self.base, offset)

    def encode(self, msg) -> np.ndarray:
        return self.encode_batch(np.asarray(msg, dtype=np.uint8)[None, :])[0]

    def encode_batch(self, msgs) -> np.ndarray:
        msgs = np.atleast_2d(np.asarray(msgs, dtype=np.uint8))
        if msgs.shape[1] != self.k:
            raise ValueError(f"message length {msgs.shape[1]} != k={self.k}")
        return _base_encode_batch(self.base, msgs) ^ self.offset

    def contains(self, words) -> np.ndarray:
        """Membership test by syndrome: ``(x + v) H^T == 0``."""
        words = np.atleast_2d(np.asarray(words, dtype=np.uint8)) ^ self.offset
        return ~((words.astype(np.int64) @ self._h_array.T) & 1).any(axis=1)


class DisjointnessError(RuntimeError):
    def __init__(self, message: str, certificate: CosetIntersection, offsets):
        super().__init__(message)
        self.certificate = certificate
        self.offsets = offsets


def intersection_certificate(c0: CosetCode, c1: CosetCode) -> CosetIntersection:
    return coset_intersection(c0.parity_check, c0.syndrome, c1.parity_check, c1.syndrome)


def search_disjoint_offsets(base0: BaseCode, base1: BaseCode, rng, max_tries: int = 100):
    """Random offsets ``(v0, v1)`` whose cosets share no codeword.

    Each draw is certified with the stacked parity-check system; the all-zero
    pair is never accepted. Raises ``DisjointnessError`` carrying the last
    certificate when ``max_tries`` draws all overlap.
    """
    if base0.n != base1.n:
        raise ValueError(f"blocklengths differ: {base0.n} vs {base1.n}")
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    gen = rng.generator if isinstance(rng, RngStream) else rng
    c0, c1 = CosetCode.linear(base0), CosetCode.linear(base1)
    n = base0.n
    cert = None
    v0 = v1 = None
    for _ in range(max_tries):
        v0 = gen.integers(0, 2, n, dtype=np.uint8)
        v1 = gen.integers(0, 2, n, dtype=np.uint8)
        if not v0.any() and not v1.any():
            continue
        cert = intersection_certificate(c0.with_offset(v0), c1.with_offset(v1))
        if cert.empty:
            return v0, v1, cert
    raise DisjointnessError(
        f"no disjoint offsets found in {max_tries} tries (last: {cert})", cert, (v0, v1)
    )


@dataclass(frozen=True, eq=False)
class UmpCode:
    """Union of a critical (class 0) and a non-critical (class 1) coset code.

    Overlapping cosets are rejected unless ``allow_overlap`` is set; then any
    codeword in both codebooks is attributed to class 1.
    """

    class0: CosetCode
    class1: CosetCode
    log_threshold: float = 0.0
    mode: str = "alrt"
    allow_overlap: bool = False
    certificate: CosetIntersection = field(init=False, repr=False)

    def __post_init__(self):
        if self.class0.n != self.class1.n:
            raise ValueError(f"blocklengths differ: {self.class0.n} vs {self.class1.n}")
        if self.mode not in TEST_MODES:
            raise ValueError(f"test mode must be one of {TEST_MODES}, got {self.mode!r}")
        if type(self.class0.base) is not type(self.class1.base):
            raise ValueError("both classes must use the same code family")
        if self.family == "polar" and self.mode != "alrt":
            raise ValueError("polar codes support only the approximate (alrt) test")
        cert = intersection_certificate(self.class0, self.class1)
        if not cert.empty and not self.allow_overlap:
            raise DisjointnessError(f"class codebooks intersect ({cert})", cert,
                                    (self.class0.offset, self.class1.offset))
        object.__setattr__(self, "certificate", cert)

    @classmethod
    def build(cls, base0: BaseCode, base1: BaseCode, rng, mode: str = "alrt",
              log_threshold: float = 0.0, max_tries: int = 100) -> "UmpCode":
        v0, v1, _ = search_disjoint_offsets(base0, base1, rng, max_tries)
        return cls(CosetCode(base0, v0), CosetCode(base1, v1), log_threshold, mode)

    @classmethod
    def overlapping(cls, base0: BaseCode, base1: BaseCode, mode: str = "alrt",
                    log_threshold: float = 0.0) -> "UmpCode":
        """Both classes with zero offsets (shares at least the zero codeword)."""
        return cls(CosetCode.linear(base0), CosetCode.linear(base1), log_threshold, mode,
                   allow_overlap=True)

    @property
    def n(self) -> int:
        return self.class0.n

    @property
    def family(self) -> str:
        return "ztcc" if isinstance(self.class0.base, ZtccSpec) else "polar"

    @property
    def disjoint(self) -> bool:
        return self.certificate.empty

    @property
    def threshold(self) -> float:
        return math.exp(self.log_threshold)

    def replace(self, **kw) -> "UmpCode":
        args = dict(class0=self.class0, class1=self.class1, log_threshold=self.log_threshold,
                    mode=self.mode, allow_overlap=self.allow_overlap)
        args.update(kw)
        return UmpCode(**args)

    def coset(self, class_id: int) -> CosetCode:
        if class_id not in (0, 1):
            raise ValueError(f"class id must be 0 or 1, got {class_id}")
        return self.class1 if class_id else self.class0

    def encode(self, class_id: int, msg) -> np.ndarray:
        return self.coset(class_id).encode(msg)


def encode(code: UmpCode, class_id: int, msg) -> np.ndarray:
    return code.encode(class_id, msg)


def error_floor_prediction(intersection_size: int, m0: int) -> float:
    """Class-0 error floor ``|A| / M_0`` when shared codewords go to class 1."""
    if m0 < 1 or not 0 <= intersection_size <= m0:
        raise ValueError("need 0 <= |A| <= M0 and M0 >= 1")
    return intersection_size / m0


def predicted_error_floor(code: UmpCode) -> float:
    return error_floor_prediction(code.certificate.size, code.class0.size)


# ---------------------------------------------------------------- decoding


@dataclass
class Candidates:
    """Per-frame output of both class decoders, before the threshold test.

    ``stat`` is ``l_0 - l_1``; ``ok_i`` is False when decoder ``i`` erased;
    ``shared0`` flags class-0 candidates that also lie in class 1.
    """

    stat: np.ndarray
    cw0: np.ndarray
    cw1: np.ndarray
    msg0: np.ndarray
    msg1: np.ndarray
    ok0: np.ndarray
    ok1: np.ndarray
    shared0: np.ndarray

    def __len__(self) -> int:
        return len(self.stat)


def _shared(code: UmpCode, cw0: np.ndarray) -> np.ndarray:
    if code.disjoint:
        return np.zeros(len(cw0), dtype=bool)
    return code.class1.contains(cw0)


def ztcc_candidates(code: UmpCode, y, sigma: float) -> Candidates:
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    c0, c1 = code.class0, code.class1
    cw0, m0, msg0 = ztcc.viterbi_decode_batch(c0.base, y, sigma, c0.offset)
    cw1, m1, msg1 = ztcc.viterbi_decode_batch(c1.base, y, sigma, c1.offset)
    if code.mode == "lrt":
        stat = (ztcc.forward_log_likelihood_batch(c0.base, y, sigma, c0.offset)
                - ztcc.forward_log_likelihood_batch(c1.base, y, sigma, c1.offset))
    else:
        stat = m0 - m1
    ones = np.ones(len(y), dtype=bool)
    return Candidates(stat, cw0, cw1, msg0, msg1, ones, ones.copy(), _shared(code, cw0))


def polar_candidates(code: UmpCode, llrs) -> Candidates:
    llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    c0, c1 = code.class0, code.class1
    cw0, msg0, ok0 = polar.scl_decode_batch(c0.base, llrs, c0.offset)
    cw1, msg1, ok1 = polar.scl_decode_batch(c1.base, llrs, c1.offset)
    # log p(y|x0) - log p(y|x1) = <y, s0 - s1> / sigma^2 = <llr, s0 - s1> / 2
    s0 = 1.0 - 2.0 * cw0
    s1 = 1.0 - 2.0 * cw1
    stat = 0.5 * np.einsum("ij,ij->i", llrs, s0 - s1)
    return Candidates(stat, cw0, cw1, msg0, msg1, ok0, ok1, _shared(code, cw0) & ok0)


def decide(c: Candidates, log_threshold: float):
    """Apply the threshold test. Returns (hypotheses, use_class0_output)."""
    h = np.where(c.stat >= log_threshold, Hypothesis.H0, Hypothesis.H1).astype(np.int8)
    h[c.ok0 & ~c.ok1] = Hypothesis.H0
    h[~c.ok0 & c.ok1] = Hypothesis.H1
    h[~c.ok0 & ~c.ok1] = Hypothesis.ERASURE
    from0 = h == Hypothesis.H0
    h[from0 & c.shared0] = Hypothesis.H1
    return h, from0


@dataclass(frozen=True)
class DecodeOutcome:
    hypothesis: Hypothesis
    codeword: np.ndarray | None
    message: np.ndarray | None
    statistic: float = float("nan")

    @property
    def erasure(self) -> bool:
        return self.hypothesis == Hypothesis.ERASURE


def _outcome(c: Candidates, log_threshold: float) -> DecodeOutcome:
    h, from0 = decide(c, log_threshold)
    hyp = Hypothesis(int(h[0]))
    if hyp == Hypothesis.ERASURE:
        return DecodeOutcome(hyp, None, None, float(c.stat[0]))
    if from0[0]:
        return DecodeOutcome(hyp, c.cw0[0], c.msg0[0], float(c.stat[0]))
    return DecodeOutcome(hyp, c.cw1[0], c.msg1[0], float(c.stat[0]))


def decode_ztcc(code: UmpCode, y, sigma: float, log_threshold: float | None = None) -> DecodeOutcome:
    """Two-step decoding of one received word of a ZTCC UMP code.

    LRT: compare forward-recursion class likelihoods, then Viterbi on the
    chosen class. ALRT: Viterbi on both classes; the winner's codeword is the
    output.
    """
    if code.family != "ztcc":
        raise ValueError("decode_ztcc needs a convolutional UMP code")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.n,):
        raise ValueError(f"expected {code.n} channel values, got shape {y.shape}")
    log_t = code.log_threshold if log_threshold is None else log_threshold
    if code.mode == "alrt" or not code.disjoint:
        return _outcome(ztcc_candidates(code, y, sigma), log_t)
    c0, c1 = code.class0, code.class1
    stat = (ztcc.forward_log_likelihood(c0.base, y, sigma, c0.offset)
            - ztcc.forward_log_likelihood(c1.base, y, sigma, c1.offset))
    chosen = c0 if stat >= log_t else c1
    cw, _, msg = ztcc.viterbi_decode_batch(chosen.base, y[None, :], sigma, chosen.offset)
    hyp = Hypothesis.H0 if chosen is c0 else Hypothesis.H1
    return DecodeOutcome(hyp, cw[0], msg[0], float(stat))


def decode_polar(code: UmpCode, llrs, threshold: float | None = None) -> DecodeOutcome:
    """Two parallel SCL decoders followed by the modified ALRT.

    ``threshold`` is the linear T (defaults to the code's). Both decoders
    erasing gives an erasure; a single erasure hands the decision to the
    other class.
    """
    if code.family != "polar":
        raise ValueError("decode_polar needs a polar UMP code")
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got shape {llrs.shape}")
    log_t = code.log_threshold if threshold is None else math.log(threshold)
    return _outcome(polar_candidates(code, llrs), log_t)
