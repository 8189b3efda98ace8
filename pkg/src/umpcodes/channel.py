"""BPSK over the real AWGN channel.

Bits map to symbols as 0 -> +1 and 1 -> -1 everywhere in the package, and the
SNR convention is Es/N0 = 1 / (2 sigma^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def sigma_from_esn0_db(esn0_db: float) -> float:
    return math.sqrt(1.0 / (2.0 * 10.0 ** (esn0_db / 10.0)))


@dataclass(frozen=True)
class ChannelParams:
    sigma: float
    esn0_db: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        implied = 10.0 * math.log10(1.0 / (2.0 * self.sigma**2))
        if not math.isclose(implied, self.esn0_db, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError(f"sigma={self.sigma} implies {implied} dB, not {self.esn0_db} dB")

    @classmethod
    def from_esn0_db(cls, esn0_db: float) -> "ChannelParams":
        return cls(sigma_from_esn0_db(esn0_db), float(esn0_db))

    @classmethod
    def from_sigma(cls, sigma: float) -> "ChannelParams":
        return cls(float(sigma), 10.0 * math.log10(1.0 / (2.0 * sigma**2)))

    @property
    def variance(self) -> float:
        return self.sigma**2

    @property
    def esn0(self) -> float:
        return 1.0 / (2.0 * self.sigma**2)


@dataclass
class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Two streams built from the same pair produce identical draws; different
    stream ids give statistically independent, non-overlapping Philox streams.
    """

    seed: int
    stream_id: int | tuple[int, ...] = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        ss = np.random.SeedSequence(int(self.seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=tuple(int(k) for k in key))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def substream(self, *key: int) -> "RngStream":
        base = self.stream_id if isinstance(self.stream_id, tuple) else (self.stream_id,)
        return RngStream(self.seed, base + tuple(key))

    def bits(self, shape) -> np.ndarray:
        return self.generator.integers(0, 2, size=shape, dtype=np.uint8)

    def normal(self, shape) -> np.ndarray:
        return self.generator.standard_normal(shape)


def modulate_bpsk(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def transmit(symbols, params: ChannelParams, rng: RngStream) -> np.ndarray:
    x = np.asarray(symbols, dtype=float)
    return x + params.sigma * rng.normal(x.shape)


def llr(y, params: ChannelParams) -> np.ndarray:
    """Per-symbol log P(bit=0|y) / P(bit=1|y) = 2 y / sigma^2."""
    return 2.0 * np.asarray(y, dtype=float) / params.variance


def hard_decision(y) -> np.ndarray:
    return (np.asarray(y) < 0).astype(np.uint8)
