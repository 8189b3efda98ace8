"""Monte Carlo engine for two-class UMP codes.

Per-class error rates are estimated from frames sent with equiprobable
messages of one class at a time. Every frame is stored as a compact record
(decision statistic plus the outcome category on either side of the
threshold), so one set of noise realisations serves every threshold value:
the per-class error curves over ``log T`` are exact staircases of common
random numbers.

Random streams are keyed by ``(seed, snr, class, batch)``, which makes the
counts independent of the number of worker processes and identical for LRT
and ALRT runs at the same SNR.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import ump
from .channel import ChannelParams, RngStream, llr, modulate_bpsk, transmit
from .na import na_message_size
from .polar import PolarSpec
from .ztcc import ZtccSpec

log = logging.getLogger(__name__)

# (class 0, class 1) octal generators; rate 1/4 and rate 1/2 mother codes
DEFAULT_ZTCC_GENERATORS = {
    6: ("117,127,155,171", "133,171"),
    8: ("473,513,671,756", "515,677"),
    10: ("2565,2747,3311,3273", "3645,2671"),
}

THRESHOLD_RANGE = (-20.0, 20.0)
THRESHOLD_STEP = 0.25
THRESHOLD_REFINE = 8
SNR_RESOLUTION_DB = 0.05

CORRECT, WRONG_CLASS, WRONG_CODEWORD, ERASURE = range(4)
CATEGORY_NAMES = ("correct", "wrong_class", "wrong_codeword", "erasure")


class InfeasibleError(RuntimeError):
    """No configuration in the searched range meets both targets."""


class BracketError(RuntimeError):
    """The SNR bracket does not enclose the feasibility boundary."""


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    family: str = "ztcc"
    n: int = 128
    k0: int | None = None
    k1: int | None = None
    rates: tuple[float, float] | None = None
    eps0: float = 1e-3
    eps1: float = 1e-2
    mode: str = "alrt"
    list_size: int = 32
    nu: int = 6
    generators: str | None = None
    crc: str = "0x61"
    esn0_db: float | None = None
    bracket: tuple[float, float] = (-2.0, 6.0)
    log_threshold: float = 0.0
    min_errors: int = 100
    max_frames: int = 200_000
    batch_size: int = 500
    threads: int = 1
    seed: int = 0
    offset_tries: int = 100
    overlap: bool = False

    def __post_init__(self):
        if self.family not in ("ztcc", "polar"):
            raise ValueError(f"family must be 'ztcc' or 'polar', got {self.family!r}")
        if self.mode not in ump.TEST_MODES:
            raise ValueError(f"mode must be one of {ump.TEST_MODES}, got {self.mode!r}")
        if self.family == "polar" and self.mode != "alrt":
            raise ValueError("polar codes support only the alrt test")
        if not (0 < self.eps0 < 1 and 0 < self.eps1 < 1):
            raise ValueError("targets must lie in (0, 1)")
        if self.eps0 > self.eps1:
            raise ValueError(f"class 0 must have the stricter target (eps0={self.eps0} > eps1={self.eps1})")
        if self.rates is not None:
            self.rates = tuple(float(r) for r in self.rates)
            if len(self.rates) != 2 or not all(0 < r < 1 for r in self.rates):
                raise ValueError("rates must be two numbers in (0, 1)")
        if self.k0 is None:
            self.k0 = self._default_k(0)
        if self.k1 is None:
            self.k1 = self._default_k(1)
        if min(self.k0, self.k1) < 1 or max(self.k0, self.k1) >= self.n:
            raise ValueError(f"need 1 <= k0, k1 < n, got k0={self.k0}, k1={self.k1}, n={self.n}")
        self.bracket = tuple(float(b) for b in self.bracket)
        if len(self.bracket) != 2 or self.bracket[0] >= self.bracket[1]:
            raise ValueError(f"bracket must be (low, high) with low < high, got {self.bracket}")
        if self.min_errors < 1 or self.max_frames < 1 or self.batch_size < 1 or self.threads < 1:
            raise ValueError("stopping rule, batch size and thread count must be positive")
        if self.family == "ztcc" and self.generators is None and self.nu not in DEFAULT_ZTCC_GENERATORS:
            raise ValueError(f"no default generators for nu={self.nu}; pass generators")

    def _default_k(self, cls: int) -> int:
        if self.rates is not None:
            return max(1, int(round(self.rates[cls] * self.n)))
        if self.family == "ztcc":
            return self.n // 4 if cls == 0 else self.n // 2
        return self.n // 4 if cls == 0 else (3 * self.n) // 8

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(kw)
        if "k0" in kw or "k1" in kw:
            d["rates"] = None
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["bracket"] = list(self.bracket)
        if self.rates is not None:
            d["rates"] = list(self.rates)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def generator_pair(self) -> tuple[str, str]:
        if self.generators is None:
            return DEFAULT_ZTCC_GENERATORS[self.nu]
        parts = self.generators.split("/")
        if len(parts) != 2:
            raise ValueError(f"generators must look like 'g0/g1' (octal), got {self.generators!r}")
        return parts[0], parts[1]

    def base_codes(self):
        if self.family == "ztcc":
            g0, g1 = self.generator_pair()
            return (ZtccSpec.from_octal(g0, self.nu, self.k0, self.n),
                    ZtccSpec.from_octal(g1, self.nu, self.k1, self.n))
        return (PolarSpec(self.n, self.k0, self.crc, self.list_size),
                PolarSpec(self.n, self.k1, self.crc, self.list_size))


OFFSET_STREAM = 1
FRAME_STREAM = 2


def build_code(config: ExperimentConfig) -> ump.UmpCode:
    """Assemble the UMP code; offsets come from a stream keyed by the master seed."""
    b0, b1 = config.base_codes()
    if config.overlap:
        return ump.UmpCode.overlapping(b0, b1, config.mode, config.log_threshold)
    rng = RngStream(config.seed, (OFFSET_STREAM, config.k0, config.k1))
    return ump.UmpCode.build(b0, b1, rng, config.mode, config.log_threshold, config.offset_tries)


def snr_key(esn0_db: float) -> int:
    return int(round((esn0_db + 1000.0) * 1000.0))


# ---------------------------------------------------------------- estimates


def wilson_interval(errors, frames, confidence: float = 0.95):
    """Wilson score interval; works elementwise on arrays (empty samples give [0, 1])."""
    errors = np.asarray(errors)
    frames = np.asarray(frames)
    safe = np.maximum(frames, 1)
    lo, hi = proportion_confint(errors, safe, alpha=1.0 - confidence, method="wilson")
    lo = np.where(frames > 0, lo, 0.0)
    hi = np.where(frames > 0, hi, 1.0)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


@dataclass(frozen=True)
class ErrorEstimate:
    frames: int
    wrong_class: int = 0
    wrong_codeword: int = 0
    erasure: int = 0

    def __post_init__(self):
        if min(self.frames, self.wrong_class, self.wrong_codeword, self.erasure) < 0:
            raise ValueError("counts must be non-negative")
        if self.errors > self.frames:
            raise ValueError("more errors than frames")

    @property
    def errors(self) -> int:
        return self.wrong_class + self.wrong_codeword + self.erasure

    @property
    def rate(self) -> float:
        return self.errors / self.frames if self.frames else float("nan")

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.frames)

    @property
    def upper(self) -> float:
        return self.interval[1]

    def low_confidence(self, min_errors: int = 100) -> bool:
        return self.errors < min_errors

    def to_dict(self) -> dict:
        lo, hi = self.interval
        return {"frames": self.frames, "errors": self.errors, "wrong_class": self.wrong_class,
                "wrong_codeword": self.wrong_codeword, "erasure": self.erasure,
                "rate": self.rate, "ci_low": lo, "ci_high": hi}


def _category(declared: np.ndarray, output_ok: np.ndarray, true_class: int) -> np.ndarray:
    return np.where(declared != true_class, WRONG_CLASS,
                    np.where(output_ok, CORRECT, WRONG_CODEWORD)).astype(np.int8)


def frame_categories(c: ump.Candidates, sent: np.ndarray, true_class: int):
    """Outcome of each frame when the test accepts H0 and when it accepts H1.

    Mirrors ``ump.decide``: single erasures force the other class, double
    erasures are erasures, class-0 candidates that are also class-1 codewords
    are attributed to class 1.
    """
    ok0_cw = (c.cw0 == sent).all(axis=1)
    ok1_cw = (c.cw1 == sent).all(axis=1)
    declared_h0 = np.where(c.shared0, 1, 0)
    cat_h0 = _category(declared_h0, ok0_cw, true_class)
    cat_h1 = _category(np.ones_like(declared_h0), ok1_cw, true_class)
    only0 = c.ok0 & ~c.ok1
    only1 = ~c.ok0 & c.ok1
    cat_h1 = np.where(only0, cat_h0, cat_h1)
    cat_h0 = np.where(only1, cat_h1, cat_h0)
    none = ~c.ok0 & ~c.ok1
    cat_h0[none] = ERASURE
    cat_h1[none] = ERASURE
    return cat_h0.astype(np.int8), cat_h1.astype(np.int8)


class FrameRecords:
    """Threshold-free record of simulated frames of one class."""

    def __init__(self):
        self._stat: list[np.ndarray] = []
        self._cat_h0: list[np.ndarray] = []
        self._cat_h1: list[np.ndarray] = []
        self._index = None

    def __len__(self) -> int:
        return sum(len(s) for s in self._stat)

    def extend(self, stat, cat_h0, cat_h1) -> None:
        self._stat.append(np.asarray(stat, dtype=np.float64))
        self._cat_h0.append(np.asarray(cat_h0, dtype=np.int8))
        self._cat_h1.append(np.asarray(cat_h1, dtype=np.int8))
        self._index = None

    def _build(self):
        if not self._stat:
            return np.zeros(4, np.int64), np.zeros(0), np.zeros((1, 4), np.int64), np.zeros((1, 4), np.int64)
        stat = np.concatenate(self._stat)
        c0 = np.concatenate(self._cat_h0)
        c1 = np.concatenate(self._cat_h1)
        fixed = c0 == c1
        const = np.bincount(c0[fixed], minlength=4).astype(np.int64)
        order = np.argsort(stat[~fixed], kind="stable")
        s = stat[~fixed][order]
        v0 = c0[~fixed][order]
        v1 = c1[~fixed][order]
        eye = np.eye(4, dtype=np.int64)
        below = np.vstack([np.zeros((1, 4), np.int64), np.cumsum(eye[v1], axis=0)])
        above = np.vstack([np.cumsum(eye[v0][::-1], axis=0)[::-1], np.zeros((1, 4), np.int64)])
        return const, s, below, above

    def counts(self, log_threshold) -> np.ndarray:
        """Frames per category (``CATEGORY_NAMES`` order) at each threshold.

        A scalar threshold gives shape (4,), an array of thresholds (..., 4).
        """
        if self._index is None:
            self._index = self._build()
        const, s, below, above = self._index
        i = np.searchsorted(s, log_threshold, side="left")
        return const + below[i] + above[i]

    def estimate(self, log_threshold: float) -> ErrorEstimate:
        c = self.counts(log_threshold)
        return ErrorEstimate(int(c.sum()), int(c[WRONG_CLASS]), int(c[WRONG_CODEWORD]), int(c[ERASURE]))


# ---------------------------------------------------------------- simulation


def simulate_batch(code: ump.UmpCode, true_class: int, esn0_db: float, rng: RngStream, size: int):
    """Send ``size`` random class frames; return (stat, cat_h0, cat_h1)."""
    coset = code.coset(true_class)
    params = ChannelParams.from_esn0_db(esn0_db)
    msgs = rng.bits((size, coset.k))
    sent = coset.encode_batch(msgs)
    y = transmit(modulate_bpsk(sent), params, rng)
    if code.family == "ztcc":
        cand = ump.ztcc_candidates(code, y, params.sigma)
    else:
        cand = ump.polar_candidates(code, llr(y, params))
    cat_h0, cat_h1 = frame_categories(cand, sent, true_class)
    return cand.stat, cat_h0, cat_h1


def _batch_job(args):
    code, true_class, esn0_db, seed, key, size = args
    return simulate_batch(code, true_class, esn0_db, RngStream(seed, key), size)


class Simulator:
    """Accumulates frame records for both classes at one SNR."""

    def __init__(self, config: ExperimentConfig, code: ump.UmpCode, esn0_db: float, pool=None):
        self.config = config
        self.code = code
        self.esn0_db = float(esn0_db)
        self.records = (FrameRecords(), FrameRecords())
        self._next_batch = [0, 0]
        self._pool = pool

    def run(self, true_class: int, batches: int) -> None:
        cfg = self.config
        jobs = []
        for _ in range(batches):
            key = (FRAME_STREAM, snr_key(self.esn0_db), true_class, self._next_batch[true_class])
            self._next_batch[true_class] += 1
            jobs.append((self.code, true_class, self.esn0_db, cfg.seed, key, cfg.batch_size))
        results = self._pool.map(_batch_job, jobs) if self._pool is not None else map(_batch_job, jobs)
        for res in results:
            self.records[true_class].extend(*res)

    def frames(self, true_class: int) -> int:
        return len(self.records[true_class])

    def estimates(self, log_threshold: float) -> tuple[ErrorEstimate, ErrorEstimate]:
        return self.records[0].estimate(log_threshold), self.records[1].estimate(log_threshold)


def _pool(config: ExperimentConfig):
    return ProcessPoolExecutor(config.threads) if config.threads > 1 else None


def threshold_grid(center: float | None = None) -> np.ndarray:
    if center is None:
        lo, hi = THRESHOLD_RANGE
        return np.linspace(lo, hi, int(round((hi - lo) / THRESHOLD_STEP)) + 1)
    fine = THRESHOLD_STEP / THRESHOLD_REFINE
    return center + fine * np.arange(-THRESHOLD_REFINE, THRESHOLD_REFINE + 1)


@dataclass
class ThresholdResult:
    log_threshold: float
    estimates: tuple[ErrorEstimate, ErrorEstimate]
    satisfied: bool
    objective: float
    grid: dict = field(default_factory=dict)

    @property
    def threshold(self) -> float:
        return math.exp(self.log_threshold)


def grid_statistics(sim: Simulator, grid: np.ndarray, eps):
    """Point ratio, Wilson bounds over target, per class and threshold: arrays (2, len(grid))."""
    ratio, lower, upper = (np.empty((2, len(grid))) for _ in range(3))
    for cls in (0, 1):
        c = sim.records[cls].counts(grid)
        frames = c.sum(axis=-1)
        errors = frames - c[..., CORRECT]
        lo, hi = wilson_interval(errors, frames)
        ratio[cls] = errors / np.maximum(frames, 1) / eps[cls]
        lower[cls] = lo / eps[cls]
        upper[cls] = hi / eps[cls]
    return ratio, lower, upper


def _pick_threshold(sim: Simulator, grid: np.ndarray, eps) -> float:
    ratio, _, upper = grid_statistics(sim, grid, eps)
    point = ratio.max(axis=0)
    worst_upper = upper.max(axis=0)
    candidates = np.flatnonzero(worst_upper <= 1.0)
    if len(candidates) == 0:
        candidates = np.arange(len(grid))
    best = candidates[point[candidates] == point[candidates].min()]
    best = best[worst_upper[best] == worst_upper[best].min()]
    return float(grid[best[len(best) // 2]])


def best_threshold(sim: Simulator, eps) -> ThresholdResult:
    """Grid search on the recorded frames, refined once around the coarse optimum.

    The objective is the larger of the two point-estimate-to-target ratios.
    Thresholds whose Wilson upper bounds meet both targets are preferred;
    remaining ties go to the smaller upper-bound ratio, then to the middle
    of the tied run.
    """
    coarse = _pick_threshold(sim, threshold_grid(), eps)
    fine = _pick_threshold(sim, threshold_grid(coarse), eps)
    e0, e1 = sim.estimates(fine)
    obj = max(e0.rate / eps[0], e1.rate / eps[1])
    ok = e0.upper <= eps[0] and e1.upper <= eps[1]
    grid = {"range": list(THRESHOLD_RANGE), "step": THRESHOLD_STEP,
            "refined_step": THRESHOLD_STEP / THRESHOLD_REFINE}
    return ThresholdResult(fine, (e0, e1), ok, obj, grid)


def clearly_infeasible(sim: Simulator, eps) -> bool:
    """At every grid threshold some class has its Wilson lower bound above target."""
    _, lower, _ = grid_statistics(sim, threshold_grid(), eps)
    return bool((lower.max(axis=0) > 1.0).all())


class _executor:
    def __init__(self, config):
        self.pool = _pool(config)

    def __enter__(self):
        return self.pool

    def __exit__(self, *exc):
        if self.pool is not None:
            self.pool.shutdown()


def estimate_rates(config: ExperimentConfig, esn0_db: float, log_threshold: float | None = None,
                   code: ump.UmpCode | None = None) -> tuple[ErrorEstimate, ErrorEstimate]:
    """Per-class error estimates at a fixed threshold.

    Each class is simulated until it reaches ``min_errors`` errors or
    ``max_frames`` frames.
    """
    code = build_code(config) if code is None else code
    t = config.log_threshold if log_threshold is None else log_threshold
    with _executor(config) as pool:
        sim = Simulator(config, code, esn0_db, pool)
        for cls in (0, 1):
            while sim.frames(cls) < config.max_frames:
                sim.run(cls, _round_batches(config))
                if sim.estimates(t)[cls].errors >= config.min_errors:
                    break
    return sim.estimates(t)


def _round_batches(config: ExperimentConfig) -> int:
    return max(1, config.threads)


def optimize_threshold(config: ExperimentConfig, esn0_db: float,
                       code: ump.UmpCode | None = None) -> ThresholdResult:
    """Simulate both classes and return the threshold minimising the worst target ratio.

    Frames are added in rounds; after each round the best threshold is
    recomputed on all records. A class is closed once it has ``min_errors``
    errors at the current best threshold or reaches ``max_frames``. Open
    classes whose Wilson interval straddles their target get the next round;
    failing this, open classes that clearly miss their target do. The point
    is settled when both upper bounds meet the targets, when the targets are
    clearly out of reach at every threshold, or when no class qualifies.
    """
    code = build_code(config) if code is None else code
    eps = (config.eps0, config.eps1)
    with _executor(config) as pool:
        sim = Simulator(config, code, esn0_db, pool)
        for cls in (0, 1):
            sim.run(cls, _round_batches(config))
        while True:
            res = best_threshold(sim, eps)
            if res.satisfied or clearly_infeasible(sim, eps):
                break
            open_ = [cls for cls in (0, 1)
                     if res.estimates[cls].errors < config.min_errors and sim.frames(cls) < config.max_frames]
            # spend frames where the interval still straddles the target,
            # otherwise on an open class that is failing at this threshold
            active = [cls for cls in open_ if res.estimates[cls].interval[0] <= eps[cls] < res.estimates[cls].upper]
            if not active:
                active = [cls for cls in open_ if res.estimates[cls].interval[0] > eps[cls]]
            if not active:
                break
            for cls in active:
                sim.run(cls, _round_batches(config))
    log.info("Es/N0=%.3f dB log T=%.4f eps0=%.3g (%d frames) eps1=%.3g (%d frames) satisfied=%s",
             esn0_db, res.log_threshold, res.estimates[0].rate, res.estimates[0].frames,
             res.estimates[1].rate, res.estimates[1].frames, res.satisfied)
    return res


@dataclass
class PointRecord:
    esn0_db: float
    k0: int
    k1: int
    result: ThresholdResult

    def row(self, config: ExperimentConfig) -> dict:
        e0, e1 = self.result.estimates
        row = {"family": config.family, "n": config.n, "k0": self.k0, "k1": self.k1,
               "mode": config.mode, "esn0_db": round(self.esn0_db, 6),
               "log_threshold": self.result.log_threshold}
        for cls, e in ((0, e0), (1, e1)):
            for key, val in e.to_dict().items():
                row[f"{key}{cls}"] = val
            row[f"low_confidence{cls}"] = e.low_confidence(config.min_errors)
        row["satisfied"] = self.result.satisfied
        row["seed"] = config.seed
        return row


@dataclass
class MinSnrResult:
    esn0_db: float
    log_threshold: float
    estimates: tuple[ErrorEstimate, ErrorEstimate]
    points: list[PointRecord]

    @property
    def threshold(self) -> float:
        return math.exp(self.log_threshold)


def find_min_snr(config: ExperimentConfig, code: ump.UmpCode | None = None) -> MinSnrResult:
    """Smallest SNR on the 0.05 dB grid of the bracket meeting both targets.

    Bisection assumes feasibility is monotone in SNR. Raises ``BracketError``
    when the top of the bracket is infeasible or the bottom already feasible.
    """
    code = build_code(config) if code is None else code
    lo_db, hi_db = config.bracket
    steps = int(math.ceil((hi_db - lo_db) / SNR_RESOLUTION_DB - 1e-9))
    points: dict[int, PointRecord] = {}

    def feasible(i: int) -> bool:
        if i not in points:
            snr = round(lo_db + i * SNR_RESOLUTION_DB, 6)
            points[i] = PointRecord(snr, config.k0, config.k1, optimize_threshold(config, snr, code))
        return points[i].result.satisfied

    if not feasible(steps):
        raise BracketError(f"targets not met at the top of the bracket ({hi_db} dB)")
    if feasible(0):
        raise BracketError(f"targets already met at the bottom of the bracket ({lo_db} dB)")
    lo, hi = 0, steps
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    best = points[hi]
    ordered = [points[i] for i in sorted(points)]
    return MinSnrResult(best.esn0_db, best.result.log_threshold, best.result.estimates, ordered)


@dataclass
class MaxRateResult:
    k0: int
    k1: int
    n: int
    esn0_db: float
    log_threshold: float
    estimates: tuple[ErrorEstimate, ErrorEstimate]
    points: list[PointRecord]

    @property
    def rates(self) -> tuple[float, float]:
        return self.k0 / self.n, self.k1 / self.n


def na_starting_point(config: ExperimentConfig, esn0_db: float) -> tuple[int, int]:
    """Normal-approximation message sizes with the load split evenly."""
    esn0 = 10.0 ** (esn0_db / 10.0)
    limit = config.n - 1 - (0 if config.family == "ztcc" else PolarSpec(config.n, 1, config.crc).crc.length)
    ks = []
    for eps in (config.eps0, config.eps1):
        k = int(math.floor(na_message_size(config.n, esn0, eps, lam=0.5)))
        ks.append(min(max(k, 1), limit))
    return ks[0], ks[1]


def find_max_rates(config: ExperimentConfig, esn0_db: float, start: tuple[int, int] | None = None) -> MaxRateResult:
    """Coordinate ascent on ``(k0, k1)`` for the largest rates meeting both targets.

    Starts from the normal-approximation point (or ``start``), shrinks the
    more-violated class until the pair is feasible, then grows ``k0`` and
    ``k1`` in turn while feasibility holds. Each pair gets its own offsets
    and threshold optimisation.
    """
    cache: dict[tuple[int, int], PointRecord] = {}
    limit = config.n - 1 - (0 if config.family == "ztcc" else PolarSpec(config.n, 1, config.crc).crc.length)

    def evaluate(k0: int, k1: int) -> PointRecord:
        if (k0, k1) not in cache:
            cfg = config.replace(k0=k0, k1=k1)
            cache[(k0, k1)] = PointRecord(esn0_db, k0, k1, optimize_threshold(cfg, esn0_db))
            log.info("k0=%d k1=%d satisfied=%s", k0, k1, cache[(k0, k1)].result.satisfied)
        return cache[(k0, k1)]

    k0, k1 = na_starting_point(config, esn0_db) if start is None else start
    while True:
        rec = evaluate(k0, k1)
        if rec.result.satisfied:
            break
        e0, e1 = rec.result.estimates
        if e0.rate / config.eps0 >= e1.rate / config.eps1:
            if k0 == 1:
                raise InfeasibleError(f"class 0 misses its target even with k0=1 at {esn0_db} dB")
            k0 -= 1
        else:
            if k1 == 1:
                raise InfeasibleError(f"class 1 misses its target even with k1=1 at {esn0_db} dB")
            k1 -= 1
    improved = True
    while improved:
        improved = False
        for cls in (0, 1):
            while True:
                nk = (k0 + 1, k1) if cls == 0 else (k0, k1 + 1)
                if max(nk) > limit or not evaluate(*nk).result.satisfied:
                    break
                k0, k1 = nk
                improved = True
    best = cache[(k0, k1)]
    return MaxRateResult(k0, k1, config.n, esn0_db, best.result.log_threshold, best.result.estimates,
                         list(cache.values()))


# ---------------------------------------------------------------- output


def config_comment(config: ExperimentConfig) -> str:
    return "# config=" + json.dumps(config.to_dict(), sort_keys=True)


def rows_to_csv(rows: list[dict], config: ExperimentConfig) -> str:
    buf = io.StringIO()
    buf.write(config_comment(config) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def write_outputs(prefix: str, rows: list[dict], config: ExperimentConfig, summary: dict) -> tuple[str, str]:
    """Write ``<prefix>.csv`` and ``<prefix>.json``; both embed the resolved config."""
    csv_path, json_path = prefix + ".csv", prefix + ".json"
    with open(csv_path, "w", newline="") as f:
        f.write(rows_to_csv(rows, config))
    with open(json_path, "w") as f:
        json.dump({"config": config.to_dict(), **summary}, f, indent=2, sort_keys=True)
        f.write("\n")
    return csv_path, json_path
