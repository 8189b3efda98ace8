"""Normal-approximation benchmark for two-class (and m-class) UMP codes.

Capacity and dispersion of the binary-input AWGN channel are the mean and
variance of the information density

    i(x; y) = 1 - log2(1 + exp(-2 x y / sigma^2)),

evaluated by Gauss-Hermite quadrature with the node count doubled until two
successive estimates agree to 1e-9. The achievable message size per class is

    k_i ~ n C - sqrt(n V) Qinv(eps_i) - 0.5 log2 n - log2(1 / lambda_i)

where the class weights lambda_i (summing to one) split the codebook among
the classes, so log2(1 / lambda_i) >= 0 is a rate penalty. The weights are
chosen to minimise the SNR at which every class meets its (k_i, eps_i)
requirement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special, stats

from .channel import db_to_linear

QUAD_START_NODES = 64
QUAD_MAX_NODES = 4096
QUAD_TOL = 1e-9
SNR_BRACKET_DB = (-30.0, 30.0)
LN2 = math.log(2.0)


@lru_cache(maxsize=None)
def _hermgauss(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = special.roots_hermite(nodes)
    return t, w / math.sqrt(math.pi)


def information_density(y, esn0: float, x: float = 1.0) -> np.ndarray:
    sigma2 = 1.0 / (2.0 * esn0)
    return 1.0 - np.logaddexp(0.0, -2.0 * x * np.asarray(y) / sigma2) / LN2


def _moments(esn0: float, nodes: int) -> tuple[float, float]:
    t, w = _hermgauss(nodes)
    sigma = math.sqrt(1.0 / (2.0 * esn0))
    # by symmetry condition on x = +1, so y ~ N(1, sigma^2)
    i = information_density(1.0 + math.sqrt(2.0) * sigma * t, esn0)
    mean = float(np.dot(w, i))
    var = float(np.dot(w, (i - mean) ** 2))
    return mean, var


@lru_cache(maxsize=4096)
def biawgn_moments(esn0: float) -> tuple[float, float]:
    """(capacity, dispersion) in bits and bits^2 per channel use."""
    if not esn0 > 0:
        raise ValueError(f"SNR must be positive (linear), got {esn0}")
    nodes = QUAD_START_NODES
    prev = _moments(esn0, nodes)
    while nodes < QUAD_MAX_NODES:
        nodes *= 2
        cur = _moments(esn0, nodes)
        if abs(cur[0] - prev[0]) < QUAD_TOL and abs(cur[1] - prev[1]) < QUAD_TOL:
            return cur
        prev = cur
    return prev


def biawgn_capacity(esn0: float) -> float:
    return biawgn_moments(float(esn0))[0]


def biawgn_dispersion(esn0: float) -> float:
    return max(biawgn_moments(float(esn0))[1], 0.0)


def q_func(x):
    return stats.norm.sf(x)


def q_inv(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return float(stats.norm.isf(p))


def na_message_size(n: int, esn0: float, eps: float, lam: float = 1.0) -> float:
    """Right-hand side of the normal approximation, in bits (not rounded)."""
    if n < 1:
        raise ValueError("blocklength must be positive")
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"class weight must lie in (0, 1], got {lam}")
    c, v = biawgn_moments(float(esn0))
    return (
        n * c
        - math.sqrt(n * max(v, 0.0)) * q_inv(eps)
        - 0.5 * math.log2(n)
        - math.log2(1.0 / lam)
    )


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    """Smallest x in [lo, hi] with pred(x) True, assuming pred is monotone."""
    if pred(lo):
        return lo
    if not pred(hi):
        raise ValueError(f"requirement not met anywhere in [{lo}, {hi}] dB")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def na_required_snr_db(
    n: int, k: float, eps: float, lam: float = 1.0,
    bracket: tuple[float, float] = SNR_BRACKET_DB, tol: float = 1e-9,
) -> float:
    """Smallest Es/N0 [dB] at which ``na_message_size`` reaches ``k`` bits."""
    return _bisect(lambda s: na_message_size(n, float(db_to_linear(s)), eps, lam) >= k, *bracket, tol)


@dataclass(frozen=True)
class NaClass:
    k: float
    eps: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"class needs at least one message bit, got k={self.k}")
        if not 0.0 < self.eps < 0.5:
            raise ValueError(f"target error probability must lie in (0, 0.5), got {self.eps}")


@dataclass(frozen=True)
class NaProblem:
    n: int
    classes: tuple[NaClass, ...]
    lambdas: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        for c in self.classes:
            if c.k >= self.n:
                raise ValueError(f"infeasible class: k={c.k} >= n={self.n}")
        if self.lambdas is not None:
            if len(self.lambdas) != len(self.classes):
                raise ValueError("one weight per class is required")
            if any(l <= 0 for l in self.lambdas) or not math.isclose(sum(self.lambdas), 1.0, abs_tol=1e-12):
                raise ValueError("class weights must be positive and sum to one")


@dataclass(frozen=True)
class NaResult:
    esn0_db: float
    lambdas: tuple[float, ...]
    per_class_db: tuple[float, ...] = field(default=())

    @property
    def capacity(self) -> float:
        return biawgn_capacity(float(db_to_linear(self.esn0_db)))

    @property
    def dispersion(self) -> float:
        return biawgn_dispersion(float(db_to_linear(self.esn0_db)))


def na_min_snr(problem: NaProblem, tol: float = 1e-9) -> NaResult:
    """Minimum Es/N0 [dB] at which all classes are simultaneously feasible.

    With two classes, moving weight from one class to the other lowers one
    required SNR and raises the other, so the optimum equalises them: bisect
    on lambda_0, each evaluation itself an SNR bisection. More classes use
    the equivalent feasibility condition sum_i 2^(k_i - base_i(s)) <= 1.
    """
    n, classes = problem.n, problem.classes
    if len(classes) == 1:
        c = classes[0]
        s = na_required_snr_db(n, c.k, c.eps, 1.0, tol=tol)
        return NaResult(s, (1.0,), (s,))

    if len(classes) == 2:
        c0, c1 = classes

        def gap(l0: float) -> float:
            # decreasing in l0
            return (na_required_snr_db(n, c0.k, c0.eps, l0, tol=tol)
                    - na_required_snr_db(n, c1.k, c1.eps, 1.0 - l0, tol=tol))

        lo, hi = 1e-12, 1.0 - 1e-12
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if gap(mid) > 0:
                lo = mid
            else:
                hi = mid
        l0 = 0.5 * (lo + hi)
        lambdas = (l0, 1.0 - l0)
    else:
        def load(s: float) -> float:
            esn0 = float(db_to_linear(s))
            return sum(2.0 ** (c.k - na_message_size(n, esn0, c.eps, 1.0)) for c in classes)

        s = _bisect(lambda s: load(s) <= 1.0, *SNR_BRACKET_DB, tol)
        esn0 = float(db_to_linear(s))
        w = [2.0 ** (c.k - na_message_size(n, esn0, c.eps, 1.0)) for c in classes]
        lambdas = tuple(x / sum(w) for x in w)

    per_class = tuple(
        na_required_snr_db(n, c.k, c.eps, l, tol=tol) for c, l in zip(classes, lambdas)
    )
    return NaResult(max(per_class), lambdas, per_class)
