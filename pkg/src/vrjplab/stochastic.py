"""Deterministic, seedable randomness and the elementary samplers.

Every stochastic routine in this package consumes an explicit
:class:`RngStream`.  A stream is identified by a ``(seed, stream_id)``
pair and is backed by the counter-based Philox generator, so distinct
``stream_id`` values give statistically independent substreams and the
same pair reproduces the identical draw sequence bit for bit (per numpy
release; Gaussian draws use numpy's ziggurat and are not guaranteed
stable across numpy versions).

Reference distributions used throughout the verification suites
(Inverse Gaussian, Gamma(1/2, 1), and the law of 1/(2*gamma)) live here
as closed-form CDFs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import erf, log_ndtr, ndtr


class PathKind(Enum):
    BROWNIAN = "brownian"
    GBM = "gbm"


@dataclass
class RngStream:
    """Single-consumer source of uniform randomness.

    Distinct ``stream_id`` values under the same seed are independent;
    parallel replicas must each get their own stream.
    """

    seed: int
    stream_id: int
    gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        bits = np.random.Philox(key=np.array(
            [self.seed % (1 << 64), self.stream_id % (1 << 64)], dtype=np.uint64))
        self.gen = np.random.Generator(bits)

    def substream(self, k: int) -> "RngStream":
        """Derive the k-th sibling stream (same seed, shifted stream_id)."""
        return RngStream(self.seed, self.stream_id + k)


def new_stream(seed: int, stream_id: int = 0) -> RngStream:
    return RngStream(seed, stream_id)


@dataclass(frozen=True)
class IGParams:
    """Parameters (mean mu, shape lam) of an Inverse Gaussian law."""

    mu: float
    lam: float

    def __post_init__(self) -> None:
        if not (self.mu > 0 and self.lam > 0):
            raise ValueError(f"IGParams requires mu>0 and lam>0, got {self}")


@dataclass
class SampledPath:
    """A path on the regular grid t0 + k*step, k = 0..len(values)-1."""

    t0: float
    step: float
    values: np.ndarray
    kind: PathKind

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size == 0:
            raise ValueError("empty path")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.kind is PathKind.GBM and not np.all(self.values > 0):
            raise ValueError("gbm path must be strictly positive")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.values.size)

    @property
    def t_end(self) -> float:
        return self.t0 + self.step * (self.values.size - 1)

    def index_of(self, t: float) -> int:
        """Nearest grid index for time t; t must lie on the grid span."""
        i = int(round((t - self.t0) / self.step))
        if i < 0 or i >= self.values.size:
            raise ValueError(f"time {t} outside the sampled span")
        return i


def sample_inverse_gaussian(p: IGParams, s: RngStream, size: int | None = None):
    """Draw from IG(mu, lam) via one Gamma(1/2,1) draw plus a uniform acceptance.

    The root construction: with y = 2*gamma (gamma ~ Gamma(1/2,1)),

        x = mu + mu^2 y/(2 lam) - (mu/(2 lam)) sqrt(4 mu lam y + mu^2 y^2)

    is the smaller root of the IG quadratic; accept x with probability
    mu/(mu + x), else return mu^2/x.  Exact, no rejection loop.
    """
    n = 1 if size is None else size
    g = s.gen.standard_gamma(0.5, size=n)
    y = 2.0 * g
    mu, lam = p.mu, p.lam
    x = mu + mu * mu * y / (2.0 * lam) \
        - (mu / (2.0 * lam)) * np.sqrt(4.0 * mu * lam * y + mu * mu * y * y)
    u = s.gen.uniform(size=n)
    out = np.where(u <= mu / (mu + x), x, mu * mu / x)
    return float(out[0]) if size is None else out


def sample_gamma_half(s: RngStream, size: int | None = None):
    """Draw from Gamma(shape 1/2, rate 1)."""
    g = s.gen.standard_gamma(0.5, size=size)
    return float(g) if size is None else g


def sample_brownian_path(t0: float, t1: float, step: float, s: RngStream) -> SampledPath:
    """Two-sided Brownian path on the grid covering [t0, t1].

    Increments over each grid cell are independent N(0, step).  When the
    span contains 0, the path is pinned to 0 at the grid point nearest 0,
    which splits it into two independent one-sided paths glued there;
    otherwise it is pinned at the left end.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if t0 >= t1:
        raise ValueError("need t0 < t1")
    ncells = int(math.ceil((t1 - t0) / step - 1e-9))
    incr = s.gen.standard_normal(ncells) * math.sqrt(step)
    vals = np.empty(ncells + 1)
    vals[0] = 0.0
    np.cumsum(incr, out=vals[1:])
    anchor = int(np.clip(round(-t0 / step), 0, ncells))
    vals -= vals[anchor]
    return SampledPath(t0, step, vals, PathKind.BROWNIAN)


def gbm_from_brownian(b: SampledPath) -> SampledPath:
    """Map a Brownian path B to the geometric path exp(B_t - t/2)."""
    if b.kind is not PathKind.BROWNIAN:
        raise ValueError("gbm_from_brownian needs a brownian path")
    vals = np.exp(b.values - b.times / 2.0)
    return SampledPath(b.t0, b.step, vals, PathKind.GBM)


def sample_gbm_path(t0: float, t1: float, step: float, s: RngStream) -> SampledPath:
    return gbm_from_brownian(sample_brownian_path(t0, t1, step, s))


# ---------------------------------------------------------------------------
# Reference CDFs
# ---------------------------------------------------------------------------

def gamma_half_cdf(x):
    """CDF of Gamma(1/2, 1): erf(sqrt(x))."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, erf(np.sqrt(np.maximum(x, 0.0))), 0.0)


def inverse_gamma_half_cdf(x):
    """CDF of 1/(2*gamma) with gamma ~ Gamma(1/2, 1).

    P(1/(2 gamma) <= x) = P(gamma >= 1/(2x)) = 1 - erf(1/sqrt(2x)).
    """
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) and scalar:
        raise ValueError("inverse_gamma_half_cdf needs x > 0")
    out = np.where(x > 0, 1.0 - erf(1.0 / np.sqrt(2.0 * np.maximum(x, 1e-300))), 0.0)
    return float(out) if scalar else out


def scaled_inverse_gamma_half_cdf(x, c: float):
    """CDF of c/(2*gamma) for a positive constant c."""
    return inverse_gamma_half_cdf(np.asarray(x, dtype=float) / c)


def inverse_gaussian_cdf(x, p: IGParams):
    """CDF of IG(mu, lam), stable for large shape via log-normal-cdf."""
    out = inverse_gaussian_cdf_arrays(x, p.mu, p.lam)
    return float(out) if np.ndim(out) == 0 else out


def inverse_gaussian_cdf_arrays(x, mu, lam):
    """Elementwise IG CDF for broadcastable (x, mu, lam) arrays."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    pos = x > 0
    xs = np.where(pos, x, 1.0)
    r = np.sqrt(lam / xs)
    a = ndtr(r * (xs / mu - 1.0))
    b = np.exp(2.0 * lam / mu + log_ndtr(-r * (xs / mu + 1.0)))
    return np.where(pos, a + b, 0.0)
