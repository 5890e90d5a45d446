"""The limiting kernel on the circle and on the line, with its operator checks.

A kernel instance wraps one geometric Brownian path M on [-lam, lam]
(anchored M_0 = 1) plus the cumulative trapezoid of 1/M^2.  For t <= t'
the circle kernel value is

    M_t M_t' / (M_lam - M_-lam)^2 * ( M_lam^2  I(t', lam)
                                    + M_lam M_-lam I(t, t')
                                    + M_-lam^2 I(-lam, t) )

with I(a, b) = int_a^b ds / M_s^2.  All integrals are trapezoid sums on
the path grid; no Ito correction applies since these are path
functionals, not stochastic integrals.  The line kernel truncates the
lower limit of I at the sampled horizon.

The inverse operator is applied through conservative finite
differences: fluxes of g/M use the resistances h / (I_{i+1} - I_i) of
the same cumulative, never a direct difference of the rough path, which
makes the discrete identity (M^2 (Gf/M)')' = -f M hold to roundoff.

Ensemble samplers (diagonal law, truncated exponential-functional
ratio, quadratic-form law, line diagonal) are vectorized across
replicas and reuse the same trapezoid discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stats import TestReport, ks_one_sample
from .stochastic import (PathKind, RngStream, SampledPath, gbm_from_brownian,
                         inverse_gamma_half_cdf, sample_brownian_path)

_DEGENERATE_REL_TOL = 1e-12


class DegeneratePathError(ValueError):
    """Raised when M_lam = M_-lam (probability-zero event) makes the kernel singular."""


def _cumtrapz(y: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    cells = 0.5 * h * (np.take(y, range(1, y.shape[axis]), axis=axis)
                       + np.take(y, range(0, y.shape[axis] - 1), axis=axis))
    out_shape = list(y.shape)
    out = np.zeros(out_shape)
    idx = [slice(None)] * y.ndim
    idx[axis] = slice(1, None)
    out[tuple(idx)] = np.cumsum(cells, axis=axis)
    return out


def two_sided_gbm(lam: float, step: float, s: RngStream) -> SampledPath:
    """GBM on [-lam, lam] anchored at M_0 = 1, grid chosen to hit 0 and +-lam."""
    half = max(1, int(math.ceil(lam / step - 1e-9)))
    h = lam / half
    b = sample_brownian_path(-lam, lam, h, s)
    return gbm_from_brownian(b)


@dataclass
class CircleKernel:
    lam: float
    gbm: SampledPath
    inv_sq_cum: np.ndarray

    def __post_init__(self) -> None:
        m = self.gbm.values
        if abs(m[-1] - m[0]) <= _DEGENERATE_REL_TOL * max(m[-1], m[0]):
            raise DegeneratePathError("M_lam and M_-lam coincide")

    @classmethod
    def from_path(cls, gbm: SampledPath) -> "CircleKernel":
        if gbm.kind is not PathKind.GBM:
            raise ValueError("CircleKernel needs a gbm path")
        lam = gbm.t_end
        if abs(gbm.t0 + lam) > 1e-9 * max(1.0, lam):
            raise ValueError("path must cover [-lam, lam]")
        ic = _cumtrapz(1.0 / gbm.values ** 2, gbm.step)
        return cls(lam, gbm, ic)

    @classmethod
    def sample(cls, lam: float, step: float, s: RngStream) -> "CircleKernel":
        return cls.from_path(two_sided_gbm(lam, step, s))

    # -- interpolated path reads ------------------------------------------
    def _coord(self, t: float) -> float:
        if not -self.lam - 1e-12 <= t <= self.lam + 1e-12:
            raise ValueError(f"t={t} outside [-{self.lam}, {self.lam}]")
        return min(max((t + self.lam) / self.gbm.step, 0.0), self.gbm.values.size - 1.0)

    def m_at(self, t: float) -> float:
        x = self._coord(t)
        i = min(int(x), self.gbm.values.size - 2)
        f = x - i
        v = self.gbm.values
        return float(np.exp((1 - f) * np.log(v[i]) + f * np.log(v[i + 1])))

    def ic_at(self, t: float) -> float:
        x = self._coord(t)
        i = min(int(x), self.inv_sq_cum.size - 2)
        f = x - i
        return float((1 - f) * self.inv_sq_cum[i] + f * self.inv_sq_cum[i + 1])

    @property
    def m_left(self) -> float:
        return float(self.gbm.values[0])

    @property
    def m_right(self) -> float:
        return float(self.gbm.values[-1])


def kernel_eval(k: CircleKernel, t: float, t2: float) -> float:
    """Symmetric kernel value at (t, t2)."""
    a, b = (t, t2) if t <= t2 else (t2, t)
    ml, mr = k.m_left, k.m_right
    ic_a, ic_b = k.ic_at(a), k.ic_at(b)
    total = float(k.inv_sq_cum[-1])
    bracket = (mr * mr * (total - ic_b) + mr * ml * (ic_b - ic_a) + ml * ml * ic_a)
    return k.m_at(a) * k.m_at(b) * bracket / (mr - ml) ** 2


def kernel_matrix(k: CircleKernel, stride: int = 1) -> np.ndarray:
    """Kernel evaluated on the (strided) path grid as a dense symmetric matrix."""
    m = k.gbm.values[::stride]
    ic = k.inv_sq_cum[::stride]
    ml, mr = k.m_left, k.m_right
    total = float(k.inv_sq_cum[-1])
    ic_lo = np.minimum.outer(ic, ic)
    ic_hi = np.maximum.outer(ic, ic)
    bracket = mr * mr * (total - ic_hi) + mr * ml * (ic_hi - ic_lo) + ml * ml * ic_lo
    return np.outer(m, m) * bracket / (mr - ml) ** 2


def _f_values(k: CircleKernel, f) -> np.ndarray:
    if callable(f):
        return np.asarray(f(k.gbm.times), dtype=float)
    fv = np.asarray(f, dtype=float)
    if fv.size != k.gbm.values.size:
        raise ValueError("sampled f must live on the kernel grid")
    return fv


def quadratic_form(k: CircleKernel, f) -> float:
    """Energy <f, Gf> via the single-integral closed form."""
    fv = _f_values(k, f)
    m = k.gbm.values
    h = k.gbm.step
    ml, mr = k.m_left, k.m_right
    c = _cumtrapz(fv * m, h)
    total = c[-1]
    integrand = (ml * (total - c) + mr * c) ** 2 / m ** 2
    return float(np.trapezoid(integrand, dx=h) / (mr - ml) ** 2)


def quadratic_form_double_route(k: CircleKernel, f, stride: int = 1) -> float:
    """Oracle: direct 2-D trapezoid of f(t) G(t,t') f(t')."""
    fv = _f_values(k, f)[::stride]
    g = kernel_matrix(k, stride)
    h = k.gbm.step * stride
    w = np.full(fv.size, h)
    w[0] = w[-1] = h / 2.0
    wf = w * fv
    return float(wf @ g @ wf)


def apply_kernel(k: CircleKernel, f) -> np.ndarray:
    """g = Gf on the path grid, O(grid) via cumulative trapezoid sums."""
    fv = _f_values(k, f)
    m = k.gbm.values
    h = k.gbm.step
    ml, mr = k.m_left, k.m_right
    ic = k.inv_sq_cum
    p = fv * m
    cp = _cumtrapz(p, h)
    cq = _cumtrapz(p * ic, h)
    pt, q, u = cp[-1], cq[-1], ic[-1]
    dm2 = (mr - ml) ** 2
    const = (mr * mr * (u * pt - q) + mr * ml * q) / dm2
    return m * ((cq - ic * cp) + const - ic * pt * ml * (mr - ml) / dm2)


def flux_fd(k: CircleKernel, g: np.ndarray) -> np.ndarray:
    """M^2 (g/M)' at half nodes by conservative differences.

    The half-node coefficient is the resistance form h / (I_{i+1} - I_i)
    of the stored cumulative, never a finite difference of M itself.
    """
    phi = np.asarray(g, dtype=float) / k.gbm.values
    d_ic = np.diff(k.inv_sq_cum)
    return np.diff(phi) / d_ic


def flux_closed_form(k: CircleKernel, f) -> np.ndarray:
    """Closed form of M^2 (Gf/M)' at half nodes."""
    fv = _f_values(k, f)
    m = k.gbm.values
    h = k.gbm.step
    ml, mr = k.m_left, k.m_right
    cp = _cumtrapz(fv * m, h)
    pt = cp[-1]
    cp_half = 0.5 * (cp[1:] + cp[:-1])
    return -(cp_half + ml * pt / (mr - ml))


def operator_residual(k: CircleKernel, f) -> float:
    """Relative L2 residual of H(Gf) - f over the interior grid.

    H g = -(1/M) (M^2 (g/M)')' applied with the conservative stencil.
    """
    fv = _f_values(k, f)
    g = apply_kernel(k, fv)
    flux = flux_fd(k, g)
    m = k.gbm.values
    h = k.gbm.step
    hg = -(flux[1:] - flux[:-1]) / (h * m[1:-1])
    num = float(np.linalg.norm(hg - fv[1:-1]))
    den = float(np.linalg.norm(fv[1:-1]))
    return num / den if den > 0 else num


def twisted_neumann_mismatch(k: CircleKernel, g: np.ndarray) -> float:
    """Relative gap in M_-lam (g/M)'(-lam) = M_lam (g/M)'(lam).

    One-sided estimate from the boundary: the conservative half-node
    fluxes M^2 (g/M)' are linearly extrapolated to the endpoints, then
    divided by the endpoint M (so the rough path is only ever read,
    never differenced).
    """
    flux = flux_fd(k, g)
    left = (1.5 * flux[0] - 0.5 * flux[1]) / k.m_left
    right = (1.5 * flux[-1] - 0.5 * flux[-2]) / k.m_right
    scale = max(abs(left), abs(right), 1e-300)
    return abs(left - right) / scale


# ---------------------------------------------------------------------------
# Line (infinite-volume) kernel
# ---------------------------------------------------------------------------

@dataclass
class LineKernel:
    """Truncated infinite-volume kernel: lower integration limit -horizon.

    The discarded tail int_{-inf}^{-horizon} ds/M^2 is pathwise of order
    e^{-horizon}; no correction term is added (the tail has infinite
    mean).  Evaluation is restricted to |t| <= horizon/2 to keep the
    truncation bias negligible.
    """

    horizon: float
    gbm: SampledPath
    inv_sq_cum: np.ndarray

    @classmethod
    def sample(cls, horizon: float, step: float, s: RngStream) -> "LineKernel":
        gbm = two_sided_gbm(horizon, step, s)
        return cls(horizon, gbm, _cumtrapz(1.0 / gbm.values ** 2, gbm.step))

    @classmethod
    def from_path(cls, gbm: SampledPath) -> "LineKernel":
        return cls(gbm.t_end, gbm, _cumtrapz(1.0 / gbm.values ** 2, gbm.step))

    def _read(self, t: float) -> tuple[float, float]:
        x = min(max((t + self.horizon) / self.gbm.step, 0.0), self.gbm.values.size - 1.0)
        i = min(int(x), self.gbm.values.size - 2)
        f = x - i
        v = self.gbm.values
        m = float(np.exp((1 - f) * np.log(v[i]) + f * np.log(v[i + 1])))
        ic = float((1 - f) * self.inv_sq_cum[i] + f * self.inv_sq_cum[i + 1])
        return m, ic


def line_kernel_eval(k: LineKernel, t: float, t2: float) -> float:
    for arg in (t, t2):
        if abs(arg) > 0.5 * k.horizon + 1e-12:
            raise ValueError("evaluation restricted to [-horizon/2, horizon/2]")
    a, b = (t, t2) if t <= t2 else (t2, t)
    ma, ic_a = k._read(a)
    mb, _ = k._read(b)
    return ma * mb * ic_a


# ---------------------------------------------------------------------------
# Ensemble samplers (vectorized across replicas)
# ---------------------------------------------------------------------------

def _gbm_matrix(lam: float, step: float, n_rep: int, s: RngStream):
    """(n_rep, K+1) matrix of two-sided GBM values on [-lam, lam], plus grid."""
    half = max(1, int(math.ceil(lam / step - 1e-9)))
    h = lam / half
    n_cells = 2 * half
    incr = s.gen.standard_normal((n_rep, n_cells)) * math.sqrt(h)
    b = np.concatenate([np.zeros((n_rep, 1)), np.cumsum(incr, axis=1)], axis=1)
    b -= b[:, half][:, None]
    times = -lam + h * np.arange(n_cells + 1)
    return np.exp(b - times / 2.0), times, h


def sample_kernel_diagonal(lam: float, t: float, step: float, n_rep: int,
                           s: RngStream, batch: int = 2000) -> np.ndarray:
    """Replicated G(t, t) values; distributed as 1/(2*gamma) for every t."""
    out = np.empty(n_rep)
    done = 0
    while done < n_rep:
        b = min(batch, n_rep - done)
        m, times, h = _gbm_matrix(lam, step, b, s.substream(done + 1))
        ic = _cumtrapz(1.0 / m ** 2, h, axis=1)
        j = int(round((t + lam) / h))
        ml, mr = m[:, 0], m[:, -1]
        total = ic[:, -1]
        bracket = mr ** 2 * (total - ic[:, j]) + ml ** 2 * ic[:, j]
        out[done:done + b] = m[:, j] ** 2 * bracket / (mr - ml) ** 2
        done += b
    return out


def sample_quadratic_form(lam: float, f, step: float, n_rep: int,
                          s: RngStream, batch: int = 1000) -> np.ndarray:
    """Replicated <f, Gf> values for a deterministic f (callable on times)."""
    out = np.empty(n_rep)
    done = 0
    while done < n_rep:
        b = min(batch, n_rep - done)
        m, times, h = _gbm_matrix(lam, step, b, s.substream(done + 1))
        fv = np.asarray(f(times), dtype=float)
        ml, mr = m[:, 0:1], m[:, -1:]
        c = _cumtrapz(fv[None, :] * m, h, axis=1)
        total = c[:, -1:]
        integrand = (ml * (total - c) + mr * c) ** 2 / m ** 2
        qf = np.trapezoid(integrand, dx=h, axis=1) / (mr[:, 0] - ml[:, 0]) ** 2
        out[done:done + b] = qf
        done += b
    return out


def sample_dufresne_ratio(lam: float, step: float, n_rep: int, s: RngStream,
                          batch: int = 4000) -> np.ndarray:
    """int_0^lam e^{2a_s - s} ds / (e^{a_lam - lam/2} - 1)^2 per replica."""
    half = max(1, int(math.ceil(lam / step - 1e-9)))
    h = lam / half
    out = np.empty(n_rep)
    done = 0
    while done < n_rep:
        b = min(batch, n_rep - done)
        gen = s.substream(done + 1).gen
        alpha = np.zeros(b)
        integ = np.zeros(b)
        prev = np.ones(b)  # e^{2 a_0 - 0}
        for k in range(1, half + 1):
            alpha = alpha + gen.standard_normal(b) * math.sqrt(h)
            cur = np.exp(2.0 * alpha - k * h)
            integ += 0.5 * h * (prev + cur)
            prev = cur
        denom = (np.exp(alpha - 0.5 * lam) - 1.0) ** 2
        out[done:done + b] = integ / denom
        done += b
    return out


def sample_line_diagonal(horizon: float, step: float, n_rep: int, s: RngStream,
                         batch: int = 2000) -> np.ndarray:
    """G_inf(0, 0) = int_{-horizon}^0 ds/M^2 per replica (one-sided walk)."""
    half = max(1, int(math.ceil(horizon / step - 1e-9)))
    h = horizon / half
    out = np.empty(n_rep)
    done = 0
    while done < n_rep:
        b = min(batch, n_rep - done)
        gen = s.substream(done + 1).gen
        # integrate backward from 0: s -> -s turns 1/M^2 into e^{2w_s - s}
        w = np.zeros(b)
        integ = np.zeros(b)
        prev = np.ones(b)
        for k in range(1, half + 1):
            w = w + gen.standard_normal(b) * math.sqrt(h)
            cur = np.exp(2.0 * w - k * h)
            integ += 0.5 * h * (prev + cur)
            prev = cur
        out[done:done + b] = integ
        done += b
    return out


def dufresne_ratio_check(lam: float, s: RngStream, n_rep: int = 10_000,
                         step: float = 1e-3, alpha: float = 0.01) -> TestReport:
    if lam <= 0:
        raise ValueError("lam must be positive")
    samples = sample_dufresne_ratio(lam, step, n_rep, s)
    return ks_one_sample(samples, inverse_gamma_half_cdf, alpha,
                         label=f"dufresne-ratio lam={lam}")


@dataclass
class MbgReport:
    t_grid: tuple[float, ...]
    mean_log: np.ndarray
    se_mean: np.ndarray
    var_log: np.ndarray
    incr_corr: float
    corr_half_width: float
    n: int

    @property
    def passed(self) -> bool:
        mean_ok = np.all(np.abs(self.mean_log + np.array(self.t_grid) / 2.0)
                         <= 3.0 * self.se_mean)
        var_ok = np.all(np.abs(self.var_log - np.array(self.t_grid))
                        <= 0.10 * np.array(self.t_grid))
        corr_ok = abs(self.incr_corr) <= self.corr_half_width
        return bool(mean_ok and var_ok and corr_ok)


def mbg_transform_check(s: RngStream, t_grid: tuple[float, ...] = (0.5, 1.0, 2.0),
                        n_rep: int = 10_000, step: float = 1e-3,
                        tail: float = 40.0) -> MbgReport:
    """Geometric-Brownian-motion law of the normalized forward-tail ratio.

    V_t = e^{-a_t + t/2} int_t^inf e^{2a-s} ds / int_0^inf e^{2a-s} ds,
    integrals truncated at horizon max(t)+tail; checks the GBM marginals
    of ln V_t and the decorrelation of increments.
    """
    t_grid = tuple(sorted(t_grid))
    if len(t_grid) != 3 or t_grid[0] <= 0:
        raise ValueError("mbg check needs three positive snapshot times")
    horizon = t_grid[-1] + tail
    nsteps = int(round(horizon / step))
    snap_idx = {int(round(t / step)): ti for ti, t in enumerate(t_grid)}
    gen = s.gen
    alpha = np.zeros(n_rep)
    integ = np.zeros(n_rep)
    prev = np.ones(n_rep)
    alpha_at = np.empty((len(t_grid), n_rep))
    integ_at = np.empty((len(t_grid), n_rep))
    sq = math.sqrt(step)
    for k in range(1, nsteps + 1):
        alpha += gen.standard_normal(n_rep) * sq
        cur = np.exp(2.0 * alpha - k * step)
        integ += 0.5 * step * (prev + cur)
        prev = cur
        if k in snap_idx:
            ti = snap_idx[k]
            alpha_at[ti] = alpha
            integ_at[ti] = integ
    log_v = np.empty((len(t_grid), n_rep))
    for ti, t in enumerate(t_grid):
        log_v[ti] = (-alpha_at[ti] + t / 2.0
                     + np.log(integ - integ_at[ti]) - np.log(integ))
    mean_log = log_v.mean(axis=1)
    se = log_v.std(axis=1, ddof=1) / math.sqrt(n_rep)
    var_log = log_v.var(axis=1, ddof=1)
    d1 = log_v[1] - log_v[0]
    d2 = log_v[2] - log_v[1]
    corr = float(np.corrcoef(d1, d2)[0, 1])
    return MbgReport(t_grid, mean_log, se, var_log, corr,
                     2.5758 / math.sqrt(n_rep), n_rep)
