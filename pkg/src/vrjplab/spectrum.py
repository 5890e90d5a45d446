"""Eigenvalue counting for the continuum operator, by phase and by matrix.

Phase route.  The eigenvalue equation in the variable phi = g/M is the
Sturm-Liouville problem (M^2 phi')' + E M^2 phi = 0, whose polar angle
obeys

    theta' = cos(theta)^2 / M^2 + E M^2 sin(theta)^2,  theta(-lam) = 0,

and eigenvalues below E are counted by pi-crossings of theta.  Raw ODE
stepping is hopeless when M^2 spans e^{+-40}, so the propagation
freezes the coefficient per grid cell (geometric mean of the endpoint
values) and advances the auxiliary angle

    psi = arctan(sqrt(E) M^2 tan(theta)),

which under a frozen coefficient moves linearly at the constant rate
sqrt(E); crossings of multiples of pi by psi and theta coincide branch
by branch.  This per-cell closed form is exact and unconditionally
stable; the only approximation is the piecewise-constant coefficient.
Gauge re-projection at each cell boundary goes through atan2, which
saturates gracefully where tan(theta) overflows.

Matrix routes.  The scaled discrete circle operator (weight n) has
eigenvalues approximating the continuum ones, counted by a dense
eigensolve.  A conservative finite-difference operator built from a
sampled path (fluxes from the trapezoid resistances, boundary seam
implementing g(-lam) = g(lam) and the twisted flux matching) provides
the deterministic spectral oracle; a Dirichlet variant with an O(dim)
inertia count serves at sizes where dense solves are impossible (the
Dirichlet and twisted counts interlace within 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.integrate
import scipy.sparse
import scipy.sparse.linalg

from .beta_field import BetaField, dense_h
from .stochastic import PathKind, RngStream, SampledPath, sample_brownian_path

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (len(args) == 1 and callable(args[0])) else args[0]

_PI = math.pi


@dataclass
class PhaseTrace:
    e_level: float
    lam: float
    theta_final: float
    crossings: np.ndarray     # times of pi-crossings, offsets from the path start
    grid_step: float
    branch_count: int         # exact number of pi-crossings; equals floor(theta/pi)

    @property
    def count(self) -> int:
        return self.branch_count


@dataclass
class DiscreteSpectrum:
    class Source(Enum):
        BETA_MATRIX = "beta_matrix"
        FD_OPERATOR = "fd_operator"

    eigenvalues: np.ndarray
    source: "DiscreteSpectrum.Source"


_CROSS_TOL = 1e-10   # endpoint-exact crossings round to the crossed side


@njit(cache=True)
def _phase_core(logc, dpsi):
    """Advance the gauge angle across all cells; branch counts and entry angles.

    logc[i] = log of sqrt(E) * (frozen M^2 on cell i); dpsi = sqrt(E)*h.
    The state never leaves the gauge: at a cell boundary the angle is
    rescaled by the neighbouring-cell ratio exp(logc[i] - logc[i-1]),
    which stays O(1) on a Brownian grid, so no precision is lost even
    when M^2 itself spans hundreds of e-folds.
    """
    n = logc.size
    kcum = np.empty(n + 1, dtype=np.int64)
    psi_in = np.empty(n)
    kcum[0] = 0
    k = 0
    psi = 0.0                    # fractional gauge angle in [0, pi)
    for i in range(n):
        if i > 0:
            r = math.exp(logc[i] - logc[i - 1])
            psi = math.atan2(r * math.sin(psi), math.cos(psi))
            if psi < 0.0:
                psi = 0.0
        psi_in[i] = psi
        psi_new = psi + dpsi
        ncross = int((psi_new + _CROSS_TOL) // _PI)
        k += ncross
        psi = psi_new - ncross * _PI
        if psi < 0.0:
            psi = 0.0
        kcum[i + 1] = k
    return kcum, psi_in, psi


def _log_m(path: SampledPath) -> np.ndarray:
    """log of the geometric path; a brownian input B is read as e^{B - t/2}.

    Reading the log directly keeps long horizons representable where the
    geometric values themselves would over/underflow float64.
    """
    if path.kind is PathKind.GBM:
        return np.log(path.values)
    return path.values - path.times / 2.0


def _cell_log_coefficients(path: SampledPath, e_level: float) -> tuple[np.ndarray, float]:
    logm = _log_m(path)
    logc = 0.5 * math.log(e_level) + logm[:-1] + logm[1:]
    return logc, math.sqrt(e_level) * path.step


def phase_propagate(e_level: float, gbm: SampledPath,
                    collect_crossings: bool = True) -> PhaseTrace:
    """Propagate the phase over the whole path span from theta = 0."""
    if e_level <= 0:
        raise ValueError("E must be positive")
    logc, dpsi = _cell_log_coefficients(gbm, e_level)
    kcum, psi_in, psi = _phase_core(logc, dpsi)
    # unwind the final gauge angle to the raw phase fraction
    phi = math.atan2(math.sin(psi), math.exp(min(logc[-1], 700.0)) * math.cos(psi))
    if phi < 0.0:
        phi = 0.0
    theta_final = float(kcum[-1]) * _PI + phi
    crossings = np.empty(0)
    if collect_crossings:
        dk = np.diff(kcum)
        cells = np.nonzero(dk)[0]
        sqrt_e = math.sqrt(e_level)
        times = []
        for i in cells:
            j = np.arange(1, dk[i] + 1)
            times.append(i * gbm.step + (j * _PI - psi_in[i]) / sqrt_e)
        if times:
            crossings = np.concatenate(times)
    lam = 0.5 * (gbm.t_end - gbm.t0)
    return PhaseTrace(e_level, lam, theta_final, crossings, gbm.step, int(kcum[-1]))


def count_states_phase(e_level: float, gbm: SampledPath) -> int:
    """floor(theta(lam)/pi); brackets the true count within -1/+2."""
    return phase_propagate(e_level, gbm, collect_crossings=False).count


def phase_propagate_rk4(e_level: float, gbm: SampledPath,
                        max_step_angle: float = 0.05) -> float:
    """Generic RK4 integration of the phase ODE with the same frozen cells.

    Small-scale oracle for the closed-form propagation; substeps per
    cell are chosen so the angle advance stays below max_step_angle.
    """
    logm = _log_m(gbm)
    h = gbm.step
    theta = 0.0
    for i in range(logm.size - 1):
        m2 = math.exp(logm[i] + logm[i + 1])
        a = 1.0 / m2
        b = e_level * m2
        rate = max(a, b)
        nsub = max(1, int(math.ceil(rate * h / max_step_angle)))
        dt = h / nsub

        for _ in range(nsub):
            k1 = a * math.cos(theta) ** 2 + b * math.sin(theta) ** 2
            t2 = theta + 0.5 * dt * k1
            k2 = a * math.cos(t2) ** 2 + b * math.sin(t2) ** 2
            t3 = theta + 0.5 * dt * k2
            k3 = a * math.cos(t3) ** 2 + b * math.sin(t3) ** 2
            t4 = theta + dt * k3
            k4 = a * math.cos(t4) ** 2 + b * math.sin(t4) ** 2
            theta += dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return theta


def riccati_cell_check(e_level: float, gbm: SampledPath, n_cells: int = 200,
                       eps_frac: float = 0.02) -> float:
    """Max relative deviation of the per-cell Riccati identity.

    Within a cell (coefficient frozen), j = -cot(theta) must satisfy
    j' = j^2 / M^2 + E M^2.  Checked by centered differences of the
    exact in-cell propagation at the cell midpoint, skipping cells where
    cot is ill-conditioned.
    """
    logc, dpsi = _cell_log_coefficients(gbm, e_level)
    _, psi_in, _ = _phase_core(logc, dpsi)
    h = gbm.step
    sqrt_e = math.sqrt(e_level)
    worst = 0.0
    checked = 0
    for i in range(0, logc.size, max(1, logc.size // (4 * n_cells))):
        c = math.exp(logc[i])
        m2 = c / sqrt_e

        def theta_at(delta):
            psi = psi_in[i] + sqrt_e * delta
            kk = math.floor(psi / _PI)
            frac = psi - kk * _PI
            return kk * _PI + math.atan2(math.sin(frac), c * math.cos(frac))

        mid = 0.5 * h
        eps = eps_frac * h
        th = theta_at(mid)
        if min(abs(math.sin(th)), abs(math.cos(th))) < 0.2:
            continue
        j_mid = -1.0 / math.tan(th)
        j_plus = -1.0 / math.tan(theta_at(mid + eps))
        j_minus = -1.0 / math.tan(theta_at(mid - eps))
        fd = (j_plus - j_minus) / (2.0 * eps)
        rhs = j_mid * j_mid / m2 + e_level * m2
        worst = max(worst, abs(fd - rhs) / abs(rhs))
        checked += 1
        if checked >= n_cells:
            break
    if checked == 0:
        raise RuntimeError("no well-conditioned cells found for the check")
    return worst


# ---------------------------------------------------------------------------
# Matrix routes
# ---------------------------------------------------------------------------

_DENSE_EIG_BUDGET = 4000


def discrete_spectrum_matrix(field: BetaField, n: int) -> DiscreteSpectrum:
    """Eigenvalues of the scaled discrete operator n * H_beta."""
    h = dense_h(field.graph, field.beta)
    if h.shape[0] > _DENSE_EIG_BUDGET:
        raise ValueError(f"dense eigensolve budget exceeded: {h.shape[0]} > {_DENSE_EIG_BUDGET}")
    vals = np.linalg.eigvalsh(n * h)
    return DiscreteSpectrum(vals, DiscreteSpectrum.Source.BETA_MATRIX)


def count_states_matrix(e_level: float, field: BetaField, n: int) -> int:
    """Number of eigenvalues of n * H_beta at or below E."""
    spec = discrete_spectrum_matrix(field, n)
    return int(np.searchsorted(spec.eigenvalues, e_level, side="right"))


def _fd_resistances(gbm: SampledPath) -> np.ndarray:
    """Per-cell resistance of the conservative stencil: trapezoid of 1/M^2."""
    m = gbm.values
    return 0.5 * gbm.step * (1.0 / m[:-1] ** 2 + 1.0 / m[1:] ** 2)


def fd_operator_twisted(gbm: SampledPath) -> scipy.sparse.csr_matrix:
    """Sparse FD operator with the circle domain conditions.

    Unknowns are g at grid nodes 0..N-1 with the endpoint identified
    (g continuous across the seam); the seam cell joins g_{N-1} through
    the right endpoint value of M to g_0 through the left one, which
    discretizes the twisted flux matching by eliminating the duplicate
    endpoint unknown.  Energy form: sum over cells of
    (g_q/M_q - g_p/M_p)^2 / r_cell, mass h per node.
    """
    m = gbm.values
    h = gbm.step
    r = _fd_resistances(gbm)
    n = m.size - 1                       # distinct nodes on the circle
    alpha = 1.0 / m                      # 1/M at nodes 0..N (N = seam twin of 0)
    rows, cols, vals = [], [], []
    for c in range(n):
        p, q = c, (c + 1) % n
        ap = alpha[c]
        aq = alpha[c + 1]                # at the seam this is 1/M_lam, not 1/M_-lam
        w = 1.0 / r[c]
        rows += [p, q, p, q]
        cols += [p, q, q, p]
        vals += [ap * ap * w, aq * aq * w, -ap * aq * w, -ap * aq * w]
    a = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return a / h


def fd_spectrum_twisted(gbm: SampledPath, k: int = 8) -> DiscreteSpectrum:
    """Lowest k eigenvalues of the twisted FD operator (shift-invert)."""
    a = fd_operator_twisted(gbm).tocsc()
    vals = scipy.sparse.linalg.eigsh(a, k=k, sigma=0.0, which="LM",
                                     return_eigenvectors=False)
    return DiscreteSpectrum(np.sort(vals), DiscreteSpectrum.Source.FD_OPERATOR)


def count_states_fd_dirichlet(gbm: SampledPath, e_level: float) -> int:
    """Dirichlet eigenvalue count below E by LDL inertia, O(dim).

    Interlaces the twisted count within 1; usable at grid sizes far
    beyond the dense budget.
    """
    m = gbm.values
    h = gbm.step
    w = 1.0 / _fd_resistances(gbm)       # cell stiffness, phi variables
    # interior nodes 1..N-1 of the Dirichlet problem in phi
    diag = w[:-1] + w[1:] - e_level * h * m[1:-1] ** 2
    off = -w[1:-1]
    count = 0
    d = diag[0]
    if d < 0:
        count += 1
    for i in range(1, diag.size):
        denom = d if d != 0.0 else 1e-300
        d = diag[i] - off[i - 1] ** 2 / denom
        if d < 0:
            count += 1
    return count


# ---------------------------------------------------------------------------
# Renewal statistics and the density-of-states sweep
# ---------------------------------------------------------------------------

@dataclass
class RenewalSummary:
    e_level: float
    n_interarrivals: int
    mean: float
    se_mean: float
    variance: float
    lag1_corr: float
    corr_half_width: float

    @property
    def target_mean(self) -> float:
        return _PI / math.sqrt(self.e_level)


def renewal_statistics(e_level: float, horizon: float, s: RngStream,
                       step: float = 1e-3, min_count: int = 100) -> RenewalSummary:
    """Interarrival statistics of the pi-crossing times on [0, horizon]."""
    if e_level <= 0:
        raise ValueError("E must be positive")
    b = sample_brownian_path(0.0, horizon, step, s)
    trace = phase_propagate(e_level, b, collect_crossings=True)
    times = np.concatenate([[0.0], trace.crossings])
    gaps = np.diff(times)
    if gaps.size < min_count:
        raise RuntimeError(f"insufficient data: {gaps.size} interarrivals < {min_count}")
    mean = float(np.mean(gaps))
    var = float(np.var(gaps, ddof=1))
    se = math.sqrt(var / gaps.size)
    a, bb = gaps[:-1] - mean, gaps[1:] - mean
    lag1 = float(np.sum(a * bb) / math.sqrt(np.sum(a * a) * np.sum(bb * bb)))
    return RenewalSummary(e_level, gaps.size, mean, se, var, lag1,
                          2.5758 / math.sqrt(gaps.size - 1))


@dataclass
class DosRow:
    e_level: float
    lam: float
    replicas: int
    mean_density: float
    half_width: float
    target: float


def dos_sweep(e_list, lam: float, replicas: int, s: RngStream,
              step: float = 1e-3) -> list[DosRow]:
    """Per-E mean and CI of N_lam(E)/(2 lam) from the phase route.

    One path per replica, shared across the E values (the counts are
    then monotone-coupled, which tightens ratio comparisons).
    """
    e_list = list(e_list)
    counts = np.empty((len(e_list), replicas))
    for r in range(replicas):
        gbm = two_sided_path_for_dos(lam, step, s.substream(r + 1))
        for ei, e_level in enumerate(e_list):
            counts[ei, r] = count_states_phase(e_level, gbm)
    rows = []
    for ei, e_level in enumerate(e_list):
        dens = counts[ei] / (2.0 * lam)
        mean = float(np.mean(dens))
        hw = float(2.5758 * np.std(dens, ddof=1) / math.sqrt(replicas))
        rows.append(DosRow(e_level, lam, replicas, mean, hw, math.sqrt(e_level) / _PI))
    return rows


def two_sided_path_for_dos(lam: float, step: float, s: RngStream) -> SampledPath:
    return sample_brownian_path(-lam, lam, step, s)


# ---------------------------------------------------------------------------
# The interarrival mean by quadrature
# ---------------------------------------------------------------------------

def mean_t1_quadrature(e_level: float, epsrel: float = 1e-8) -> float:
    """Mean first pi-crossing time by adaptive 2-D quadrature.

    Evaluates (1/2) iint exp(-t/(2u(t+u)) - E t/2) / (sqrt(u) sqrt(t+u))
    * (2u+t)/(u(t+u)) du dt over the positive quadrant, mapped to the
    unit square by u = x/(1-x), t = y/(1-y); equals pi/sqrt(E).
    """
    if e_level <= 0:
        raise ValueError("E must be positive")

    def integrand(x: float, y: float) -> float:
        u = x / (1.0 - x)
        t = y / (1.0 - y)
        if u <= 0.0 or t <= 0.0:
            return 0.0
        jac = 1.0 / ((1.0 - x) ** 2 * (1.0 - y) ** 2)
        expo = -t / (2.0 * u * (t + u)) - 0.5 * e_level * t
        if expo < -700.0:
            return 0.0
        core = math.exp(expo) / (math.sqrt(u) * math.sqrt(t + u)) \
            * (2.0 * u + t) / (u * (t + u))
        return 0.5 * core * jac

    val, err = scipy.integrate.dblquad(integrand, 0.0, 1.0, 0.0, 1.0,
                                       epsabs=1e-12, epsrel=epsrel)
    rel = err / max(abs(val), 1e-300)
    if rel > 1e-4:
        raise RuntimeError(f"quadrature did not converge: rel err {rel:.2e}")
    return val


def f_star_negative(z: float, e_level: float) -> float:
    """Bounded solution of the generator equation L f = 1 on the negative axis.

    f(z) = -int_z^0 h(u) du.  The outer integrand h pairs an exploding
    exponential with a vanishing one; the inner integral is evaluated in
    a rescaled variable that combines the two exponents into a single
    nonpositive one, so the removable singularity at 0 evaluates cleanly
    to 1/E.
    """
    if z > 0:
        raise ValueError("negative-branch argument must be <= 0")
    val, _ = scipy.integrate.quad(_f_star_outer_neg, z, 0.0,
                                  args=(e_level,), limit=200)
    return -val


def _f_star_outer_neg(u: float, e_level: float) -> float:
    a = abs(u)
    e = e_level
    rate = a * a / e + 1.0   # total decay scale of the inner integrand

    def inner(v: float) -> float:
        w = v / rate
        s = 2.0 * a * w / e
        return math.exp(-(a * a / e) * w - w / (1.0 + s)) / math.sqrt(1.0 + s)

    val, _ = scipy.integrate.quad(inner, 0.0, np.inf, limit=200)
    return val / (e * rate)


def _f_star_outer_pos(u: float, e_level: float) -> float:
    e = e_level
    rate = u * u / e + 1.0

    def inner(v: float) -> float:
        w = v / rate
        s = 2.0 * u * w / e
        return math.exp(-(u * u / e) * w / (1.0 + s) - w) / (1.0 + s) ** 1.5

    val, _ = scipy.integrate.quad(inner, 0.0, np.inf, limit=200)
    return val / (e * rate)


def mean_t1_from_f_star(e_level: float) -> float:
    """Cross-check route: f*(+inf) - f*(-inf) by two 1-D outer quadratures."""
    neg, _ = scipy.integrate.quad(_f_star_outer_neg, -np.inf, 0.0,
                                  args=(e_level,), limit=300)
    pos, _ = scipy.integrate.quad(_f_star_outer_pos, 0.0, np.inf,
                                  args=(e_level,), limit=300)
    return neg + pos
