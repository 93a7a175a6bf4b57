"""Spectral multiplier kernels of the Grushin operator.

After a partial Fourier transform in x'' the operator becomes the fiber
family  -Delta + (sum_i |x'_i|) |xi|^2,  whose eigenfunctions are tensor
products of rescaled Airy-oscillator modes:

    K_{F(L_xi)}(x', y') = sum_n F(|xi|^{4/3} N_n) h~_n(x', xi) h~_n(y', xi),
    h~_n(x', xi)        = |xi|^{d1/3} prod_i h_{n_i}(|xi|^{2/3} x'_i),

with N_n = sum_i lambda_{n_i}.  The full kernel is the inverse Fourier
transform in xi, reduced to a one-dimensional radial integral for
d2 in {1, 2, 3}.

Numerical layout of the radial integral
---------------------------------------
For r = |xi| >= r_min every lattice point n contributes on its own
r-interval  [(lo/N_n)^{3/4}, (hi/N_n)^{3/4}]  (lo, hi bound the spectral
support of F), integrated with a Gauss-Legendre rule sized from the phase
of the integrand.  Below r_min infinitely many lattice points contribute,
so the fiber kernel g(r) is replaced by the model  g0 + c1 r^2 + c2 r^4,
where g0 is the kernel of F(-Delta) on R^{d1} (the r -> 0 limit) and
c1, c2 are fitted to g on [r_min, 2 r_min].

Error accounting
----------------
Every sum over n with N_n <= mu obeys the envelope

    sum_{N_n <= mu} prod_i h_{n_i}(u_i)^2 <= C_W mu^{d1/2},   C_W = C_1^{d1},

with C_1 the sup over u and the table of mu^{-1/2} sum_{lambda <= mu} h^2
(see :func:`weyl_constant`).  By Cauchy-Schwarz |g(r)| <= |F|_inf C_W hi^{d1/2}
for compactly supported F, and Abel summation gives

    sum_{N_n > m} e^{-s N_n} prod h^2 <= C_W s^{-d1/2} Gamma(d1/2 + 1, s m)

for the heat multiplier.  ``truncation_error`` is twice the envelope mass
of the modelled region (bounding both the true contribution and the model)
plus the spectral tail; the model itself is usually far more accurate,
and its estimated error is reported separately as ``quadrature_error``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import csv
import io
import math

import numpy as np
from scipy import integrate, special

from .geometry import Dims, Point, ball_volume_arr, rho_hat
from .oscillator import CapacityError, cached_table, gram_matrix, table_for_reach
from .report import Report, atomic_write, schedule_hash
from .special_fn import bessel_j0

__all__ = [
    "ContractError",
    "MultiIndexEntry",
    "enumerate_lattice",
    "lattice_arrays",
    "Multiplier",
    "BochnerRiesz",
    "Heat",
    "ImaginaryPower",
    "BumpDilated",
    "Tabulated",
    "SumMultiplier",
    "smooth_bump",
    "weyl_constant",
    "fiber_kernel",
    "free_kernel",
    "KernelSample",
    "full_kernel",
    "kernel_grid",
    "weighted_l2_norm",
    "gaussian_bound_check",
    "local_euclidean_heat_check",
    "heat_mass",
    "heat_semigroup",
    "fiber_heat_oracle",
    "write_kernel_slice",
    "HEAT_CUTOFF",
]

HEAT_CUTOFF = 40.0       # e^{-40} ~ 4e-18: spectral cutoff for heat multipliers
LATTICE_CAP = 2_000_000


class ContractError(ValueError):
    """A call violates a documented precondition."""


# --------------------------------------------------------------------------
# lattice of multi-indices
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiIndexEntry:
    indices: tuple       # 1-based
    big_n: float


def lattice_arrays(table, d1, bound_m):
    """All multi-indices with N_n <= bound_m as (indices0, N) arrays.

    ``indices0`` has shape (count, d1) and is 0-based; rows are in
    lexicographic order (depth-first walk with per-coordinate cutoffs).
    """
    if d1 < 1:
        raise ValueError("d1 must be >= 1")
    lam = table.lam
    lam1 = float(lam[0])
    need = bound_m - (d1 - 1) * lam1
    if need >= lam1 and table.reach() <= need:
        raise CapacityError(f"eigenvalue table reaches {table.reach():.6g}; "
                            f"lattice bound needs reach > {need:.6g}")
    if bound_m < d1 * lam1:
        return np.zeros((0, d1), dtype=np.int64), np.zeros(0)
    if d1 == 1:
        k = table.count_below(bound_m)
        return np.arange(k, dtype=np.int64)[:, None], lam[:k].copy()
    rows, sums = [], []
    k0 = table.count_below(need)
    for i in range(k0):
        sub_idx, sub_n = lattice_arrays(table, d1 - 1, bound_m - lam[i])
        if len(sub_n) == 0:
            break
        rows.append(np.column_stack([np.full(len(sub_n), i, dtype=np.int64), sub_idx]))
        sums.append(lam[i] + sub_n)
    if not rows:
        return np.zeros((0, d1), dtype=np.int64), np.zeros(0)
    idx = np.vstack(rows)
    if len(idx) > LATTICE_CAP:
        raise CapacityError(f"lattice has {len(idx)} points, cap is {LATTICE_CAP}")
    return idx, np.concatenate(sums)


def enumerate_lattice(table, d1, bound_m):
    """Multi-indices n in N^{d1} with N_n = sum_i lambda_{n_i} <= bound_m."""
    idx, big_n = lattice_arrays(table, d1, bound_m)
    return [MultiIndexEntry(tuple(int(v) + 1 for v in row), float(n))
            for row, n in zip(idx, big_n)]


def _table_for(d1, bound_m, table=None):
    need = bound_m - (d1 - 1) * 1.0188
    if table is not None and table.reach() > need:
        return table
    return table_for_reach(need)


# --------------------------------------------------------------------------
# multipliers
# --------------------------------------------------------------------------

def smooth_bump(s, lo=1.0, hi=4.0):
    """C-infinity bump supported on [lo, hi], equal to 1 at the midpoint."""
    s = np.asarray(s, dtype=float)
    v = (2.0 * s - lo - hi) / (hi - lo)
    out = np.zeros_like(v)
    inside = np.abs(v) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - v[inside] ** 2))
    return out


class Multiplier:
    """Spectral function F on [0, inf) with a support hint.

    ``support`` is ``(lo, hi)`` for compactly supported F and ``None`` for
    unbounded ones; those need an explicit spectral truncation.
    """

    support = None
    is_complex = False
    heat_time = None

    def __call__(self, lam):
        raise NotImplementedError

    def sup_abs(self):
        return 1.0

    def components(self):
        return [self]

    def energy_scale(self):
        lo, hi = self.support
        return lo if lo > 0 else hi

    def truncated_support(self, cutoff=None):
        if self.support is not None:
            return self.support
        if cutoff is None:
            raise ContractError(f"{type(self).__name__} is unbounded; pass an explicit "
                                "spectral truncation")
        return (0.0, float(cutoff))


@dataclass
class BochnerRiesz(Multiplier):
    """(1 - lam/scale)_+^kappa."""

    kappa: float
    scale: float = 1.0

    def __post_init__(self):
        if self.kappa < 0 or not self.scale > 0:
            raise ValueError("need kappa >= 0 and scale > 0")

    @property
    def support(self):
        return (0.0, float(self.scale))

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        base = 1.0 - lam / self.scale
        inside = (base > 0) & (lam >= 0)
        out = np.zeros_like(base)
        out[inside] = base[inside] ** self.kappa if self.kappa > 0 else 1.0
        return out


@dataclass
class Heat(Multiplier):
    """exp(-time lam); unbounded support, truncated at HEAT_CUTOFF / time."""

    time: float

    def __post_init__(self):
        if not self.time > 0:
            raise ValueError("heat time must be positive")

    @property
    def heat_time(self):
        return self.time

    def __call__(self, lam):
        return np.exp(-self.time * np.asarray(lam, dtype=float))

    def energy_scale(self):
        return 1.0 / self.time

    def truncated_support(self, cutoff=None):
        return (0.0, HEAT_CUTOFF / self.time if cutoff is None else float(cutoff))


@dataclass
class ImaginaryPower(Multiplier):
    """lam^{i t}."""

    t: float
    is_complex = True

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(1j * self.t * np.log(lam))


@dataclass
class BumpDilated(Multiplier):
    """eta(lam / dilation) with eta a smooth bump on [lo, hi]."""

    dilation: float = 1.0
    lo: float = 1.0
    hi: float = 4.0

    def __post_init__(self):
        if not (self.dilation > 0 and 0 <= self.lo < self.hi):
            raise ValueError("need dilation > 0 and 0 <= lo < hi")

    @property
    def support(self):
        return (self.lo * self.dilation, self.hi * self.dilation)

    def __call__(self, lam):
        return smooth_bump(np.asarray(lam, dtype=float) / self.dilation, self.lo, self.hi)


@dataclass
class Tabulated(Multiplier):
    """Piecewise-linear F through samples, zero outside their range."""

    lam: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.lam.ndim != 1 or self.lam.shape != self.values.shape or len(self.lam) < 2:
            raise ValueError("samples must be matching 1-D arrays of length >= 2")
        if np.any(np.diff(self.lam) <= 0) or self.lam[0] < 0:
            raise ValueError("sample abscissae must be increasing and nonnegative")

    @property
    def support(self):
        return (float(self.lam[0]), float(self.lam[-1]))

    def __call__(self, lam):
        return np.interp(np.asarray(lam, dtype=float), self.lam, self.values, left=0.0, right=0.0)

    def sup_abs(self):
        return float(np.max(np.abs(self.values)))


@dataclass
class SumMultiplier(Multiplier):
    """Sum of compactly supported multipliers; each part is integrated on its own support."""

    parts: list = field(default_factory=list)

    def __post_init__(self):
        if not self.parts or any(p.support is None for p in self.parts):
            raise ValueError("parts must be compactly supported multipliers")

    @property
    def support(self):
        return (min(p.support[0] for p in self.parts), max(p.support[1] for p in self.parts))

    @property
    def is_complex(self):
        return any(p.is_complex for p in self.parts)

    def __call__(self, lam):
        return sum(p(lam) for p in self.parts)

    def sup_abs(self):
        return sum(p.sup_abs() for p in self.parts)

    def components(self):
        return list(self.parts)


# --------------------------------------------------------------------------
# envelope constant
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def weyl_constant(d1=1, count=400, safety=1.02):
    """C_W = C_1^{d1}, C_1 = sup_{u, mu} mu^{-1/2} sum_{lambda_n <= mu} h_n(u)^2.

    The sup over mu is attained at eigenvalues; it is scanned over the
    first ``count`` of them on a fine u-grid and inflated by ``safety``.
    For large mu the ratio tends to 1/pi (local Weyl law), well below the
    maximum found at small mu.
    """
    table = cached_table(count)
    u = np.linspace(0.0, table.lam[-1] + 8.0, 20001)
    acc = np.zeros_like(u)
    best = 0.0
    for n in range(count):
        acc += table.values(n, u) ** 2
        best = max(best, float(acc.max()) / math.sqrt(table.lam[n]))
    return (safety * best) ** d1


# --------------------------------------------------------------------------
# fiber kernel
# --------------------------------------------------------------------------

def _prod_h(table, idx, u):
    """prod_i h_{idx_i}(u_i); idx (..., d1), u (..., d1) broadcast."""
    vals = table.values(idx, u)
    return np.prod(vals, axis=-1)


def fiber_kernel(mult, xi_norm, x_prime, y_prime, table=None, truncation=None):
    """K_{F(L_xi)}(x', y') as a finite lattice sum.

    Compactly supported F uses its support; unbounded F needs
    ``truncation`` (a spectral cutoff Lambda) and is summed over
    |xi|^{4/3} N_n <= Lambda.
    """
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    yp = np.atleast_1d(np.asarray(y_prime, dtype=float))
    if xp.shape != yp.shape or xp.ndim != 1:
        raise ValueError("x' and y' must be vectors of equal length")
    if not xi_norm > 0:
        raise ValueError("xi_norm must be positive")
    if mult.support is None and truncation is None:
        raise ContractError(f"{type(mult).__name__} is unbounded; pass truncation=Lambda")
    d1 = len(xp)
    lo, hi = mult.support if mult.support is not None else (0.0, float(truncation))
    s = xi_norm ** (2.0 / 3.0)
    bound = hi / xi_norm ** (4.0 / 3.0)
    table = _table_for(d1, bound, table)
    idx, big_n = lattice_arrays(table, d1, bound)
    if len(big_n) == 0:
        return 0.0
    f = mult(xi_norm ** (4.0 / 3.0) * big_n)
    hx = _prod_h(table, idx, s * xp[None, :])
    hy = _prod_h(table, idx, s * yp[None, :])
    val = xi_norm ** (2.0 * d1 / 3.0) * np.sum(f * hx * hy)
    return complex(val) if np.iscomplexobj(val) else float(val)


# --------------------------------------------------------------------------
# radial reduction
# --------------------------------------------------------------------------

def _radial_weight(d, r, z):
    """(2 pi)^{-d} times the sphere average of e^{i xi.z}, times |sphere| r^{d-1}.

    ``int_{R^d} g(|xi|) e^{i xi.z} dxi / (2 pi)^d = int_0^inf g(r) W(r, |z|) dr``.
    """
    rz = r * z
    if d == 1:
        return np.cos(rz) / math.pi
    if d == 2:
        return r * bessel_j0(rz) / (2.0 * math.pi)
    if d == 3:
        return r * r * np.sinc(rz / math.pi) / (2.0 * math.pi ** 2)
    raise ContractError(f"pointwise kernels support d2 in {{1, 2, 3}}, got {d}")


def _radial_weight_mass(d, r_max):
    """int_0^{r_max} sup_z |W(r, z)| dr."""
    return {1: r_max / math.pi, 2: r_max ** 2 / (4.0 * math.pi),
            3: r_max ** 3 / (6.0 * math.pi ** 2)}[d]


def _sphere_area(d):
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _gl_nodes(a, b, m):
    g, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * g + 0.5 * (a + b), 0.5 * (b - a) * w


@lru_cache(maxsize=None)
def _leg(m):
    return np.polynomial.legendre.leggauss(m)


def free_kernel(mult, s, d1, cutoff=None, order=None):
    """Kernel of F(-Delta) on R^{d1} at separation |s| (vectorised in s).

    This is the r -> 0 limit of the fiber kernel.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros(s.shape, dtype=complex if mult.is_complex else float)
    for part in mult.components():
        lo, hi = part.truncated_support(cutoff)
        if hi <= lo:
            continue
        klo, khi = math.sqrt(lo), math.sqrt(hi)
        m = order or int(64 + 1.2 * float(np.max(s)) * (khi - klo))
        k, w = _gl_nodes(klo, khi, m)
        fk = part(k * k) * w
        out += _radial_weight(d1, k[None, :], s[:, None]) @ fk
    return out


@dataclass
class KernelSample:
    """K_{F(L)}(x, y) with its certified truncation bound."""

    x: Point
    y: Point
    value: complex
    truncation_error: float
    quadrature_error: float = 0.0
    details: dict = field(default_factory=dict)


def _default_r_min(mult, xabs, yabs, d1, cutoff):
    """Radius below which the fiber kernel is modelled by its r -> 0 expansion.

    The potential r^2 sum|x'_i| perturbs F(-Delta) at relative size
    r^2 (X + l) / E, with E the energy scale of F and l = E^{-1/2} its
    length scale; the radius keeps that below 1/4.
    """
    e = mult.energy_scale()
    ell = 1.0 / math.sqrt(e)
    return 0.5 * math.sqrt(e / (xabs + yabs + ell))


def _node_count(base, phase, factor=0.4):
    # factor 0.3 already reproduces 0.6 to 1e-14 on heat kernels
    m = base + np.ceil(factor * phase).astype(int)
    return ((m + 7) // 8) * 8


def _envelope(mult, d1, cutoff):
    """Bound for |g(r)| (fiber kernel), uniform in r."""
    cw = weyl_constant(d1)
    if mult.heat_time is not None:
        return cw * mult.heat_time ** (-d1 / 2.0) * math.gamma(d1 / 2.0 + 1.0)
    lo, hi = mult.truncated_support(cutoff)
    return mult.sup_abs() * cw * hi ** (d1 / 2.0)


def _heat_tail(time, d1, d2, cutoff, r_lo=0.0):
    """Bound on the spectrum omitted above the heat cutoff, integrated in r."""
    cw = weyl_constant(d1)
    a = d1 / 2.0 + 1.0
    lam1 = 1.0188 * d1      # below d1 * lambda_1

    def per_r(r):
        m = max(cutoff, time * r ** (4.0 / 3.0) * lam1) if r > 0 else cutoff
        return (cw * time ** (-d1 / 2.0) * special.gammaincc(a, m) * special.gamma(a)
                * _radial_weight_mass(d2, 1.0) * r ** (d2 - 1) * (d2 if d2 > 1 else 1))

    r_knee = (cutoff / (time * lam1)) ** 0.75
    v1, _ = integrate.quad(per_r, r_lo, r_knee, limit=200)
    v2, _ = integrate.quad(per_r, r_knee, np.inf, limit=200)
    return v1 + v2


def kernel_grid(mult, x_prime, y_primes, z_values, d1, d2, table=None, r_min=None,
                cutoff=None, base_nodes=16, chunk=400_000):
    """Kernel values K(x, y) for one x' against many y' and |x''-y''| values.

    Returns ``(values, truncation_error, quadrature_error, details)`` with
    ``values`` of shape (len(y_primes), len(z_values)).
    """
    if d2 not in (1, 2, 3):
        raise ContractError(f"pointwise kernels support d2 in {{1, 2, 3}}, got {d2}")
    if mult.support is None and mult.heat_time is None and cutoff is None:
        raise ContractError(f"{type(mult).__name__} is unbounded; pass cutoff=Lambda")
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    yps = np.atleast_2d(np.asarray(y_primes, dtype=float))
    if yps.shape[1] != d1 or xp.shape != (d1,):
        raise ValueError("x', y' must have length d1")
    zs = np.atleast_1d(np.asarray(z_values, dtype=float))
    xabs = float(np.sum(np.abs(xp)))
    yabs = float(np.max(np.sum(np.abs(yps), axis=1)))
    zmax = float(np.max(np.abs(zs)))
    if r_min is None:
        r_min = _default_r_min(mult, xabs, yabs, d1, cutoff)
    _, hi_all = mult.truncated_support(cutoff)
    bound = hi_all / r_min ** (4.0 / 3.0)
    table = _table_for(d1, bound, table)
    idx, big_n = lattice_arrays(table, d1, bound)
    dtype = complex if mult.is_complex else float
    vals = np.zeros((len(yps), len(zs)), dtype=dtype)
    spread = float(np.max(np.abs(xp))) + float(np.max(np.abs(yps)))
    node_total = 0

    for part in mult.components():
        lo, hi = part.truncated_support(cutoff)
        a = np.maximum(r_min, (lo / big_n) ** 0.75)
        b = (hi / big_n) ** 0.75
        keep = b > a
        a, b, n_k, i_k = a[keep], b[keep], big_n[keep], idx[keep]
        phase = (zmax * (b - a) + 2.0 * np.sqrt(n_k) * spread * d1
                 * (b ** (2.0 / 3.0) - a ** (2.0 / 3.0)))
        if part.heat_time is not None:
            phase = phase + part.heat_time * n_k * (b ** (4.0 / 3.0) - a ** (4.0 / 3.0))
        m_k = _node_count(base_nodes, phase)
        for m in np.unique(m_k):
            sel = np.nonzero(m_k == m)[0]
            g, w = _leg(int(m))
            # nodes for every selected entry, flattened entry-major
            half = 0.5 * (b[sel] - a[sel])
            mid = 0.5 * (b[sel] + a[sel])
            r_all = (mid[:, None] + half[:, None] * g[None, :]).ravel()
            w_all = (half[:, None] * w[None, :]).ravel()
            e_all = np.repeat(sel, len(g))
            step = max(1, chunk // max(1, len(yps)))
            for s0 in range(0, len(r_all), step):
                r = r_all[s0:s0 + step]
                e = e_all[s0:s0 + step]
                s = r ** (2.0 / 3.0)
                amp = w_all[s0:s0 + step] * part(r ** (4.0 / 3.0) * n_k[e]) * r ** (2.0 * d1 / 3.0)
                amp = amp * _prod_h(table, i_k[e], s[:, None] * xp[None, :])
                hy = np.ones((len(r), len(yps)))
                for i in range(d1):
                    hy *= table.values(i_k[e, i][:, None], s[:, None] * yps[None, :, i])
                radial = _radial_weight(d2, r[:, None], zs[None, :])
                vals += (hy * amp[:, None]).T @ radial
                node_total += len(r)

    closure, closure_err, fit = _small_r_closure(mult, xp, yps, zs, d1, d2, r_min, table,
                                                idx, big_n, cutoff)
    vals += closure
    env = _envelope(mult, d1, cutoff)
    trunc = 2.0 * env * _radial_weight_mass(d2, r_min)
    if mult.heat_time is not None:
        trunc += _heat_tail(mult.heat_time, d1, d2,
                            HEAT_CUTOFF if cutoff is None else cutoff * mult.heat_time)
    details = {"r_min": r_min, "lattice_bound": bound, "lattice_points": int(len(big_n)),
               "nodes": node_total, "closure_fit": fit}
    return vals, trunc, closure_err, details


def _fiber_on_radii(mult, xp, yps, radii, d1, table, idx, big_n, cutoff):
    """g(r) = K_{F(L_xi)}(x', y'_j) at |xi| = r for each r (shape (len(radii), J))."""
    out = []
    for r in radii:
        s = r ** (2.0 / 3.0)
        f = mult(r ** (4.0 / 3.0) * big_n)
        keep = f != 0
        hx = _prod_h(table, idx[keep], s * xp[None, :])
        hy = np.ones((int(keep.sum()), len(yps)))
        for i in range(d1):
            hy *= table.values(idx[keep, i][:, None], s * yps[None, :, i])
        out.append(r ** (2.0 * d1 / 3.0) * ((f[keep] * hx) @ hy))
    return np.array(out)


def _small_r_closure(mult, xp, yps, zs, d1, d2, r_min, table, idx, big_n, cutoff):
    """Contribution of |xi| < r_min from the model g0 + c1 r^2 + c2 r^4."""
    sep = np.sqrt(np.sum((yps - xp[None, :]) ** 2, axis=1))
    g0 = free_kernel(mult, sep, d1, cutoff)
    radii = r_min * np.array([1.0, 1.25, 1.5, 1.75, 2.0])
    g = _fiber_on_radii(mult, xp, yps, radii, d1, table, idx, big_n, cutoff)
    design = np.column_stack([radii ** 2, radii ** 4])
    coef, *_ = np.linalg.lstsq(design, g - g0[None, :], rcond=None)
    coef1, *_ = np.linalg.lstsq(design[:, :1], g - g0[None, :], rcond=None)
    m = int(32 + 0.6 * float(np.max(np.abs(zs))) * r_min)
    r, w = _gl_nodes(0.0, r_min, m)
    radial = _radial_weight(d2, r[:, None], zs[None, :]) * w[:, None]   # (m, L)
    mom0 = radial.sum(axis=0)
    mom2 = (r[:, None] ** 2 * radial).sum(axis=0)
    mom4 = (r[:, None] ** 4 * radial).sum(axis=0)
    full = g0[:, None] * mom0 + coef[0][:, None] * mom2 + coef[1][:, None] * mom4
    lower = g0[:, None] * mom0 + coef1[0][:, None] * mom2
    fit = {"g0": g0.tolist() if len(g0) <= 8 else None,
           "residual": float(np.max(np.abs(design @ coef - (g - g0[None, :]))))}
    return full, float(np.max(np.abs(full - lower))), fit


def full_kernel(mult, x, y, dims, table=None, r_min=None, cutoff=None):
    """K_{F(L)}(x, y) by radial reduction of the inverse Fourier integral."""
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    x.check(dims)
    y.check(dims)
    z = float(np.linalg.norm(x.xpp - y.xpp))
    vals, trunc, qerr, details = kernel_grid(mult, x.xp, y.xp[None, :], [z], dims.d1, dims.d2,
                                            table=table, r_min=r_min, cutoff=cutoff)
    v = vals[0, 0]
    return KernelSample(x, y, complex(v), float(trunc), float(qerr), details)


# --------------------------------------------------------------------------
# weighted L^2 norms through the fiber identity
# --------------------------------------------------------------------------

# ||W^g f|| <= C_g ||L_xi^g f|| on the fiber; interpolating the measured
# constant at g = 1 (about 1.0223) gives C_g <= 1.03^g for g <= 1
WEIGHTED_POWER_CONSTANT = 1.03


@dataclass
class NormResult:
    value: float
    truncation_error: float
    quadrature_error: float
    details: dict = field(default_factory=dict)


_GRAM_CACHE = {}


def _weighted_gram(table, count, gamma):
    """|u|^{2 gamma}-weighted Gram matrix, grown and sliced from a cache."""
    have = _GRAM_CACHE.get(float(gamma))
    if have is None or len(have) < count:
        size = max(count, int(1.25 * (len(have) if have is not None else 0)))
        size = min(size, len(table))
        have = gram_matrix(table, size, weight_power=gamma)
        _GRAM_CACHE[float(gamma)] = have
    return have[:count, :count]


def _free_q0(mult, yp, gamma, d1):
    """int |sum_i |x'_i||^{2 gamma} |k_free(x' - y')|^2 dx' (the r -> 0 limit of Q)."""
    lo, hi = mult.support
    if gamma == 0:
        # Plancherel on R^{d1}
        k, w = _gl_nodes(math.sqrt(lo), math.sqrt(hi), 400)
        f2 = np.abs(mult(k * k)) ** 2
        return _sphere_area(d1) / (2.0 * math.pi) ** d1 * float(np.sum(w * f2 * k ** (d1 - 1)))
    if d1 != 1:
        raise NotImplementedError("weighted norms with gamma > 0 need d1 = 1")
    span = 80.0 / math.sqrt(max(lo, hi / 16.0))
    y = float(yp[0])
    edges = np.unique(np.concatenate([y + np.linspace(-span, span, 401), [0.0]]))
    edges = edges[(edges >= y - span) & (edges <= y + span)]
    g, w = _leg(16)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * g + 0.5 * (a + b)).ravel()
    wx = (0.5 * (b - a) * w).ravel()
    k0 = free_kernel(mult, np.abs(x - y), 1, order=int(64 + 1.2 * span * math.sqrt(hi)))
    return float(np.sum(wx * np.abs(x) ** (2.0 * gamma) * np.abs(k0) ** 2))


def _q_profile(mult, yp, gamma, radii, d1, table, idx, big_n, gram):
    """Q(r) = int w^{2 gamma} |K_{F(L_xi)}(x', y')|^2 dx' at |xi| = r."""
    out = np.empty(len(radii))
    for j, r in enumerate(radii):
        s = r ** (2.0 / 3.0)
        f = mult(r ** (4.0 / 3.0) * big_n)
        act = np.nonzero(f != 0)[0]
        c = f[act] * _prod_h(table, idx[act], s * yp[None, :])
        if gram is None:
            q = float(np.sum(np.abs(c) ** 2))
        else:
            sub = gram[np.ix_(idx[act, 0], idx[act, 0])]
            q = float(np.real(np.conj(c) @ sub @ c))
        out[j] = r ** ((2.0 * d1 - 4.0 * gamma) / 3.0) * q
    return out


def weighted_l2_detail(mult, y, gamma, dims, table=None, r_min=None, base_nodes=24):
    """||(sum_i |x'_i|)^gamma K_{F(L)}(., y)||_2 with its error budget.

    Plancherel in x'' turns the norm into
        (2 pi)^{-d2} |S^{d2-1}| int_0^inf r^{d2-1} Q(r) dr,
    with Q the weighted fiber norm; no oscillatory integral is involved.
    """
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    if mult.support is None:
        raise ContractError("weighted_l2_norm needs a compactly supported multiplier")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    y.check(dims)
    d1, d2 = dims.d1, dims.d2
    if gamma > 0 and d1 != 1:
        raise NotImplementedError("weighted norms with gamma > 0 need d1 = 1")
    yp = y.xp
    yabs = float(np.sum(np.abs(yp)))
    lo, hi = mult.support
    if r_min is None:
        r_min = _default_r_min(mult, yabs, yabs, d1, None)
    bound = hi / r_min ** (4.0 / 3.0)
    table = _table_for(d1, bound, table)
    idx, big_n = lattice_arrays(table, d1, bound)
    pref = _sphere_area(d2) / (2.0 * math.pi) ** d2
    ymax = float(np.max(np.abs(yp))) if len(yp) else 0.0

    total = 0.0
    gram = None
    if gamma == 0:
        for part in [mult]:
            a = np.maximum(r_min, (lo / big_n) ** 0.75)
            b = (hi / big_n) ** 0.75
            keep = b > a
            a, b, n_k, i_k = a[keep], b[keep], big_n[keep], idx[keep]
            phase = 4.0 * np.sqrt(n_k) * ymax * d1 * (b ** (2.0 / 3.0) - a ** (2.0 / 3.0))
            m_k = _node_count(base_nodes, phase)
            for m in np.unique(m_k):
                sel = np.nonzero(m_k == m)[0]
                g, w = _leg(int(m))
                half = 0.5 * (b[sel] - a[sel])
                mid = 0.5 * (b[sel] + a[sel])
                r = (mid[:, None] + half[:, None] * g[None, :]).ravel()
                wr = (half[:, None] * w[None, :]).ravel()
                e = np.repeat(sel, len(g))
                s = r ** (2.0 / 3.0)
                hy = _prod_h(table, i_k[e], s[:, None] * yp[None, :])
                f = mult(r ** (4.0 / 3.0) * n_k[e])
                total += float(np.sum(wr * r ** (d2 - 1) * r ** (2.0 * d1 / 3.0)
                                      * np.abs(f) ** 2 * hy ** 2))
    else:
        count = int(idx[:, 0].max()) + 1 if len(idx) else 1
        gram = _weighted_gram(table, count, gamma)
        r_top = (hi / (d1 * float(table.lam[0]))) ** 0.75
        q = 1.0 + min(0.05, 3.0 / (math.sqrt(hi) * max(ymax, 1e-9)))
        npan = max(1, int(math.ceil(math.log(r_top / r_min) / math.log(q))))
        edges = np.geomspace(r_min, r_top, npan + 1)
        g, w = _leg(16)
        a_, b_ = edges[:-1, None], edges[1:, None]
        r = (0.5 * (b_ - a_) * g + 0.5 * (a_ + b_)).ravel()
        wr = (0.5 * (b_ - a_) * w).ravel()
        qv = _q_profile(mult, yp, gamma, r, d1, table, idx, big_n, gram)
        total = float(np.sum(wr * r ** (d2 - 1) * qv))

    # |xi| < r_min: Q(r) ~ Q0 + c1 r^2 + c2 r^4
    q0 = _free_q0(mult, yp, gamma, d1)
    radii = r_min * np.array([1.0, 1.25, 1.5, 1.75, 2.0])
    qf = _q_profile(mult, yp, gamma, radii, d1, table, idx, big_n, gram)
    design = np.column_stack([radii ** 2, radii ** 4])
    coef, *_ = np.linalg.lstsq(design, qf - q0, rcond=None)
    coef1, *_ = np.linalg.lstsq(design[:, :1], qf - q0, rcond=None)
    mom = [r_min ** (d2 + k) / (d2 + k) for k in (0, 2, 4)]
    closure = q0 * mom[0] + coef[0] * mom[1] + coef[1] * mom[2]
    closure1 = q0 * mom[0] + coef1[0] * mom[1]

    # envelope of Q on [0, r_min]
    cgam = WEIGHTED_POWER_CONSTANT ** gamma if gamma <= 1 else math.inf
    env = (cgam ** 2 * mult.sup_abs() ** 2 * weyl_constant(d1) * hi ** (d1 / 2.0 + 2.0 * gamma))
    if d2 - 4.0 * gamma > 0:
        env_mass = env * r_min ** (d2 - 4.0 * gamma) / (d2 - 4.0 * gamma)
    else:
        env_mass = math.inf
    sq = pref * (total + closure)
    value = math.sqrt(max(sq, 0.0))
    # errors of the squared norm mapped to the norm
    trunc_sq = pref * 2.0 * env_mass
    quad_sq = pref * abs(closure - closure1)
    to_norm = (lambda e: math.sqrt(sq + e) - value if value > 0 else math.sqrt(e))
    return NormResult(value, to_norm(trunc_sq), to_norm(quad_sq),
                      {"r_min": r_min, "lattice_points": int(len(big_n)),
                       "squared": sq, "closure_share": pref * closure / sq if sq > 0 else 0.0})


def weighted_l2_norm(mult, y, gamma, dims, table=None, r_min=None):
    """||(sum_i |x'_i|)^gamma K_{F(L)}(., y)||_{L^2}."""
    return weighted_l2_detail(mult, y, gamma, dims, table, r_min).value


# --------------------------------------------------------------------------
# heat kernel checks
# --------------------------------------------------------------------------

def default_heat_pairs(dims, count=20, seed=7):
    """Point pairs spread over on- and off-diagonal configurations."""
    rng = np.random.default_rng(seed)
    pairs = []
    for k in range(count):
        xp = rng.uniform(-2.0, 2.0, dims.d1)
        xpp = rng.uniform(-2.0, 2.0, dims.d2)
        if k % 4 == 0:
            yp, ypp = xp.copy(), xpp.copy()
        else:
            yp = xp + rng.normal(0.0, 0.8, dims.d1)
            ypp = xpp + rng.normal(0.0, 0.8, dims.d2)
        pairs.append((Point.of(xp, xpp), Point.of(yp, ypp)))
    return pairs


def gaussian_bound_check(t_list, pair_list, dims, table=None, c_budget=10.0):
    """Fit one (C, b) with |p_t(x,y)| <= C V(y, sqrt t)^{-1} exp(-b rho(x,y)^2 / t).

    C is the largest normalised value q = |p_t| V(y, sqrt t); b is the
    largest exponent keeping every off-diagonal sample below the bound.
    """
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    rep = Report("kernels", config={"t_list": list(t_list), "pairs": len(pair_list),
                                    "dims": [dims.d1, dims.d2]})
    qs, ss, negs = [], [], []
    for t in t_list:
        for j, (x, y) in enumerate(pair_list):
            smp = full_kernel(Heat(t), x, y, dims, table)
            p = smp.value.real
            vol = float(ball_volume_arr(float(np.linalg.norm(y.xp)), math.sqrt(t), dims))
            rho = float(rho_hat(x.xp, x.xpp, y.xp, y.xpp))
            q = abs(p) * vol
            qs.append(q)
            ss.append(rho ** 2 / t)
            negs.append(p + smp.quadrature_error >= 0)
            rep.add(f"p[t={t},pair={j}]", p, error_bound=smp.truncation_error,
                    family="heat_value", t=t, pair=j, rho=rho)
            rep.add(f"q[t={t},pair={j}]", q, fitted=True, family="heat_normalised",
                    s=rho ** 2 / t)
    qs, ss = np.array(qs), np.array(ss)
    c_fit = float(qs.max())
    off = ss > 1e-12
    with np.errstate(divide="ignore"):
        b_each = (math.log(c_fit) - np.log(np.maximum(qs[off], 1e-300))) / ss[off]
    b_fit = float(b_each.min()) if off.any() else math.inf
    rep.add("C", c_fit, fitted=True)
    rep.add("b", b_fit, fitted=True)
    ok = qs <= c_fit * np.exp(-b_fit * ss) * (1.0 + 1e-12)
    rep.check("single_pair_fits_all", bool(ok.all()))
    rep.check("b_positive", b_fit > 0, value=b_fit)
    rep.check("C_within_budget", c_fit <= c_budget, value=c_fit)
    rep.check("positivity", all(negs))
    return rep


def local_euclidean_heat_check(t_list, y, exponent_candidates=None, dims=None, table=None):
    """Small-time diagonal heat kernel against |y'|^{-alpha} (4 pi t)^{-(d1+d2)/2}.

    The t-slope of log p_t(y, y) is compared with -(d1+d2)/2; alpha is
    fitted over |y'| in {|y'|, 2|y'|, 4|y'|} at the smallest t and reported
    next to the candidates without asserting either.
    """
    dims = dims or Dims(len(y.x_prime), len(y.x_second))
    ynorm = float(np.linalg.norm(y.xp))
    if ynorm == 0:
        raise ValueError("local Euclidean regime needs y' != 0")
    if max(t_list) > ynorm ** 3 / 100.0:
        raise ValueError("need t <= |y'|^3 / 100 for every t")
    cands = list(exponent_candidates) if exponent_candidates else [dims.d2, dims.d2 / 2.0]
    D = dims.d1 + dims.d2
    rep = Report("kernels", config={"t_list": list(t_list), "y": [list(y.x_prime), list(y.x_second)],
                                    "candidates": cands})
    logs = []
    for t in t_list:
        p = full_kernel(Heat(t), y, y, dims, table).value.real
        logs.append(math.log(p))
        rep.add(f"p_diag[t={t}]", p, fitted=True, family="diag", t=t)
    slope = float(np.polyfit(np.log(t_list), logs, 1)[0]) if len(t_list) > 1 else math.nan
    rep.add("t_slope", slope, fitted=True)
    rep.check("t_slope_matches", abs(slope + D / 2.0) <= 0.03 * D / 2.0, value=slope)
    t0 = min(t_list)
    scales = np.array([1.0, 2.0, 4.0])
    vals = []
    for sc in scales:
        yy = Point.of(sc * y.xp, y.xpp)
        p = full_kernel(Heat(t0), yy, yy, dims, table).value.real
        vals.append(math.log(p * (4.0 * math.pi * t0) ** (D / 2.0)))
        rep.add(f"p_scaled[{sc}]", p, fitted=True, family="alpha_fit", y_norm=sc * ynorm)
    alpha = -float(np.polyfit(np.log(scales * ynorm), vals, 1)[0])
    rep.add("alpha", alpha, fitted=True)
    for c in cands:
        rep.add(f"alpha_minus_candidate[{c}]", alpha - c, fitted=True)
    rep.check("limit_positive", all(np.isfinite(logs)))
    return rep


def _heat_box(t, centre, half_x, zmax, panels):
    """Panelled Gauss-Legendre nodes for x' around ``centre`` and for |x''| in [0, zmax]."""
    g, w = _leg(8)
    ex = np.linspace(centre - half_x, centre + half_x, panels + 1)
    ez = np.linspace(-zmax, zmax, 2 * panels + 1)
    xs = (0.5 * np.diff(ex)[:, None] * g + 0.5 * (ex[1:] + ex[:-1])[:, None]).ravel()
    wx = (0.5 * np.diff(ex)[:, None] * w).ravel()
    zs = (0.5 * np.diff(ez)[:, None] * g + 0.5 * (ez[1:] + ez[:-1])[:, None]).ravel()
    wz = (0.5 * np.diff(ez)[:, None] * w).ravel()
    return xs, wx, zs, wz


def _box_extent(t):
    grow = max(1.0, math.sqrt(t))
    return 12.0 * grow, 30.0 * max(1.0, t ** 0.75)


def heat_mass(t, y, dims, table=None, panels=12):
    """int p_t(x, y) dx over a box carrying all but a negligible part of the mass (d1 = d2 = 1).

    Returns ``(mass, budget)`` where ``budget`` is the box area times the
    worst pointwise error budget of the kernel; it is a very loose ceiling,
    far above the actual error of the mass.
    """
    if (dims.d1, dims.d2) != (1, 1):
        raise NotImplementedError("heat mass quadrature is implemented for d1 = d2 = 1")
    half, zmax = _box_extent(t)
    xs, wx, zs, wz = _heat_box(t, float(y.xp[0]), half, zmax, panels)
    vals, trunc, qerr, _ = kernel_grid(Heat(t), y.xp, xs[:, None], np.abs(zs), 1, 1, table)
    mass = float(wx @ vals @ wz)
    return mass, float(np.sum(wx) * np.sum(wz) * (trunc + qerr))


def heat_semigroup(s, t, x, y, dims, table=None, panels=12):
    """(p_{s+t}(x, y), int p_s(x, z) p_t(z, y) dz) for d1 = d2 = 1."""
    if (dims.d1, dims.d2) != (1, 1):
        raise NotImplementedError("semigroup quadrature is implemented for d1 = d2 = 1")
    half, zmax = _box_extent(max(s, t))
    centre = 0.5 * (float(x.xp[0]) + float(y.xp[0]))
    shift = 0.5 * (float(x.xpp[0]) + float(y.xpp[0]))
    half += 0.5 * abs(float(x.xp[0]) - float(y.xp[0]))
    zmax += 0.5 * abs(float(x.xpp[0]) - float(y.xpp[0]))
    xs, wx, zs, wz = _heat_box(t, centre, half, zmax, panels)
    zs = zs + shift
    a = kernel_grid(Heat(s), x.xp, xs[:, None], np.abs(zs - x.xpp[0]), 1, 1, table)[0]
    b = kernel_grid(Heat(t), y.xp, xs[:, None], np.abs(zs - y.xpp[0]), 1, 1, table)[0]
    composed = float(wx @ (a * b) @ wz)
    direct = full_kernel(Heat(s + t), x, y, dims, table).value
    return float(np.real(direct)), composed


def fiber_heat_oracle(t, xi_norm, x_prime, y_prime, grid=None, table=None):
    """(lattice value, finite-difference value) of the fiber heat kernel, d1 = 1.

    The oracle is exp(-t L_xi) on the finite-difference grid, read off at
    the grid points nearest to x', y' (both should lie on the grid).
    """
    from .fiber import FiberGrid, discretize_fiber, fiber_heat_kernel_matrix
    grid = grid or FiberGrid(20.0, 0.01)
    op = discretize_fiber(xi_norm, 1, grid)
    mat = fiber_heat_kernel_matrix(op, t)
    i = int(np.argmin(np.abs(op.x - x_prime)))
    j = int(np.argmin(np.abs(op.x - y_prime)))
    lam_cut = HEAT_CUTOFF / t
    val = fiber_kernel(Heat(t), xi_norm, [x_prime], [y_prime], table, truncation=lam_cut)
    return float(val), float(mat[i, j])


def write_kernel_slice(samples, path):
    """CSV rows (x, y, re, im, truncation_error); points as 'x1 x2 | x''1 ...'."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "re", "im", "truncation_error"])

    def enc(p):
        return " ".join(repr(v) for v in p.x_prime) + " | " + " ".join(repr(v) for v in p.x_second)

    for s in samples:
        v = complex(s.value)
        w.writerow([enc(s.x), enc(s.y), repr(v.real), repr(v.imag), repr(float(s.truncation_error))])
    atomic_write(path, buf.getvalue())
    return len(samples)
