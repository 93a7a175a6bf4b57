"""Metric-measure geometry of the Grushin space R^{d1} x R^{d2}.

The control distance and ball volumes are known only up to two-sided
constants; this module fixes explicit representatives

    rho(x, y) = |x'-y'| + |x''-y''| / (|x'|+|y'|)^{1/2}   if |x''-y''| <= (|x'|+|y'|)^{3/2}
              = |x'-y'| + |x''-y''|^{2/3}                otherwise,
    V(x, r)   = r^{d1+d2} max(r, |x'|)^{d2/2},

and every inequality checked against them reports fitted constants.  The
formulas are exact representatives of an equivalence class; they are not
claimed to be the geodesic distance or the Lebesgue measure of a ball.
"""

from dataclasses import dataclass
import math

import numpy as np

from .report import Report, schedule_hash

__all__ = [
    "Dims",
    "Point",
    "distance",
    "rho_hat",
    "ball_volume",
    "ball_volume_arr",
    "weight",
    "weight_arr",
    "dilate",
    "verify_geometry",
    "eqvb_integral",
]


@dataclass(frozen=True)
class Dims:
    """Problem dimensions with homogeneous dimension ``q`` and threshold ``dd``."""

    d1: int
    d2: int

    def __post_init__(self):
        for name in ("d1", "d2"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def q(self):
        return self.d1 + 1.5 * self.d2

    @property
    def dd(self):
        return max(self.d1 + self.d2, 1.5 * self.d2)


@dataclass(frozen=True)
class Point:
    x_prime: tuple
    x_second: tuple

    @classmethod
    def of(cls, xp, xpp):
        return cls(tuple(np.atleast_1d(np.asarray(xp, dtype=float)).tolist()),
                   tuple(np.atleast_1d(np.asarray(xpp, dtype=float)).tolist()))

    @property
    def xp(self):
        return np.asarray(self.x_prime, dtype=float)

    @property
    def xpp(self):
        return np.asarray(self.x_second, dtype=float)

    def check(self, dims):
        if len(self.x_prime) != dims.d1 or len(self.x_second) != dims.d2:
            raise ValueError(f"point {self} does not match dimensions {dims}")


def _norm(v):
    return np.sqrt(np.sum(np.square(v), axis=-1))


def rho_hat(xp, xpp, yp, ypp):
    """Vectorised distance; arrays with trailing coordinate axes."""
    xp, xpp, yp, ypp = (np.asarray(a, dtype=float) for a in (xp, xpp, yp, ypp))
    a = _norm(xp - yp)
    z = _norm(xpp - ypp)
    s = _norm(xp) + _norm(yp)
    near = z <= s ** 1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(z > 0, z / np.sqrt(s), 0.0)
    return a + np.where(near, first, z ** (2.0 / 3.0))


def distance(x, y):
    """Canonical distance between two :class:`Point` objects."""
    if len(x.x_prime) != len(y.x_prime) or len(x.x_second) != len(y.x_second):
        raise ValueError("points have mismatched dimensions")
    return float(rho_hat(x.xp, x.xpp, y.xp, y.xpp))


def ball_volume_arr(xp_norm, r, dims):
    r = np.asarray(r, dtype=float)
    return r ** (dims.d1 + dims.d2) * np.maximum(r, xp_norm) ** (dims.d2 / 2.0)


def ball_volume(x, r, dims=None):
    """Canonical volume r^{d1+d2} max(r, |x'|)^{d2/2}."""
    if not r > 0:
        raise ValueError("radius must be positive")
    dims = dims or Dims(len(x.x_prime), len(x.x_second))
    return float(ball_volume_arr(float(_norm(x.xp)), r, dims))


def weight_arr(R, xp_norm, yp_norm):
    yp_norm = np.asarray(yp_norm, dtype=float)
    with np.errstate(divide="ignore"):
        inv = np.where(yp_norm > 0, 1.0 / yp_norm, np.inf)
    return np.minimum(R, inv) * xp_norm


def weight(R, x, y):
    """w_R(x, y) = min(R, |y'|^{-1}) |x'|  (min(R, inf) = R when y' = 0)."""
    if not R > 0:
        raise ValueError("R must be positive")
    return float(weight_arr(R, _norm(x.xp), _norm(y.xp)))


def dilate(t, xp, xpp):
    """delta_t(x', x'') = (t x', t^{3/2} x'')."""
    return t * np.asarray(xp), t ** 1.5 * np.asarray(xpp)


# --------------------------------------------------------------------------
# integral estimate: int (1 + w_R)^{-2 gamma} (1 + R rho)^{-2 beta} dx
# --------------------------------------------------------------------------

def _gl(n):
    return np.polynomial.legendre.leggauss(n)


def _panels(edges, order):
    g, w = _gl(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * g + 0.5 * (a + b)).ravel(), (0.5 * (b - a) * w).ravel()


def _log_edges(lo, hi, per_decade=8, start=None):
    """Panel edges from 0 to ``hi``, fine near 0, geometric above ``lo``."""
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))))
    return np.concatenate([[0.0], np.geomspace(lo, hi, n + 1)])


def eqvb_integral(dims, R, y_prime_norm, gamma, beta, box=None, order=12):
    """Truncated-box quadrature of the integral plus a tail bound.

    Only d1 = 1 is integrated pointwise (x' on a line, x'' radial with the
    sphere factor).  Returns ``(value, tail_bound)``.  The tail uses
    rho >= |x'-y'| + min(z^{2/3}, z / (2|y'| + |x'-y'|)^{1/2}) and
    |x'| >= |x'-y'| - |y'| inside the weight.
    """
    if dims.d1 != 1:
        raise NotImplementedError("eqVB quadrature implemented for d1 = 1")
    d2 = dims.d2
    yp = float(y_prime_norm)
    # natural scales: x' ~ 1/R, x'' ~ max(1/R, |y'|)^{1/2}/R
    sx = max(1.0 / R, yp)
    X = 1e4 * sx if box is None else box[0]
    Z = 1e6 * (sx ** 1.5 + 1.0 / R ** 1.5) if box is None else box[1]
    omega = 2.0 * math.pi ** (d2 / 2.0) / math.gamma(d2 / 2.0)

    xe = np.unique(np.concatenate([
        yp - _log_edges(1e-3 / R, X)[::-1], yp + _log_edges(1e-3 / R, X)[1:], [0.0]]))
    xq, xw = _panels(xe, order)
    total = 0.0
    for x1, wx in zip(xq, xw):
        s = abs(x1) + yp
        seam = s ** 1.5
        ze = _log_edges(1e-3 * min(seam if seam > 0 else 1.0, 1.0 / R), Z)
        if 0 < seam < Z:
            ze = np.unique(np.concatenate([ze, [seam]]))
        zq, zw = _panels(ze, order)
        a = abs(x1 - yp)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = a + np.where(zq <= seam, np.where(zq > 0, zq / math.sqrt(s) if s > 0 else 0.0, 0.0),
                               zq ** (2.0 / 3.0))
        w = weight_arr(R, abs(x1), yp)
        f = (1.0 + w) ** (-2.0 * gamma) * (1.0 + R * rho) ** (-2.0 * beta)
        total += wx * np.sum(zw * omega * zq ** (d2 - 1) * f)
    tail = _eqvb_tail(d2, R, yp, gamma, beta, X, Z, omega)
    return total, tail


def _eqvb_tail(d2, R, yp, gamma, beta, X, Z, omega, order=16):
    """Upper bound of the envelope over the complement of the box."""
    def env(a, z):
        m = np.minimum(z ** (2.0 / 3.0), z / np.sqrt(2.0 * yp + a + 1e-300))
        # |x'| >= |x'-y'| - |y'| lower-bounds the weight
        w = min(R, 1.0 / yp if yp > 0 else math.inf) * np.maximum(a - yp, 0.0)
        return (1.0 + w) ** (-2.0 * gamma) * (1.0 + R * (a + m)) ** (-2.0 * beta)

    def piece(ae, ze):
        a, wa = _panels(ae, order)
        z, wz = _panels(ze, order)
        vals = env(a[:, None], z[None, :]) * (omega * z ** (d2 - 1))[None, :]
        return 2.0 * float(wa @ vals @ wz)

    far = 1e10
    z_all = _log_edges(1e-3 * min(1.0 / R, 1.0), Z * far)
    # x' beyond the box (both sides of y'), then x' inside with x'' beyond
    part_a = piece(X + _log_edges(1e-3 * X, X * far), z_all)
    part_z = piece(_log_edges(1e-3 / R, X), Z + _log_edges(1e-3 * Z, Z * far))
    # the region past `far` is dropped: the envelope decays like a power
    # with exponent margin fixed by beta > Q/2 - gamma
    return 1.5 * (part_a + part_z)


def verify_geometry(dims, config=None):
    """Inequality checks on the canonical distance and volume.

    ``config`` keys: gamma, beta, R_list, y_grid (|y'| values), seed,
    pair_samples, doubling_samples, t_list, vb_tol.
    """
    cfg = {"gamma": 0.2, "beta": None, "R_list": [0.25, 1.0, 4.0],
           "y_grid": [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0],
           "seed": 12345, "pair_samples": 100_000, "doubling_samples": 10_000,
           "t_list": list(np.geomspace(1 / 16, 16, 9)), "stability": 0.2}
    cfg.update(config or {})
    gamma = cfg["gamma"]
    beta = cfg["beta"] if cfg["beta"] is not None else dims.q / 2 - gamma + 0.6
    if not 0 <= gamma < min(dims.d1 / 2.0, dims.d2 / 4.0):
        raise ValueError(f"hypothesis violated: 0 <= gamma < min(d1/2, d2/4) fails for gamma={gamma}")
    if not beta > dims.q / 2.0 - gamma:
        raise ValueError(f"hypothesis violated: beta > Q/2 - gamma fails for beta={beta}")
    cfg["beta"] = beta
    rng = np.random.default_rng(cfg["seed"])
    rep = Report("geometry", config={"dims": [dims.d1, dims.d2], **cfg})
    rep.notes.append("distance and volume are canonical representatives of "
                     "two-sided equivalences; constants below are fitted")

    # (a) integral estimate, maximised over the |y'| grid
    sup_by_R = {}
    if dims.d1 == 1:
        for R in cfg["R_list"]:
            best = 0.0
            for yp in cfg["y_grid"]:
                val, tail = eqvb_integral(dims, R, yp, gamma, beta)
                vol = ball_volume_arr(yp, 1.0 / R, dims)
                ratio = (val + tail) / vol
                rep.add(f"vb_ratio[R={R},y'={yp}]", val / vol, error_bound=tail / vol,
                        family="vb_ratio", R=R, y=yp)
                best = max(best, ratio)
            sup_by_R[R] = best
            rep.add(f"vb_sup[R={R}]", best, fitted=True, family="vb_sup", R=R)
        vals = list(sup_by_R.values())
        spread = max(vals) / min(vals) - 1.0
        rep.add("vb_spread", spread, fitted=True)
        rep.check("vb_finite", all(np.isfinite(vals)))
        rep.check("vb_R_stable", spread <= cfg["stability"], value=spread)

    # (b) w_R <= C (1 + R rho)
    n = cfg["pair_samples"]
    for R in cfg["R_list"]:
        xp, yp = _sample_points(rng, n, dims.d1)
        xpp, ypp = _sample_points(rng, n, dims.d2, scale_pow=1.5)
        w = weight_arr(R, _norm(xp), _norm(yp))
        ratio = w / (1.0 + R * rho_hat(xp, xpp, yp, ypp))
        rep.add(f"weight_ratio_max[R={R}]", float(ratio.max()), fitted=True,
                family="weight_ratio", R=R)
        rep.check(f"weight_ratio_finite[R={R}]", np.isfinite(ratio).all())

    # (c) dilation homogeneity of rho
    m = 2000
    worst = 1.0
    for t in cfg["t_list"]:
        xp, yp = _sample_points(rng, m, dims.d1)
        xpp, ypp = _sample_points(rng, m, dims.d2, scale_pow=1.5)
        base = rho_hat(xp, xpp, yp, ypp)
        dx, dxx = dilate(t, xp, xpp)
        dy, dyy = dilate(t, yp, ypp)
        r = rho_hat(dx, dxx, dy, dyy) / (t * base)
        c = float(max(r.max(), 1.0 / r.min()))
        worst = max(worst, c)
        rep.add(f"dilation_c[t={t:.6g}]", c, fitted=True, family="dilation", t=t)
    rep.add("dilation_c", worst, fitted=True)
    rep.check("dilation_bounded", np.isfinite(worst))

    # doubling with C = 1 and exponent Q
    k = cfg["doubling_samples"]
    xn = np.abs(rng.standard_cauchy(k)) * 10 ** rng.uniform(-2, 2, k)
    r = 10 ** rng.uniform(-3, 3, k)
    lam = 10 ** rng.uniform(-3, 3, k)
    lhs = ball_volume_arr(xn, lam * r, dims)
    rhs = (1.0 + lam) ** dims.q * ball_volume_arr(xn, r, dims)
    ok = lhs <= rhs * (1.0 + 1e-12)
    rep.add("doubling_max_ratio", float(np.max(lhs / rhs)), fitted=True)
    rep.check("doubling_C1", ok.all())
    rep.provenance = {"seed": cfg["seed"], "block_schedule_hash": schedule_hash(cfg)}
    return rep


def _sample_points(rng, n, d, scale_pow=1.0):
    """Pairs of points with coordinates spread over many scales."""
    mags = 10 ** rng.uniform(-2, 2, (n, 1))
    a = rng.normal(size=(n, d)) * mags ** scale_pow
    b = a + rng.normal(size=(n, d)) * (10 ** rng.uniform(-2, 2, (n, 1))) ** scale_pow
    return a, b
