"""Sobolev norms of spectral multipliers and kernel-side threshold experiments.

The L^1 and weighted L^2 norms of kernels are computed from kernel values
on tensor grids in (x', |x''-y''|) around the base point y.  Grids are laid
out in the rescaled units x' ~ 1/R, x'' ~ 1/R^{3/2} dictated by the
dilations, so the cost of a cell does not depend on R.
"""

from dataclasses import dataclass
import math

import numpy as np

from .geometry import Dims, Point, ball_volume_arr, rho_hat, weight_arr
from .kernels import (BochnerRiesz, BumpDilated, ContractError, ImaginaryPower,
                      kernel_grid, smooth_bump, _sphere_area)
from .report import Report

__all__ = [
    "SobolevNorm",
    "sobolev_norm",
    "eta",
    "riesz_l1_profile",
    "cor44_decay",
    "prop41_43_check",
    "imaginary_power_growth",
    "localized_sup_norm",
]

ETA_SUPPORT = (0.5, 2.0)


def eta(lam):
    """Canonical cutoff: the exp(-1/(1-u^2)) bump rescaled to [1/2, 2]."""
    return smooth_bump(lam, *ETA_SUPPORT)


@dataclass
class SobolevNorm:
    order: float
    kind: str
    value: float
    grid: dict


def _sobolev_once(values, step, order, kind, pad):
    n = len(values)
    size = 1 << int(math.ceil(math.log2(pad * n)))
    c = np.fft.fft(values, size)
    omega = 2.0 * math.pi * np.fft.fftfreq(size, d=step)
    mult = (1.0 + omega ** 2) ** (order / 2.0)
    if kind == "l2_based":
        return math.sqrt(step / size * float(np.sum(np.abs(c * mult) ** 2)))
    g = np.fft.ifft(c * mult)
    return float(np.max(np.abs(g)))


def sobolev_norm(func, interval, order, kind="l2_based", points=None, pad=4, rtol=1e-4,
                 max_points=1 << 22):
    """||(I - d^2)^{s/2} F||_2 (l2_based) or its sup (sup_based) by FFT.

    ``func`` is a callable sampled on a uniform grid over ``interval``, or an
    array of samples (then no refinement).  The function must vanish at the
    ends of the interval (relative 1e-12) so periodisation is harmless.  The
    grid is doubled until two resolutions agree to ``rtol``.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if kind not in ("l2_based", "sup_based"):
        raise ValueError("kind must be 'l2_based' or 'sup_based'")
    if pad < 4:
        raise ValueError("padding factor must be at least 4")
    a, b = map(float, interval)
    if callable(func):
        n = points or 1024
        prev = None
        while True:
            x = np.linspace(a, b, n)
            v = np.asarray(func(x))
            _check_support(v)
            val = _sobolev_once(v, (b - a) / (n - 1), order, kind, pad)
            if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
                return SobolevNorm(order, kind, val, {"span": [a, b], "points": n})
            if 2 * n > max_points:
                raise ArithmeticError(f"Sobolev norm did not settle to {rtol} by {n} points")
            prev, n = val, 2 * n
    v = np.asarray(func)
    _check_support(v)
    val = _sobolev_once(v, (b - a) / (len(v) - 1), order, kind, pad)
    return SobolevNorm(order, kind, val, {"span": [a, b], "points": len(v)})


def _check_support(v):
    peak = float(np.max(np.abs(v)))
    if peak > 0 and max(abs(v[0]), abs(v[-1])) > 1e-12 * peak:
        raise ContractError("function does not vanish at the grid ends (support leak)")


def _dilated_norm(mult, R, order, kind):
    """Sobolev norm of (delta_{R^2} F)(lam) = F(R^2 lam)."""
    lo, hi = mult.support
    a, b = lo / R ** 2, hi / R ** 2
    margin = 0.05 * (b - a)
    return sobolev_norm(lambda lam: np.real_if_close(mult(R * R * lam)) if not mult.is_complex
                        else mult(R * R * lam),
                        (max(0.0, a - margin) if a > 0 else a - margin, b + margin),
                        order, kind).value


# --------------------------------------------------------------------------
# kernels on grids around y
# --------------------------------------------------------------------------

def _panel_nodes(a, b, width, order=8):
    n = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n + 1)
    g, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (0.5 * (hi - lo) * g + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * w).ravel()


def _kernel_box(mult, R, y, dims, cut, table=None, resolution=6.0, scaled=True):
    """Kernel K(x, y) on a box containing {rho(x, y) <= rc}, rc = cut / R (or cut).

    Returns x' nodes, z nodes, quadrature weights (including the sphere
    factor for x''), kernel values and rho on the grid.
    """
    if dims.d1 != 1:
        raise NotImplementedError("kernel boxes are implemented for d1 = 1")
    rc = cut / R if scaled else cut
    yp = float(y.xp[0])
    xp, wx = _panel_nodes(yp - rc, yp + rc, 1.0 / (resolution * R) * 2.0 * math.pi / 4)
    zmax = max(rc ** 1.5, rc * math.sqrt(2.0 * abs(yp) + rc))
    zp, wz = _panel_nodes(0.0, zmax, 1.0 / (resolution * R) * 2.0 * math.pi / 4)
    vals, trunc, qerr, det = kernel_grid(mult, [yp], xp[:, None], zp, dims.d1, dims.d2, table=table)
    wz = wz * _sphere_area(dims.d2) * zp ** (dims.d2 - 1)
    X, Z = np.meshgrid(xp, zp, indexing="ij")
    rho = rho_hat(X[..., None], Z[..., None], np.full_like(X[..., None], yp),
                  np.zeros_like(Z[..., None]))
    return xp, zp, wx, wz, vals, rho, {"truncation_error": trunc, "quadrature_error": qerr, **det}


def riesz_l1_profile(kappa, r_list, y, dims, table=None, cut=16.0, fit_fractions=(0.25, 0.5, 0.75),
                     scaled=True):
    """L^1 norms of Bochner-Riesz kernels (1 - L/R^2)_+^kappa at y over R.

    The box integral covers rho(x, y) <= cut / R, or rho(x, y) <= cut when
    ``scaled`` is false (a fixed physical radius, useful for exhibiting the
    growth of non-integrable kernels).  The remainder is modelled
    by C (1 + rho R)^{-alpha} with alpha just under kappa - D/2 + 1/2, C
    fitted on annuli inside the box.  For alpha <= 0 no tail certificate
    exists and the box value is flagged as a lower estimate.
    """
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    D = dims.d1 + dims.d2
    alpha = kappa - D / 2.0 + 0.5 - 0.05
    rep = Report("multipliers", config={"kappa": kappa, "R": list(r_list), "cut": cut,
                                        "y": [list(y.x_prime), list(y.x_second)],
                                        "tail_alpha": alpha, "scaled_cut": scaled})
    profile = []
    for R in r_list:
        mult = BochnerRiesz(kappa, R * R)
        xp, zp, wx, wz, vals, rho, det = _kernel_box(mult, R, y, dims, cut, table, scaled=scaled)
        absk = np.abs(vals)
        w2 = wx[:, None] * wz[None, :]
        rc = cut / R if scaled else cut
        inside = rho <= rc
        box = float(np.sum(w2 * absk * inside))
        if alpha > 0:
            rs = np.array(fit_fractions) * rc
            ann = np.array([np.sum(w2 * absk * ((rho > r) & inside)) for r in rs])
            basis = (1.0 + rs * R) ** (-alpha) - (1.0 + rc * R) ** (-alpha)
            c_fit = float(np.dot(basis, ann) / np.dot(basis, basis))
            tail = c_fit * (1.0 + rc * R) ** (-alpha)
            lower = False
        else:
            c_fit, tail, lower = math.nan, math.inf, True
        total = box + (tail if math.isfinite(tail) else 0.0)
        profile.append(total)
        rep.add(f"l1[R={R}]", total, error_bound=tail if math.isfinite(tail) else math.inf,
                family="riesz_l1", R=R, box=box, lower_estimate=lower)
    ratio = max(profile) / min(profile)
    rep.add("max_over_min", ratio, fitted=True)
    rep.add("growth_last_over_first", profile[-1] / profile[0], fitted=True)
    rep.check("finite", all(math.isfinite(v) for v in profile))
    return rep


def _tail_integrals(mult, R, y, dims, r_list, table, cut):
    xp, zp, wx, wz, vals, rho, det = _kernel_box(mult, R, y, dims, cut, table)
    w2 = wx[:, None] * wz[None, :] * np.abs(vals)
    return np.array([float(np.sum(w2 * (rho > r))) for r in r_list]), det


def cor44_decay(mult, R, r_list, alpha, y, dims, table=None, cut=12.0):
    """int_{rho(x,y) > r} |K_F(x, y)| dx against (1 + rR)^{-alpha} ||delta_{R^2} F||_{W_2^beta}."""
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    lo, hi = mult.support
    if lo < R * R * (1 - 1e-12) or hi > 4 * R * R * (1 + 1e-12):
        raise ContractError("multiplier support must lie in [R^2, 4 R^2]")
    D = dims.d1 + dims.d2
    beta = alpha + D / 2.0 + 0.1
    rep = Report("multipliers", config={"R": R, "r_list": list(r_list), "alpha": alpha,
                                        "beta": beta, "cut": cut})
    tails, det = _tail_integrals(mult, R, y, dims, r_list, table, cut)
    sob = _dilated_norm(mult, R, beta, "l2_based")
    for r, t in zip(r_list, tails):
        rep.add(f"tail[r={r}]", t, error_bound=det["truncation_error"], family="decay", r=r,
                normalised=t * (1.0 + r * R) ** alpha / sob if sob > 0 else 0.0)
    pos = [(r, t) for r, t in zip(r_list, tails) if r > 0 and t > 0]
    if len(pos) >= 2:
        lr = np.log([1.0 + r * R for r, _ in pos])
        lt = np.log([t for _, t in pos])
        slope = -float(np.polyfit(lr, lt, 1)[0])
    else:
        slope = math.nan
    rep.add("sobolev_beta", sob, fitted=True)
    rep.add("fitted_exponent", slope, fitted=True)
    rep.check("exponent_at_least_alpha", slope >= alpha if math.isfinite(slope) else
              all(t == 0 for t in tails), value=slope)
    rep.check("total_finite", math.isfinite(float(tails[0])) if len(tails) else True)
    return rep


def prop41_43_check(mult, R, alpha, beta, gamma, y, dims, table=None, cut=12.0,
                    which="4.3"):
    """V(y,1/R)^{1/2} ||(1 + R rho)^alpha (1 + w_R)^gamma K(., y)||_2 over a Sobolev norm of delta_{R^2} F."""
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    if which == "4.1" and not beta > alpha:
        raise ContractError("hypothesis violated: beta > alpha")
    if not 0 <= gamma < dims.d2 / 4.0:
        raise ContractError("hypothesis violated: 0 <= gamma < d2/4")
    lo, hi = mult.support
    if which == "4.3" and (lo < R * R * (1 - 1e-12) or hi > 4 * R * R * (1 + 1e-12)):
        raise ContractError("multiplier support must lie in [R^2, 4 R^2]")
    xp, zp, wx, wz, vals, rho, det = _kernel_box(mult, R, y, dims, cut, table)
    ynorm = float(np.linalg.norm(y.xp))
    w = weight_arr(R, np.abs(xp), ynorm)[:, None]
    weighted = (1.0 + R * rho) ** alpha * (1.0 + w) ** gamma * np.abs(vals)
    l2 = math.sqrt(float(np.sum(wx[:, None] * wz[None, :] * weighted ** 2)))
    vol = float(ball_volume_arr(ynorm, 1.0 / R, dims))
    kind = "sup_based" if which == "4.1" else "l2_based"
    sob = _dilated_norm(mult, R, beta, kind)
    ratio = math.sqrt(vol) * l2 / sob if sob > 0 else 0.0
    rep = Report("multipliers", config={"R": R, "alpha": alpha, "beta": beta, "gamma": gamma,
                                        "which": which, "cut": cut})
    rep.add("weighted_l2", l2, error_bound=det["truncation_error"])
    rep.add("sobolev", sob, fitted=True)
    rep.add("ratio", ratio, fitted=True, family="prop4x", R=R)
    rep.check("ratio_finite", math.isfinite(ratio))
    return rep


# --------------------------------------------------------------------------
# multiplier-side quantities
# --------------------------------------------------------------------------

def imaginary_power_growth(s, t_list, base=None, rel_tol=0.05):
    """Slope of log ||eta H_t||_{W_2^s} against log t, H_t(lam) = lam^{it}."""
    t_list = list(t_list)
    if len(t_list) < 2 or max(t_list) / min(t_list) < 16:
        raise ValueError("t_list must span at least a factor 16")
    base = base or eta
    lo, hi = ETA_SUPPORT
    span = (lo - 0.05, hi + 0.05)
    rep = Report("multipliers", config={"s": s, "t_list": t_list, "rel_tol": rel_tol})
    norms = []
    for t in t_list:
        val = sobolev_norm(lambda lam, t=t: base(lam) * np.exp(1j * t * np.log(np.maximum(lam, 1e-300))),
                           span, s).value
        norms.append(val)
        rep.add(f"norm[t={t}]", val, fitted=True, family="imag_power", t=t)
    coef, res, *_ = np.polyfit(np.log(t_list), np.log(norms), 1, full=True)
    slope = float(coef[0])
    rep.add("slope", slope, fitted=True)
    rep.add("residual", float(res[0]) if len(res) else 0.0, fitted=True)
    rep.check("slope_near_s", abs(slope - s) <= rel_tol * s, value=slope)
    return rep


def localized_sup_norm(mult, s, per_octave=4):
    """sup_t ||eta delta_t F||_{W_2^s} over a dyadic t-grid covering the support.

    Returns ``(sup, sup on the doubled grid)``.
    """
    lo, hi = mult.support
    lo = max(lo, 1e-12 * hi)
    lo_eta, hi_eta = ETA_SUPPORT
    t_lo, t_hi = lo / hi_eta, hi / lo_eta

    def grid_sup(m):
        k = np.arange(math.floor(m * math.log2(t_lo)), math.ceil(m * math.log2(t_hi)) + 1)
        best = 0.0
        for t in 2.0 ** (k / m):
            f = lambda lam, t=t: eta(lam) * mult(t * lam)
            best = max(best, sobolev_norm(f, (lo_eta - 0.05, hi_eta + 0.05), s).value)
        return best

    return grid_sup(per_octave), grid_sup(2 * per_octave)
