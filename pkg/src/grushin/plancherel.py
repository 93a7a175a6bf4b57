"""Uniform lattice sums and weighted Plancherel ratios.

Tail envelope
-------------
All sums here have the form  sum_n a(N_n) H_n(u_n)  with
H_n(u) = prod_i h_{n_i}(u_i)^2  and a(N) = N^{-p} decreasing.  Write
S(mu) = sum_{N_n <= mu} H_n(u_n).  The Weyl envelope S(mu) <= C_W mu^{d1/2}
(C_W from :func:`grushin.kernels.weyl_constant`) and Abel summation give

    sum_{N_n > M} N_n^{-p} H_n(u_n)
        = int_M^inf mu^{-p} dS(mu)
       <= p int_M^inf mu^{-p-1} S(mu) dmu
       <= p C_W M^{d1/2 - p} / (p - d1/2),           p > d1/2.

The envelope is proven for a fixed argument u; with u_n varying along the
sum it is a model, and every sum records the largest observed
S(mu) / mu^{d1/2} so the model can be checked against the data.  The
brute-force comparison (partial sums to a larger cutoff) is available
through :func:`tail_validation`.

For the lattice sum with weight max{1,|x'|}^{2 eps} N^{-d1/2-3 eps} the
exponent gap is p - d1/2 = 3 eps, so the certified tail decays only like
M^{-3 eps}.  A Weyl-law estimate of the same tail (local density
|S^{d1-1}| (d1/2) mu^{d1/2-1} / (2 pi)^{d1} at small arguments) is reported
alongside as ``tail_estimate``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .geometry import Dims, Point, ball_volume_arr
from .kernels import (ContractError, BumpDilated, lattice_arrays, weighted_l2_detail,
                      weyl_constant, _table_for, _sphere_area)
from .oscillator import CapacityError
from .report import Report, schedule_hash

__all__ = [
    "SumResult",
    "lemma34_sum",
    "lemma_uniformity",
    "tail_validation",
    "prop33_check",
    "prop35_check",
    "plancherel_rhs",
]

MAX_TERMS = {1: 1_200_000, 2: 1_500_000, 3: 1_500_000}


@dataclass
class SumResult:
    """Partial sum with a tail bound: the full sum lies in [value, value + tail_bound]."""

    value: float
    tail_bound: float
    cutoff_m: float
    term_count: int
    certified: bool = True
    tail_estimate: float = 0.0
    part1_mass: float = 0.0
    envelope_ratio: float = 0.0
    details: dict = field(default_factory=dict)


def abel_tail(p, d1, m):
    """p C_W M^{d1/2-p} / (p - d1/2): envelope of sum_{N > M} N^{-p} H_n."""
    gap = p - d1 / 2.0
    if gap <= 0:
        return math.inf
    return p * weyl_constant(d1) * m ** (-gap) / gap


def weyl_tail(p, d1, m):
    """Local Weyl law estimate of the same tail at small arguments."""
    gap = p - d1 / 2.0
    dens = _sphere_area(d1) / d1 * (d1 / 2.0) / (2.0 * math.pi) ** d1
    return dens * m ** (-gap) / gap


def _lattice_count_estimate(d1, m):
    # #{N_n <= m} ~ (4/(3 pi))^{d1} Gamma(5/2)^{d1} m^{3 d1/2} / Gamma(3 d1/2 + 1)
    c = 4.0 / (3.0 * math.pi) * math.gamma(2.5)
    return c ** d1 * m ** (1.5 * d1) / math.gamma(1.5 * d1 + 1.0)


def _max_cutoff(d1, max_terms):
    lo, hi = 2.0 * d1, 1e9
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if _lattice_count_estimate(d1, mid) > max_terms:
            hi = mid
        else:
            lo = mid
    return lo


def _lemma_terms(xp, d1, eps, m, table=None):
    """Terms of the lattice sum with N_n <= m, sorted by N."""
    table = _table_for(d1, m, table)
    idx, big_n = lattice_arrays(table, d1, m)
    order = np.argsort(big_n, kind="stable")
    idx, big_n = idx[order], big_n[order]
    scale = 1.0 / np.sqrt(big_n)
    h2 = np.ones(len(big_n))
    for i in range(d1):
        h2 *= table.values(idx[:, i], xp[i] * scale) ** 2
    p = d1 / 2.0 + 3.0 * eps
    weight = max(1.0, float(np.linalg.norm(xp))) ** (2.0 * eps)
    return big_n, h2, weight * big_n ** (-p) * h2, weight


def lemma34_sum(x_prime, d1, eps, tol=1e-6, table=None, relative=True, strict=True,
                max_terms=None, start=64.0):
    """sum_n max{1,|x'|}^{2 eps} N_n^{-d1/2-3 eps} H_n(x' / N_n^{1/2}) with a tail bound.

    The cutoff M grows until the certified tail is below ``tol`` (times the
    value when ``relative``).  If the needed lattice exceeds ``max_terms``,
    a CapacityError is raised, or with ``strict=False`` the sum at the
    largest affordable cutoff is returned with ``certified=False``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if len(xp) != d1:
        raise ValueError("x' must have length d1")
    max_terms = max_terms or MAX_TERMS.get(d1, 1_000_000)
    m_cap = _max_cutoff(d1, max_terms)
    p = d1 / 2.0 + 3.0 * eps
    xnorm = float(np.linalg.norm(xp))
    weight = max(1.0, xnorm) ** (2.0 * eps)
    m = min(start, m_cap)
    while True:
        big_n, h2, terms, _ = _lemma_terms(xp, d1, eps, m, table)
        value = float(np.sum(terms))
        tail = weight * abel_tail(p, d1, m)
        target = tol * value if relative else tol
        if tail <= target:
            certified = True
            break
        # the bound is explicit in M: jump to the cutoff it asks for
        log_need = math.log(m) + (math.log(tail) - math.log(max(target, 1e-300))) / (3.0 * eps)
        need = math.exp(log_need) if log_need < 700.0 else math.inf
        if need > m_cap:
            if m < m_cap * 0.999:
                m = m_cap
                continue
            if strict:
                raise CapacityError(f"certifying tol={tol} needs cutoff M ~ {need:.3g}, "
                                    f"beyond capacity {m_cap:.3g} ({max_terms} terms)")
            certified = False
            break
        m = max(need * 1.01, 2.0 * m) if need > 2.0 * m else need * 1.01
    cums = np.cumsum(h2)
    env_ratio = float(np.max(cums / big_n ** (d1 / 2.0))) if len(h2) else 0.0
    # blocks with N^{3/2} <= |x'| / (2 d1): super-exponentially small terms
    part1 = big_n ** 1.5 <= xnorm / (2.0 * d1)
    part1_mass = float(np.sum(terms[part1]))
    return SumResult(value, tail, float(m), int(len(terms)), certified,
                     weight * weyl_tail(p, d1, m), part1_mass, env_ratio,
                     {"p": p, "weight": weight, "capacity_cutoff": m_cap})


def tail_validation(x_prime, d1, eps, m_small, m_big, table=None):
    """Brute-force check of the tail envelope: value(m_big) - value(m_small) vs the bound."""
    xp = np.atleast_1d(np.asarray(x_prime, dtype=float))
    big_n, _, terms, weight = _lemma_terms(xp, d1, eps, m_big, table)
    increment = float(np.sum(terms[big_n > m_small]))
    p = d1 / 2.0 + 3.0 * eps
    return increment, weight * abel_tail(p, d1, m_small) - weight * abel_tail(p, d1, m_big)


def lemma_uniformity(d1, eps, x_norms=None, tol=1e-6, budget=1e3, table=None,
                     max_terms=None, direction=None):
    """Sums over |x'| on a log grid in [0, 1e3]: max, spread and tail quality."""
    if x_norms is None:
        x_norms = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 11)])
    direction = np.ones(d1) / math.sqrt(d1) if direction is None else np.asarray(direction)
    rep = Report("plancherel", config={"d1": d1, "eps": eps, "tol": tol, "budget": budget,
                                       "x_norms": list(x_norms)})
    vals, tops, rel = [], [], []
    for xn in x_norms:
        res = lemma34_sum(xn * direction, d1, eps, tol, table, strict=False, max_terms=max_terms)
        vals.append(res.value)
        tops.append(res.value + res.tail_bound)
        rel.append(res.tail_bound / res.value if res.value > 0 else math.inf)
        rep.add(f"sum[|x'|={xn:.4g}]", res.value, error_bound=res.tail_bound,
                family="lemma_sum", x_norm=xn, cutoff=res.cutoff_m, certified=res.certified,
                tail_estimate=res.tail_estimate, envelope_ratio=res.envelope_ratio)
        if xn == max(x_norms):
            p1 = res.part1_mass / res.value if res.value > 0 else 0.0
            rep.add("part1_relative_mass", p1, fitted=True)
            rep.check("part1_negligible", p1 <= 1e-12, value=p1)
    mx = max(tops)
    rep.add("max_sum_plus_tail", mx, fitted=True)
    rep.add("max_over_min", mx / min(vals) if min(vals) > 0 else math.inf, fitted=True)
    rep.add("worst_relative_tail", max(rel), fitted=True)
    rep.check("finite_max", math.isfinite(mx))
    rep.check("within_budget", mx <= budget, value=mx)
    rep.check("tails_below_tol", max(rel) <= tol, value=max(rel))
    rep.provenance = {"block_schedule_hash": schedule_hash(d1, eps, list(x_norms), tol)}
    return rep


# --------------------------------------------------------------------------
# weighted Plancherel comparisons
# --------------------------------------------------------------------------

def _theta_nodes(lo, hi, count=32):
    """Gauss-Legendre in u = log theta, returning (theta, weight for d theta / theta)."""
    g, w = np.polynomial.legendre.leggauss(count)
    a, b = math.log(lo), math.log(hi)
    u = 0.5 * (b - a) * g + 0.5 * (a + b)
    return np.exp(u), 0.5 * (b - a) * w


def plancherel_rhs(mult, y_prime, gamma, dims, m=2000.0, table=None, theta_count=32):
    """int |F(theta)|^2 sum_n theta^{Q/2-g} N_n^{-(Q/2-3g)} H_n(theta^{1/2} y' / N_n^{1/2}) dtheta/theta.

    Returns ``(partial, tail_estimate, tail_bound)``; the lattice is cut at
    N_n <= m.
    """
    if mult.support is None:
        raise ContractError("the comparison integral needs a compactly supported multiplier")
    d1 = dims.d1
    q = dims.q
    p = q / 2.0 - 3.0 * gamma
    yp = np.atleast_1d(np.asarray(y_prime, dtype=float))
    lo, hi = mult.support
    lo = max(lo, 1e-12 * hi)
    theta, wt = _theta_nodes(lo, hi, theta_count)
    f2 = np.abs(mult(theta)) ** 2
    table = _table_for(d1, m, table)
    idx, big_n = lattice_arrays(table, d1, m)
    npow = big_n ** (-p)
    partial = 0.0
    for th, w, f in zip(theta, wt, f2):
        if f == 0:
            continue
        arg = math.sqrt(th) / np.sqrt(big_n)
        h2 = np.ones(len(big_n))
        for i in range(d1):
            h2 *= table.values(idx[:, i], yp[i] * arg) ** 2
        partial += w * f * th ** (q / 2.0 - gamma) * float(np.sum(npow * h2))
    mass = float(np.sum(wt * f2 * theta ** (q / 2.0 - gamma)))
    return partial, mass * weyl_tail(p, d1, m), mass * abel_tail(p, d1, m)


def prop33_check(mult, y_prime, gamma, dims, table=None, m=2000.0):
    """LHS = ||(sum|x'|)^gamma K(., y)||^2 against the lattice comparison integral."""
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    yp = np.atleast_1d(np.asarray(y_prime, dtype=float))
    y = Point.of(yp, np.zeros(dims.d2))
    rep = Report("plancherel", config={"gamma": gamma, "y_prime": yp.tolist(),
                                       "dims": [dims.d1, dims.d2], "cutoff": m})
    lhs_res = weighted_l2_detail(mult, y, gamma, dims, table)
    lhs = lhs_res.value ** 2
    partial, est, bound = plancherel_rhs(mult, yp, gamma, dims, m, table)
    rhs = partial + est
    rep.add("lhs", lhs, error_bound=2 * lhs_res.value * lhs_res.truncation_error)
    rep.add("rhs_partial", partial, error_bound=bound)
    rep.add("rhs", rhs, fitted=True)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    rep.add("ratio", ratio, fitted=True)
    rep.add("ratio_upper", lhs / partial if partial > 0 else ratio, fitted=True)
    rep.add("ratio_lower", lhs / (partial + bound) if partial + bound > 0 else ratio, fitted=True)
    rep.check("ratio_finite", math.isfinite(ratio))
    return rep


def _prop35_first_rhs(mult, y_norm, gamma, dims, count=64):
    """int |F|^2 lam^{(d1+d2)/2} min{lam^{d2/4-g}, |y'|^{2g-d2/2}} dlam/lam.

    At y' = 0 the second argument is +inf and the min is the first one.
    """
    lo, hi = mult.support
    lam, w = _theta_nodes(max(lo, 1e-12 * hi), hi, count)
    first = lam ** (dims.d2 / 4.0 - gamma)
    if y_norm > 0:
        first = np.minimum(first, y_norm ** (2.0 * gamma - dims.d2 / 2.0))
    return float(np.sum(w * np.abs(mult(lam)) ** 2 * lam ** ((dims.d1 + dims.d2) / 2.0) * first))


def _l2_norm_of_base(mult_base, count=400):
    lo, hi = mult_base.support
    g, w = np.polynomial.legendre.leggauss(count)
    lam = 0.5 * (hi - lo) * g + 0.5 * (hi + lo)
    return math.sqrt(float(np.sum(0.5 * (hi - lo) * w * np.abs(mult_base(lam)) ** 2)))


def prop35_check(gamma, dims, R_list=(0.5, 1.0, 2.0, 4.0), y_grid=None, table=None,
                 lo=1.0, hi=4.0, stability=0.25, with_prop33=False, m=2000.0):
    """Scale-invariant weighted bounds for F = eta(. / R^2), eta a bump on [lo, hi].

    (a) ||(sum|x'|)^gamma K(., y)||^2 over the first comparison integral;
    (b) V(y, 1/R)^{1/2} ||w_R(., y)^gamma K(., y)||_2 / ||eta||_2.
    Both are maximised over the |y'| grid for each R; the spread of the
    maxima over R is asserted against ``stability``.
    """
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    if not 0 <= gamma < dims.d2 / 4.0:
        raise ValueError("need 0 <= gamma < d2/4")
    if y_grid is None:
        y_grid = [0.0, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0]
    rep = Report("plancherel", config={"gamma": gamma, "R_list": list(R_list),
                                       "y_grid": list(y_grid), "dims": [dims.d1, dims.d2],
                                       "support": [lo, hi]})
    base = BumpDilated(1.0, lo, hi)
    eta_norm = _l2_norm_of_base(base)
    direction = np.ones(dims.d1) / math.sqrt(dims.d1)
    sups = {"a": [], "b": [], "p33": []}
    for R in R_list:
        mult = BumpDilated(R * R, lo, hi)
        if not (mult.support[0] >= R * R * (1 - 1e-12) and mult.support[1] <= 4 * R * R * (1 + 1e-12)):
            raise ContractError("multiplier support must lie in [R^2, 4 R^2]")
        best = {"a": 0.0, "b": 0.0, "p33": 0.0}
        for yn in y_grid:
            yp = yn * direction
            y = Point.of(yp, np.zeros(dims.d2))
            res = weighted_l2_detail(mult, y, gamma, dims, table)
            norm = res.value
            ra = norm ** 2 / _prop35_first_rhs(mult, yn, gamma, dims)
            wfac = min(R, 1.0 / yn) if yn > 0 else R
            vol = float(ball_volume_arr(yn, 1.0 / R, dims))
            rb = math.sqrt(vol) * wfac ** gamma * norm / eta_norm
            rep.add(f"ratio_a[R={R},y={yn}]", ra, fitted=True, family="prop35_a", R=R, y=yn)
            rep.add(f"ratio_b[R={R},y={yn}]", rb, fitted=True, family="prop35_b", R=R, y=yn)
            best["a"] = max(best["a"], ra)
            best["b"] = max(best["b"], rb)
            if with_prop33:
                partial, est, _ = plancherel_rhs(mult, yp, gamma, dims, m, table)
                r33 = norm ** 2 / (partial + est)
                rep.add(f"ratio_33[R={R},y={yn}]", r33, fitted=True, family="prop33", R=R, y=yn)
                best["p33"] = max(best["p33"], r33)
        for k in sups:
            if k == "p33" and not with_prop33:
                continue
            sups[k].append(best[k])
            rep.add(f"sup_{k}[R={R}]", best[k], fitted=True, family=f"sup_{k}", R=R)
    for k, vals in sups.items():
        if not vals:
            continue
        spread = max(vals) / min(vals) - 1.0
        rep.add(f"spread_{k}", spread, fitted=True)
        rep.check(f"finite_{k}", all(math.isfinite(v) for v in vals))
        rep.check(f"R_stable_{k}", spread <= stability, value=spread)
    return rep
