"""Airy function Ai, its derivative, their negative zeros, and Bessel J0.

Everything here is evaluated from series and asymptotic expansions; no
special-function library is called.  Two entry styles are provided:

* scalar functions (``airy_ai``, ``airy_ai_deriv``) that pick between an
  extended-precision Maclaurin series and the large-argument asymptotic
  expansions at ``|u| = AIRY_CROSSOVER``;
* vectorised ``airy_ai_array`` / ``airy_pair_array`` for bulk evaluation,
  which replace the Maclaurin branch by local Taylor continuation of the
  Airy equation ``y'' = u y`` from a grid of centres whose values come from
  the extended-precision series.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import math

import mpmath
import numpy as np

__all__ = [
    "AiryMethod",
    "AiryValue",
    "AIRY_CROSSOVER",
    "airy_value",
    "airy_ai",
    "airy_ai_deriv",
    "airy_ai_array",
    "airy_pair_array",
    "airy_zero",
    "airy_zeros",
    "bessel_j0",
]

AIRY_CROSSOVER = 8.0
_BESSEL_CROSSOVER = 14.0
_TAYLOR_SPACING = 0.25
_TAYLOR_TERMS = 28


class AiryMethod(str, Enum):
    MACLAURIN = "maclaurin_series"
    ASYMPTOTIC = "asymptotic_expansion"
    ODE = "ode_continuation"


@dataclass(frozen=True)
class AiryValue:
    argument: float
    value: float
    method_tag: AiryMethod


def _check_finite(u):
    if not math.isfinite(u):
        raise ValueError(f"Airy/Bessel argument must be finite, got {u!r}")


# --------------------------------------------------------------------------
# Maclaurin series in extended precision
# --------------------------------------------------------------------------

def _maclaurin_mp(x):
    """(Ai(x), Ai'(x)) as mpmath numbers, summed at adaptive precision.

    Terms grow like exp((2/3)|x|^{3/2}) before the series settles, so the
    working precision is raised by that many digits.
    """
    extra = int((2.0 / 3.0) * abs(float(x)) ** 1.5 / math.log(10)) + 25
    with mpmath.workdps(extra):
        x = mpmath.mpf(x)
        c1 = 1 / (mpmath.cbrt(9) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.cbrt(3) * mpmath.gamma(mpmath.mpf(1) / 3))
        x3 = x ** 3
        f = t = mpmath.mpf(1)
        g = s = x
        fp = u = x * x / 2
        gp = v = mpmath.mpf(1)
        eps = mpmath.mpf(10) ** (-extra + 2)
        k = 1
        while True:
            t = t * x3 / ((3 * k - 1) * (3 * k))
            s = s * x3 / ((3 * k) * (3 * k + 1))
            if k >= 2:
                u = u * x3 / ((3 * k - 1) * (3 * k - 3))
                fp += u
            v = v * x3 / ((3 * k) * (3 * k - 2))
            f += t
            g += s
            gp += v
            if k > 3 and max(abs(t), abs(s), abs(u), abs(v)) < eps:
                break
            k += 1
        return c1 * f - c2 * g, c1 * fp - c2 * gp


def _ai_maclaurin(x):
    return float(_maclaurin_mp(x)[0])


def _aip_maclaurin(x):
    return float(_maclaurin_mp(x)[1])


# --------------------------------------------------------------------------
# Asymptotic expansions (large |x|)
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _asym_coeffs(n=60):
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)]
    return np.array(u), np.array(v)


def _fixed_series(coeffs, w):
    """Horner sum of ``Σ c_k w^k`` truncated where ``|c_k| max(w)^k < 1e-17``.

    The term count comes from the largest ``w`` present, so arrays spanning
    many scales are split into bins first.
    """
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    edges = (np.inf, 1.0 / 15.0, 1.0 / 40.0, 1.0 / 200.0, 0.0)
    mags = np.abs(coeffs)
    for hi, lo in zip(edges[:-1], edges[1:]):
        sel = (w <= hi) & (w > lo) if lo > 0 else (w <= hi)
        if not sel.any():
            continue
        ws = w[sel]
        wmax = float(ws.max())
        size = mags * wmax ** np.arange(len(coeffs))
        # stop at the first negligible term, never past the smallest one
        small = np.nonzero(size < 1e-17)[0]
        k = int(small[0]) if len(small) else int(np.argmin(size)) + 1
        acc = np.full_like(ws, coeffs[k - 1])
        for c in coeffs[k - 2::-1] if k >= 2 else ():
            acc = acc * ws + c
        out[sel] = acc
    return out


def _optimal_series(coeffs, zeta_inv, signs):
    """Sum ``Σ signs_k c_k zeta_inv^k`` up to the smallest term, elementwise."""
    zeta_inv = np.asarray(zeta_inv, dtype=float)
    total = np.zeros_like(zeta_inv)
    last = np.full_like(zeta_inv, np.inf)
    live = np.ones(zeta_inv.shape, dtype=bool)
    power = np.ones_like(zeta_inv)
    for k, c in enumerate(coeffs):
        term = c * power
        mag = np.abs(term)
        live &= mag < last
        total = np.where(live, total + signs[k] * term, total)
        last = np.where(live, mag, last)
        power = power * zeta_inv
        if not (live & (mag > 1e-17 * np.abs(total))).any():
            break
    return total


def _asymptotic_pair(x, deriv=True):
    """(Ai, Ai') from the large-|x| expansions; valid for |x| >= ~5.

    With ``deriv=False`` the Ai' entries are left unset.
    """
    x = np.asarray(x, dtype=float)
    u, v = _asym_coeffs()
    ai = np.empty_like(x)
    aip = np.empty_like(x)

    pos = x > 0
    if pos.any():
        xp = x[pos]
        zeta = 2.0 / 3.0 * xp ** 1.5
        alt = np.array([(-1) ** k for k in range(len(u))], dtype=float)
        su = _fixed_series(alt * u, 1.0 / zeta)
        pref = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
        ai[pos] = pref * xp ** -0.25 * su
        if deriv:
            sv = _fixed_series(alt * v, 1.0 / zeta)
            aip[pos] = -pref * xp ** 0.25 * sv

    neg = ~pos
    if neg.any():
        xn = -x[neg]
        zeta = 2.0 / 3.0 * xn ** 1.5
        zi2 = zeta ** -2.0
        alt = np.array([(-1) ** k for k in range(len(u) // 2)], dtype=float)
        ue, uo = u[0::2], u[1::2]
        ve, vo = v[0::2], v[1::2]
        pu = _fixed_series(alt * ue, zi2)
        qu = _fixed_series(alt * uo, zi2) / zeta
        phase = zeta - math.pi / 4.0
        c, s = np.cos(phase), np.sin(phase)
        q = xn ** -0.25 / math.sqrt(math.pi)
        ai[neg] = q * (c * pu + s * qu)
        if deriv:
            pv = _fixed_series(alt * ve, zi2)
            qv = _fixed_series(alt * vo, zi2) / zeta
            aip[neg] = xn ** 0.5 * q * (s * pv - c * qv)
    return ai, aip


def _ai_asymptotic(x):
    return float(_asymptotic_pair(np.array([x]))[0][0])


def _aip_asymptotic(x):
    return float(_asymptotic_pair(np.array([x]))[1][0])


# --------------------------------------------------------------------------
# Public scalar interface
# --------------------------------------------------------------------------

def airy_value(u):
    """Ai(u) with the branch that produced it."""
    u = float(u)
    _check_finite(u)
    if abs(u) <= AIRY_CROSSOVER:
        return AiryValue(u, _ai_maclaurin(u), AiryMethod.MACLAURIN)
    return AiryValue(u, _ai_asymptotic(u), AiryMethod.ASYMPTOTIC)


def airy_ai(u):
    """Airy function Ai(u) for real finite ``u``."""
    return airy_value(u).value


def airy_ai_deriv(u):
    """Derivative Ai'(u) for real finite ``u``."""
    u = float(u)
    _check_finite(u)
    if abs(u) <= AIRY_CROSSOVER:
        return _aip_maclaurin(u)
    return _aip_asymptotic(u)


# --------------------------------------------------------------------------
# Vectorised evaluation
# --------------------------------------------------------------------------

@lru_cache(maxsize=1)
def _taylor_table():
    """Taylor coefficients of Ai about centres spaced ``_TAYLOR_SPACING`` apart."""
    half = AIRY_CROSSOVER + _TAYLOR_SPACING
    centres = np.arange(-half, half + 1e-12, _TAYLOR_SPACING)
    coeffs = np.zeros((len(centres), _TAYLOR_TERMS))
    for i, c in enumerate(centres):
        a0, a1 = _maclaurin_mp(c)
        a = [float(a0), float(a1)]
        for k in range(_TAYLOR_TERMS - 2):
            prev = a[k - 1] if k >= 1 else 0.0
            a.append((c * a[k] + prev) / ((k + 2) * (k + 1)))
        coeffs[i] = a
    return centres, coeffs


def _taylor_pair(x, deriv=True):
    centres, coeffs = _taylor_table()
    cols = _taylor_columns()
    idx = np.clip(np.rint((x - centres[0]) / _TAYLOR_SPACING).astype(int), 0, len(centres) - 1)
    h = x - centres[idx]
    val = np.zeros_like(x)
    der = np.zeros_like(x) if deriv else None
    for k in range(_TAYLOR_TERMS - 1, 0, -1):
        ck = cols[k][idx]
        val = val * h + ck
        if deriv:
            der = der * h + k * ck
    val = val * h + cols[0][idx]
    return val, der


@lru_cache(maxsize=None)
def _taylor_columns():
    return np.ascontiguousarray(_taylor_table()[1].T)


def airy_pair_array(x, deriv=True):
    """Vectorised (Ai(x), Ai'(x)) for an array of finite arguments.

    With ``deriv=False`` the second entry is None inside the Taylor band and
    the call is roughly twice as fast.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("Airy arguments must be finite")
    flat = x.ravel()
    ai = np.empty_like(flat)
    aip = np.empty_like(flat)
    band = np.abs(flat) <= AIRY_CROSSOVER
    if band.any():
        v, d = _taylor_pair(flat[band], deriv)
        ai[band] = v
        if deriv:
            aip[band] = d
    far = ~band
    if far.any():
        # Ai underflows to exactly 0 well before this
        huge = flat > 120.0
        mid = far & ~huge
        if mid.any():
            a_mid, d_mid = _asymptotic_pair(flat[mid], deriv)
            ai[mid] = a_mid
            if deriv:
                aip[mid] = d_mid
        ai[huge] = 0.0
        aip[huge] = 0.0
    return ai.reshape(x.shape), aip.reshape(x.shape)


def airy_ai_array(x):
    """Vectorised Ai(x)."""
    return airy_pair_array(x, deriv=False)[0]


# --------------------------------------------------------------------------
# Zeros
# --------------------------------------------------------------------------

def _zero_seed(k, kind):
    k = np.asarray(k, dtype=float)
    if kind == "of_ai":
        t = 3.0 * math.pi * (4.0 * k - 1.0) / 8.0
        poly = 1 + 5 / 48 * t ** -2 - 5 / 36 * t ** -4 + 77125 / 82944 * t ** -6
    else:
        t = 3.0 * math.pi * (4.0 * k - 3.0) / 8.0
        poly = 1 - 7 / 48 * t ** -2 + 35 / 288 * t ** -4 - 181223 / 207360 * t ** -6
    return -(t ** (2.0 / 3.0)) * poly


def airy_zeros(count, kind="of_ai"):
    """The first ``count`` negative zeros a_k (or a'_k), k = 1..count.

    Asymptotic seeds polished by Newton's method on the vectorised
    evaluator; Ai' zeros use Ai'' = x Ai.
    """
    if kind not in ("of_ai", "of_ai_deriv"):
        raise ValueError(f"kind must be 'of_ai' or 'of_ai_deriv', got {kind!r}")
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    k = np.arange(1, count + 1)
    z = _zero_seed(k, kind)
    if kind == "of_ai_deriv":
        # first seed is poor; start from the tabulated neighbourhood
        z[0] = -1.0188
    for _ in range(30):
        ai, aip = airy_pair_array(z)
        if kind == "of_ai":
            step = ai / aip
        else:
            step = aip / (z * ai)
        z = z - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, float(np.max(np.abs(z)))):
            break
    return z


def airy_zero(k, kind="of_ai"):
    """k-th negative zero of Ai (``kind='of_ai'``) or Ai' (``'of_ai_deriv'``)."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ValueError(f"zero index must be a positive integer, got {k!r}")
    return float(airy_zeros(int(k), kind)[-1])


# --------------------------------------------------------------------------
# Bessel J0
# --------------------------------------------------------------------------

@lru_cache(maxsize=1)
def _bessel_asym_coeffs(n=40):
    a = [1.0]
    for k in range(1, n):
        a.append(a[-1] * (2 * k - 1) ** 2 / (k * 8.0))
    return np.array(a)


def bessel_j0(u):
    """Bessel function J0, scalar or array.

    Power series below ``|u| = 14``, Hankel asymptotic expansion above.
    """
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Bessel argument must be finite")
    x = np.abs(arr).ravel()
    out = np.empty_like(x)
    small = x <= _BESSEL_CROSSOVER
    if small.any():
        xs = x[small]
        q = -(xs / 2.0) ** 2
        term = np.ones_like(xs)
        total = np.ones_like(xs)
        for k in range(1, 80):
            term = term * q / (k * k)
            total += term
        out[small] = total
    big = ~small
    if big.any():
        xb = x[big]
        a = _bessel_asym_coeffs()
        alt = np.array([(-1) ** k for k in range(len(a) // 2)], dtype=float)
        inv2 = xb ** -2.0
        p = _optimal_series(a[0::2], inv2, alt)
        qq = _optimal_series(a[1::2], inv2, alt) / xb
        ph = xb - math.pi / 4.0
        out[big] = np.sqrt(2.0 / (math.pi * xb)) * (p * np.cos(ph) + qq * np.sin(ph))
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(u) == 0 else out
