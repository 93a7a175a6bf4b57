"""Spectral decomposition of the Airy oscillator A = -d^2/dx^2 + |x| on L^2(R).

Eigenfunctions are reflected (even) or antireflected (odd) Airy functions
``h_n(u) = c_n s(u) Ai(|u| - lambda_n)``.  Even modes need Ai'(-lambda) = 0,
odd modes Ai(-lambda) = 0; the two families interlace, so ordering by
eigenvalue gives parity(n) = even iff n is odd.

Normalisation follows from ``int_z^inf Ai(t)^2 dt = Ai'(z)^2 - z Ai(z)^2``:
``c_n = 1 / sqrt(2 lambda_n Ai(-lambda_n)^2)`` (even) and
``c_n = 1 / sqrt(2 Ai'(-lambda_n)^2)`` (odd).
"""

from dataclasses import dataclass
from functools import lru_cache
import math
import os

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .report import Report
from .special_fn import airy_pair_array, airy_zeros

__all__ = [
    "EigenEntry",
    "EigenTable",
    "build_eigen_table",
    "cached_table",
    "eigenfunction",
    "eigenfunction_values",
    "fd_oracle_table",
    "gram_matrix",
    "verify_spectral_facts",
    "verify_normalization",
    "save_table",
    "load_table",
    "CapacityError",
]

EVEN, ODD = "even", "odd"
FD_MAX_DIM = 4_000_000
CACHE_VERSION = 1
FORBIDDEN_CUT = 25.0


class CapacityError(RuntimeError):
    """A requested computation exceeds a configured resource limit."""


@dataclass(frozen=True)
class EigenEntry:
    index_n: int
    lam: float
    parity: str
    airy_zero: float
    norm_const: float


@dataclass(frozen=True, eq=False)
class EigenTable:
    """Eigenvalues ``lam`` (ascending) with parity flags and normalisations.

    Arrays are 0-based; ``entries`` exposes the 1-based :class:`EigenEntry`
    view.  ``odd`` is a boolean array.
    """

    lam: np.ndarray
    odd: np.ndarray
    zeros: np.ndarray
    norm: np.ndarray
    method: str = "airy"
    truncation: dict | None = None

    def __len__(self):
        return len(self.lam)

    def __getitem__(self, i):
        return EigenEntry(i + 1, float(self.lam[i]), ODD if self.odd[i] else EVEN,
                          float(self.zeros[i]), float(self.norm[i]))

    @property
    def entries(self):
        return [self[i] for i in range(len(self))]

    def head(self, count):
        return EigenTable(self.lam[:count], self.odd[:count], self.zeros[:count],
                          self.norm[:count], self.method, self.truncation)

    def count_below(self, m):
        """Number of eigenvalues <= m."""
        return int(np.searchsorted(self.lam, m, side="right"))

    def reach(self):
        return float(self.lam[-1]) if len(self.lam) else 0.0

    def values(self, idx, u):
        """h_{idx+1}(u), broadcasting ``idx`` (0-based) against ``u``.

        Arguments more than FORBIDDEN_CUT past the turning point return 0
        (there Ai < 1e-37).
        """
        idx, u = np.broadcast_arrays(np.asarray(idx), np.asarray(u, dtype=float))
        arg = np.abs(u) - self.lam[idx]
        live = arg < FORBIDDEN_CUT
        out = np.zeros(arg.shape)
        if live.all():
            out = airy_pair_array(arg, deriv=False)[0]
        elif live.any():
            out[live] = airy_pair_array(arg[live], deriv=False)[0]
        sign = np.where(self.odd[idx], np.sign(u), 1.0)
        return self.norm[idx] * sign * out


def build_eigen_table(count):
    """First ``count`` eigenpairs of A from the Airy zeros."""
    if isinstance(count, bool) or int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    count = int(count)
    n_even = (count + 1) // 2
    n_odd = count // 2
    lam = np.empty(count)
    zeros = np.empty(count)
    odd = np.zeros(count, dtype=bool)
    ze = airy_zeros(n_even, "of_ai_deriv")
    zeros[0::2] = ze
    if n_odd:
        zo = airy_zeros(n_odd, "of_ai")
        zeros[1::2] = zo
        odd[1::2] = True
    lam[:] = -zeros
    ai, aip = airy_pair_array(zeros)
    norm = np.where(odd, 1.0 / (math.sqrt(2.0) * np.abs(aip)),
                    1.0 / np.sqrt(2.0 * lam * ai ** 2))
    if np.any(np.diff(lam) <= 0):
        raise ArithmeticError("Airy zero families failed to interlace")
    return EigenTable(lam, odd, zeros, norm, "airy", None)


@lru_cache(maxsize=4)
def _cached(count):
    return build_eigen_table(count)


def cached_table(count):
    """Shared table with at least ``count`` entries (grown in powers of two)."""
    size = 1 << max(6, int(math.ceil(math.log2(max(count, 1)))))
    return _cached(size).head(count) if size != count else _cached(size)


def table_for_reach(m):
    """Shared table covering every eigenvalue <= m (plus one beyond)."""
    # lambda_n ~ (3 pi n / 4)^{2/3}
    need = int((4.0 / (3.0 * math.pi)) * max(m, 1.0) ** 1.5 * 1.05) + 16
    t = cached_table(need)
    while t.reach() <= m:
        need *= 2
        t = cached_table(need)
    return t


def eigenfunction(entry, u):
    """h_n(u) for one :class:`EigenEntry` (scalar or array ``u``)."""
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise ValueError("eigenfunction argument must be finite")
    ai, _ = airy_pair_array(np.abs(u_arr) - entry.lam)
    sign = np.sign(u_arr) if entry.parity == ODD else 1.0
    out = entry.norm_const * sign * ai
    return float(out) if np.ndim(u) == 0 else out


def eigenfunction_values(table, idx, u):
    return table.values(idx, u)


def _fd_eigs(count, half_width, step):
    n = int(round(2.0 * half_width / step)) - 1
    if n > FD_MAX_DIM:
        raise CapacityError(f"finite-difference dimension {n} exceeds cap {FD_MAX_DIM}")
    if count > n:
        raise CapacityError(f"requested {count} eigenvalues from a {n}-point grid")
    x = -half_width + step * np.arange(1, n + 1)
    diag = 2.0 / step ** 2 + np.abs(x)
    off = np.full(n - 1, -1.0 / step ** 2)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1),
                            eigvals_only=True)


def fd_oracle_table(count, half_width, step, extrapolate=False):
    """Eigenvalues of the central-difference discretisation on [-W, W].

    Dirichlet ends.  With ``extrapolate=True`` the step-``h`` and step-``2h``
    spectra are combined by Richardson extrapolation ``(4 l_h - l_2h) / 3``,
    cancelling the O(h^2) discretisation error.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if half_width <= 0 or step <= 0 or step >= half_width:
        raise ValueError("need 0 < step < half_width")
    lam = _fd_eigs(count, half_width, step)
    if extrapolate:
        lam = (4.0 * lam - _fd_eigs(count, half_width, 2.0 * step)) / 3.0
    lam = np.sort(lam)
    odd = np.arange(count) % 2 == 1
    nan = np.full(count, np.nan)
    return EigenTable(lam, odd, -lam, nan, "matrix",
                      {"half_width": float(half_width), "step": float(step),
                       "extrapolated": bool(extrapolate)})


def gram_matrix(table, count, weight_power=0.0, half_width=None, panel=0.25, order=24):
    """Matrix of int |u|^{2 gamma} h_m h_n du over [-W, W].

    The default W = lambda_count + 40 leaves out Airy tails below 1e-40.
    Composite Gauss-Legendre with panels aligned at u = 0, accumulated in
    blocks of nodes to bound memory.
    """
    if half_width is None:
        half_width = table.lam[count - 1] + 40.0
    npan = int(math.ceil(half_width / panel))
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, half_width, npan + 1)
    a, b = edges[:-1, None], edges[1:, None]
    pos = (0.5 * (b - a) * g + 0.5 * (a + b)).ravel()
    wts = (0.5 * (b - a) * w).ravel() * pos ** (2.0 * weight_power)
    idx = np.arange(count)[:, None]
    out = np.zeros((count, count))
    block = max(64, 4_000_000 // count)
    for s0 in range(0, len(pos), block):
        u = pos[s0:s0 + block]
        H = table.values(idx, u[None, :])
        # u and -u together: odd modes flip sign, so only equal parities survive
        par = np.where(table.odd[:count], -1.0, 1.0)
        out += (H * wts[s0:s0 + block]) @ H.T * (1.0 + np.outer(par, par))
    return out


def verify_spectral_facts(table, grid_points=2000):
    """Gap inequalities, growth ratios and decay-envelope constants.

    For each n with lambda_{n+1} available: the two-sided gap bound
    (pi/2) lambda_{n+1}^{-1/2} <= lambda_{n+1} - lambda_n <= (pi/2) lambda_n^{-1/2};
    the ratio lambda_n / (3 pi n / 4)^{2/3} with its running min/max; and
    the smallest C with |h_n(u)| <= C lambda_n^{-1/4} (1 + ||u| - lambda_n|)^{-1/4}
    on u in [0, 3 lambda_n].
    """
    if len(table) < 3:
        raise ValueError("verify_spectral_facts needs at least 3 entries")
    rep = Report("eigen", config={"count": len(table), "method": table.method})
    lam = np.asarray(table.lam)
    n = np.arange(1, len(lam) + 1)
    gaps = np.diff(lam)
    lower = 0.5 * math.pi * lam[1:] ** -0.5
    upper = 0.5 * math.pi * lam[:-1] ** -0.5
    ok = (lower <= gaps) & (gaps <= upper)
    for k in range(len(gaps)):
        rep.check(f"gap[{k + 1}]", ok[k], value=float(gaps[k]), family="gap", n=k + 1)
    rep.check("gap_all", ok.all())
    ratio = lam / (0.75 * math.pi * n) ** (2.0 / 3.0)
    for k in range(len(lam)):
        rep.add(f"growth_ratio[{k + 1}]", ratio[k], fitted=True, family="growth_ratio", n=k + 1)
    rep.add("C1", float(ratio.min()), fitted=True)
    rep.add("C2", float(ratio.max()), fitted=True)
    rep.check("C2>=C1>0", ratio.max() >= ratio.min() > 0)

    if not np.all(np.isnan(table.norm)):
        s = np.linspace(0.0, 3.0, grid_points)
        consts = np.empty(len(lam))
        for k in range(len(lam)):
            u = s * lam[k]
            h = np.abs(table.values(k, u))
            env = lam[k] ** -0.25 * (1.0 + np.abs(u - lam[k])) ** -0.25
            consts[k] = np.max(h / env)
        rep.add("envelope_C", float(consts.max()), fitted=True)
        rep.check("envelope_C_finite", np.isfinite(consts).all())
        # super-exponential decay constant beyond 2 lambda_n, for the first mode
        u = np.linspace(2.0 * lam[0], 2.0 * lam[0] + 20.0, 400)
        h = np.abs(table.values(0, u))
        hpos = h[h > 0]
        c = float(np.min(-np.log(hpos) / u[h > 0] ** 1.5))
        rep.add("decay_c", c, fitted=True)
        rep.check("decay_c>0", c > 0)
    return rep


# --------------------------------------------------------------------------
# cache file: text, one header line then one record per entry
#   # grushin-eigen-table version=1 count=N method=airy half_width=.. step=..
#   index lambda parity airy_zero norm_const     (floats as repr, round-trip exact)
# --------------------------------------------------------------------------

def verify_normalization(table, count=50, tol=1e-6):
    """Boundary identities and orthonormality of the first ``count`` modes.

    Even modes satisfy 2 lambda_n h_n(0)^2 = 1 and odd modes h_n'(0+)^2 = 1/2;
    these are recomputed from fresh Airy evaluations.  The Gram matrix is
    assembled by quadrature.
    """
    count = min(count, len(table))
    rep = Report("eigen", config={"count": count, "tol": tol})
    ai, aip = airy_pair_array(-np.asarray(table.lam[:count]))
    c = np.asarray(table.norm[:count])
    odd = np.asarray(table.odd[:count])
    ident = np.where(odd, (c * aip) ** 2 * 2.0, 2.0 * table.lam[:count] * (c * ai) ** 2)
    dev = np.abs(ident - 1.0)
    for k in range(count):
        rep.add(f"boundary_identity[{k + 1}]", float(ident[k]), error_bound=float(dev[k]),
                family="boundary_identity", n=k + 1)
    rep.check("boundary_identities", dev.max() <= tol, value=float(dev.max()))
    gram = gram_matrix(table, count)
    gdev = float(np.max(np.abs(gram - np.eye(count))))
    rep.check("gram_identity", gdev <= tol, value=gdev)
    return rep


def cache_key(count, method="airy", truncation=None):
    t = truncation or {}
    hw, st = t.get("half_width", "na"), t.get("step", "na")
    return f"eigen-v{CACHE_VERSION}-{method}-{count}-{hw}-{st}"


def save_table(table, path):
    from .report import atomic_write
    t = table.truncation or {}
    lines = [f"# grushin-eigen-table version={CACHE_VERSION} count={len(table)} "
             f"method={table.method} half_width={t.get('half_width', 'na')} "
             f"step={t.get('step', 'na')}"]
    for i in range(len(table)):
        lines.append(f"{i + 1} {float(table.lam[i])!r} {'odd' if table.odd[i] else 'even'} "
                     f"{float(table.zeros[i])!r} {float(table.norm[i])!r}")
    atomic_write(path, "\n".join(lines) + "\n")


def load_table(path):
    with open(path) as fh:
        header = fh.readline().split()
        if header[:2] != ["#", "grushin-eigen-table"]:
            raise ValueError(f"{path}: not an eigen-table cache file")
        meta = dict(kv.split("=", 1) for kv in header[2:])
        if int(meta["version"]) != CACHE_VERSION:
            raise ValueError(f"{path}: unsupported cache version {meta['version']}")
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != int(meta["count"]):
        raise ValueError(f"{path}: truncated cache file")
    lam = np.array([float(r[1]) for r in rows])
    odd = np.array([r[2] == "odd" for r in rows])
    zeros = np.array([float(r[3]) for r in rows])
    norm = np.array([float(r[4]) for r in rows])
    trunc = None
    if meta.get("half_width", "na") != "na":
        trunc = {"half_width": float(meta["half_width"]), "step": float(meta["step"])}
    return EigenTable(lam, odd, zeros, norm, meta["method"], trunc)


def load_or_build(count, cache_dir=None):
    """Eigen table from ``cache_dir`` if present, else built and cached."""
    if cache_dir is None:
        return build_eigen_table(count), None
    path = os.path.join(cache_dir, cache_key(count) + ".txt")
    if os.path.exists(path):
        return load_table(path), path
    table = build_eigen_table(count)
    save_table(table, path)
    return table, path
