"""Finite-difference model of the fiber operator -Delta + (sum_j |x_j|) |xi|^2.

Partial Fourier transform in the second group of variables turns the Grushin
operator into this Schrodinger family on R^{d1}.  The discretisation here is
the standard central-difference Laplacian on a tensor grid with zero
boundary values; it serves both as an independent oracle for eigen-expansion
formulas and as the model on which the weighted power inequality
||W^gamma f|| <= C ||L^gamma f|| is measured.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, eigsh

from .oscillator import CapacityError
from .report import Report

__all__ = [
    "FiberGrid",
    "FiberOperator",
    "discretize_fiber",
    "weighted_power_bound",
    "scaling_identity_check",
    "fiber_heat_kernel_matrix",
    "smooth_probe",
    "MAX_DIM",
]

MAX_DIM = 4096


@dataclass(frozen=True)
class FiberGrid:
    half_width: float = 40.0
    step: float = 0.02

    @property
    def points(self):
        n = int(round(2.0 * self.half_width / self.step)) - 1
        return -self.half_width + self.step * np.arange(1, n + 1)


@dataclass(eq=False)
class FiberOperator:
    xi_norm: float
    d1: int
    grid: FiberGrid
    matrix_dim: int
    x: np.ndarray                 # 1-D grid (shared by every coordinate)
    potential: np.ndarray         # (sum_j |x_j|) |xi|^2 on the tensor grid, flattened
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def weight(self):
        return self.potential

    def sparse(self):
        n = len(self.x)
        h = self.grid.step
        lap = sp.diags([np.full(n - 1, -1.0), np.full(n, 2.0), np.full(n - 1, -1.0)],
                       [-1, 0, 1]) / h ** 2
        eye = sp.identity(n)
        if self.d1 == 1:
            kin = lap
        else:
            kin = sp.kron(lap, eye) + sp.kron(eye, lap)
        return (kin + sp.diags(self.potential)).tocsr()

    def dense(self):
        return self.sparse().toarray()

    def apply(self, f, k=1):
        A = self.sparse()
        g = np.asarray(f, dtype=float).ravel()
        for _ in range(k):
            g = A @ g
        return g

    def eig(self):
        """Cached (eigenvalues, eigenvectors) of the discrete operator."""
        if self._eig is None:
            if self.d1 == 1:
                h = self.grid.step
                n = len(self.x)
                w, v = eigh_tridiagonal(2.0 / h ** 2 + self.potential,
                                        np.full(n - 1, -1.0 / h ** 2))
            else:
                w, v = eigh(self.dense())
            self._eig = (w, v)
        return self._eig


def discretize_fiber(xi_norm, d1=1, grid=None):
    """Central-difference fiber operator at frequency modulus ``xi_norm``."""
    if xi_norm <= 0:
        raise ValueError("xi_norm must be positive")
    if d1 not in (1, 2):
        raise ValueError("dense fiber discretisation supports d1 in {1, 2}")
    if grid is None:
        grid = FiberGrid() if d1 == 1 else FiberGrid(8.0, 0.25)
    x = grid.points
    dim = len(x) ** d1
    if dim > MAX_DIM:
        raise CapacityError(f"fiber matrix dimension {dim} exceeds cap {MAX_DIM}")
    if d1 == 1:
        pot = np.abs(x) * xi_norm ** 2
    else:
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        pot = ((np.abs(X1) + np.abs(X2)) * xi_norm ** 2).ravel()
    return FiberOperator(float(xi_norm), d1, grid, dim, x, pot)


def weighted_power_bound(gamma, op):
    """Operator norm of W^gamma L^{-gamma} on the discrete model.

    This is the smallest constant in ||W^gamma f|| <= C ||L^gamma f|| over
    grid functions, W being the multiplication by the potential.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0:
        return 1.0
    lam, V = op.eig()
    wg = op.potential ** gamma
    scale = lam ** (-2.0 * gamma)

    def matvec(x):
        x = np.ravel(x)
        return wg * (V @ (scale * (V.T @ (wg * x))))

    # ||W^g L^-g||^2 = largest eigenvalue of W^g L^-2g W^g
    n = len(lam)
    A = LinearOperator((n, n), matvec=matvec, dtype=float)
    top = eigsh(A, k=1, which="LA", tol=1e-10, return_eigenvectors=False)
    return float(math.sqrt(max(top[0], 0.0)))


def _bump(s):
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def smooth_probe(rng, d1, reach):
    """Random smooth compactly supported function on R^{d1} (a callable).

    Support lies in the cube [-reach, reach]^{d1}.
    """
    terms = []
    for _ in range(3):
        width = rng.uniform(0.3, 0.6) * reach
        centre = rng.uniform(-(reach - width), reach - width, size=d1)
        terms.append((rng.normal(), centre, width))

    def f(*coords):
        total = 0.0
        for a, c, w in terms:
            prod = a
            for j, xj in enumerate(coords):
                prod = prod * _bump((np.asarray(xj) - c[j]) / w)
            total = total + prod
        return total

    return f


def _sample(op, f, scale=1.0):
    if op.d1 == 1:
        return np.asarray(f(scale * op.x), dtype=float)
    X1, X2 = np.meshgrid(op.x, op.x, indexing="ij")
    return np.asarray(f(scale * X1, scale * X2), dtype=float).ravel()


def scaling_identity_check(xi_norm, k, probe_count, d1=1, grid=None, seed=0):
    """Compare ||L_xi^k f|| with t^{-2k} t^{d1/2} ||L_1^k (delta_t f)||, t = xi^{-2/3}.

    Probes are smooth compactly supported callables, so the dilation
    ``(delta_t f)(x) = f(t x)`` is sampled exactly on the grid.  The recorded
    discrepancy is the residual discretisation error.
    """
    if not 1 <= k <= 3:
        raise ValueError("k must be in 1..3")
    op_xi = discretize_fiber(xi_norm, d1, grid)
    op_1 = discretize_fiber(1.0, d1, op_xi.grid)
    t = xi_norm ** (-2.0 / 3.0)
    rng = np.random.default_rng(seed)
    reach = 0.9 * op_xi.grid.half_width * min(1.0, t)
    rep = Report("fiber", config={"xi_norm": xi_norm, "k": k, "probes": probe_count,
                                  "d1": d1, "seed": seed,
                                  "grid": [op_xi.grid.half_width, op_xi.grid.step]})
    worst = 0.0
    for i in range(probe_count):
        f = smooth_probe(rng, d1, reach)
        lhs = np.linalg.norm(op_xi.apply(_sample(op_xi, f), k))
        rhs = t ** (-2 * k) * t ** (d1 / 2.0) * np.linalg.norm(op_1.apply(_sample(op_1, f, t), k))
        disc = abs(lhs - rhs) / max(abs(lhs), 1e-300)
        worst = max(worst, disc)
        rep.add(f"discrepancy[{i}]", disc, fitted=True, family="scaling", probe=i)
    rep.add("max_discrepancy", worst, fitted=True)
    return rep


def fiber_heat_kernel_matrix(op, time):
    """exp(-time L) kernel on the grid (divide by step^d1 for a density)."""
    lam, V = op.eig()
    return (V * np.exp(-time * lam)) @ V.T / op.grid.step ** op.d1
