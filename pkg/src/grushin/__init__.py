"""Spectral multipliers of the Grushin-type operator -Delta_{x'} - (sum_i |x'_i|) Delta_{x''}.

Submodules: ``special_fn`` (Airy and Bessel functions), ``oscillator``
(the one-dimensional operator -d^2/du^2 + |u|), ``fiber`` (discretised
fiber operators), ``geometry`` (distance, volume, weights), ``kernels``
(pointwise kernels of F(L)), ``plancherel`` (weighted Plancherel sums),
``multipliers`` (Sobolev norms and threshold experiments), ``report`` and
``cli``.
"""

from .geometry import Dims, Point
from .kernels import (BochnerRiesz, BumpDilated, ContractError, Heat, ImaginaryPower,
                      SumMultiplier, Tabulated, full_kernel)
from .oscillator import CapacityError, build_eigen_table
from .report import Report

__version__ = "0.1.0"
