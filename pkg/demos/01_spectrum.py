"""Walk through the one-dimensional oscillator -d^2/du^2 + |u|.

Eigenvalues come from Airy zeros: even modes sit at zeros of Ai', odd modes
at zeros of Ai.  We compare the first few with a finite-difference solve,
look at the Weyl-type growth ratio and check the boundary identities that
fix the normalisation.
"""
import math

import numpy as np

from grushin.oscillator import build_eigen_table, fd_oracle_table, verify_normalization

table = build_eigen_table(60)
print("first eigenvalues:", np.round(table.lam[:6], 8))

# A finite-difference solve with Richardson extrapolation in the step size
oracle = fd_oracle_table(10, 60.0, 1e-3, extrapolate=True)
print("max deviation from FD oracle (10 modes): %.2e" % np.max(np.abs(oracle.lam - table.lam[:10])))

# lambda_n grows like (3 pi n / 4)^{2/3}
n = np.arange(1, len(table) + 1)
ratio = table.lam / (0.75 * math.pi * n) ** (2.0 / 3.0)
for k in (1, 5, 20, 60):
    print(f"n={k:3d}  lambda_n / (3 pi n/4)^(2/3) = {ratio[k - 1]:.5f}")

# h_n(0)^2 * 2 lambda_n = 1 for even modes, h_n'(0+)^2 = 1/2 for odd modes
rep = verify_normalization(table, count=20)
for name in ("boundary_identities", "gram_identity"):
    rec = rep.get(name)
    print(f"{name}: pass={rec.pass_flag}  max deviation {rec.value:.1e}")
