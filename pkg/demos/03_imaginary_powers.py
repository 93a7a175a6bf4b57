"""How fast do localised imaginary powers grow in Sobolev norm?

For H_t(lam) = lam^{it} and a bump eta on [1/2, 2] one expects the W^s norm
of eta H_t to grow like t^s.  For s = 1 the squared norm is exactly
t^2 A + B with A = ||eta / lam||^2 and B = ||eta||^2 + ||eta'||^2, so the
log-log slope only approaches 1 once t^2 A dominates B.  The fitted slope
over a short window in t is therefore noticeably below s.
"""
import numpy as np

from grushin.multipliers import imaginary_power_growth

for window in ([4, 8, 16, 32, 64], [64, 128, 256, 512, 1024]):
    for s in (1.0, 2.0):
        rep = imaginary_power_growth(s, window)
        print(f"t in {window[0]}..{window[-1]}  s={s:g}  fitted slope {rep.value('slope'):.4f}")

norms = [imaginary_power_growth(1.0, [4, 64]).value(f"norm[t={t}]") for t in (4, 64)]
print("local slope between t=4 and t=64: %.4f" % (np.log(norms[1] / norms[0]) / np.log(16)))
