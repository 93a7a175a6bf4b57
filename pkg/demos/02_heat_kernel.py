"""The heat kernel of the Grushin operator on R x R.

The kernel is assembled from the oscillator eigenpairs and a Fourier
integral in the second variable.  We check that it carries unit mass and
compare one fiber value with a matrix exponential of a discretised fiber
operator.
"""
from grushin.geometry import Dims, Point
from grushin.kernels import Heat, fiber_heat_oracle, full_kernel, heat_mass

dims = Dims(1, 1)
x, y = Point([0.5], [0.0]), Point([1.0], [0.3])
for t in (0.5, 1.0, 2.0):
    k = full_kernel(Heat(t), x, y, dims).value.real
    print(f"p_t(x, y) at t={t}: {k:.6f}")

mass, _ = heat_mass(1.0, Point([1.0], [0.0]), dims)
print(f"integral of p_1(x, .) = {mass:.7f}")

lattice, fd = fiber_heat_oracle(0.5, 1.0, 0.3, 0.3)
print(f"fiber kernel: eigen-expansion {lattice:.8f}  matrix exponential {fd:.8f}")
