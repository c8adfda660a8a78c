"""
Non-homogeneous waterfilling, one instance at a time.

Every max-DLT update solves

    minimize  tr(X^H Q X) - log|I + X^H R X|   subject to  ||X||_F^2 = zeta

for one user. This script walks through the solver on small instances and
compares the exact solver with the closed form.
"""

import numpy as np

from maxdlt import WaterfillProblem, nonhomogeneous_waterfill, whiten

np.set_printoptions(precision=4, suppress=True)

# The scalar case can be done by hand: with Q = 2, R = 3 and zeta = 1 the
# filter is forced to |x| = 1, and the stationarity condition
# (2 + mu) x = 3 x / (1 + 3 |x|^2) gives mu = 3/4 - 2 = -1.25.
scalar = WaterfillProblem(np.array([[2.0]]), np.array([[3.0]]), rank=1, zeta=1.0)
sol = nonhomogeneous_waterfill(scalar)
print("scalar case:  |x| =", abs(sol.X_star[0, 0]), " mu =", sol.mu_star)

# A random 4x4 instance with two streams. Whitening by the Cholesky factor
# of Q gives the quasi-SINRs alpha (the leading eigenvalues of Q^-1 R) and
# the price beta of a unit of whitened power in each stream.
rng = np.random.default_rng(7)
A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
B = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
Q = A @ A.conj().T / 4 + 0.1 * np.eye(4)
R = 5.0 * B @ B.conj().T
problem = WaterfillProblem(Q, R, rank=2, zeta=2.0)
_, _, alpha, beta = whiten(problem)
print("\nquasi-SINRs alpha:", alpha, " prices beta:", beta)

# Both solvers meet the power budget with equality. The exact solver finds
# the water level on the shifted problem Q + mu I and is globally optimal;
# the closed form keeps the eigenvectors of Q^-1 R fixed, which is only
# exact when Q is a multiple of the identity.
for method in ("exact", "closed-form"):
    s = nonhomogeneous_waterfill(problem, method)
    print(f"{method:12s} objective {s.objective:.6f}  mu {s.mu_star:.4f}  "
          f"stream amplitudes {s.Sigma_star}  ||X||^2 {np.sum(abs(s.X_star) ** 2):.12f}")

# Stream control: when the second stream's quasi-SINR is too low to pay
# for its power, the (.)^+ clamp switches it off.
weak = WaterfillProblem(np.diag([1.0, 1.0]), np.diag([50.0, 0.05]), rank=2, zeta=1.0)
s = nonhomogeneous_waterfill(weak)
print("\nweak second stream -> amplitudes", s.Sigma_star, "(one stream left)")

# With Q proportional to the identity both solvers agree exactly.
iso = WaterfillProblem(0.3 * np.eye(4), R, rank=2, zeta=2.0)
a, b = (nonhomogeneous_waterfill(iso, m).objective for m in ("exact", "closed-form"))
print(f"\nQ = 0.3 I: exact {a:.10f}, closed form {b:.10f}")
