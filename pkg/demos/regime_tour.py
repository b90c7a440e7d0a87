"""Classify three sequences and look at psi''(s_n) along the grid."""

from tailforge import Polynomial, StretchedExp, classify

cases = [
    ("k^-2", Polynomial(1.0, 2.0), [25, 50, 100, 200]),
    ("exp(-k^2)", StretchedExp(1.0, 2.0), [10, 15, 20, 25]),
    ("exp(-k)", StretchedExp(1.0, 1.0), [20, 40, 80, 160]),
]

for name, seq, grid in cases:
    rep = classify(seq, grid)
    psi2 = ", ".join(f"{g.psi2:.3g}" for g in rep.grid)
    print(f"{name:>10}: regime {rep.label}  psi'' = [{psi2}]")
    if rep.c_data is not None:
        # limits of r_{n+k} e^{s_n} and e^{-s_n} / r_{n-k}, and the lattice constant
        cd = rep.c_data
        print(f"{'':>12}p_1 = {cd.p[0]:.6f}  q_0 = {cd.q[0]:.6f}  c0 = {cd.c0.value:.10f}")

# psi'' grows without bound (B), collapses to 0 (A) or settles at a constant (C)
