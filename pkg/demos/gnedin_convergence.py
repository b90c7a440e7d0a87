"""Saddle-point estimates against an exactly solvable sequence.

r_k = lam^2 / ((pi k)^2 + lam^2) has a closed-form pmf, so both the generic
estimate and the polynomial closed form can be compared with the truth.
"""

import math

from tailforge import GnedinSinh, estimate, thm4a
from tailforge.exact import gnedin_sinh_log_pmf

lam = 1.0
seq = GnedinSinh(lam)
shift = math.log(lam / math.sinh(lam))  # product of (1 + eps_k) against the pure power law

print(f"{'n':>5} {'log P':>14} {'generic gap':>12} {'closed-form gap':>16}")
for n in (10, 20, 40, 80, 160, 320):
    exact = gnedin_sinh_log_pmf(lam, n)
    generic = estimate(seq, n, "B").log_point
    closed = thm4a(lam ** 2 / math.pi ** 2, 2.0, n).log_value + shift
    print(f"{n:5d} {exact:14.6f} {generic - exact:12.2e} {closed - exact:16.2e}")

# both gaps shrink roughly like 1/n
