"""Exponentially tilted Monte Carlo next to the exact convolution table."""

import numpy as np

from tailforge import ExplicitList, StretchedExp, exact_pmf, mc_tilted, poissonization_bound

# ten fair coins: P{Y = 6} = 210 / 1024
coins = ExplicitList([0.5] * 10)
est = mc_tilted(coins, 6, 100_000, seed=1)
print(f"coins  : MC {est.log_point_estimate:.5f} +- {est.std_error_log:.5f}, exact {np.log(210 / 1024):.5f}")

# a superexponentially thin sequence, where the event is far in the tail
seq = StretchedExp(1.0, 1.5)
n = 8
table = exact_pmf(seq, n + 4)
est = mc_tilted(seq, n, 100_000, seed=2)
print(f"sexp1.5: MC {est.log_point_estimate:.5f} +- {est.std_error_log:.5f}, exact {table[n]:.5f}")

# the universal Poisson bound is valid but loose here
print(f"         log P(Y >= {n}) bound {poissonization_bound(seq, n):.3f}")
