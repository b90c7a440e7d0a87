"""Tail probabilities of infinite sums of independent indicators."""

from .cgf import (BoundedValue, CgfValues, core_identity, evaluate, hayman_b, psi, psi_double_prime,
                  psi_prime, tilted_prob)
from .closed_forms import ExplicitAsymptotic, thm4a, thm4b, thm4b_reduced, thm4c, thm4d, thm4d_reduced
from .errors import *  # noqa: F401,F403
from .estimates import TailEstimate, TransferReport, estimate, transfer
from .exact import LogPmf, McEstimate, exact_ccdf, exact_pmf, mc_tilted, poissonization_bound
from .regime import RegimeReport, Thresholds, c0, classify, regime_c_limits
from .saddle import SaddleSolution, family_saddle, legendre, solve
from .sequences import (ExplicitList, Geometric, GinibreGamma, GnedinCosh, GnedinSinh, Perturbed,
                        PoissonizedRange, Polynomial, RecordsFAlpha, SequenceDescriptor,
                        StretchedExp, from_dict, perturb)

__version__ = "0.1.0"
