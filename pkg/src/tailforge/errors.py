"""Exception hierarchy shared by all modules."""


class TailforgeError(Exception):
    """Base class for library errors."""


class ParameterDomainError(TailforgeError, ValueError):
    """A family parameter or index lies outside its admissible range."""


class InvalidPerturbationError(ParameterDomainError):
    """A perturbed probability r_k (1 + eps_k) falls outside (0, 1]."""


class TruncationError(TailforgeError):
    """Requested accuracy was not reached within the term cap.

    Attributes
    ----------
    best_bound : float
        Smallest error bound achieved before giving up.
    terms : int
        Number of terms used for that bound.
    """

    def __init__(self, message, best_bound=float("inf"), terms=0, partial=None):
        super().__init__(message)
        self.best_bound = best_bound
        self.terms = terms
        self.partial = partial


class LevelTooSmallError(TailforgeError, ValueError):
    """Target level n is below floor(psi'(0)) + 1."""


class NoSolutionError(TailforgeError, ValueError):
    """psi'(s) = n has no solution (finite support too small)."""


class UnsupportedFamilyError(TailforgeError, ValueError):
    """Operation is only defined for particular sequence families."""


class NotRegimeCError(TailforgeError):
    """Limits r_{n+k} e^{s_n} and r_{n-k}^{-1} e^{-s_n} do not settle."""


class DegenerateInputError(TailforgeError, ValueError):
    """Limit data violate p_1 > 0 and q_0 > 0."""


class CannotEstimateError(TailforgeError):
    """The regime is undetermined and no override was given."""


class TransferInvalidError(TailforgeError):
    """Perturbation conditions fail to decay along the check grid."""


class TableTooShortError(TailforgeError):
    """Upper-tail mass beyond the pmf table is not negligible."""


class PoleError(TailforgeError, ValueError):
    """Evaluation at a pole."""
