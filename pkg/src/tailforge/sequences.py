"""Success-probability sequences r_k for sums of independent indicators.

Every descriptor is immutable and evaluates ``log r_k`` and ``log(1 - r_k)``
on integer arrays, so callers never form probabilities that underflow.
Tail bounds on ``sum_{k>K} r_k`` are closed forms per family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special as sc

from .errors import InvalidPerturbationError, ParameterDomainError
from .specfun import (
    hurwitz_zeta,
    log_hurwitz_zeta,
    log_regularized_lower_gamma,
    log_regularized_upper_gamma,
    log_upper_gamma,
)

LOG_HALF = -math.log(2.0)


def log1mexp(x):
    """log(1 - e^x) for x <= 0, accurate at both ends."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > LOG_HALF, np.log(-np.expm1(np.minimum(x, 0.0))),
                       np.log1p(-np.exp(np.minimum(x, LOG_HALF))))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TailSumBound:
    """Upper bound on ``sum_{k>K} r_k``; ``log_bound`` avoids underflow."""

    K: int
    bound: float
    log_bound: float

    @classmethod
    def from_log(cls, K: int, log_bound: float) -> "TailSumBound":
        return cls(K, math.exp(log_bound) if log_bound > -745 else 0.0, log_bound)

    @classmethod
    def zero(cls, K: int) -> "TailSumBound":
        return cls(K, 0.0, -math.inf)


def _as_index(k) -> np.ndarray:
    k = np.asarray(k)
    if k.size and (np.any(k < 1) or np.any(k != np.floor(k))):
        raise ParameterDomainError("indices must be integers >= 1")
    return k.astype(np.int64)


class SequenceDescriptor:
    """Base class: a sequence 0 < r_k <= 1 with sum r_k < inf.

    Subclasses implement ``_log_values`` and ``_tail_log_bound``; the rest
    is shared.  ``k0`` is the index from which r_k is nonincreasing.
    """

    family: str = ""

    # --- to be provided -------------------------------------------------
    def _log_values(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _log_complements(self, k: np.ndarray) -> np.ndarray:
        return log1mexp(self._log_values(k))

    def _tail_log_bound(self, K: int) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    @property
    def k0(self) -> int:
        return 1

    @property
    def support_size(self) -> int | None:
        """Number of indicators for finite sequences, else None."""
        return None

    def log_odds_power_sums(self, K: int, m: int) -> np.ndarray | None:
        """log W_i with W_i = sum_{k>K} (r_k / (1 - r_k))^i for i = 1..m, if available."""
        return None

    def odds_at(self, k: int) -> float:
        lr = float(self._log_values(np.array([k]))[0])
        l1 = float(self._log_complements(np.array([k]))[0])
        return math.exp(lr - l1)

    # --- public API ------------------------------------------------------
    def log_values(self, k) -> np.ndarray:
        """log r_k for an array of indices k >= 1."""
        return self._log_values(_as_index(k))

    def log_complements(self, k) -> np.ndarray:
        """log(1 - r_k); -inf where r_k = 1."""
        return self._log_complements(_as_index(k))

    def values(self, k) -> np.ndarray:
        return np.exp(self.log_values(k))

    def value(self, k: int) -> float:
        """r_k for a single index."""
        if isinstance(k, bool) or int(k) != k or k < 1:
            raise ParameterDomainError("k must be an integer >= 1")
        size = self.support_size
        if size is not None and k > size:
            raise ParameterDomainError(f"index {k} beyond finite support {size}")
        return float(np.exp(self._log_values(np.array([int(k)], dtype=np.int64))[0]))

    def tail_sum_bound(self, K: int) -> TailSumBound:
        """Closed-form bound on the remainder ``sum_{k>K} r_k`` (needs K >= k0)."""
        K = int(K)
        if K < self.k0:
            raise ParameterDomainError(f"tail bound needs K >= k0 = {self.k0}")
        size = self.support_size
        if size is not None and K >= size:
            return TailSumBound.zero(K)
        return TailSumBound.from_log(K, self._tail_log_bound(K))

    def partial_sum(self, K: int) -> float:
        if K <= 0:
            return 0.0
        return math.fsum(self.values(np.arange(1, K + 1)))

    def total_bound(self, K: int | None = None) -> float:
        """Upper bound on sum r_k (partial sum plus tail bound)."""
        if self.support_size is not None:
            return self.partial_sum(self.support_size)
        K = max(self.k0, 1000) if K is None else K
        return self.partial_sum(K) + self.tail_sum_bound(K).bound

    def to_dict(self) -> dict:
        return {"family": self.family, **self.params()}

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(repr(self))


# ---------------------------------------------------------------------------
# Power and exponential decay
# ---------------------------------------------------------------------------

class Polynomial(SequenceDescriptor):
    """r_k = c k^-beta with beta > 1 and 0 < c <= 1."""

    family = "polynomial"

    def __init__(self, c: float, beta: float):
        if not 0.0 < c <= 1.0:
            raise ParameterDomainError("polynomial family needs 0 < c <= 1")
        if not beta > 1.0:
            raise ParameterDomainError("polynomial family needs beta > 1")
        self.c = float(c)
        self.beta = float(beta)

    def params(self):
        return {"c": self.c, "beta": self.beta}

    def _log_values(self, k):
        return math.log(self.c) - self.beta * np.log(k)

    def _tail_log_bound(self, K):
        return math.log(self.c) + (1.0 - self.beta) * math.log(K) - math.log(self.beta - 1.0)

    def log_odds_power_sums(self, K, m):
        # omega_k = sum_{j>=1} (c k^-b)^j, so W_i = sum_j C(j+i-1, j) c^(j+i) zeta((j+i) b, K+1)
        if K < 1:
            return None
        log_rho = math.log(self.c) - self.beta * math.log(K + 1.0)
        if log_rho >= math.log(0.75):
            return None
        i = np.arange(1, m + 1, dtype=float)[:, None]
        J = 64
        while True:
            j = np.arange(J + 1, dtype=float)[None, :]
            L = log_hurwitz_zeta(np.arange(1, m + J + 1) * self.beta, K + 1.0)
            idx = (i + j - 1).astype(int)
            logt = (sc.gammaln(j + i) - sc.gammaln(j + 1) - sc.gammaln(i)
                    + (i + j) * math.log(self.c) + L[idx])
            top = logt.max(axis=1)
            if np.all(logt[:, -1] < top - 45.0):
                break
            J *= 2
        return top + np.log(np.sum(np.exp(logt - top[:, None]), axis=1))


class StretchedExp(SequenceDescriptor):
    """r_k = c exp(-k^beta) with beta > 0 and 0 < c <= e."""

    family = "stretched-exp"

    def __init__(self, c: float, beta: float):
        if not 0.0 < c <= math.e:
            raise ParameterDomainError("stretched-exp family needs 0 < c <= e")
        if not beta > 0.0:
            raise ParameterDomainError("stretched-exp family needs beta > 0")
        self.c = float(c)
        self.beta = float(beta)

    def params(self):
        return {"c": self.c, "beta": self.beta}

    def _log_values(self, k):
        return math.log(self.c) - k.astype(float) ** self.beta

    def _tail_log_bound(self, K):
        if self.beta == 1.0:
            # sum_{k>=K} c e^{-k}, one term looser than the exact remainder
            return math.log(self.c) - K - math.log(-math.expm1(-1.0))
        # sum_{k>K} e^{-k^b} <= int_K^inf e^{-x^b} dx = Gamma(1/b, K^b) / b
        return math.log(self.c) + log_upper_gamma(1.0 / self.beta, float(K) ** self.beta) \
            - math.log(self.beta)


class Geometric(SequenceDescriptor):
    """r_k = c q^k with 0 < q < 1 and 0 < c q <= 1."""

    family = "geometric"

    def __init__(self, c: float, q: float):
        if not 0.0 < q < 1.0:
            raise ParameterDomainError("geometric family needs 0 < q < 1")
        if not 0.0 < c * q <= 1.0 or c <= 0:
            raise ParameterDomainError("geometric family needs 0 < c q <= 1")
        self.c = float(c)
        self.q = float(q)

    def params(self):
        return {"c": self.c, "q": self.q}

    def _log_values(self, k):
        return math.log(self.c) + k * math.log(self.q)

    def _tail_log_bound(self, K):
        return math.log(self.c) + (K + 1) * math.log(self.q) - math.log1p(-self.q)


# ---------------------------------------------------------------------------
# Gnedin's sinh / cosh families
# ---------------------------------------------------------------------------

class GnedinSinh(SequenceDescriptor):
    """r_k = lam^2 / ((pi k)^2 + lam^2); Y is an odd-restricted Poisson law."""

    family = "gnedin-sinh"

    def __init__(self, lam: float):
        if not lam > 0.0:
            raise ParameterDomainError("lambda must be positive")
        self.lam = float(lam)

    def params(self):
        return {"lambda": self.lam}

    @property
    def _a(self):
        return (self.lam / math.pi) ** 2

    def _log_values(self, k):
        pk = math.pi * k.astype(float)
        return 2.0 * math.log(self.lam) - np.log(pk * pk + self.lam ** 2)

    def _log_complements(self, k):
        return -np.log1p(self._a / k.astype(float) ** 2)

    def _tail_log_bound(self, K):
        return math.log(self._a) - math.log(K)

    def log_odds_power_sums(self, K, m):
        i = np.arange(1, m + 1, dtype=float)
        return i * math.log(self._a) + log_hurwitz_zeta(2.0 * i, K + 1.0)


class GnedinCosh(SequenceDescriptor):
    """r_k = 4 lam^2 / ((pi (2k-1))^2 + 4 lam^2); Y is an even-restricted Poisson law."""

    family = "gnedin-cosh"

    def __init__(self, lam: float):
        if not lam > 0.0:
            raise ParameterDomainError("lambda must be positive")
        self.lam = float(lam)

    def params(self):
        return {"lambda": self.lam}

    @property
    def _b(self):
        return (self.lam / math.pi) ** 2

    def _log_values(self, k):
        h = math.pi * (k.astype(float) - 0.5)
        return 2.0 * math.log(self.lam) - np.log(h * h + self.lam ** 2)

    def _log_complements(self, k):
        return -np.log1p(self._b / (k.astype(float) - 0.5) ** 2)

    def _tail_log_bound(self, K):
        return math.log(self._b) - math.log(K - 0.5)

    def log_odds_power_sums(self, K, m):
        i = np.arange(1, m + 1, dtype=float)
        return i * math.log(self._b) + log_hurwitz_zeta(2.0 * i, K + 0.5)


# ---------------------------------------------------------------------------
# Decoupled renewal counts with exponential jumps
# ---------------------------------------------------------------------------

class GinibreGamma(SequenceDescriptor):
    """r_k = P{Gamma(k, 1) <= t}: points of the infinite Ginibre process in a disc."""

    family = "ginibre"

    def __init__(self, t: float):
        if not t > 0.0:
            raise ParameterDomainError("t must be positive")
        self.t = float(t)

    def params(self):
        return {"t": self.t}

    def _log_values(self, k):
        f = np.vectorize(lambda j: log_regularized_lower_gamma(float(j), self.t), otypes=[float])
        return f(k) if k.size else np.zeros(0)

    def _log_complements(self, k):
        f = np.vectorize(lambda j: log_regularized_upper_gamma(float(j), self.t), otypes=[float])
        return f(k) if k.size else np.zeros(0)

    def _tail_log_bound(self, K):
        t = self.t
        if t < K + 2.0:
            # P(k+1, t) <= P(k, t) t / (k+1): geometric domination
            return log_regularized_lower_gamma(K + 1.0, t) - math.log1p(-t / (K + 2.0))
        # sum_{k>=1} P(k, t) = E[Poisson(t)] = t
        rest = t - self.partial_sum(K)
        return math.log(max(rest, 0.0) + 1e-12 * t)


# ---------------------------------------------------------------------------
# Finite lists
# ---------------------------------------------------------------------------

class ExplicitList(SequenceDescriptor):
    """Finitely many indicators with the given success probabilities."""

    family = "list"

    def __init__(self, values: Sequence[float]):
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            raise ParameterDomainError("empty list")
        if np.any(~(v > 0.0)) or np.any(v > 1.0):
            raise ParameterDomainError("list entries must lie in (0, 1]")
        self._v = v
        self._v.setflags(write=False)
        # k0: first index after the last increase
        inc = np.nonzero(np.diff(v) > 0)[0]
        self._k0 = int(inc[-1]) + 2 if inc.size else 1

    @property
    def probabilities(self) -> np.ndarray:
        return self._v

    def params(self):
        return {"values": [float(x) for x in self._v]}

    @property
    def k0(self):
        return self._k0

    @property
    def support_size(self):
        return int(self._v.size)

    def _log_values(self, k):
        out = np.full(k.shape, -np.inf)
        inside = k <= self._v.size
        with np.errstate(divide="ignore"):
            out[inside] = np.log(self._v[k[inside] - 1])
        return out

    def _log_complements(self, k):
        out = np.zeros(k.shape)
        inside = k <= self._v.size
        with np.errstate(divide="ignore"):
            out[inside] = np.log1p(-self._v[k[inside] - 1])
        return out

    def _tail_log_bound(self, K):
        rest = math.fsum(self._v[K:])
        return math.log(rest) if rest > 0 else -math.inf


# ---------------------------------------------------------------------------
# Families built on a base weight sequence
# ---------------------------------------------------------------------------

_VARIANTS = ("at_least", "exactly", "even")


class PoissonizedRange(SequenceDescriptor):
    """Counts of values hit by a Poisson(t) sample with value weights p_k.

    variant ``at_least``: r_k = P{Poisson(t p_k) >= j}
    variant ``exactly``:  r_k = P{Poisson(t p_k) = j}
    variant ``even``:     r_k = P{Poisson(t p_k) is even and positive}
    """

    family = "poissonized-range"

    def __init__(self, t: float, base: SequenceDescriptor, variant: str = "at_least", j: int = 1):
        if not t > 0.0:
            raise ParameterDomainError("t must be positive")
        if variant not in _VARIANTS:
            raise ParameterDomainError(f"variant must be one of {_VARIANTS}")
        if int(j) != j or j < 1:
            raise ParameterDomainError("j must be a positive integer")
        if base.support_size is not None:
            raise ParameterDomainError("base weights must be an infinite sequence")
        self.t = float(t)
        self.base = base
        self.variant = variant
        self.j = int(j)
        k0 = base.k0
        if variant == "exactly":
            # x e^{-x} x^{j-1} increases only while t p_k < j
            ks = np.arange(base.k0, base.k0 + 100_000)
            over = np.nonzero(self.t * base.values(ks) > self.j)[0]
            k0 = int(ks[over[-1]]) + 1 if over.size else base.k0
        self._k0 = k0

    def params(self):
        return {"t": self.t, "base": self.base.to_dict(), "variant": self.variant, "j": self.j}

    @property
    def k0(self):
        return self._k0

    def _log_x(self, k):
        return math.log(self.t) + self.base.log_values(k)

    def _log_values(self, k):
        lx = self._log_x(k)
        x = np.exp(lx)
        # log(1 - e^{-x}) = log x + log exprel(-x), fine when x underflows
        log_hit = lx + np.log(sc.exprel(-x))
        if self.variant == "at_least":
            if self.j == 1:
                return log_hit
            j = self.j
            small = x < 1e-3
            out = np.empty_like(lx)
            xs = x[small]
            out[small] = (j * lx[small] - xs - math.lgamma(j + 1.0)
                          + np.log1p(xs / (j + 1.0) + xs * xs / ((j + 1.0) * (j + 2.0))))
            f = np.vectorize(lambda v: log_regularized_lower_gamma(float(j), v), otypes=[float])
            if np.any(~small):
                out[~small] = f(x[~small])
            return out
        if self.variant == "exactly":
            return -x + self.j * lx - math.lgamma(self.j + 1.0)
        return 2.0 * log_hit - math.log(2.0)

    def _log_complements(self, k):
        if self.variant == "at_least" and self.j == 1:
            return -np.exp(self._log_x(k))
        return log1mexp(self._log_values(k))

    def _tail_log_bound(self, K):
        # every variant has r <= x^m / m! with m = j (at least / exactly) or 2 (even),
        # and x_k <= x_{K+1} for k > K
        m = self.j if self.variant != "even" else 2
        base_tail = self.base.tail_sum_bound(K).log_bound
        lx = math.log(self.t) + float(self.base.log_values(np.array([K + 1]))[0])
        return math.log(self.t) + (m - 1) * lx + base_tail - math.lgamma(m + 1.0)


class RecordsFAlpha(SequenceDescriptor):
    """Record indicators in the F^alpha scheme: r_i = alpha_i / (alpha_1 + ... + alpha_i)."""

    family = "records"

    def __init__(self, alpha: SequenceDescriptor):
        if alpha.support_size is not None:
            raise ParameterDomainError("alpha weights must be an infinite sequence")
        self.alpha = alpha

    def params(self):
        return {"alpha": self.alpha.to_dict()}

    @property
    def k0(self):
        return self.alpha.k0

    def _log_cumsum(self, kmax: int) -> np.ndarray:
        a = self.alpha.values(np.arange(1, kmax + 1))
        return np.log(np.cumsum(a))

    def _log_values(self, k):
        if k.size == 0:
            return np.zeros(0)
        logA = self._log_cumsum(int(k.max()))
        return self.alpha.log_values(k) - logA[k - 1]

    def _log_complements(self, k):
        if k.size == 0:
            return np.zeros(0)
        logA = np.concatenate([[-np.inf], self._log_cumsum(int(k.max()))])
        return logA[k - 1] - logA[k]

    def _tail_log_bound(self, K):
        # A_i >= A_K for i > K
        return self.alpha.tail_sum_bound(K).log_bound - float(self._log_cumsum(K)[-1])


# ---------------------------------------------------------------------------
# Perturbations u_k = r_k (1 + eps_k)
# ---------------------------------------------------------------------------

_CHECK_PREFIX = 1000


class Perturbed(SequenceDescriptor):
    """u_k = r_k (1 + eps_k) for a summable perturbation eps.

    Parameters
    ----------
    base : SequenceDescriptor
    epsilons : array_like or callable
        Either the finite list eps_1..eps_m (zero afterwards) or a
        vectorized function of integer index arrays.
    abs_sum_bound : float, optional
        Upper bound on sum |eps_k|; required for callables.
    sup_bound : float, optional
        Upper bound on sup |eps_k|; defaults to ``abs_sum_bound``.
    abs_tail : callable, optional
        ``abs_tail(K)`` bounds sum_{k>K} |eps_k| directly, which is much
        tighter than ``abs_sum_bound`` minus a partial sum.
    """

    family = "perturbed"

    def __init__(self, base: SequenceDescriptor, epsilons, abs_sum_bound: float | None = None,
                 sup_bound: float | None = None, k0: int | None = None,
                 abs_tail: Callable[[int], float] | None = None):
        self.base = base
        self._abs_tail = abs_tail
        if callable(epsilons):
            if abs_sum_bound is None:
                raise ParameterDomainError("callable perturbations need abs_sum_bound")
            self._eps_fn: Callable | None = epsilons
            self._eps_arr = None
            self.abs_sum_bound = float(abs_sum_bound)
            self.sup_bound = float(sup_bound) if sup_bound is not None else self.abs_sum_bound
        else:
            arr = np.asarray(epsilons, dtype=float).ravel()
            self._eps_fn = None
            self._eps_arr = arr
            self.abs_sum_bound = math.fsum(np.abs(arr))
            self.sup_bound = float(np.max(np.abs(arr))) if arr.size else 0.0
        if not math.isfinite(self.abs_sum_bound):
            raise ParameterDomainError("sum |eps_k| must be finite")
        self._k0 = base.k0 if k0 is None else int(k0)
        n_check = base.support_size or _CHECK_PREFIX
        if self._eps_arr is not None:
            n_check = max(n_check, self._eps_arr.size) if base.support_size is None else n_check
        self._log_values(np.arange(1, n_check + 1, dtype=np.int64))

    def params(self):
        if self._eps_arr is None:
            raise ParameterDomainError("callable perturbations cannot be serialized")
        return {"base": self.base.to_dict(), "epsilons": [float(e) for e in self._eps_arr]}

    @property
    def k0(self):
        return self._k0

    @property
    def support_size(self):
        return self.base.support_size

    def epsilon(self, k) -> np.ndarray:
        k = _as_index(k)
        if self._eps_fn is not None:
            return np.asarray(self._eps_fn(k), dtype=float)
        out = np.zeros(k.shape)
        inside = k <= self._eps_arr.size
        out[inside] = self._eps_arr[k[inside] - 1]
        return out

    def abs_eps_tail(self, K: int) -> float:
        """Upper bound on sum_{k>K} |eps_k|."""
        if self._eps_arr is not None:
            return math.fsum(np.abs(self._eps_arr[K:]))
        partial = math.fsum(np.abs(self.epsilon(np.arange(1, K + 1)))) if K > 0 else 0.0
        bound = max(0.0, self.abs_sum_bound - partial)
        if self._abs_tail is not None:
            bound = min(bound, float(self._abs_tail(K)))
        return bound

    def _log_values(self, k):
        eps = self.epsilon(k)
        if np.any(eps <= -1.0):
            raise InvalidPerturbationError("1 + eps_k must be positive")
        out = self.base._log_values(k) + np.log1p(eps)
        if np.any(out > 1e-15):
            raise InvalidPerturbationError("perturbed probability exceeds 1")
        return np.minimum(out, 0.0)

    def _tail_log_bound(self, K):
        if self._eps_arr is not None:
            rest = self._eps_arr[K:]
            sup = max(1.0, float(np.max(1.0 + rest))) if rest.size else 1.0
        else:
            sup = 1.0 + self.sup_bound
        return self.base.tail_sum_bound(K).log_bound + math.log(sup)


def perturb(seq: SequenceDescriptor, epsilons, abs_sum_bound: float | None = None,
            sup_bound: float | None = None, abs_tail: Callable[[int], float] | None = None) -> Perturbed:
    """Build u_k = r_k (1 + eps_k); raises InvalidPerturbationError if some u_k leaves (0, 1]."""
    return Perturbed(seq, epsilons, abs_sum_bound, sup_bound, abs_tail=abs_tail)


def gnedin_as_perturbation(lam: float) -> tuple[Polynomial, Perturbed]:
    """lam^2 (pi k)^-2 and its perturbation into the Gnedin sinh sequence.

    eps_k = -lam^2 / ((pi k)^2 + lam^2), so u_k matches GnedinSinh(lam).
    """
    a = (lam / math.pi) ** 2
    if a > 1.0:
        raise ParameterDomainError("needs lam <= pi so that r_1 <= 1")
    base = Polynomial(a, 2.0)

    def eps(k):
        kk = k.astype(float)
        return -a / (kk * kk + a)

    # sum_k a/(k^2 + a) <= a zeta(2)
    total = a * math.pi ** 2 / 6.0

    def tail(K):
        return a * float(hurwitz_zeta(2.0, K + 1.0))

    return base, Perturbed(base, eps, abs_sum_bound=total, sup_bound=a / (1.0 + a), abs_tail=tail)


def _poisson_hit_eps(x: np.ndarray) -> np.ndarray:
    """(1 - e^{-x} - x) / x without cancellation."""
    small = x < 1e-3
    out = np.empty_like(x)
    xs = x[small]
    out[small] = -xs / 2.0 + xs ** 2 / 6.0 - xs ** 3 / 24.0 + xs ** 4 / 120.0
    xl = x[~small]
    out[~small] = (-np.expm1(-xl) - xl) / xl
    return out


def poissonized_as_perturbation(t: float, weights: SequenceDescriptor) -> tuple[SequenceDescriptor, Perturbed]:
    """Base t p_k and its perturbation into 1 - exp(-t p_k).

    ``weights`` must be a StretchedExp or Geometric family so that t p_k is
    again in that family.  |eps_k| <= t p_k / 2.
    """
    if isinstance(weights, StretchedExp):
        base: SequenceDescriptor = StretchedExp(t * weights.c, weights.beta)
    elif isinstance(weights, Geometric):
        base = Geometric(t * weights.c, weights.q)
    else:
        raise ParameterDomainError("weights must be stretched-exp or geometric")

    def eps(k):
        return _poisson_hit_eps(t * weights.values(k))

    K = max(weights.k0, 50)
    total = 0.5 * t * (weights.partial_sum(K) + weights.tail_sum_bound(K).bound)
    sup = 0.5 * t * float(np.max(weights.values(np.arange(1, K + 1))))

    def tail(K):
        return 0.5 * t * weights.tail_sum_bound(K).bound if K >= weights.k0 else math.inf

    return base, Perturbed(base, eps, abs_sum_bound=total, sup_bound=sup, abs_tail=tail)


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

FAMILIES = {
    "polynomial": lambda d: Polynomial(d["c"], d["beta"]),
    "stretched-exp": lambda d: StretchedExp(d["c"], d["beta"]),
    "geometric": lambda d: Geometric(d["c"], d["q"]),
    "gnedin-sinh": lambda d: GnedinSinh(d["lambda"]),
    "gnedin-cosh": lambda d: GnedinCosh(d["lambda"]),
    "ginibre": lambda d: GinibreGamma(d["t"]),
    "list": lambda d: ExplicitList(d["values"]),
    "poissonized-range": lambda d: PoissonizedRange(
        d["t"], from_dict(d["base"]), d.get("variant", "at_least"), d.get("j", 1)),
    "records": lambda d: RecordsFAlpha(from_dict(d["alpha"])),
    "perturbed": lambda d: Perturbed(from_dict(d["base"]), d["epsilons"]),
}

_KEYS = {
    "polynomial": {"c", "beta"},
    "stretched-exp": {"c", "beta"},
    "geometric": {"c", "q"},
    "gnedin-sinh": {"lambda"},
    "gnedin-cosh": {"lambda"},
    "ginibre": {"t"},
    "list": {"values"},
    "poissonized-range": {"t", "base", "variant", "j"},
    "records": {"alpha"},
    "perturbed": {"base", "epsilons"},
}


def from_dict(d: dict) -> SequenceDescriptor:
    """Inverse of ``SequenceDescriptor.to_dict``."""
    if not isinstance(d, dict) or "family" not in d:
        raise ParameterDomainError("descriptor must be an object with a 'family' key")
    fam = d["family"]
    if fam not in FAMILIES:
        raise ParameterDomainError(f"unknown family {fam!r}")
    extra = set(d) - {"family"} - _KEYS[fam]
    if extra:
        raise ParameterDomainError(f"unknown fields for {fam}: {sorted(extra)}")
    try:
        return FAMILIES[fam](d)
    except KeyError as exc:
        raise ParameterDomainError(f"missing field {exc.args[0]!r} for {fam}") from None
    except TypeError as exc:
        raise ParameterDomainError(str(exc)) from None
