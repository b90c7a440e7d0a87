"""Solving psi'(s) = n and the closed-form approximate saddles."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import binom

from .cgf import DEFAULT_TOL, core_identity, evaluate, psi_double_prime
from .errors import LevelTooSmallError, NoSolutionError, ParameterDomainError, UnsupportedFamilyError
from .sequences import GnedinSinh, Polynomial, SequenceDescriptor, StretchedExp
from .specfun import c_coeff

_MAX_ITER = 200
_S_LIMIT = 1e8
_SOLVE_TOL = 1e-13  # tight enough that the core identity closes at roundoff level


@dataclass(frozen=True)
class SaddleSolution:
    n: int
    s: float
    psi: float
    psi_prime: float
    psi_double_prime: float
    residual: float
    method: str = "numeric"
    error_bound: float = 0.0  # truncation bound on psi_prime

    def to_dict(self) -> dict:
        return asdict(self)


def default_residual_tol(n: float) -> float:
    return 1e-9 * max(1.0, float(n))


def _check_level(n) -> int:
    if isinstance(n, bool) or not float(n).is_integer():
        raise ParameterDomainError(f"level must be an integer, got {n!r}")
    n = int(n)
    if n < 0:
        raise LevelTooSmallError(f"level must be nonnegative, got {n}")
    return n


def minimum_level(seq: SequenceDescriptor, tol: float = DEFAULT_TOL) -> int:
    """Smallest admissible level floor(psi'(0)) + 1."""
    mean = evaluate(seq, 0.0, tol).psi_prime
    return int(math.floor(mean.value)) + 1


def _solution(seq, n, s, tol, method) -> SaddleSolution:
    v = evaluate(seq, s, tol)
    return SaddleSolution(n, float(s), v.psi.value, v.psi_prime.value, v.psi_double_prime.value,
                          v.psi_prime.value - n, method, v.psi_prime.error_bound)


def solve(seq: SequenceDescriptor, n, residual_tol: float | None = None, *,
          s0: float | None = None) -> SaddleSolution:
    """Numeric saddle point s_n with |psi'(s_n) - n| <= residual_tol.

    Brackets by doubling, then runs Newton steps that fall back to
    bisection whenever a step leaves the bracket or is too long.
    ``s0`` overrides the starting point.
    """
    n = _check_level(n)
    rtol = default_residual_tol(n) if residual_tol is None else float(residual_tol)
    if not rtol > 0:
        raise ParameterDomainError("residual_tol must be positive")
    size = seq.support_size
    if size is not None and n >= size:
        raise NoSolutionError(f"level {n} is not below the support size {size}")
    tol = min(_SOLVE_TOL, rtol / (10.0 * max(1.0, n)))

    cache: dict[float, tuple[float, float, float]] = {}

    def f(s):
        # psi'(s) - n as tail - head keeps full relative precision when both
        # sides are tiny, where psi'(s) itself only carries eps * n
        if s not in cache:
            ci = core_identity(seq, s, n, tol)
            d2 = psi_double_prime(seq, s, tol)
            cache[s] = (ci.tail.value - ci.head.value, d2.value, ci.error_bound)
        return cache[s]

    f0 = f(0.0)[0]
    if f0 >= 0.0:
        raise LevelTooSmallError(
            f"level {n} is below floor(psi'(0)) + 1 = {int(math.floor(f0 + n)) + 1}")

    lo, hi = 0.0, None
    guess = initial_guess(seq, n) if s0 is None else float(s0)
    if guess > 0.0 and math.isfinite(guess):
        if f(guess)[0] < 0.0:
            lo = guess
            step = max(1.0, abs(guess))
            while True:
                cand = lo + step
                if f(cand)[0] >= 0.0:
                    hi = cand
                    break
                lo, step = cand, 2.0 * step
                if cand > _S_LIMIT:
                    raise NoSolutionError(f"no bracket for level {n}")
        else:
            hi = guess
    if hi is None:
        hi = 1.0
        while f(hi)[0] < 0.0:
            lo, hi = hi, 2.0 * hi
            if hi > _S_LIMIT:
                raise NoSolutionError(f"no bracket for level {n}")

    def converged(s):
        # the residual bound alone cannot pin s when psi'' is tiny, so also
        # ask for a negligible Newton step or a residual at roundoff level
        r, d, err = f(s)
        if abs(r) > rtol:
            return False
        return abs(r) <= err or (d > 0 and abs(r) / d <= 4 * np.finfo(float).eps * max(1.0, abs(s)))

    s = hi if s0 is None or not lo <= guess <= hi else guess
    for _ in range(_MAX_ITER):
        r, d, _ = f(s)
        if converged(s):
            return _solution(seq, n, s, tol, "numeric")
        if r < 0:
            lo = s
        else:
            hi = s
        width = hi - lo
        nxt = s - r / d if d > 0 else math.nan
        if not (lo < nxt < hi) or abs(nxt - s) > 0.5 * width:
            nxt = 0.5 * (lo + hi)
        if nxt == s or width <= 4 * np.finfo(float).eps * max(1.0, abs(s)):
            break
        s = nxt
    r = f(s)[0]
    if abs(r) <= rtol:
        return _solution(seq, n, s, tol, "numeric")
    raise NoSolutionError(f"saddle iteration stalled at s={s!r} with residual {r:.3g}")


# ---------------------------------------------------------------------------
# Closed-form saddles
# ---------------------------------------------------------------------------

def ell_of(beta: float) -> int:
    """floor((1 + beta)/(2 beta)), guarded against roundoff at the integer boundaries."""
    x = (1.0 + beta) / (2.0 * beta)
    return int(math.floor(x + 1e-12 * max(1.0, x)))


@lru_cache(maxsize=64)
def expansion_coefficients(beta: float) -> tuple[float, ...]:
    """A_{1,beta}, ..., A_{l-1,beta} for the stretched-exponential saddle, l = floor((1+beta)/(2 beta)).

    Writing eps = sum_i A_i x^i with x = n^(-2 beta), the coefficients of x^i in
    (1+eps)^(1/beta) - 1 + (2/beta) sum_{odd j} C(1/beta-1, j) c_j (1+eps)^(1/beta-1-j) x^((j+1)/2)
    are set to zero one order at a time.
    """
    if not 0.0 < beta < 1.0:
        raise ParameterDomainError("beta must lie in (0, 1)")
    order = ell_of(beta) - 1
    if order <= 0:
        return ()
    p = 1.0 / beta
    odd_js = [j for j in range(1, int(math.floor(p))) if j % 2 == 1]

    def power(series: np.ndarray, expo: float) -> np.ndarray:
        # (1 + series)^expo truncated at x^order; series has zero constant term
        out = np.zeros(order + 1)
        out[0] = 1.0
        term = np.zeros(order + 1)
        term[0] = 1.0
        for m in range(1, order + 1):
            term = np.convolve(term, series)[: order + 1]
            out += binom(expo, m) * term
        return out

    A = np.zeros(order + 1)
    for i in range(1, order + 1):
        total = power(A, p) - np.eye(1, order + 1, 0)[0]
        for j in odd_js:
            shift = (j + 1) // 2
            if shift > order:
                continue
            part = power(A, p - 1.0 - j)
            coef = (2.0 / beta) * binom(p - 1.0, j) * c_coeff(j)
            total[shift:] += coef * part[: order + 1 - shift]
        A[i] = -beta * total[i]
    return tuple(float(a) for a in A[1:])


def alpha_beta(beta: float, n: float) -> float:
    """sum_i A_{i,beta} n^(-2 i beta)."""
    return float(sum(a * n ** (-2.0 * (i + 1) * beta)
                     for i, a in enumerate(expansion_coefficients(beta))))


def polynomial_saddle_formula(c: float, beta: float, n: float) -> float:
    return beta * math.log(n + 0.5) + beta * math.log(
        beta * math.sin(math.pi / beta) / (math.pi * c ** (1.0 / beta)))


def family_saddle_value(seq: SequenceDescriptor, n) -> float:
    """The approximate saddle for the four explicit families; no cgf evaluation."""
    if isinstance(seq, GnedinSinh):
        return polynomial_saddle_formula(seq.lam ** 2 / math.pi ** 2, 2.0, n)
    if isinstance(seq, Polynomial):
        return polynomial_saddle_formula(seq.c, seq.beta, n)
    if isinstance(seq, StretchedExp):
        b, c = seq.beta, seq.c
        if b < 1.0:
            return n ** b * (1.0 + alpha_beta(b, n)) - math.log(c)
        if b == 1.0:
            return n + 0.5 - math.log(c)
        return n ** b + n ** ((b - 1.0) / 2.0)
    raise UnsupportedFamilyError(f"no closed-form saddle for family {seq.family!r}")


def family_saddle(seq: SequenceDescriptor, n, tol: float = DEFAULT_TOL) -> SaddleSolution:
    """Approximate saddle from the family's expansion, with the residual evaluated exactly."""
    n = _check_level(n)
    s = family_saddle_value(seq, n)
    return _solution(seq, n, s, tol, "family_formula")


def initial_guess(seq: SequenceDescriptor, n) -> float:
    try:
        s = family_saddle_value(seq, n)
    except UnsupportedFamilyError:
        s = math.log(n + 1.0)
    return s if math.isfinite(s) and s > 0 else math.log(n + 1.0)


def legendre(seq: SequenceDescriptor, n, residual_tol: float | None = None) -> float:
    """I(n) = s_n psi'(s_n) - psi(s_n) at the numeric saddle."""
    sol = solve(seq, n, residual_tol)
    return sol.s * sol.psi_prime - sol.psi
