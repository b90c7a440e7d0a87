"""Special functions and validators for the asymptotic series expansions.

Contents
--------
zeta, hurwitz_zeta
    Riemann zeta via the accelerated alternating series and reflection,
    Hurwitz zeta via Euler-Maclaurin in log scale.
bernoulli_poly
    Bernoulli polynomials from exact rational Bernoulli numbers.
euler_beta, log_beta
    Euler beta function through log-gamma.
regularized_lower_gamma and log-domain variants
    Series / continued fraction for P(a, x) and Q(a, x).
h_eval, h2_eval, logistic_sum_constant
    The periodic correction functions that appear for geometric decay.
c_coeff, f_coeff
    n!(1 - 2^-n) zeta(n+1) and n!(1 - 2^-(n+1)) zeta(n+2).
adaptive_simpson, integrate_to_infinity
    Plain quadrature used by h2 and by the identity checks.
lemma_series
    Direct summation versus the leading terms of each series expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special as sc

from .errors import ParameterDomainError, PoleError, TruncationError

EPS = np.finfo(float).eps

# ---------------------------------------------------------------------------
# Riemann and Hurwitz zeta
# ---------------------------------------------------------------------------

_ETA_TERMS = 64


@lru_cache(maxsize=None)
def _borwein_weights(n: int = _ETA_TERMS) -> tuple[float, ...]:
    # d_k = n sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)
    term = 1.0 / n
    acc = 0.0
    d = []
    for i in range(n + 1):
        acc += term
        d.append(n * acc)
        term *= 4.0 * (n + i) * (n - i) / ((2 * i + 1) * (2 * i + 2))
    return tuple(d)


def _eta(s: float) -> float:
    """Dirichlet eta function for real s >= -1/2 (Borwein acceleration)."""
    d = _borwein_weights()
    n = len(d) - 1
    dn = d[n]
    terms = [(-1) ** k * (d[k] - dn) / (k + 1.0) ** s for k in range(n)]
    return -math.fsum(terms) / dn


def zeta(s: float) -> float:
    """Riemann zeta function at a real argument.

    Uses the alternating (eta) series with Borwein's acceleration for
    ``s >= -1/2`` and the functional equation below that.

    Raises
    ------
    PoleError
        If ``s == 1``.
    """
    s = float(s)
    if s == 1.0:
        raise PoleError("zeta has a pole at s = 1")
    if s >= -0.5:
        # near 0 the reflection would round 1 - s to the pole
        if s > 60.0:
            # eta converges trivially; avoid 1 - 2^(1-s) rounding
            return 1.0 + 2.0 ** (-s) + 3.0 ** (-s)
        denom = -math.expm1((1.0 - s) * math.log(2.0))
        return _eta(s) / denom
    # negative even integers are trivial zeros
    if s == math.floor(s) and int(s) % 2 == 0:
        return 0.0
    t = 1.0 - s
    log_mag = math.log(2.0) + (s - 1.0) * math.log(2.0 * math.pi) + math.lgamma(t)
    return math.exp(log_mag) * math.sin(math.pi * s / 2.0) * zeta(t)


_EM_ORDER = 14


def _log_hurwitz_scalar(s: float, q: float) -> float:
    # direct head up to a = q + N >= max(s, 20) + 2 * order, then Euler-Maclaurin
    # scaled by a^s, whose correction terms shrink by at least (s+2j)^2 / (2 pi a)^2
    if not s > 1.0 or not q > 0.0:
        raise ParameterDomainError("Hurwitz zeta needs s > 1 and q > 0")
    N = max(0, int(math.ceil(max(s, 20.0) + 2 * _EM_ORDER - q)))
    a = q + N
    b = bernoulli_numbers()
    corr = [a / (s - 1.0), 0.5]
    p = s / a  # s (s+1) ... (s+2j-2) / a^(2j-1)
    for j in range(1, _EM_ORDER + 1):
        t = float(b[2 * j]) / math.factorial(2 * j) * p
        corr.append(t)
        if abs(t) < 1e-18 * corr[0]:
            break
        p *= (s + 2 * j - 1) * (s + 2 * j) / (a * a)
    logs = [-s * math.log(a) + math.log(math.fsum(corr))]
    if N:
        logs.extend((-s * np.log(q + np.arange(N, dtype=float))).tolist())
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def log_hurwitz_zeta(s, q):
    """log of sum_{k>=0} (k + q)^(-s) for s > 1, q > 0; no underflow (vectorized)."""
    out = np.vectorize(_log_hurwitz_scalar, otypes=[float])(s, q)
    return out if out.ndim else float(out)


def hurwitz_zeta(s, q):
    """Hurwitz zeta sum_{k>=0} (k + q)^(-s) for s > 1, q > 0 (vectorized).

    Euler-Maclaurin after a direct head; relative accuracy about 1e-15
    over the whole range, where library routines lose digits for large s.
    """
    return np.exp(log_hurwitz_zeta(s, q))


# ---------------------------------------------------------------------------
# Bernoulli numbers and polynomials
# ---------------------------------------------------------------------------

BERNOULLI_MAX = 30


@lru_cache(maxsize=None)
def bernoulli_numbers(kmax: int = BERNOULLI_MAX) -> tuple[Fraction, ...]:
    """Exact Bernoulli numbers B_0..B_kmax with B_1 = -1/2."""
    b = [Fraction(1)]
    for m in range(1, kmax + 1):
        acc = sum(Fraction(math.comb(m + 1, j)) * b[j] for j in range(m))
        b.append(-acc / (m + 1))
    return tuple(b)


def bernoulli_poly(k: int, x):
    """Bernoulli polynomial B_k evaluated at ``x`` (scalar or array).

    B_k(x) = sum_j C(k, j) B_j x^(k-j); supported for 0 <= k <= 30.
    """
    if k < 0:
        raise ParameterDomainError("k must be nonnegative")
    if k > BERNOULLI_MAX:
        raise ParameterDomainError(f"Bernoulli polynomials supported up to k={BERNOULLI_MAX}")
    b = bernoulli_numbers()
    coeffs = [float(math.comb(k, j) * b[j]) for j in range(k + 1)]
    # Horner in x with coefficient of x^(k-j) = coeffs[j]
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for cj in coeffs:
        out = out * x + cj
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Beta function
# ---------------------------------------------------------------------------

def log_beta(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise ParameterDomainError("beta function needs positive arguments")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def euler_beta(a: float, b: float) -> float:
    """Gamma(a) Gamma(b) / Gamma(a + b)."""
    return math.exp(log_beta(a, b))


# ---------------------------------------------------------------------------
# Incomplete gamma
# ---------------------------------------------------------------------------

_GAMMA_ITMAX = 10_000
_GAMMA_EPS = 1e-16
_FPMIN = 1e-300


def _log_gser(a: float, x: float) -> float:
    """log P(a, x) by the power series (good for x < a + 1)."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    else:
        raise TruncationError("incomplete gamma series did not converge")
    return a * math.log(x) - x - math.lgamma(a) + math.log(total)


def _log_gcf(a: float, x: float) -> float:
    """log Q(a, x) by the Lentz continued fraction (good for x >= a + 1)."""
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    else:
        raise TruncationError("incomplete gamma continued fraction did not converge")
    return a * math.log(x) - x - math.lgamma(a) + math.log(h)


def _check_gamma_args(a: float, x: float) -> None:
    if not a > 0:
        raise ParameterDomainError("shape must be positive")
    if x < 0:
        raise ParameterDomainError("argument must be nonnegative")


def log_regularized_lower_gamma(a: float, x: float) -> float:
    """log P(a, x); -inf at x = 0."""
    _check_gamma_args(a, x)
    if x == 0:
        return -math.inf
    if x < a + 1.0:
        return _log_gser(a, x)
    return math.log1p(-math.exp(_log_gcf(a, x)))


def log_regularized_upper_gamma(a: float, x: float) -> float:
    """log Q(a, x) = log(1 - P(a, x))."""
    _check_gamma_args(a, x)
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return math.log1p(-math.exp(_log_gser(a, x)))
    return _log_gcf(a, x)


def regularized_lower_gamma(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a), i.e. P{Gamma(a, 1) <= x}."""
    return math.exp(log_regularized_lower_gamma(a, x))


def log_upper_gamma(a: float, x: float) -> float:
    """log of the unregularized upper incomplete gamma Gamma(a, x)."""
    return math.lgamma(a) + log_regularized_upper_gamma(a, x)


# ---------------------------------------------------------------------------
# Coefficient constants
# ---------------------------------------------------------------------------

def c_coeff(n: int) -> float:
    """n! (1 - 2^-n) zeta(n + 1), n >= 1."""
    if n < 1:
        raise ParameterDomainError("n >= 1 required")
    return math.factorial(n) * (1.0 - 2.0 ** (-n)) * zeta(n + 1.0)


def f_coeff(n: int) -> float:
    """n! (1 - 2^-(n+1)) zeta(n + 2), n >= 0."""
    if n < 0:
        raise ParameterDomainError("n >= 0 required")
    return math.factorial(n) * (1.0 - 2.0 ** (-(n + 1))) * zeta(n + 2.0)


# ---------------------------------------------------------------------------
# h, h2 and the logistic-sum constant
# ---------------------------------------------------------------------------

_H_TERMS = 64  # tail beyond this is below 2 e^-63


def _check_unit(b: float) -> None:
    if not 0.0 <= b <= 1.0:
        raise ParameterDomainError("b must lie in [0, 1]")


def h_eval(b: float) -> float:
    """Periodic correction h(b) on [0, 1].

    h(b) = sum_{k>=0} 1/(1+e^{k-b}) - sum_{k>=1} 1/(1+e^{k+b}) - b - 1/2.
    """
    _check_unit(b)
    k = np.arange(_H_TERMS, dtype=float)
    pos = sc.expit(b - k)
    neg = sc.expit(-(k[1:] + b))
    return math.fsum(np.concatenate([pos, -neg, [-b, -0.5]]))


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(fa, fm, fb, a, b)
    total = []
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(flo, flm, fmid, lo, mid)
        right = simpson(fmid, frm, fhi, mid, hi)
        delta = left + right - est
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            total.append(left + right + delta / 15.0)
        else:
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2.0, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2.0, depth + 1))
    return math.fsum(total)


def integrate_to_infinity(f: Callable[[float], float], a: float, tol: float = 1e-10,
                          width: float = 1.0, max_doublings: int = 200) -> float:
    """Integrate ``f`` over [a, inf) by doubling panels until they are negligible."""
    total = []
    lo = a
    quiet = 0
    for _ in range(max_doublings):
        hi = lo + width
        piece = adaptive_simpson(f, lo, hi, tol)
        total.append(piece)
        acc = math.fsum(total)
        quiet = quiet + 1 if abs(piece) <= tol * max(1.0, abs(acc)) else 0
        if quiet >= 3:
            return acc
        lo = hi
        width *= 2.0
    raise TruncationError("integral tail did not become negligible")


def h2_eval(b: float, tol: float = 1e-15) -> float:
    """h2(b) = integral of h over [0, b]."""
    _check_unit(b)
    if b == 0.0:
        return 0.0
    return adaptive_simpson(h_eval, 0.0, b, tol)


def logistic_sum_constant() -> float:
    """log 2 + 2 sum_{m>=1} log(1 + e^-m)."""
    m = np.arange(1, 60, dtype=float)
    return math.log(2.0) + 2.0 * math.fsum(np.log1p(np.exp(-m)))


# ---------------------------------------------------------------------------
# Series expansions: direct sums versus leading terms
# ---------------------------------------------------------------------------

LEMMA_IDS = ("A1", "A2", "A3", "B1", "B2", "B3", "Beta1", "Beta2", "D1", "D2")


@dataclass(frozen=True)
class DirectSum:
    value: float
    error_bound: float
    terms_used: int


@dataclass(frozen=True)
class LemmaSeriesResult:
    """Direct evaluation of a series next to its asymptotic expansion.

    ``B2`` is an equivalence rather than an expansion, so its ``direct``
    field holds the ratio of the sum to the leading term and ``expansion``
    is 1; the gap is then a relative error.
    """

    lemma_id: str
    a: float
    beta: float
    direct: DirectSum
    expansion: float
    gap: float


def _fsum_bound(terms: np.ndarray) -> tuple[float, float]:
    val = math.fsum(terms)
    return val, 4.0 * EPS * float(np.sum(np.abs(terms))) + EPS * abs(val)


def _power_sum(a: float, beta: float, kind: str) -> DirectSum:
    """Sums over k >= 1 of functions of x = (a k)^beta.

    kind: 'inv' 1/(1+x), 'var' x/(1+x)^2, 'log' log(1 + 1/x).
    Head up to K = ceil(4/a) summed directly; the rest expanded in 1/x
    with Hurwitz zeta, which converges since (a (K+1))^-beta <= 4^-beta.
    """
    K = int(math.ceil(4.0 / a))
    k = np.arange(1, K + 1, dtype=float)
    logx = beta * np.log(a * k)
    if kind == "inv":
        head = sc.expit(-logx)
    elif kind == "var":
        head = sc.expit(logx) * sc.expit(-logx)
    else:
        head = np.logaddexp(0.0, -logx)
    hval, herr = _fsum_bound(head)
    tail = []
    rem = math.inf
    for j in range(1, 200):
        w = math.exp(-j * beta * math.log(a) + log_hurwitz_zeta(j * beta, K + 1.0))
        if kind == "inv":
            t = (-1) ** (j + 1) * w
        elif kind == "var":
            t = (-1) ** (j + 1) * j * w
        else:
            t = (-1) ** (j + 1) * w / j
        if abs(t) < 1e-17 * max(1.0, abs(hval)):
            rem = abs(t)
            break
        tail.append(t)
    total = math.fsum([hval, *tail])
    err = herr + rem + 1e-14 * math.fsum(map(abs, tail))
    return DirectSum(total, err, K)


def _exp_sum(L: float, beta: float, kind: str) -> DirectSum:
    """Sums over k >= 1 with x_k = k^beta - L (a = e^-L).

    kind: 'inv' 1/(1+a e^{k^b}); 'var' a e^{k^b}/(1+a e^{k^b})^2;
    'log' log(1 + 1/(a e^{k^b})).  Every term is at most e^{-x_k} once
    x_k > 0, so the remainder is bounded by e^L Gamma(1/b, K^b)/b.
    """
    K = int(math.ceil((L + 45.0) ** (1.0 / beta)))
    k = np.arange(1, K + 1, dtype=float)
    x = k ** beta - L
    if kind == "inv":
        terms = sc.expit(-x)
    elif kind == "var":
        terms = sc.expit(x) * sc.expit(-x)
    else:
        terms = np.logaddexp(0.0, -x)
    val, err = _fsum_bound(terms)
    log_tail = L + log_upper_gamma(1.0 / beta, float(K) ** beta) - math.log(beta)
    return DirectSum(val, err + math.exp(log_tail), K)


def _check_beta(lemma_id: str, beta: float) -> None:
    ok = {
        "A": beta > 1.0,
        "B": 0.0 < beta < 1.0,
        "D": beta > 1.0,
    }
    fam = lemma_id[0] if lemma_id[:4] != "Beta" else None
    if fam is not None and not ok[fam]:
        raise ParameterDomainError(f"{lemma_id} is not defined for beta={beta}")


def lemma_series(lemma_id: str, a: float | None = None, beta: float = 2.0, *,
                 log_inv_a: float | None = None) -> LemmaSeriesResult:
    """Evaluate one series directly and through its expansion as ``a -> 0+``.

    Parameters
    ----------
    lemma_id : str
        One of ``LEMMA_IDS``.
        ``A1``: sum 1/(1+(ak)^b); ``A2``: sum (ak)^b/(1+(ak)^b)^2;
        ``A3``: sum log(1+(ak)^-b), all for b > 1.
        ``B1``: sum 1/(1+a e^{k^b}); ``B2``: a * sum e^{k^b}/(1+a e^{k^b})^2;
        ``B3``: sum log(1+1/(a e^{k^b})), all for 0 < b < 1.
        ``Beta1``, ``Beta2``: the ``B1``/``B3`` sums with b = 1.
        ``D1``, ``D2``: the ``B1``/``B3`` sums for b > 1.
    a : float, optional
        Small positive parameter.
    log_inv_a : float, optional
        log(1/a), for values of ``a`` that underflow.  Exactly one of ``a``
        and ``log_inv_a`` must be given.
    beta : float
        Exponent; ignored for ``Beta1``/``Beta2``.
    """
    if lemma_id not in LEMMA_IDS:
        raise ParameterDomainError(f"unknown series id {lemma_id!r}")
    if (a is None) == (log_inv_a is None):
        raise ParameterDomainError("give exactly one of a and log_inv_a")
    if a is not None:
        if not 0.0 < a < 1.0:
            raise ParameterDomainError("a must lie in (0, 1)")
        L = -math.log(a)
    else:
        L = float(log_inv_a)
        if not L > 0.0:
            raise ParameterDomainError("log_inv_a must be positive")
        a = math.exp(-L)
    if lemma_id[0] == "A" and a < 1e-7:
        raise ParameterDomainError("power-law series need a >= 1e-7")
    _check_beta(lemma_id, beta)
    b = float(beta)

    if lemma_id == "A1":
        direct = _power_sum(a, b, "inv")
        expansion = math.pi / (b * a * math.sin(math.pi / b)) - 0.5
    elif lemma_id == "A2":
        direct = _power_sum(a, b, "var")
        expansion = math.pi / (b * b * a * math.sin(math.pi / b))
    elif lemma_id == "A3":
        direct = _power_sum(a, b, "log")
        expansion = (math.pi / (a * math.sin(math.pi / b)) - 0.5 * b * L
                     - 0.5 * b * math.log(2.0 * math.pi))
    elif lemma_id == "B1":
        direct = _exp_sum(L, b, "inv")
        inv = 1.0 / b
        corr = [sc.binom(inv - 1.0, n) * c_coeff(n) * L ** (inv - 1.0 - n)
                for n in range(1, int(math.floor(inv)), 2)]
        expansion = L ** inv + (2.0 / b) * math.fsum(corr) - 0.5
    elif lemma_id == "B2":
        raw = _exp_sum(L, b, "var")
        lead = L ** (1.0 / b - 1.0) / b
        direct = DirectSum(raw.value / lead, raw.error_bound / lead, raw.terms_used)
        expansion = 1.0
    elif lemma_id == "B3":
        direct = _exp_sum(L, b, "log")
        inv = 1.0 / b
        corr = [sc.binom(inv - 1.0, n) * f_coeff(n) * L ** (inv - 1.0 - n)
                for n in range(0, int(math.floor(inv)), 2)]
        expansion = (b / (1.0 + b) * L ** (1.0 + inv) + (2.0 / b) * math.fsum(corr)
                     - 0.5 * L - zeta(-b))
    elif lemma_id == "Beta1":
        b = 1.0
        direct = _exp_sum(L, 1.0, "inv")
        expansion = L - 0.5 + h_eval(L - math.floor(L))
    elif lemma_id == "Beta2":
        b = 1.0
        direct = _exp_sum(L, 1.0, "log")
        expansion = 0.5 * L * L - 0.5 * L + logistic_sum_constant() + h2_eval(L - math.floor(L))
    elif lemma_id == "D1":
        direct = _exp_sum(L, b, "inv")
        ca = math.floor(L ** (1.0 / b))
        expansion = (ca - 1.0 + float(sc.expit(L - ca ** b))
                     + float(sc.expit(L - (ca + 1.0) ** b)))
    else:  # D2
        direct = _exp_sum(L, b, "log")
        root = L ** (1.0 / b)
        ca = math.floor(root)
        frac = root - ca
        bern = [(-1) ** k * sc.binom(b + 1.0, k) * bernoulli_poly(k, frac)
                * L ** (1.0 - (k - 1.0) / b) for k in range(1, int(math.floor(b)) + 2)]
        expansion = math.fsum([
            float(np.logaddexp(0.0, L - (ca + 1.0) ** b)),
            float(np.logaddexp(0.0, ca ** b - L)),
            ca * L,
            -L ** (1.0 + 1.0 / b) / (b + 1.0),
            -zeta(-b),
            -math.fsum(bern) / (b + 1.0),
        ])
    return LemmaSeriesResult(lemma_id, a, b, direct, expansion, abs(direct.value - expansion))


def stated_error_scale(lemma_id: str, beta: float, a: float | None = None, *,
                       log_inv_a: float | None = None) -> float:
    """Size of the error term claimed for an expansion, up to a constant.

    ``o(1)`` and ``O(1)`` claims return 1 so that only shrinkage is checked.
    """
    L = -math.log(a) if a is not None else float(log_inv_a)
    if a is None:
        a = math.exp(-L)
    b = float(beta)
    if lemma_id == "A1":
        return a
    if lemma_id == "A2":
        return 1.0
    if lemma_id == "A3":
        return a ** min(1.0, (b - 1.0) ** 2)
    if lemma_id == "B1":
        inv = 1.0 / b
        if inv == math.floor(inv):
            return L ** (1.0 - inv)
        return L ** max(inv - math.floor(inv) - 1.0, 1.0 - inv)
    if lemma_id in ("B2", "B3", "D2"):
        return 1.0
    if lemma_id in ("Beta1", "Beta2"):
        return a
    if lemma_id == "D1":
        return math.exp(-0.5 * b * L ** (1.0 - 1.0 / b))
    raise ParameterDomainError(f"unknown series id {lemma_id!r}")
