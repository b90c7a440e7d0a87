"""Cumulant function psi(s) = sum_k log(r_k e^s + 1 - r_k) and its derivatives.

Each term is evaluated through the tilted log-odds
x_k = s + log r_k - log(1 - r_k), so that e^s is never formed:

    psi_k   = logaddexp(log(1 - r_k), log r_k + s)
    psi'_k  = expit(x_k)          (tilted success probability)
    psi''_k = expit(x_k) expit(-x_k)

Infinite series are truncated at K, found by doubling, with either a crude
bound built from the family's tail bound or, when the family exposes odds
power sums, an alternating expansion of the remainder.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ParameterDomainError, TruncationError
from .sequences import SequenceDescriptor, TailSumBound

EPS = np.finfo(float).eps
DEFAULT_TOL = 1e-10
DEFAULT_MAX_TERMS = 10_000_000
_K_START = 64
_ANALYTIC_S_MAX = 600.0
_ODDS_TERMS = 80
_LOGW_REL = 4.0 * EPS

KINDS = ("psi", "dpsi", "d2psi", "head", "lin", "inv_lin", "poisson")
TAIL_KINDS = ("psi", "dpsi", "d2psi", "lin", "poisson")


def max_terms() -> int:
    """Term cap, overridable through TAILFORGE_MAX_TERMS."""
    raw = os.environ.get("TAILFORGE_MAX_TERMS")
    if raw is None:
        return DEFAULT_MAX_TERMS
    try:
        val = int(float(raw))
    except ValueError:
        raise ParameterDomainError(f"TAILFORGE_MAX_TERMS={raw!r} is not an integer") from None
    if val < 1:
        raise ParameterDomainError("TAILFORGE_MAX_TERMS must be positive")
    return val


@dataclass(frozen=True)
class BoundedValue:
    """A value with a rigorous bound on its total (truncation + rounding) error."""

    value: float
    error_bound: float
    terms_used: int

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return abs(x - self.value) <= self.error_bound + slack


@dataclass(frozen=True)
class CgfValues:
    s: float
    psi: BoundedValue
    psi_prime: BoundedValue
    psi_double_prime: BoundedValue


# ---------------------------------------------------------------------------
# Per-term evaluation
# ---------------------------------------------------------------------------

def _terms(seq: SequenceDescriptor, s: float, k: np.ndarray, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Terms and per-term error weights.

    A term is a smooth function of s + log r_k and log(1 - r_k), whose
    absolute errors are about eps times their magnitudes; the weight is
    |term| times that conditioning (plus |log(1 - r_k)| for psi).
    """
    lr = seq.log_values(k)
    if kind == "lin":
        t = np.exp(lr + s)
        return t, t * (1.0 + abs(s) + np.abs(lr))
    if kind == "inv_lin":
        t = np.exp(-lr - s)
        return t, t * (1.0 + abs(s) + np.abs(lr))
    l1 = seq.log_complements(k)
    if kind == "poisson":
        return -l1, -l1
    # r_k = 1 gives log(1 - r_k) = -inf and exact terms
    a1 = np.where(np.isfinite(l1), np.abs(l1), 0.0)
    cond = 1.0 + abs(s) + np.abs(lr) + a1
    if kind == "psi":
        t = np.logaddexp(l1, lr + s)
        return t, np.abs(t) * cond + a1
    with np.errstate(invalid="ignore"):
        x = s + lr - l1
    x = np.where(np.isnan(x), np.inf, x)
    if kind == "dpsi":
        t = expit(x)
    elif kind == "head":
        t = expit(-x)
    elif kind == "d2psi":
        t = expit(x) * expit(-x)
    else:
        raise ParameterDomainError(f"unknown series kind {kind!r}")
    return t, t * cond


def _accumulate(terms: np.ndarray) -> tuple[float, float]:
    return math.fsum(terms), float(np.sum(np.abs(terms)))


def term_values(seq: SequenceDescriptor, s: float, k: np.ndarray, kind: str) -> np.ndarray:
    """Terms of the requested series at indices ``k``.

    kinds: ``psi``, ``dpsi``, ``d2psi``; ``head`` = (1-r)/(r e^s + 1 - r);
    ``lin`` = r e^s; ``inv_lin`` = e^-s / r; ``poisson`` = -log(1 - r).
    """
    return _terms(seq, s, k, kind)[0]


def finite_sum(seq: SequenceDescriptor, s: float, kind: str, k_lo: int, k_hi: int) -> BoundedValue:
    """sum_{k=k_lo}^{k_hi} of a term kind, with a rounding allowance."""
    if k_hi < k_lo:
        return BoundedValue(0.0, 0.0, 0)
    t, w = _terms(seq, s, np.arange(k_lo, k_hi + 1), kind)
    return BoundedValue(math.fsum(t), float(8.0 * EPS * np.sum(w)), k_hi - k_lo + 1)


# ---------------------------------------------------------------------------
# Remainder of the series beyond K
# ---------------------------------------------------------------------------

def _crude_tail_log(kind: str, s: float, tb: TailSumBound, r_next: float) -> float | None:
    """log of a bound on the remainder beyond K (value estimate 0)."""
    if kind == "poisson":
        if r_next > 0.5:
            return None
        return math.log(2.0) + tb.log_bound
    if kind == "lin":
        return s + tb.log_bound
    if s >= 0.0:
        return s + tb.log_bound
    if r_next > 0.5:
        return None
    if kind == "psi":
        return math.log(2.0) + tb.log_bound
    return math.log(2.0) + s + tb.log_bound


def _analytic_tail(kind: str, s: float, logW: np.ndarray | None, logw: float, target: float):
    """Alternating odds expansion of the remainder; (estimate, bound) or None.

    ``logW`` holds log W_i; ``logw`` is log of the largest remaining odds
    r/(1-r). The expansion needs both it and it + s below log(1/2).
    """
    if logW is None or not np.isfinite(logW[0]) or s > _ANALYTIC_S_MAX:
        return None
    logy = logw + s
    if logy > math.log(0.5) or logw > math.log(0.5):
        return None
    logW1 = float(logW[0])
    i_all = np.arange(1, logW.size + 1, dtype=float)
    sign = np.where(i_all % 2 == 1, 1.0, -1.0)
    for m in range(1, logW.size + 1):
        if kind == "psi":
            rem = 2.0 * (math.exp(s + logW1 + m * logy) + math.exp(logW1 + m * logw)) / (m + 1)
        elif kind == "dpsi":
            rem = 2.0 * math.exp(s + logW1 + m * logy)
        elif kind == "d2psi":
            rem = 4.0 * (m + 1) * math.exp(s + logW1 + m * logy)
        elif kind == "lin":
            rem = 2.0 * math.exp(s + logW1 + m * logw)
        else:  # poisson
            rem = 2.0 * math.exp(logW1 + m * logw) / (m + 1)
        if rem <= target or m == logW.size:
            break
    i = i_all[:m]
    sg = sign[:m]
    lw = logW[:m]
    if kind == "psi":
        # (e^{is} - 1) W_i / i, in logs when e^{is} alone would overflow
        if s > 0.0:
            t = sg * np.exp(lw + i * s + np.log(-np.expm1(-i * s))) / i
        else:
            t = sg * np.exp(lw) * np.expm1(i * s) / i
    elif kind == "dpsi":
        t = sg * np.exp(i * s + lw)
    elif kind == "d2psi":
        t = sg * i * np.exp(i * s + lw)
    elif kind == "lin":
        t = sg * np.exp(s + lw)
    else:
        t = sg * np.exp(lw) / i
    val, mag = _accumulate(t)
    # log W_i carries relative error ~ eps |log W_i|, and the exponent adds i |s| eps
    noise = float(np.sum(np.abs(t) * (_LOGW_REL * (1.0 + np.abs(lw) + i * abs(s)))))
    return float(val), float(rem + noise + 4.0 * EPS * mag)


def series(seq: SequenceDescriptor, s: float, kinds=("psi", "dpsi", "d2psi"),
           tol: float = DEFAULT_TOL, start: int = 0, cap: int | None = None) -> dict[str, BoundedValue]:
    """sum_{k>start} of each requested term kind, with rigorous error bounds.

    The truncation point K doubles until every truncation bound is at most
    ``tol * max(1, |value|)``.

    Raises
    ------
    TruncationError
        If the tolerance is not met within ``cap`` terms (default: the
        TAILFORGE_MAX_TERMS cap of 10^7).
    """
    if not math.isfinite(s):
        raise ParameterDomainError("s must be finite")
    if not tol > 0:
        raise ParameterDomainError("tol must be positive")
    for kind in kinds:
        if kind not in TAIL_KINDS:
            raise ParameterDomainError(f"series kind {kind!r} has no tail estimate")
    cap = max_terms() if cap is None else cap
    size = seq.support_size

    sums = {kind: [] for kind in kinds}
    mags = {kind: 0.0 for kind in kinds}
    done_to = start

    def extend(K: int) -> None:
        nonlocal done_to
        if K <= done_to:
            return
        k = np.arange(done_to + 1, K + 1)
        for kind in kinds:
            t, w = _terms(seq, s, k, kind)
            sums[kind].append(math.fsum(t))
            mags[kind] += float(np.sum(w))
        done_to = K

    if size is not None:
        extend(size)
        return {kind: BoundedValue(math.fsum(sums[kind]), float(8.0 * EPS * mags[kind]), max(size - start, 0))
                for kind in kinds}

    K = max(start, seq.k0, start + _K_START)
    best = math.inf
    while True:
        extend(K)
        tb = seq.tail_sum_bound(K)
        kk = np.array([K + 1])
        log_r_next = float(seq.log_values(kk)[0])
        r_next = math.exp(log_r_next)
        log_omega = log_r_next - float(seq.log_complements(kk)[0]) if r_next < 1.0 else math.inf
        analytic_ok = (s <= _ANALYTIC_S_MAX and log_omega <= math.log(0.5)
                       and log_omega + s <= math.log(0.5))
        W = None
        out = {}
        worst = 0.0
        for kind in kinds:
            head = math.fsum(sums[kind])
            target = tol * max(1.0, abs(head))
            tail_val, tail_err = 0.0, math.inf
            if analytic_ok:
                if W is None:
                    W = seq.log_odds_power_sums(K, _ODDS_TERMS)
                res = _analytic_tail(kind, s, W, log_omega, 0.5 * target)
                if res is not None:
                    tail_val, tail_err = res
            if not math.isfinite(tail_err):
                lb = _crude_tail_log(kind, s, tb, r_next)
                if lb is not None:
                    tail_err = math.exp(lb) if lb < 709 else math.inf
            val = head + tail_val
            err = tail_err
            worst = max(worst, err / max(1.0, abs(val)))
            out[kind] = BoundedValue(val, float(err + 8.0 * EPS * (mags[kind] + abs(tail_val))),
                                     K - start)
        best = min(best, worst)
        if worst <= tol:
            return out
        if 2 * K > cap:
            raise TruncationError(
                f"relative error {worst:.3g} exceeds tol {tol:.3g} with {K} terms",
                best_bound=best, terms=K, partial=out)
        K *= 2


# ---------------------------------------------------------------------------
# Public evaluators
# ---------------------------------------------------------------------------

def evaluate(seq: SequenceDescriptor, s: float, tol: float = DEFAULT_TOL) -> CgfValues:
    """psi, psi' and psi'' at ``s`` in one pass."""
    res = series(seq, s, ("psi", "dpsi", "d2psi"), tol)
    psi_v = BoundedValue(0.0, 0.0, res["psi"].terms_used) if s == 0.0 else res["psi"]
    return CgfValues(float(s), psi_v, res["dpsi"], res["d2psi"])


def psi(seq: SequenceDescriptor, s: float, tol: float = DEFAULT_TOL) -> BoundedValue:
    """psi(s) = sum_k log(r_k e^s + 1 - r_k)."""
    if s == 0.0:
        return BoundedValue(0.0, 0.0, 0)
    return series(seq, s, ("psi",), tol)["psi"]


def psi_prime(seq: SequenceDescriptor, s: float, tol: float = DEFAULT_TOL) -> BoundedValue:
    """psi'(s) = sum_k r_k e^s / (r_k e^s + 1 - r_k), the tilted mean."""
    return series(seq, s, ("dpsi",), tol)["dpsi"]


def psi_double_prime(seq: SequenceDescriptor, s: float, tol: float = DEFAULT_TOL) -> BoundedValue:
    """psi''(s), the tilted variance; equals b(e^s) in the generating-function view."""
    return series(seq, s, ("d2psi",), tol)["d2psi"]


hayman_b = psi_double_prime


def tilted_prob(seq: SequenceDescriptor, s: float, k):
    """r_k e^s / (r_k e^s + 1 - r_k) for scalar or array ``k``."""
    arr = np.atleast_1d(np.asarray(k))
    out = term_values(seq, s, arr, "dpsi")
    return float(out[0]) if np.ndim(k) == 0 else out


class TiltedSequence(SequenceDescriptor):
    """Success probabilities under the exponentially tilted measure."""

    family = "tilted"

    def __init__(self, base: SequenceDescriptor, s: float):
        if not math.isfinite(s):
            raise ParameterDomainError("s must be finite")
        self.base = base
        self.s = float(s)

    def params(self):
        return {"base": self.base.to_dict(), "s": self.s}

    @property
    def k0(self):
        return self.base.k0

    @property
    def support_size(self):
        return self.base.support_size

    def tilted_prob(self, k):
        return tilted_prob(self.base, self.s, k)

    def _log_values(self, k):
        lr = self.base._log_values(k)
        l1 = self.base._log_complements(k)
        with np.errstate(invalid="ignore"):
            x = self.s + lr - l1
        x = np.where(np.isnan(x), np.inf, x)
        return -np.logaddexp(0.0, -x)

    def _log_complements(self, k):
        lr = self.base._log_values(k)
        l1 = self.base._log_complements(k)
        with np.errstate(invalid="ignore"):
            x = self.s + lr - l1
        x = np.where(np.isnan(x), np.inf, x)
        return -np.logaddexp(0.0, x)

    def _tail_log_bound(self, K):
        tb = self.base.tail_sum_bound(K)
        lb = _crude_tail_log("dpsi", self.s, tb, self.base.value(K + 1))
        return math.inf if lb is None else lb

    def log_odds_power_sums(self, K, m):
        logW = self.base.log_odds_power_sums(K, m)
        if logW is None:
            return None
        return logW + self.s * np.arange(1, m + 1)


@dataclass(frozen=True)
class CoreIdentity:
    """Both sides of sum_{k<=n} (1-r_k)/(r_k e^s+1-r_k) = sum_{k>n} r_k e^s/(r_k e^s+1-r_k)."""

    head: BoundedValue
    tail: BoundedValue

    @property
    def gap(self) -> float:
        return self.head.value - self.tail.value

    @property
    def error_bound(self) -> float:
        return self.head.error_bound + self.tail.error_bound


def core_identity(seq: SequenceDescriptor, s: float, n: int, tol: float = DEFAULT_TOL) -> CoreIdentity:
    n = int(n)
    if n < 0:
        raise ParameterDomainError("n must be nonnegative")
    size = seq.support_size
    hi = n if size is None else min(n, size)
    head = finite_sum(seq, s, "head", 1, hi)
    if size is not None and n >= size:
        tail = BoundedValue(0.0, 0.0, 0)
    else:
        tail = series(seq, s, ("dpsi",), tol, start=n)["dpsi"]
    return CoreIdentity(head, tail)


def core_identity_gap(seq: SequenceDescriptor, s: float, n: int, tol: float = DEFAULT_TOL) -> float:
    """head_sum - tail_sum, which equals n - psi'(s) identically."""
    return core_identity(seq, s, n, tol).gap
