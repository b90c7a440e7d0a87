"""Exact log-domain pmf by convolution, closed-form oracles and tilted Monte Carlo."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .cgf import DEFAULT_TOL, TiltedSequence, psi, series, tilted_prob
from .errors import (LevelTooSmallError, NoSolutionError, ParameterDomainError, TableTooShortError,
                     TruncationError)
from .rng import stream
from .saddle import solve
from .sequences import SequenceDescriptor
from .specfun import log_regularized_lower_gamma

_MAX_HEAD = 1 << 17
_ODDS_MAX = 80


@dataclass
class LogPmf:
    """log P{Y_K = j} for j = 0..n_max.

    ``log_beyond_bound`` bounds log P{Y >= n_max + 1}; ``tail_folded`` marks
    tables where the indicators past K entered through their odds power
    sums instead of being dropped.
    """

    log_p: np.ndarray
    K_used: int
    stabilization_delta: float
    tail_drop_bound: float
    log_beyond_bound: float = 0.0
    tail_folded: bool = False

    @property
    def n_max(self) -> int:
        return len(self.log_p) - 1

    def __getitem__(self, j: int) -> float:
        return float(self.log_p[j])

    def to_dict(self) -> dict:
        return {"log_p": [float(x) for x in self.log_p], "K_used": self.K_used,
                "stabilization_delta": self.stabilization_delta,
                "tail_drop_bound": self.tail_drop_bound,
                "log_beyond_bound": self.log_beyond_bound, "tail_folded": self.tail_folded}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "log_p"])
        for j, v in enumerate(self.log_p):
            w.writerow([j, repr(float(v))])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------

def _head_table(seq: SequenceDescriptor, K: int, n_max: int, lp: np.ndarray | None = None,
                k_from: int = 1) -> np.ndarray:
    """Fold Bernoulli(r_k), k = k_from..K, into a log table of length n_max + 1."""
    if lp is None:
        lp = np.full(n_max + 1, -np.inf)
        lp[0] = 0.0
    if K < k_from:
        return lp
    k = np.arange(k_from, K + 1)
    lr = seq.log_values(k)
    l1 = seq.log_complements(k)
    with np.errstate(invalid="ignore"):
        for a, b in zip(lr, l1):
            stay = lp + b
            move = np.empty_like(lp)
            move[0] = -np.inf
            move[1:] = lp[:-1] + a
            lp = np.logaddexp(stay, move)
    return lp


def _log_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    out = np.empty(n)
    for j in range(n):
        out[j] = logsumexp(a[: j + 1] + b[j::-1])
    return out


def folded_tail_table(seq: SequenceDescriptor, K: int, n_max: int) -> np.ndarray | None:
    """log P{sum_{k>K} 1_k = j} from the odds power sums W_i, or None.

    With omega the odds, the tail pgf is prod(1 - r_k) prod(1 + omega_k z).
    Elementary symmetric sums follow from Newton's identities written for
    e_j j! / W_1^j, which stays of order one and avoids underflow.
    """
    if K < seq.k0:
        return None
    m = max(2, min(n_max, _ODDS_MAX))
    logW = seq.log_odds_power_sums(K, m)
    if logW is None or not np.isfinite(logW[0]):
        return None
    if seq.odds_at(K + 1) > 0.5:
        return None
    logW = np.asarray(logW, dtype=float)
    W = np.exp(logW)
    logW1 = float(logW[0])
    u = np.exp(logW - np.arange(1, len(W) + 1) * logW1)
    i = np.arange(1, len(W) + 1)
    log_prod = -math.fsum(((-1.0) ** (i + 1) * W / i).tolist())  # sum log(1 - r_k)
    e = np.zeros(n_max + 1)
    e[0] = 1.0
    for j in range(1, n_max + 1):
        acc = []
        fac = 1.0  # (j-1)!/(j-i)!
        for ii in range(1, min(j, len(W)) + 1):
            if ii > 1:
                fac *= (j - ii + 1)
            t = u[ii - 1] * fac * e[j - ii]
            acc.append(t if ii % 2 == 1 else -t)
            if t == 0.0 and ii > 2:
                break
        e[j] = math.fsum(acc)
    if np.any(e[1:] <= 0):
        return None
    j = np.arange(n_max + 1)
    return log_prod + np.log(e) + j * logW1 - gammaln(j + 1)


def _table(seq, K, n_max, fold):
    head = _head_table(seq, K, n_max)
    if not fold:
        return head, False
    tail = folded_tail_table(seq, K, n_max)
    if tail is None:
        return head, False
    return _log_convolve(head, tail), True


def _delta(a: np.ndarray, b: np.ndarray) -> float:
    fa, fb = np.isfinite(a), np.isfinite(b)
    if np.any(fa != fb):
        return math.inf
    if not np.any(fa):
        return 0.0
    return float(np.max(np.abs(a[fa] - b[fa])))


def exact_pmf(seq: SequenceDescriptor, n_max: int, rel_tol: float = 1e-10, *,
              fold_tail: bool = True, max_K: int | None = None) -> LogPmf:
    """Log pmf of Y by convolving Bernoulli factors, K doubling until stable.

    K starts at max(2 n_max, k0) and doubles until successive tables agree
    to ``rel_tol`` in log. When the family exposes odds power sums the
    indicators past K are folded in exactly up to roundoff.
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ParameterDomainError("n_max must be nonnegative")
    cap = _MAX_HEAD if max_K is None else int(max_K)
    size = seq.support_size
    if size is not None:
        lp = _head_table(seq, size, n_max)
        return LogPmf(lp, size, 0.0, 0.0, _log_beyond(seq, n_max), False)
    K = max(2 * n_max, seq.k0, 16)
    prev, folded = _table(seq, K, n_max, fold_tail)
    best = (prev, K, math.inf, folded)
    while True:
        K2 = 2 * K
        if K2 > cap:
            raise TruncationError(
                f"pmf table not stable to {rel_tol:.3g} with K={K}", best_bound=best[2],
                terms=K, partial=LogPmf(best[0], best[1], best[2],
                                        seq.tail_sum_bound(best[1]).bound, 0.0, best[3]))
        cur, folded = _table(seq, K2, n_max, fold_tail)
        d = _delta(prev, cur)
        if d < best[2]:
            best = (cur, K2, d, folded)
        if d <= rel_tol:
            return LogPmf(cur, K2, d, seq.tail_sum_bound(K2).bound, _log_beyond(seq, n_max), folded)
        prev, K = cur, K2


def _log_beyond(seq: SequenceDescriptor, n_max: int) -> float:
    """Upper bound on log P{Y >= n_max + 1}: the better of Chernoff and Poisson."""
    m = n_max + 1
    size = seq.support_size
    if size is not None and m > size:
        return -math.inf
    out = poissonization_bound(seq, m, warn=False)
    try:
        s = solve(seq, m).s
        v = psi(seq, s)
        out = min(out, v.value + v.error_bound - s * m)
    except (LevelTooSmallError, NoSolutionError, TruncationError):
        pass
    return out


def exact_ccdf(pmf: LogPmf, n: int, rel_tol: float = 1e-10) -> float:
    """log P{Y >= n} from the table; the mass past n_max must be negligible."""
    n = int(n)
    if not 0 <= n <= pmf.n_max:
        raise ParameterDomainError("n must lie in 0..n_max")
    val = float(logsumexp(pmf.log_p[n:]))
    if pmf.log_beyond_bound > -math.inf and pmf.log_beyond_bound - val > math.log(rel_tol):
        raise TableTooShortError(
            f"mass beyond n_max (log bound {pmf.log_beyond_bound:.6g}) exceeds rel_tol of log ccdf {val:.6g}")
    return val


def exact_ccdf_bounds(pmf: LogPmf, n: int) -> tuple[float, float]:
    """(lower, upper) for log P{Y >= n}: table sum and table sum plus the beyond bound."""
    lo = float(logsumexp(pmf.log_p[n:]))
    return lo, float(np.logaddexp(lo, pmf.log_beyond_bound))


def poisson_parameter(seq: SequenceDescriptor, tol: float = DEFAULT_TOL) -> float:
    """Upper bound on t0 = sum |log(1 - r_k)|; inf if some r_k = 1."""
    size = seq.support_size
    if size is not None:
        l1 = seq.log_complements(np.arange(1, size + 1))
        if np.any(np.isinf(l1)):
            return math.inf
        return math.fsum((-l1).tolist()) * (1 + 1e-15)
    k0 = np.arange(1, seq.k0 + 1)
    if np.any(np.isinf(seq.log_complements(k0))):
        return math.inf
    v = series(seq, 0.0, ("poisson",), tol)["poisson"]
    return v.value + v.error_bound


def poissonization_bound(seq: SequenceDescriptor, n: int, *, warn: bool = True) -> float:
    """log P{Poisson(t0) >= n} with t0 = sum |log(1 - r_k)|, which bounds log P{Y >= n}."""
    n = int(n)
    if n <= 0:
        return 0.0
    t0 = poisson_parameter(seq)
    if not math.isfinite(t0):
        if warn:
            warnings.warn("some r_k = 1: the Poisson bound is trivial", RuntimeWarning, stacklevel=2)
        return 0.0
    if t0 == 0.0:
        return -math.inf
    return log_regularized_lower_gamma(float(n), t0)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def gnedin_sinh_log_pmf(lam: float, n) -> np.ndarray | float:
    """log of lam^(2n+1) / ((2n+1)! sinh lam)."""
    nn = np.asarray(n, dtype=float)
    out = -math.log(math.sinh(lam)) + (2 * nn + 1) * math.log(lam) - gammaln(2 * nn + 2)
    return float(out) if np.ndim(n) == 0 else out


def gnedin_cosh_log_pmf(lam: float, n) -> np.ndarray | float:
    """log of lam^(2n) / ((2n)! cosh lam)."""
    nn = np.asarray(n, dtype=float)
    out = -math.log(math.cosh(lam)) + 2 * nn * math.log(lam) - gammaln(2 * nn + 1)
    return float(out) if np.ndim(n) == 0 else out


def gnedin_sinh_log_ccdf(lam: float, n: int) -> float:
    j = np.arange(n, n + 200)
    return float(logsumexp(gnedin_sinh_log_pmf(lam, j)))


def binomial_log_pmf(m: int, p: float, n: int) -> float:
    return (math.lgamma(m + 1) - math.lgamma(n + 1) - math.lgamma(m - n + 1)
            + n * math.log(p) + (m - n) * math.log1p(-p))


# ---------------------------------------------------------------------------
# Tilted Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    n: int
    s: float
    log_point_estimate: float
    std_error_log: float
    samples: int
    seed: int
    hits: int
    K: int
    mean_Y: float
    tail_folded: bool = False

    @property
    def zero_hits(self) -> bool:
        return self.hits == 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["zero_hits"] = self.zero_hits
        return d


def _mc_truncation(seq, s, samples, n) -> tuple[int, bool]:
    """K with e^s sum_{k>K} r_k <= 1e-3 / samples, or a fold point."""
    size = seq.support_size
    if size is not None:
        return size, False
    target = math.log(1e-3 / samples) - s
    K = max(2 * n, seq.k0, 16)
    while K <= 1 << 16:
        if seq.tail_sum_bound(K).log_bound <= target:
            return K, False
        K *= 2
    tilted = TiltedSequence(seq, s)
    K = max(4 * n, seq.k0, 256)
    if folded_tail_table(tilted, K, 2 * n + 8) is None:
        raise TruncationError("tilted tail neither truncates nor folds", best_bound=math.inf,
                              terms=K, partial=None)
    return K, True


def mc_tilted(seq: SequenceDescriptor, n: int, samples: int = 100_000, seed: int = 0) -> McEstimate:
    """Estimate log P{Y = n} as psi(s) - s n + log of the tilted frequency of {Y = n}.

    Indicator k draws from its own stream (seed, k), so the truncation
    point does not shift earlier draws. Heavy tails that cannot be
    truncated are sampled as one count from their exact tilted law, on
    stream (seed, 0).
    """
    n = int(n)
    samples = int(samples)
    if samples < 1000:
        raise ParameterDomainError("samples must be at least 1000")
    if seed < 0:
        raise ParameterDomainError("seed must be nonnegative")
    sol = solve(seq, n)
    s = sol.s
    K, fold = _mc_truncation(seq, s, samples, n)
    y = np.zeros(samples, dtype=np.int64)
    probs = tilted_prob(seq, s, np.arange(1, K + 1))
    for k, p in enumerate(probs, start=1):
        y += stream(seed, k).random(samples) < p
    if fold:
        width = 2 * n + 8
        lt = folded_tail_table(TiltedSequence(seq, s), K, width)
        cdf = np.cumsum(np.exp(lt - logsumexp(lt)))
        y += np.searchsorted(cdf, stream(seed, 0).random(samples), side="right")
    hits = int(np.count_nonzero(y == n))
    base = sol.psi - s * n
    if hits == 0:
        return McEstimate(n, s, -math.inf, math.inf, samples, seed, 0, K, float(np.mean(y)), fold)
    f = hits / samples
    return McEstimate(n, s, base + math.log(f), math.sqrt((1.0 - f) / (f * samples)), samples, seed,
                      hits, K, float(np.mean(y)), fold)
