"""Regime diagnostics along a level grid and the regime-C limit data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cgf import DEFAULT_TOL, BoundedValue, core_identity, psi_double_prime, series
from .errors import DegenerateInputError, NotRegimeCError, ParameterDomainError, TruncationError
from .rng import stream
from .saddle import SaddleSolution, solve
from .sequences import SequenceDescriptor

LABELS = ("A", "B", "C", "undetermined")


@dataclass(frozen=True)
class Thresholds:
    lo: float = 0.1
    hi: float = 10.0
    flatness: float = 0.1


@dataclass(frozen=True)
class GridPoint:
    """Diagnostics at one solved saddle."""

    n: int
    s: float
    psi2: float
    psi2_error: float
    head_sum: float
    head_error: float
    tail_sum: float
    tail_error: float
    inv_head: float  # sum_{k<=n} r_k^-1 e^-s
    lin_tail: float  # sum_{k>n} r_k e^s

    @property
    def core_gap(self) -> float:
        return self.head_sum - self.tail_sum

    @property
    def core_error(self) -> float:
        return self.head_error + self.tail_error

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ThetaDistribution:
    """Masses of one theta_m at -1, 0, 1."""

    minus: float
    zero: float
    plus: float

    def to_dict(self) -> dict:
        return {"-1": self.minus, "0": self.zero, "1": self.plus}


@dataclass
class RegimeCData:
    p: np.ndarray  # p[k-1] = p_k, k >= 1
    q: np.ndarray  # q[k] = q_k, k >= 0
    p_drift: np.ndarray
    q_drift: np.ndarray
    n_used: int
    p_prev: np.ndarray | None = None  # limits at the previous grid level
    q_prev: np.ndarray | None = None
    c0: BoundedValue | None = None

    def theta(self, m: int) -> ThetaDistribution:
        return theta_distribution(self.p, self.q, m)

    def to_dict(self) -> dict:
        out = {"p": self.p.tolist(), "q": self.q.tolist(),
               "p_drift": self.p_drift.tolist(), "q_drift": self.q_drift.tolist(),
               "n_used": self.n_used,
               "theta": [self.theta(m).to_dict() for m in range(len(self.q))]}
        if self.c0 is not None:
            out["c0"] = {"value": self.c0.value, "error_bound": self.c0.error_bound}
        return out


@dataclass
class RegimeReport:
    label: str
    grid: list[GridPoint]
    c_data: RegimeCData | None = None
    thresholds: Thresholds = field(default_factory=Thresholds)

    def to_dict(self) -> dict:
        return {"label": self.label,
                "thresholds": {"lo": self.thresholds.lo, "hi": self.thresholds.hi,
                               "flatness": self.thresholds.flatness},
                "grid": [g.to_dict() for g in self.grid],
                "c_data": None if self.c_data is None else self.c_data.to_dict()}


# ---------------------------------------------------------------------------

def _sum_exp(logs: np.ndarray) -> float:
    if logs.size == 0:
        return 0.0
    return math.fsum(np.exp(logs).tolist())


def diagnostics(seq: SequenceDescriptor, n, tol: float = DEFAULT_TOL,
                saddle: SaddleSolution | None = None) -> GridPoint:
    """psi''(s_n) together with both sides of the core identity at the saddle."""
    sol = solve(seq, n) if saddle is None else saddle
    s = sol.s
    ci = core_identity(seq, s, sol.n, tol)
    d2 = psi_double_prime(seq, s, tol)
    k = np.arange(1, sol.n + 1)
    size = seq.support_size
    if size is not None:
        k = k[k <= size]
    inv_head = _sum_exp(-seq.log_values(k) - s) if k.size else 0.0
    if size is not None and sol.n >= size:
        lin_tail = 0.0
    else:
        try:
            lin_tail = series(seq, s, ("lin",), tol, start=sol.n)["lin"].value
        except TruncationError:
            lin_tail = math.inf
    return GridPoint(sol.n, s, d2.value, d2.error_bound, ci.head.value, ci.head.error_bound,
                     ci.tail.value, ci.tail.error_bound, inv_head, lin_tail)


def _monotone(vals: Sequence[float], increasing: bool) -> bool:
    pairs = zip(vals[:-1], vals[1:])
    return all(b > a for a, b in pairs) if increasing else all(b < a for a, b in pairs)


def classify(seq: SequenceDescriptor, n_grid: Sequence[int], thresholds: Thresholds | None = None,
             tol: float = DEFAULT_TOL, k_max: int = 40) -> RegimeReport:
    """Label the regime from the trend of psi''(s_n) on an increasing grid.

    B: increasing with the last value above ``hi``. A: decreasing with the
    last value below ``lo``. C: relative spread below ``flatness`` over the
    second half of the grid, strictly between ``lo`` and ``hi``, and limit
    data that settle.
    """
    th = thresholds or Thresholds()
    grid = [int(n) for n in n_grid]
    if len(grid) < 3 or any(b <= a for a, b in zip(grid[:-1], grid[1:])):
        raise ParameterDomainError("n_grid must be strictly increasing with at least 3 points")
    pts = [diagnostics(seq, n, tol) for n in grid]
    v = [p.psi2 for p in pts]
    label = "undetermined"
    if _monotone(v, True) and v[-1] > th.hi:
        label = "B"
    elif _monotone(v, False) and v[-1] < th.lo:
        label = "A"
    else:
        half = v[len(v) // 2:]
        spread = (max(half) - min(half)) / max(half)
        if spread < th.flatness and th.lo < v[-1] < th.hi:
            label = "C"
    c_data = None
    if label == "C":
        try:
            c_data = regime_c_limits(seq, grid, min(k_max, grid[-2] - 1))
            c_data.c0 = c0(c_data.p, c_data.q)
        except (NotRegimeCError, DegenerateInputError):
            label = "undetermined"
    return RegimeReport(label, pts, c_data, th)


def regime_c_limits(seq: SequenceDescriptor, n_grid: Sequence[int], k_max: int,
                    max_drift: float = 0.1) -> RegimeCData:
    """p_k = r_{n+k} e^{s_n} and q_k = e^{-s_n}/r_{n-k} at the largest grid level.

    Drift is the relative change from the previous grid level. Limits past
    ``k_max`` are dropped, so c0 computed from them ignores that tail.
    """
    if seq.support_size is not None:
        raise NotRegimeCError("finite support: the tail sums vanish")
    grid = sorted(int(n) for n in n_grid)
    if len(grid) < 2:
        raise ParameterDomainError("need at least two grid levels")
    if k_max < 1 or k_max >= grid[-2]:
        raise ParameterDomainError("k_max must satisfy 1 <= k_max < second largest grid level")

    def limits(n):
        s = solve(seq, n).s
        lp = seq.log_values(np.arange(n + 1, n + k_max + 1)) + s
        lq = -seq.log_values(np.arange(n, n - k_max - 1, -1)) - s
        return np.exp(lp), np.exp(lq)

    p_prev, q_prev = limits(grid[-2])
    p, q = limits(grid[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        p_drift = np.abs(p - p_prev) / p
        q_drift = np.abs(q - q_prev) / q
    if not (p[0] > 0 and q[0] > 0):
        raise NotRegimeCError("p_1 or q_0 vanishes")
    if p_drift[0] > max_drift or q_drift[0] > max_drift:
        raise NotRegimeCError(
            f"limits drift by {p_drift[0]:.3g} (p_1) and {q_drift[0]:.3g} (q_0) between grid levels")
    return RegimeCData(p, q, p_drift, q_drift, grid[-1], p_prev, q_prev)


# ---------------------------------------------------------------------------
# c0 = P{sum theta_m = 0}
# ---------------------------------------------------------------------------

LimitSeq = Sequence[float] | np.ndarray | Callable[[int], float]


def _lookup(seq: LimitSeq, i: int, offset: int) -> float:
    if callable(seq):
        return float(seq(i))
    j = i - offset
    return float(seq[j]) if 0 <= j < len(seq) else 0.0


def theta_distribution(p: LimitSeq, q: LimitSeq, m: int) -> ThetaDistribution:
    """theta_0 on {-1, 0}; theta_m on {-1, 0, 1} for m >= 1.

    Arrays are read as p[k-1] = p_k and q[k] = q_k.
    """
    qm = _lookup(q, m, 0)
    if m == 0:
        return ThetaDistribution(qm / (1.0 + qm), 1.0 / (1.0 + qm), 0.0)
    pm = _lookup(p, m, 1)
    d = (1.0 + pm) * (1.0 + qm)
    return ThetaDistribution(qm / d, (1.0 + pm * qm) / d, pm / d)


def product_lower_bound(p: LimitSeq, q: LimitSeq, M: int) -> float:
    """P{theta_m = 0 for m <= M}, a lower bound for c0 when the rest are dropped."""
    logs = [math.log(theta_distribution(p, q, m).zero) for m in range(M + 1)]
    return math.exp(math.fsum(logs))


def c0(p: LimitSeq, q: LimitSeq, tol: float = 1e-12, *,
       tail: Callable[[int], float] | None = None, M: int | None = None) -> BoundedValue:
    """Point mass at zero of sum_m theta_m by exact convolution.

    Arrays are treated as zero beyond their length. For callables, ``tail(M)``
    must bound sum_{m>M} (p_m + q_m). The cutoff is the first M whose
    dropped mass is at most ``tol`` unless ``M`` is given.
    """
    p0 = _lookup(p, 1, 1)
    q0 = _lookup(q, 0, 0)
    if not p0 > 0 or not q0 > 0:
        raise DegenerateInputError("c0 needs p_1 > 0 and q_0 > 0")
    if callable(p) or callable(q):
        if tail is None:
            raise ParameterDomainError("callable limits need a tail bound")
        tail_fn = tail
        if M is None:
            M = 1
            while tail_fn(M) > tol:
                M += 1
                if M > 100_000:
                    raise ParameterDomainError("tail bound does not fall below tol")
        dropped = tail_fn(M)
    else:
        length = max(len(p), len(q) - 1)
        M = length if M is None else int(M)
        pa, qa = np.asarray(p, float), np.asarray(q, float)
        dropped = math.fsum(pa[M:].tolist()) + math.fsum(qa[M + 1:].tolist())
    dist = np.array([1.0])  # index i is value i - offset
    offset = 0
    for m in range(M + 1):
        t = theta_distribution(p, q, m)
        dist = np.convolve(dist, [t.plus, t.zero, t.minus])
        offset += 1
    value = float(dist[offset])
    err = dropped + 4 * (M + 1) * np.finfo(float).eps
    return BoundedValue(value, float(err), M)


def c0_monte_carlo(p: LimitSeq, q: LimitSeq, M: int, samples: int, seed: int = 0) -> tuple[float, float]:
    """Frequency of sum_{m<=M} theta_m = 0 and its standard error."""
    total = np.zeros(samples, dtype=np.int64)
    for m in range(M + 1):
        t = theta_distribution(p, q, m)
        u = stream(seed, m).random(samples)
        total += (u < t.plus).astype(np.int64) - (u >= 1.0 - t.minus).astype(np.int64)
    freq = float(np.mean(total == 0))
    return freq, math.sqrt(max(freq * (1.0 - freq), 0.0) / samples)


def stretched_exp_unit_limits() -> tuple[Callable[[int], float], Callable[[int], float], Callable[[int], float]]:
    """p_k = e^{-k+1/2}, q_k = e^{-k-1/2} and a bound on sum_{m>M} (p_m + q_m)."""
    def p(k):
        return math.exp(-k + 0.5)

    def q(k):
        return math.exp(-k - 0.5)

    def tail(M):
        return 2.0 * math.cosh(0.5) * math.exp(-M) / math.expm1(1.0)

    return p, q, tail


def limit_variance(p: np.ndarray, q: np.ndarray) -> float:
    """sum_k q_k/(1+q_k)^2 + sum_k p_k/(1+p_k)^2."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    return math.fsum((q / (1 + q) ** 2).tolist()) + math.fsum((p / (1 + p) ** 2).tolist())
