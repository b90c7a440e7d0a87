"""Saddle-point estimates of P{Y = n} and the perturbation transfer constant."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cgf import DEFAULT_TOL
from .errors import CannotEstimateError, NotRegimeCError, ParameterDomainError, TransferInvalidError
from .regime import RegimeReport, c0 as c0_conv, classify, regime_c_limits
from .saddle import SaddleSolution, family_saddle, solve
from .sequences import Perturbed, SequenceDescriptor

REGIMES = ("A", "B", "C")


@dataclass(frozen=True)
class TailEstimate:
    n: int
    log_point: float
    log_tail: float
    regime: str
    saddle: SaddleSolution
    c0_used: float | None = None
    c0_uncertainty: float | None = None

    def to_dict(self) -> dict:
        return {"n": self.n, "log_point": self.log_point, "log_tail": self.log_tail,
                "regime": self.regime, "c0_used": self.c0_used,
                "c0_uncertainty": self.c0_uncertainty, "saddle": self.saddle.to_dict()}


def log_estimate(regime: str, sol: SaddleSolution, c0: float | None = None) -> float:
    """psi(s) - s n, with -log(2 pi psi'')/2 in regime B and log c0 in regime C."""
    base = sol.psi - sol.s * sol.n
    if regime == "A":
        return base
    if regime == "B":
        return base - 0.5 * math.log(2.0 * math.pi * sol.psi_double_prime)
    if regime == "C":
        if c0 is None or not 0.0 < c0 <= 1.0:
            raise ParameterDomainError("regime C needs c0 in (0, 1]")
        return math.log(c0) + base
    raise CannotEstimateError(f"no estimate for regime {regime!r}")


def default_grid(n: int) -> list[int]:
    return [n, 2 * n, 4 * n]


def _c0_for(seq: SequenceDescriptor, n: int) -> tuple[float, float]:
    lo = max(2, n // 2)
    if lo >= n:
        raise NotRegimeCError("level too small to read off regime-C limits")
    data = regime_c_limits(seq, [lo, n], min(40, lo - 1))
    return _c0_with_drift(data)


def _c0_with_drift(data) -> tuple[float, float]:
    cur = c0_conv(data.p, data.q)
    prev = c0_conv(data.p_prev, data.q_prev)
    return cur.value, abs(cur.value - prev.value) + cur.error_bound


def estimate(seq: SequenceDescriptor, n, regime_override: str | None = None, *,
             report: RegimeReport | None = None, saddle: str = "numeric",
             c0: float | None = None, tol: float = DEFAULT_TOL) -> TailEstimate:
    """Estimate log P{Y = n}; the tail P{Y >= n} is reported as the same value.

    The regime comes from ``regime_override``, else ``report``, else a
    classification on the grid (n, 2n, 4n). Regime C takes ``c0`` if given,
    otherwise the constant computed from limits read off at the levels
    used, with the change against the previous level as uncertainty.
    ``saddle`` is ``numeric`` or ``family``.
    """
    n = int(n)
    c0_unc = None
    if regime_override is not None:
        regime = regime_override
    else:
        if report is None:
            report = classify(seq, default_grid(n), tol=tol)
        regime = report.label
        if regime == "C" and c0 is None and report.c_data is not None and report.c_data.c0 is not None:
            c0, c0_unc = _c0_with_drift(report.c_data)
    if regime not in REGIMES:
        raise CannotEstimateError(f"regime is {regime!r}; pass regime_override")
    if saddle == "numeric":
        sol = solve(seq, n)
    elif saddle == "family":
        sol = family_saddle(seq, n, tol)
    else:
        raise ParameterDomainError("saddle must be 'numeric' or 'family'")
    if regime == "C" and c0 is None:
        c0, c0_unc = _c0_for(seq, n)
    lp = log_estimate(regime, sol, c0)
    return TailEstimate(n, lp, lp, regime, sol, c0 if regime == "C" else None,
                        c0_unc if regime == "C" else None)


# ---------------------------------------------------------------------------
# Perturbation transfer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionRow:
    n: int
    s: float
    head: float  # s e^-s sum_{k<=n} |eps_k| / r_k
    tail: float  # s e^s sum_{k>n} |eps_k| r_k


@dataclass
class TransferReport:
    A: float
    log_A: float
    log_A_error: float
    rigorous: bool  # whether log_A_error is a proven bound
    rows: list[ConditionRow] = field(default_factory=list)

    @property
    def decaying(self) -> bool:
        h = [r.head for r in self.rows]
        t = [r.tail for r in self.rows]
        return len(h) < 2 or ((h[-1] < h[0] or h[-1] == 0.0) and (t[-1] < t[0] or t[-1] == 0.0))

    def to_dict(self) -> dict:
        return {"A": self.A, "log_A": self.log_A, "log_A_error": self.log_A_error,
                "rigorous": self.rigorous, "decaying": self.decaying,
                "rows": [r.__dict__ for r in self.rows]}


def _eps(base: SequenceDescriptor, pert: SequenceDescriptor, k: np.ndarray) -> np.ndarray:
    if isinstance(pert, Perturbed) and pert.base == base:
        return pert.epsilon(k)
    return np.expm1(pert.log_values(k) - base.log_values(k))


def _log_product(base, pert, tol=1e-12, cap=1 << 20) -> tuple[float, float, bool]:
    """sum_k log1p(eps_k) with an error bound (proven for Perturbed inputs)."""
    rigorous = isinstance(pert, Perturbed) and pert.base == base
    K, done, parts, prev = 1024, 0, [], None
    while True:
        k = np.arange(done + 1, K + 1)
        e = _eps(base, pert, k)
        if np.any(e <= -1.0):
            raise TransferInvalidError("some eps_k <= -1, the product vanishes")
        parts.append(math.fsum(np.log1p(e).tolist()))
        done = K
        total = math.fsum(parts)
        if rigorous:
            tail = pert.abs_eps_tail(K)
            # |log1p(x)| <= |x| / (1 - |x|)
            err = tail / (1.0 - pert.sup_bound) if pert.sup_bound < 1.0 else math.inf
        else:
            err = math.inf if prev is None else abs(total - prev)
        if err <= tol or K >= cap:
            return total, err, rigorous
        prev = total
        K *= 2


def _abs_eps_lin_tail(base, pert, n: int, s: float) -> float:
    """sum_{k>n} |eps_k| r_k e^s.

    For a Perturbed input the remainder past the summed block is bounded by
    r_{K+1} sum_{k>K} |eps_k| (r nonincreasing past k0); otherwise blocks
    double until the last one adds less than 1e-6 of the total, which is an
    estimate only.
    """
    def block(lo, hi):
        k = np.arange(lo + 1, hi + 1)
        e = np.abs(_eps(base, pert, k))
        return math.fsum((e * np.exp(base.log_values(k) + s)).tolist())

    K = max(2 * n, n + 1024, base.k0)
    total = block(n, K)
    if isinstance(pert, Perturbed) and pert.base == base:
        return total + math.exp(base.log_values(np.array([K + 1]))[0] + s) * pert.abs_eps_tail(K)
    while K < 1 << 24:
        add = block(K, 2 * K)
        total += add
        K *= 2
        if add <= 1e-6 * total:
            break
    return total


def transfer(base: SequenceDescriptor, perturbed: SequenceDescriptor, n_check: Sequence[int],
             tol: float = 1e-12) -> TransferReport:
    """A = prod (1 + eps_k) for u_k = r_k (1 + eps_k), with the decay conditions on a grid.

    The conditions are evaluated at the saddle of ``base``. A generic pair
    gets eps_k = u_k / r_k - 1 and an estimated, not proven, error on log A.
    """
    log_a, err, rig = _log_product(base, perturbed, tol)
    rows = []
    for n in n_check:
        n = int(n)
        s = solve(base, n).s
        k = np.arange(1, n + 1)
        e = np.abs(_eps(base, perturbed, k))
        head = s * math.fsum((e * np.exp(-base.log_values(k) - s)).tolist())
        tail = s * _abs_eps_lin_tail(base, perturbed, n, s)
        if not (math.isfinite(head) and math.isfinite(tail)):
            raise TransferInvalidError(f"condition sums diverge at n={n}")
        rows.append(ConditionRow(n, s, head, tail))
    a = math.exp(log_a) if log_a < 709.0 else math.inf
    rep = TransferReport(a, log_a, err, rig, rows)
    if not rep.decaying:
        raise TransferInvalidError("condition sums do not decay along the grid")
    return rep

