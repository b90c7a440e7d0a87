"""Explicit log-asymptotics of P{Y = n} for the four closed-form families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.special import binom

from .errors import ParameterDomainError
from .regime import c0 as c0_conv, stretched_exp_unit_limits
from .saddle import alpha_beta, ell_of, expansion_coefficients
from .specfun import bernoulli_poly, f_coeff, h2_eval, logistic_sum_constant, zeta

C1_SERIES = math.pi ** 2 / 12.0  # f_0 = c_1 in the stretched-exponential expansion


@dataclass
class ExplicitAsymptotic:
    family: str  # "a" | "b" | "c" | "d"
    params: dict
    n: float
    terms: dict[str, float] = field(default_factory=dict)

    @property
    def log_value(self) -> float:
        return math.fsum(self.terms.values())

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params, "n": self.n,
                "terms": dict(self.terms), "log_value": self.log_value}


def _check(c: float, n: float) -> None:
    if not c > 0 or not math.isfinite(c):
        raise ParameterDomainError("c must be positive")
    if not n >= 1:
        raise ParameterDomainError("n must be at least 1")


def thm4a(c: float, beta: float, n: float) -> ExplicitAsymptotic:
    """r_k = c k^-beta, beta > 1."""
    _check(c, n)
    if not beta > 1:
        raise ParameterDomainError("beta must exceed 1")
    sn = math.sin(math.pi / beta)
    g = math.log(beta * sn / math.pi) - math.log(c) / beta
    t = {
        "leading": -beta * n * math.log(n),
        "linear": -beta * (g - 1.0) * n,
        "log_n": -0.5 * (beta + 1.0) * math.log(n),
        "constant": (-0.5 * beta * math.log(2.0 * beta * sn) - 0.5 * math.log(2.0 * math.pi)
                     + 0.5 * math.log(beta)),
    }
    return ExplicitAsymptotic("a", {"c": c, "beta": beta}, n, t)


def thm4b(c: float, beta: float, n: float) -> ExplicitAsymptotic:
    """r_k = c exp(-k^beta), 0 < beta < 1."""
    _check(c, n)
    if not 0.0 < beta < 1.0:
        raise ParameterDomainError("beta must lie in (0, 1)")
    ell = ell_of(beta)
    p = 1.0 / beta
    a = alpha_beta(beta, n)
    corr = [binom(1.0 + p, i) * a ** i for i in range(2, ell + 1)]
    fsum_terms = []
    for j in range(0, int(math.floor(p)), 2):
        upper = ell - j // 2 - 1
        inner = math.fsum(binom(p - 1.0 - j, i) * a ** i for i in range(upper + 1))
        fsum_terms.append(binom(p - 1.0, j) * f_coeff(j) * n ** (1.0 - beta * (1 + j)) * inner)
    t = {
        "prefactor": 0.5 * math.log(beta / (2.0 * math.pi * n ** (1.0 - beta))),
        "leading": -n ** (1.0 + beta) / (1.0 + beta),
        "alpha_correction": beta * n ** (1.0 + beta) / (1.0 + beta) * math.fsum(corr),
        "log_c": n * math.log(c),
        "half_power": -0.5 * n ** beta,
        "f_series": (2.0 / beta) * math.fsum(fsum_terms),
        "zeta": -zeta(-beta),
    }
    return ExplicitAsymptotic("b", {"c": c, "beta": beta, "ell": ell,
                                    "A": list(expansion_coefficients(beta))}, n, t)


def thm4b_reduced(c: float, beta: float, n: float) -> float:
    """Short forms for beta in (1/4, 1): only f_0, plus the n^(1-3 beta) term below 1/3."""
    _check(c, n)
    if not 0.25 < beta < 1.0:
        raise ParameterDomainError("reduced form covers beta in (1/4, 1)")
    p = 1.0 / beta
    f0, f2, c1 = f_coeff(0), f_coeff(2), C1_SERIES
    out = [0.5 * math.log(beta / (2.0 * math.pi * n ** (1.0 - beta))),
           -n ** (1.0 + beta) / (1.0 + beta), n * math.log(c), -0.5 * n ** beta,
           (2.0 / beta) * f0 * n ** (1.0 - beta), -zeta(-beta)]
    if beta <= 1.0 / 3.0:
        out.append(p * (p - 1.0) * (2.0 * (p - 1.0) * c1 ** 2 - 4.0 * (p - 1.0) * c1 * f0
                                    + (p - 2.0) * f2) * n ** (1.0 - 3.0 * beta))
    return math.fsum(out)


def c0_unit() -> float:
    """c0 for the limits p_k = e^{-k+1/2}, q_k = e^{-k-1/2}."""
    p, q, tail = stretched_exp_unit_limits()
    return c0_conv(p, q, 1e-15, tail=tail).value


def thm4c(c: float, n: float) -> ExplicitAsymptotic:
    """r_k = c e^-k."""
    _check(c, n)
    t = {
        "log_c0": math.log(c0_unit()),
        "quadratic": -0.5 * n * n,
        "linear": (math.log(c) - 0.5) * n,
        "constant": -0.125,
        "c1": logistic_sum_constant(),
        "h2": h2_eval(0.5),
    }
    return ExplicitAsymptotic("c", {"c": c}, n, t)


def thm4d_argument(c: float, beta: float, n: float) -> float:
    return (n ** (-(beta - 1.0) / 2.0) / beta + math.log(c) / beta * n ** (1.0 - beta)
            - (beta - 1.0) / (2.0 * beta * beta) * n ** (-beta))


def thm4d(c: float, beta: float, n: float, constant_correction: bool = False) -> ExplicitAsymptotic:
    """r_k = c exp(-k^beta), beta > 1.

    With ``constant_correction`` the term -zeta(-beta) - log(c)/2 is added;
    the exact log pmf approaches the display plus that constant.
    """
    _check(c, n)
    if not beta > 1:
        raise ParameterDomainError("beta must exceed 1")
    x = thm4d_argument(c, beta, n)
    gate = int(math.floor((beta + 1.0) / 2.0))
    t = {
        "leading": -n ** (beta + 1.0) / (beta + 1.0),
        "half_power": -n ** ((beta + 1.0) / 2.0) / beta,
        "log_c": math.log(c) * (1.0 - 1.0 / beta) * n,
        "constant": -1.0 / (2.0 * beta * beta),
    }
    for k in range(1, int(math.floor(beta)) + 2):
        power = n ** (beta - (k - 1))
        if k <= gate:
            power += (1.0 - (k - 1) / beta) * n ** ((beta + 1.0) / 2.0 - k)
        t[f"bernoulli_{k}"] = -(1.0 / (beta + 1.0)) * (-1) ** k * binom(beta + 1.0, k) \
            * float(bernoulli_poly(k, x)) * power
    if constant_correction:
        t["constant_correction"] = -zeta(-beta) - 0.5 * math.log(c)
    return ExplicitAsymptotic("d", {"c": c, "beta": beta}, n, t)


def thm4d_reduced(c: float, beta: float, n: float) -> float:
    """Short form for beta in (1, 2)."""
    _check(c, n)
    if not 1.0 < beta < 2.0:
        raise ParameterDomainError("reduced form covers beta in (1, 2)")
    return math.fsum([-n ** (beta + 1.0) / (beta + 1.0), -0.5 * n ** beta, math.log(c) * n,
                      -beta / 12.0 * n ** (beta - 1.0), 0.5 * math.log(c)])
