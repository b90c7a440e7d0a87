import math

import pytest
from hypothesis import given, strategies as st
from scipy.special import binom

from tailforge.closed_forms import (c0_unit, thm4a, thm4b, thm4b_reduced, thm4c, thm4d, thm4d_argument,
                                    thm4d_reduced)
from tailforge.errors import ParameterDomainError
from tailforge.estimates import estimate
from tailforge.exact import gnedin_sinh_log_pmf
from tailforge.saddle import ell_of
from tailforge.sequences import Polynomial, StretchedExp
from tailforge.specfun import bernoulli_poly, h2_eval, logistic_sum_constant, zeta

PI = math.pi


@given(c=st.floats(0.05, 1.0), beta=st.floats(1.05, 6.0), n=st.floats(1.0, 1e4))
def test_thm4a_matches_formula(c, beta, n):
    sn = math.sin(PI / beta)
    expected = (-beta * n * math.log(n) - beta * (math.log(beta * sn / (PI * c ** (1 / beta))) - 1) * n
                - (beta + 1) / 2 * math.log(n) - beta / 2 * math.log(2 * beta * sn)
                - 0.5 * math.log(2 * PI) + 0.5 * math.log(beta))
    got = thm4a(c, beta, n)
    assert got.log_value == pytest.approx(expected, rel=1e-12, abs=1e-9)
    assert got.log_value == pytest.approx(math.fsum(got.terms.values()), rel=1e-15, abs=1e-12)


@pytest.mark.parametrize("fn", [
    lambda c, n: thm4a(c, 2.0, n).log_value,
    lambda c, n: thm4a(c, 3.5, n).log_value,
    lambda c, n: thm4b(c, 0.5, n).log_value,
    lambda c, n: thm4b(c, 0.3, n).log_value,
    lambda c, n: thm4c(c, n).log_value,
], ids=["a2", "a3.5", "b.5", "b.3", "c"])
@pytest.mark.parametrize("c", [0.1, 0.5, 2.0])
def test_level_times_log_c(fn, c):
    for n in (3.0, 10.0, 40.0):
        v = fn(c, n) - fn(1.0, n)
        assert v == pytest.approx(n * math.log(c), rel=1e-10, abs=1e-10)


def test_gnedin_through_polynomial_form():
    lam = 1.0
    gaps = [abs(thm4a(lam ** 2 / PI ** 2, 2.0, n).log_value + math.log(lam / math.sinh(lam))
                - gnedin_sinh_log_pmf(lam, n)) for n in (10, 20, 40, 80, 160, 320)]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    assert gaps[-1] <= 0.02


@pytest.mark.parametrize("beta,ell", [(0.9, 1), (0.5, 1), (1 / 3, 2), (0.3, 2), (0.2, 3), (0.1, 5)])
def test_thm4b_uses_ell_minus_one_coefficients(beta, ell):
    r = thm4b(1.0, beta, 10.0)
    assert ell_of(beta) == ell
    assert r.params["ell"] == ell and len(r.params["A"]) == ell - 1
    if ell == 1:
        assert r.terms["alpha_correction"] == 0.0


@pytest.mark.parametrize("beta", [0.26, 0.3, 1 / 3, 0.34, 0.5, 0.8, 0.99])
@pytest.mark.parametrize("c", [0.3, 1.0, 2.5])
def test_thm4b_reduces_to_short_form(beta, c):
    for n in (5.0, 50.0, 500.0):
        full = thm4b(c, beta, n).log_value
        assert thm4b_reduced(c, beta, n) == pytest.approx(full, rel=1e-12, abs=1e-10)


def test_f_coefficients_inside_short_form():
    # f_0 = pi^2/12 and f_2 = 7 pi^4 / 360 from j!(1 - 2^{-(j+1)}) zeta(j+2)
    assert 0.5 * zeta(2.0) == pytest.approx(PI ** 2 / 12, rel=1e-14)
    assert 2 * (1 - 2 ** -3) * zeta(4.0) == pytest.approx(7 * PI ** 4 / 360, rel=1e-14)


def test_thm4c_terms():
    r = thm4c(1.0, 10.0)
    assert r.terms["log_c0"] == pytest.approx(math.log(c0_unit()), abs=1e-15)
    assert abs(r.terms["h2"]) < 2e-7 * 0.5
    assert r.terms["h2"] == h2_eval(0.5)
    # c_1 by 50 terms plus a geometric tail bound
    partial = math.log(2.0) + 2 * math.fsum(math.log1p(math.exp(-m)) for m in range(1, 51))
    tail = 2 * math.exp(-51) / (1 - math.exp(-1))
    assert partial <= logistic_sum_constant() <= partial + tail + 1e-15
    assert r.terms["constant"] == -0.125


@pytest.mark.parametrize("beta", [1.1, 1.5, 1.9])
@pytest.mark.parametrize("c", [0.5, 1.0])
def test_thm4d_approaches_short_form(beta, c):
    gaps = [abs(thm4d(c, beta, n).log_value - thm4d_reduced(c, beta, n)) for n in (100, 1000, 10000)]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    assert gaps[-1] < 0.1


def test_thm4d_bernoulli_terms():
    c, beta, n = 1.0, 2.0, 8.0
    r = thm4d(c, beta, n)
    x = thm4d_argument(c, beta, n)
    assert x == pytest.approx(n ** -0.5 / 2 - n ** -2 / 8)
    assert set(k for k in r.terms if k.startswith("bernoulli")) == {"bernoulli_1", "bernoulli_2", "bernoulli_3"}
    b1 = -(1 / 3) * (-1) * 3 * (x - 0.5) * (n ** 2 + n ** 0.5)
    b2 = -(1 / 3) * 3 * (x * x - x + 1 / 6) * n
    b3 = -(1 / 3) * (-1) * 1 * (x ** 3 - 1.5 * x * x + 0.5 * x)
    assert r.terms["bernoulli_1"] == pytest.approx(b1, rel=1e-13)
    assert r.terms["bernoulli_2"] == pytest.approx(b2, rel=1e-13)
    assert r.terms["bernoulli_3"] == pytest.approx(b3, rel=1e-12, abs=1e-15)
    assert r.log_value == pytest.approx(math.fsum(r.terms.values()), rel=1e-15)
    assert float(bernoulli_poly(1, 0.3)) == pytest.approx(0.3 - 0.5)
    assert float(bernoulli_poly(2, 0.0)) == pytest.approx(1 / 6)


@pytest.mark.parametrize("beta", [1.5, 2.5, 3.0])
def test_thm4d_gate(beta):
    r = thm4d(1.0, beta, 10.0)
    gate = math.floor((beta + 1) / 2)
    assert len([k for k in r.terms if k.startswith("bernoulli")]) == math.floor(beta) + 1
    # past the gate only n^(beta - k + 1) survives
    k = gate + 1
    x = thm4d_argument(1.0, beta, 10.0)
    expected = -(1 / (beta + 1)) * (-1) ** k * binom(beta + 1, k) * float(bernoulli_poly(k, x)) * 10.0 ** (beta - k + 1)
    assert r.terms[f"bernoulli_{k}"] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("beta,c", [(1.5, 1.0), (2.0, 0.5), (3.0, 2.0)])
def test_thm4d_constant_correction(beta, c):
    plain = thm4d(c, beta, 10.0)
    fixed = thm4d(c, beta, 10.0, constant_correction=True)
    assert fixed.log_value - plain.log_value == pytest.approx(-zeta(-beta) - 0.5 * math.log(c), abs=1e-13)


@pytest.mark.parametrize("fn,args", [
    (thm4a, (1.0, 1.0, 10.0)), (thm4a, (0.0, 2.0, 10.0)), (thm4a, (1.0, 2.0, 0.5)),
    (thm4b, (1.0, 1.0, 10.0)), (thm4b, (-1.0, 0.5, 10.0)),
    (thm4c, (0.0, 10.0)),
    (thm4d, (1.0, 1.0, 10.0)), (thm4d, (math.nan, 2.0, 10.0)),
    (thm4b_reduced, (1.0, 0.2, 10.0)), (thm4d_reduced, (1.0, 2.5, 10.0)),
])
def test_domain_errors(fn, args):
    with pytest.raises(ParameterDomainError):
        fn(*args)


def test_to_dict():
    d = thm4c(1.0, 5.0).to_dict()
    assert d["family"] == "c" and d["log_value"] == pytest.approx(math.fsum(d["terms"].values()))


# ---------------------------------------------------------------------------
# Explicit forms against the saddle-point estimates of their families

CONVERGENCE = [
    ("a", Polynomial(1.0, 2.0), "B", lambda n: thm4a(1.0, 2.0, n), [25, 50, 100, 200, 400], 1e-2),
    ("a", Polynomial(0.5, 3.0), "B", lambda n: thm4a(0.5, 3.0, n), [25, 50, 100, 200], 5e-3),
    ("b", StretchedExp(1.0, 0.5), "B", lambda n: thm4b(1.0, 0.5, n), [10, 20, 40, 80, 160], 0.2),
    ("b", StretchedExp(0.5, 0.7), "B", lambda n: thm4b(0.5, 0.7, n), [10, 20, 40, 80, 160], 0.02),
    ("b", StretchedExp(1.0, 0.45), "B", lambda n: thm4b(1.0, 0.45, n), [40, 160, 640], 0.35),
    ("c", StretchedExp(1.0, 1.0), "C", lambda n: thm4c(1.0, n), [10, 20, 40], 1e-8),
    ("c", StretchedExp(0.5, 1.0), "C", lambda n: thm4c(0.5, n), [10, 20, 40], 1e-8),
    ("d", StretchedExp(1.0, 1.5), "A", lambda n: thm4d(1.0, 1.5, n, True), [40, 80, 160, 320, 640], 2e-4),
    ("d", StretchedExp(1.0, 2.0), "A", lambda n: thm4d(1.0, 2.0, n, True), [40, 80, 160, 320], 5e-3),
    ("d", StretchedExp(0.5, 2.0), "A", lambda n: thm4d(0.5, 2.0, n, True), [80, 160, 320, 640], 4e-3),
    ("d", StretchedExp(1.0, 3.0), "A", lambda n: thm4d(1.0, 3.0, n, True), [10, 20, 40, 80, 160], 1e-5),
]


@pytest.mark.parametrize("case,seq,regime,fn,grid,cap", CONVERGENCE,
                         ids=[f"{c[0]}-{i}" for i, c in enumerate(CONVERGENCE)])
def test_explicit_converges_to_generic(case, seq, regime, fn, grid, cap):
    c0 = c0_unit() if regime == "C" else None
    gaps = [abs(fn(n).log_value - estimate(seq, n, regime, c0=c0).log_point) for n in grid]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:])) or max(gaps) < 1e-9
    assert gaps[-1] < cap


def test_uncorrected_thm4d_offset():
    seq, beta, c = StretchedExp(0.5, 3.0), 3.0, 0.5
    dist = [abs(thm4d(c, beta, n).log_value - estimate(seq, n, "A").log_point
                - zeta(-beta) - 0.5 * math.log(c)) for n in (40, 80, 160, 320)]
    assert all(b < a for a, b in zip(dist[:-1], dist[1:]))
    assert dist[-1] < 1e-3
