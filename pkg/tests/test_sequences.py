import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from tailforge.errors import InvalidPerturbationError, ParameterDomainError
from tailforge.sequences import (ExplicitList, Geometric, GinibreGamma, GnedinCosh, GnedinSinh,
                                 Perturbed, PoissonizedRange, Polynomial, RecordsFAlpha,
                                 StretchedExp, from_dict, gnedin_as_perturbation, log1mexp,
                                 perturb, poissonized_as_perturbation)

mp.mp.dps = 30

INFINITE = [
    Polynomial(1.0, 2.0), Polynomial(0.3, 1.5), StretchedExp(1.0, 0.5), StretchedExp(1.0, 1.0),
    StretchedExp(2.0, 2.0), Geometric(1.0, 0.5), GnedinSinh(1.0), GnedinCosh(2.0),
    GinibreGamma(3.0), PoissonizedRange(2.0, StretchedExp(1.0, 1.5)),
    PoissonizedRange(2.0, Geometric(1.0, 0.5), "exactly", 2),
    PoissonizedRange(5.0, Polynomial(1.0, 2.0), "even"), RecordsFAlpha(Geometric(1.0, 0.5)),
]
ALL = INFINITE + [ExplicitList([0.9, 0.5, 0.2, 0.05])]


def ref_value(seq, k):
    """Independent high-precision r_k."""
    k = mp.mpf(k)
    if isinstance(seq, Polynomial):
        return seq.c * k ** -seq.beta
    if isinstance(seq, StretchedExp):
        return seq.c * mp.e ** (-k ** seq.beta)
    if isinstance(seq, Geometric):
        return seq.c * mp.mpf(seq.q) ** k
    if isinstance(seq, GnedinSinh):
        return seq.lam ** 2 / ((mp.pi * k) ** 2 + seq.lam ** 2)
    if isinstance(seq, GnedinCosh):
        return 4 * seq.lam ** 2 / ((mp.pi * (2 * k - 1)) ** 2 + 4 * seq.lam ** 2)
    if isinstance(seq, GinibreGamma):
        return mp.gammainc(k, 0, seq.t, regularized=True)
    if isinstance(seq, PoissonizedRange):
        x = seq.t * ref_value(seq.base, k)
        if seq.variant == "at_least":
            return mp.gammainc(seq.j, 0, x, regularized=True)
        if seq.variant == "exactly":
            return mp.e ** -x * x ** seq.j / mp.factorial(seq.j)
        return (mp.cosh(x) * mp.e ** -x) - mp.e ** -x
    if isinstance(seq, RecordsFAlpha):
        a = [ref_value(seq.alpha, i) for i in range(1, int(k) + 1)]
        return a[-1] / mp.fsum(a)
    raise TypeError(seq)


@pytest.mark.parametrize("seq", INFINITE, ids=repr)
def test_values_match_high_precision(seq):
    k = np.array([1, 2, 3, 5, 8, 13, 30])
    got = seq.log_values(k)
    want = [float(mp.log(ref_value(seq, int(j)))) for j in k]
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seq", INFINITE, ids=repr)
def test_complements_match_high_precision(seq):
    k = np.array([1, 2, 4, 9, 20])
    got = seq.log_complements(k)
    want = []
    for j in k:
        r = ref_value(seq, int(j))
        want.append(float(mp.log(1 - r)) if r < 1 else -math.inf)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("seq", INFINITE, ids=repr)
@pytest.mark.parametrize("K_extra", [0, 5, 40])
def test_tail_bound_dominates_remainder(seq, K_extra):
    K = seq.k0 + K_extra
    bound = seq.tail_sum_bound(K)
    k = np.arange(K + 1, K + 200_001)
    partial = math.fsum(seq.values(k))
    assert partial <= bound.bound * (1 + 1e-12) + 1e-300
    # a rigorous bound, but not a vacuous one: close to the remainder or
    # below the last included term (integral bounds under fast decay)
    r_K = seq.values(np.array([K]))[0]
    assert bound.bound <= 50.0 * partial or bound.bound <= r_K


def test_polynomial_tail_integral_bound():
    seq = Polynomial(1.0, 2.0)
    assert seq.tail_sum_bound(10).bound == pytest.approx(0.1)
    exact = float(mp.zeta(2, 11))
    assert exact < 0.1


def test_tail_bound_log_domain_underflow():
    seq = StretchedExp(1.0, 2.0)
    tb = seq.tail_sum_bound(40)
    assert tb.bound == 0.0 and tb.log_bound == pytest.approx(-1600 - math.log(80), abs=1.0)


def test_tail_bound_needs_k0():
    seq = PoissonizedRange(50.0, Geometric(1.0, 0.5), "exactly", 1)
    assert seq.k0 > 1
    with pytest.raises(ParameterDomainError):
        seq.tail_sum_bound(seq.k0 - 1)


@pytest.mark.parametrize("seq", ALL, ids=repr)
def test_json_round_trip(seq):
    again = from_dict(seq.to_dict())
    assert again == seq
    k = np.arange(1, 25)
    k = k[k <= (seq.support_size or k.max())]
    np.testing.assert_array_equal(again.log_values(k), seq.log_values(k))


@given(st.sampled_from(["polynomial", "stretched-exp"]), st.floats(0.05, 1.0),
       st.floats(1.05, 4.0))
def test_json_round_trip_property(fam, c, beta):
    d = {"family": fam, "c": c, "beta": beta}
    assert from_dict(d).to_dict() == d


@pytest.mark.parametrize("bad", [
    {"family": "nope"}, {"c": 1}, {"family": "polynomial", "c": 1.0},
    {"family": "polynomial", "c": 1.0, "beta": 2.0, "gamma": 1},
    {"family": "polynomial", "c": 1.0, "beta": 0.5}, {"family": "list", "values": []},
    {"family": "list", "values": [0.5, 1.5]}, {"family": "geometric", "c": 3.0, "q": 0.5},
    {"family": "gnedin-sinh", "lambda": -1}, {"family": "records", "alpha": {"family": "list", "values": [0.5]}},
])
def test_from_dict_rejects(bad):
    with pytest.raises(ParameterDomainError):
        from_dict(bad)


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=30))
def test_explicit_list_finite_support(vals):
    seq = ExplicitList(vals)
    assert seq.support_size == len(vals)
    assert seq.log_values(np.array([len(vals) + 1]))[0] == -np.inf
    assert seq.tail_sum_bound(len(vals)).bound == 0.0
    k = np.arange(1, len(vals) + 1)
    np.testing.assert_allclose(seq.values(k), vals)
    # nonincreasing from k0
    tail = np.asarray(vals)[seq.k0 - 1:]
    assert np.all(np.diff(tail) <= 0)


def test_value_index_checks():
    seq = ExplicitList([0.5, 0.25])
    assert seq.value(2) == 0.25
    with pytest.raises(ParameterDomainError):
        seq.value(3)
    with pytest.raises(ParameterDomainError):
        Polynomial(1, 2).value(0)
    with pytest.raises(ParameterDomainError):
        Polynomial(1, 2).log_values([1.5])


@given(st.floats(-800.0, 0.0))
def test_log1mexp(x):
    xm = mp.mpf(x)
    if x == 0:
        want = -math.inf
    elif x > -1:
        want = float(mp.log(-mp.expm1(xm)))
    else:
        want = float(mp.log1p(-mp.exp(xm)))
    got = log1mexp(x)
    if x == 0:
        assert got == -math.inf
    else:
        assert got == pytest.approx(want, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("seq", [Polynomial(1.0, 2.0), Polynomial(0.5, 3.0), GnedinSinh(1.5),
                                 GnedinCosh(0.7)], ids=repr)
@pytest.mark.parametrize("K", [3, 20])
def test_odds_power_sums(seq, K):
    w = np.exp(seq.log_odds_power_sums(K, 4))
    for i in range(1, 5):
        ref = mp.nsum(lambda k: (ref_value(seq, k) / (1 - ref_value(seq, k))) ** i,
                      [K + 1, mp.inf], method="euler-maclaurin")
        assert w[i - 1] == pytest.approx(float(ref), rel=1e-9)


def test_log_odds_power_sums_do_not_underflow():
    # W_i for large i are far below the double range, yet e^{i s} W_i matters
    logw = Polynomial(1.0, 2.0).log_odds_power_sums(262144, 80)
    assert np.all(np.isfinite(logw)) and logw[-1] < -1900
    # integral bracket: int_{K+1}^inf f <= sum_{k>K} f(k) <= f(K+1) + int_{K+1}^inf f,
    # with k^-160 <= (k^2 - 1)^-80 <= k^-160 (1 - (K+1)^-2)^-80
    k1 = mp.mpf(262145)
    lower = -159 * mp.log(k1) - mp.log(159)
    upper = mp.log(mp.e ** lower + k1 ** -160) - 80 * mp.log1p(-k1 ** -2)
    assert float(lower) - 1e-10 <= logw[-1] <= float(upper) + 1e-10


def test_records_first_is_certain():
    seq = RecordsFAlpha(Geometric(1.0, 0.5))
    assert seq.value(1) == 1.0
    assert seq.log_complements(np.array([1]))[0] == -np.inf


# ---------------------------------------------------------------------------
# perturbations

def test_gnedin_perturbation_reproduces_sinh_family():
    for lam in (0.5, 1.0, 2.0):
        base, pert = gnedin_as_perturbation(lam)
        k = np.arange(1, 200)
        np.testing.assert_allclose(pert.log_values(k), GnedinSinh(lam).log_values(k), rtol=1e-13)
        for K in (10, 100):
            exact = float(mp.nsum(lambda j: (lam / mp.pi) ** 2 / (j * j + (lam / mp.pi) ** 2),
                                  [K + 1, mp.inf]))
            assert exact <= pert.abs_eps_tail(K) <= 1.01 * exact + 1e-15


def test_poissonized_perturbation_reproduces_hit_probabilities():
    w = StretchedExp(1.0, 1.5)
    base, pert = poissonized_as_perturbation(2.0, w)
    k = np.arange(1, 60)
    np.testing.assert_allclose(pert.log_values(k), PoissonizedRange(2.0, w).log_values(k), rtol=1e-12)
    eps = np.abs(pert.epsilon(k))
    assert np.all(eps <= 0.5 * 2.0 * w.values(k) * (1 + 1e-12))


@given(st.lists(st.floats(-0.9, 0.0), min_size=0, max_size=20))
def test_perturb_list_bounds(eps):
    p = perturb(Polynomial(1.0, 2.0), eps)
    assert p.abs_sum_bound == pytest.approx(math.fsum(abs(e) for e in eps))
    for K in (0, 3, 25):
        assert p.abs_eps_tail(K) == pytest.approx(math.fsum(abs(e) for e in eps[K:]))


@pytest.mark.parametrize("eps", [[-1.0], [0.5]])
def test_perturb_rejects_invalid(eps):
    with pytest.raises(InvalidPerturbationError):
        perturb(Polynomial(1.0, 2.0), eps)


def test_perturb_callable_needs_bound():
    with pytest.raises(ParameterDomainError):
        Perturbed(Polynomial(1.0, 2.0), lambda k: 0.0 * k)


def test_perturbed_callable_not_serializable():
    _, pert = gnedin_as_perturbation(1.0)
    with pytest.raises(ParameterDomainError):
        pert.to_dict()
