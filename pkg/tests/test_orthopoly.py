"""Discrete orthogonal polynomials against exact rational oracles."""

from fractions import Fraction
from math import comb, exp, factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlbd import orthopoly as op
from nlbd.errors import DomainError
from nlbd.orthopoly import PolynomialFamily as PF


def _poch(a, k):
    out = Fraction(1)
    for i in range(k):
        out *= a + i
    return out


def hyp_P(kind, n, x, **p):
    """Terminating hypergeometric sums in exact arithmetic."""
    n, x = int(n), int(x)
    total = Fraction(0)
    for k in range(n + 1):
        if kind == "charlier":
            z = -1 / Fraction(p["rho"])
            term = _poch(-n, k) * _poch(-x, k) * z ** k
        elif kind == "meixner":
            c = Fraction(p["rho"])
            term = _poch(-n, k) * _poch(-x, k) / _poch(Fraction(p["beta"]), k) * (1 - 1 / c) ** k
        elif kind == "krawtchouk":
            term = _poch(-n, k) * _poch(-x, k) / _poch(Fraction(-p["N"]), k) * (1 / Fraction(p["p"])) ** k
        else:
            a, b, N = p["alpha"], p["beta"], p["N"]
            term = (_poch(-n, k) * _poch(n + a + b + 1, k) * _poch(-x, k)
                    / (_poch(a + 1, k) * _poch(-N, k)))
        total += term / factorial(k)
    return total


FAMILIES = [
    PF.charlier(2.0),
    PF.meixner(0.5, 2.0),
    PF.krawtchouk(6, 0.25),
    PF.hahn(1, 2, 5),
]


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.kind)
def test_degree_zero_is_one(fam):
    xs = range(fam.N + 1) if fam.finite else range(30)
    assert all(op.eval_P(fam, 0, x) == 1.0 for x in xs)
    assert op.norm(fam, 0) == pytest.approx(1.0, abs=1e-15)
    assert all(op.eval_Q(fam, 0, x) == pytest.approx(1.0, abs=1e-15) for x in xs)


def test_charlier_first_degree():
    assert op.eval_P(PF.charlier(2.0), 1, 3) == pytest.approx(-0.5, abs=1e-15)


def test_krawtchouk_gram_schmidt():
    # Gram-Schmidt on {1, x, x^2} under Binomial(2, 1/2), normalized to P(0) = 1
    w = [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]

    def ip(f, g):
        return sum(wi * f(x) * g(x) for x, wi in enumerate(w))

    basis = []
    for k in range(3):
        def mono(x, k=k):
            return Fraction(x) ** k
        coefs = [ip(mono, q) / ip(q, q) for q in basis]

        def q(x, mono=mono, coefs=coefs, prev=tuple(basis)):
            return mono(x) - sum(c * p(x) for c, p in zip(coefs, prev))
        basis.append(q)
    fam = PF.krawtchouk(2, 0.5)
    for n in range(3):
        ref = [basis[n](x) / basis[n](0) for x in range(3)]
        got = [op.eval_P(fam, n, x) for x in range(3)]
        assert got == pytest.approx([float(r) for r in ref], abs=1e-15)
    # P_2 is orthogonal to degrees 0 and 1
    p2 = [op.eval_P(fam, 2, x) for x in range(3)]
    assert np.sign(p2).tolist() == [1.0, -1.0, 1.0]
    assert sum(float(wi) * v for wi, v in zip(w, p2)) == pytest.approx(0.0, abs=1e-15)


def test_charlier_norm_brute_force():
    fam = PF.charlier(2.0)
    # tail of Poisson(2) beyond 60 is far below 1e-12
    brute = sum(op.eval_P(fam, 2, x) ** 2 * exp(-2) * 2.0 ** x / factorial(x) for x in range(61))
    assert op.norm(fam, 2) ** 2 == pytest.approx(brute, rel=1e-12)
    assert op.norm(fam, 2) ** 2 == pytest.approx(0.5, rel=1e-14)


def test_krawtchouk_norms_exact():
    fam = PF.krawtchouk(2, 0.5)
    w = [0.25, 0.5, 0.25]
    for n in range(3):
        exact = float(sum(Fraction(wi) * hyp_P("krawtchouk", n, x, N=2, p=Fraction(1, 2)) ** 2
                          for x, wi in enumerate(w)))
        assert op.norm(fam, n) ** 2 == pytest.approx(exact, rel=1e-14)


def test_q1_normalized():
    for fam in FAMILIES:
        xs = np.arange(fam.N + 1) if fam.finite else np.arange(200)
        s = sum(op.eval_Q(fam, 1, int(x)) ** 2 * fam.weight(int(x)) for x in xs)
        assert s == pytest.approx(1.0, abs=1e-10)


def test_charlier_q1_at_zero():
    assert op.eval_Q(PF.charlier(1.0), 1, 0) == pytest.approx(1.0, abs=1e-15)


def test_duality_examples():
    assert op.duality_defect(PF.charlier(1.5), 3, 5) < 1e-9
    for fam in FAMILIES:
        assert op.duality_defect(fam, 0, 0) == 0.0
    assert op.duality_defect(PF.hahn(1, 1, 4), 2, 3) < 1e-9


def test_hahn_dual_against_hypergeometric():
    # dual Hahn R_x(lambda(n)) equals Q_n(x) (both are the same 3F2)
    fam = PF.hahn(1, 1, 4)
    for n in range(5):
        for x in range(5):
            ref = float(hyp_P("hahn", n, x, alpha=1, beta=1, N=4))
            assert fam.dual_P(n, x) == pytest.approx(ref, abs=1e-13)
            assert fam.direct_P(n, x) == pytest.approx(ref, abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(["charlier", "meixner", "krawtchouk", "hahn"]),
       n=st.integers(0, 8), x=st.integers(0, 8),
       r=st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]),
       a=st.integers(0, 3), b=st.integers(0, 3))
def test_matches_hypergeometric_oracle(kind, n, x, r, a, b):
    if kind == "charlier":
        fam, p = PF.charlier(float(4 * r)), {"rho": 4 * r}
    elif kind == "meixner":
        fam, p = PF.meixner(float(r), float(a + 1)), {"rho": r, "beta": a + 1}
    elif kind == "krawtchouk":
        fam, p = PF.krawtchouk(8, float(r)), {"N": 8, "p": r}
    else:
        fam, p = PF.hahn(a, b, 8), {"alpha": a, "beta": b, "N": 8}
    ref = float(hyp_P(kind, n, x, **p))
    assert op.eval_P(fam, n, x) == pytest.approx(ref, rel=1e-11, abs=1e-11 * max(1.0, abs(ref)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 400), x=st.integers(0, 400), rho=st.floats(0.1, 20.0))
def test_scaled_table_bounded(n, x, rho):
    # S_n(x) = Q_n(x) sqrt(m(x)) are entries of an orthogonal matrix
    S = PF.charlier(rho).table_S(n, x)
    assert np.all(np.isfinite(S))
    assert np.all(np.abs(S) <= 1 + 1e-9)


def test_meixner_rows_of_orthogonal_matrix():
    fam = PF.meixner(0.5, 2.0)
    # high-degree rows spread far past the bulk of m
    X = 300
    S = np.column_stack([fam.table_S(20, x) for x in range(X + 1)])
    assert np.abs(S @ S.T - np.eye(21)).max() < 1e-12


@pytest.mark.parametrize("bad", [
    lambda: PF.charlier(-1.0),
    lambda: PF.meixner(1.0, 2.0),
    lambda: PF.krawtchouk(3, 1.5),
    lambda: op.eval_P(PF.krawtchouk(3, 0.5), 4, 0),
    lambda: op.eval_P(PF.krawtchouk(3, 0.5), 1, 5),
    lambda: op.eval_P(PF.charlier(1.0), -1, 0),
])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        bad()


def test_binomial_weight():
    fam = PF.krawtchouk(5, 0.3)
    w = [fam.weight(x) for x in range(6)]
    ref = [comb(5, x) * 0.3 ** x * 0.7 ** (5 - x) for x in range(6)]
    assert w == pytest.approx(ref, rel=1e-13)
