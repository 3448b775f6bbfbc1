"""Birth-death specs: operators, invariant mass, eigenvalues, classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlbd import bdprocess as bd
from nlbd.bdprocess import ProcessClass
from nlbd.errors import DomainError, InvalidSpecError

from conftest import states_of


def q(spec, n):
    return lambda x: spec.polynomials.eval_Q(n, x)


def test_generator_kills_constants(families):
    for spec in families.values():
        for x in states_of(spec, 20):
            assert bd.apply_generator(spec, lambda z: 1.0, int(x)) == 0.0


def test_generator_eigen_examples():
    s = bd.make("immigration-death", b=1, d=1)
    for x in range(10):
        assert bd.apply_generator(s, q(s, 1), x) == pytest.approx(-q(s, 1)(x), abs=1e-13)
    h = bd.make("hahn", d=1, alpha=0, beta=0, N=3)
    for x in range(4):
        assert bd.apply_generator(h, q(h, 2), x) == pytest.approx(-6 * q(h, 2)(x), abs=1e-12)


def test_forward_invariance(families):
    for spec in families.values():
        m = lambda z, s=spec: float(bd.invariant_mass(s, z))
        for x in states_of(spec, 30):
            assert abs(bd.apply_forward(spec, m, int(x))) < 1e-12


@pytest.mark.parametrize("name", ["immigration-death", "meixner", "krawtchouk", "hahn"])
def test_forward_eigen(families, name):
    spec = families[name]
    for n in range(1, min(6, spec.N or 6) + 1):
        lam = bd.eigenvalue(spec, n)
        f = lambda z: float(bd.invariant_mass(spec, z)) * q(spec, n)(z)
        for x in states_of(spec, 15):
            x = int(x)
            lhs = bd.apply_forward(spec, f, x)
            assert lhs == pytest.approx(lam * f(x), rel=1e-9, abs=1e-13)


def test_forward_immigration_death_b2_d1():
    # lambda_3 = -d * 3 = -3 for immigration-death (b=2, d=1)
    s = bd.make("immigration-death", b=2, d=1)
    f = lambda z: float(bd.invariant_mass(s, z)) * q(s, 3)(z)
    lhs = bd.apply_forward(s, f, 4)
    assert lhs == pytest.approx(-3 * f(4), rel=1e-12)
    # direct finite difference with the explicit Poisson(2) mass
    m = lambda z: math.exp(-2) * 2.0 ** z / math.factorial(z)
    qq = q(s, 3)
    direct = (2 * m(3) * qq(3) + 5 * m(5) * qq(5) - (2 + 4) * m(4) * qq(4))
    assert lhs == pytest.approx(direct, rel=1e-12)


def test_invariant_mass_examples():
    s = bd.make("immigration-death", b=1, d=1)
    assert bd.invariant_mass(s, 0) == pytest.approx(math.exp(-1), rel=1e-15)
    k = bd.make("krawtchouk", b=1, d=1, N=2)
    assert bd.invariant_mass(k, [0, 1, 2]) == pytest.approx([0.25, 0.5, 0.25], rel=1e-15)


def test_mass_sums_to_one(families):
    for spec in families.values():
        xs = states_of(spec, bd.truncation_point(spec, 1e-16))
        assert math.fsum(bd.invariant_mass(spec, xs)) == pytest.approx(1.0, abs=1e-12)


def test_mass_matches_ratio_recursion(families):
    for spec in families.values():
        xs = states_of(spec, 40)
        m = bd.invariant_mass(spec, xs)
        ratio = spec.birth(xs[:-1]) / spec.death(xs[1:])
        assert m[1:] == pytest.approx(m[:-1] * ratio, rel=1e-12)


def test_pearson_examples():
    s = bd.make("immigration-death", b=1, d=1)
    assert max(bd.pearson_residual(s, x, relative=True) for x in range(31)) <= 1e-14
    h = bd.make("hahn", d=1, alpha=1, beta=2, N=5)
    assert max(abs(bd.pearson_residual(h, x)) for x in range(5)) <= 1e-12
    base = lambda z: float(bd.invariant_mass(s, z))
    bent = lambda z: base(z) * (1.01 if z == 1 else 1.0)
    assert abs(bd.pearson_residual(s, 0, mass=bent)) > 1e-4
    assert bd.pearson_residual(s, 1, mass=bent, relative=True) > 1e-3


def test_eigenvalue_examples():
    m = bd.make("meixner", b=0.5, d=1, beta=1)
    assert [bd.eigenvalue(m, n) for n in range(5)] == [-0.5 * n for n in range(5)]
    k = bd.make("krawtchouk", b=1, d=1, N=4)
    assert [bd.eigenvalue(k, n) for n in range(5)] == [-2.0 * n for n in range(5)]
    for spec in (m, k):
        assert bd.eigenvalue(spec, 0) == 0
    with pytest.raises(DomainError):
        bd.eigenvalue(k, 5)


def test_classify_examples():
    assert bd.classify(((2,), (0, 1))) is ProcessClass.IMMIGRATION_DEATH
    assert bd.classify(((0.5, 0.5), (0, 1))) is ProcessClass.MEIXNER
    fs = bd.from_rates((3, -1), (0, 1))
    assert bd.classify(fs) is ProcessClass.FINITE_STATE
    assert fs.N == 3


@settings(max_examples=50, deadline=None)
@given(fam=st.sampled_from(["immigration-death", "meixner", "krawtchouk", "hahn"]),
       b=st.floats(0.1, 5), d=st.floats(0.1, 5), r=st.floats(0.05, 0.95),
       N=st.integers(1, 12), a=st.integers(0, 4), be=st.integers(0, 4))
def test_classify_make_idempotent(fam, b, d, r, N, a, be):
    if fam == "immigration-death":
        spec = bd.make(fam, b=b, d=d)
    elif fam == "meixner":
        spec = bd.make(fam, b=r * d, d=d, beta=b)
    elif fam == "krawtchouk":
        spec = bd.make(fam, b=b, d=d, N=N)
    else:
        spec = bd.make(fam, d=d, alpha=a, beta=be, N=N)
    back = bd.from_rates(spec.birth_coeffs, spec.death_coeffs)
    assert back.family == spec.family
    assert bd.classify(back) == bd.classify(spec)
    xs = states_of(spec, 20)
    np.testing.assert_allclose(back.birth(xs), spec.birth(xs), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(back.death(xs), spec.death(xs), rtol=1e-9, atol=1e-12)


def test_geometric_tail_examples():
    s = bd.make("immigration-death", b=1, d=1)
    assert bd.limit_ratio(s) == 0
    rho, x0 = bd.geometric_tail(s)
    assert (rho, x0) == (0.5, 2)
    m = bd.make("meixner", b=0.5, d=1, beta=1)
    assert bd.limit_ratio(m) == 0.5
    for spec in (s, m):
        rho, x0 = bd.geometric_tail(spec)
        assert bd.limit_ratio(spec) < rho < 1
        k = np.arange(1, 51)
        assert np.all(bd.invariant_mass(spec, x0 + k)
                      <= rho ** k * bd.invariant_mass(spec, x0) * (1 + 1e-12))


def test_rate_matrix(families):
    for name in ("krawtchouk", "hahn"):
        spec = families[name]
        G = bd.generator_matrix(spec)
        assert np.abs(G.sum(axis=1)).max() < 1e-12
        m = bd.invariant_mass(spec, np.arange(spec.N + 1))
        assert np.abs(m @ G).max() < 1e-12


def test_hahn_rates_nonnegative():
    # b(x) = d (N - x)(x + alpha + 1) >= 0 on {0..N} for every admissible set
    for a in range(4):
        for be in range(4):
            for N in range(1, 8):
                s = bd.make("hahn", d=1, alpha=a, beta=be, N=N)
                xs = np.arange(N + 1)
                assert np.all(s.birth(xs) >= 0) and s.birth(N) == 0
                assert np.all(s.death(xs) >= 0) and s.death(0) == 0


@pytest.mark.parametrize("kwargs", [
    dict(family="immigration-death", b=0, d=1),
    dict(family="meixner", b=1, d=1, beta=1),
    dict(family="krawtchouk", b=1, d=1, N=2.5),
    dict(family="hahn", d=1, alpha=-1, beta=0, N=3),
    dict(family="poisson", b=1, d=1),
    dict(family="immigration-death", b=1, d=1, gamma=3),
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpecError):
        bd.make(kwargs.pop("family"), **kwargs)


@pytest.mark.parametrize("rates", [
    ((0,), (0, 1)),          # b = 0
    ((1, 1), (0, 1)),        # limit ratio 1
    ((1,), (1, 1)),          # d(0) != 0
    ((1, 0, 1), (0, 1, 1)),  # quadratic growth
])
def test_from_rates_rejects(rates):
    with pytest.raises(InvalidSpecError):
        bd.from_rates(*rates)


def test_dict_round_trip(families):
    for spec in families.values():
        assert bd.from_dict(spec.to_dict()) == spec


def test_state_checks():
    k = bd.make("krawtchouk", b=1, d=1, N=3)
    with pytest.raises(DomainError):
        bd.apply_generator(k, lambda z: 1.0, 4)
    with pytest.raises(DomainError):
        bd.invariant_mass(k, 1) and bd.pearson_residual(k, -1)
