"""Spectral series: projections, kernels, backward and forward solutions."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from nlbd import bdprocess as bd
from nlbd import spectral as sp
from nlbd.bernstein import BernsteinFunction as B
from nlbd.eigenfn import EigenEvaluator
from nlbd.errors import DomainError, NotInL2Error

from conftest import states_of

STABLE = EigenEvaluator(B.stable(0.5))
GAMMA = EigenEvaluator(B.gamma())
IDENT = EigenEvaluator(B.identity())


def test_project_constant(families):
    for spec in families.values():
        c = sp.project(spec, lambda x: np.ones_like(x, dtype=float)).coeffs
        assert c[0] == 1.0
        assert np.abs(c[1:]).max() < 1e-12


def test_project_point_mass_gives_polynomial_values(families):
    for spec in families.values():
        for z in (0, 2):
            c = sp.project(spec, sp.delta(z), "divided-by-m", cap=8).coeffs
            ref = [spec.polynomials.eval_Q(n, z) for n in range(len(c))]
            np.testing.assert_allclose(c, ref, rtol=1e-10, atol=1e-12)


def test_project_identity_immigration_death():
    spec = bd.make("immigration-death", b=1, d=1)
    c = sp.project(spec, lambda x: np.asarray(x, dtype=float)).coeffs
    assert c[0] == pytest.approx(1.0, abs=1e-15)
    assert c[1] ** 2 == pytest.approx(1.0, rel=1e-12)
    assert np.abs(c[2:]).max() < 1e-12


def test_not_in_l2():
    spec = bd.make("meixner", b=0.5, d=1, beta=1)
    with pytest.raises(NotInL2Error):
        sp.project(spec, lambda x: 2.0 ** np.asarray(x, dtype=float))
    with pytest.raises(DomainError):
        sp.project(spec, lambda x: x, weight="other")


def test_kernel_at_time_zero(families):
    for spec in families.values():
        for y in (0, 3):
            col = sp.fundamental_column(spec, GAMMA, 0.0, y, xmax=None if spec.finite else 12)
            ref = np.zeros_like(col)
            ref[y] = 1.0
            assert np.abs(col - ref).max() <= 1e-8


def test_kernel_column_sums(families):
    for spec in families.values():
        for ev in (STABLE, GAMMA):
            col = sp.fundamental_column(spec, ev, 1.0, 1, tol=1e-10)
            assert col.sum() == pytest.approx(1.0, abs=1e-10 * len(col) + 1e-12)
            assert col.min() > -1e-10


def test_krawtchouk_two_state_column():
    spec = bd.make("krawtchouk", b=1, d=1, N=2)
    for t in (0.1, 1.0, 10.0):
        col = sp.fundamental_column(spec, STABLE, t, 0)
        assert col.sum() == pytest.approx(1.0, abs=1e-12)


def test_kernel_relaxes_to_invariant_mass(families):
    spec = families["krawtchouk"]
    t = 40.0
    assert GAMMA.value(t, bd.eigenvalue(spec, 1)) < 1e-3
    col = sp.fundamental_column(spec, GAMMA, t, 0)
    m = bd.invariant_mass(spec, np.arange(spec.N + 1))
    assert np.abs(col - m).max() < 1e-3


def test_identity_kernel_is_matrix_exponential(families):
    for name in ("krawtchouk", "hahn"):
        spec = families[name]
        P = expm(bd.generator_matrix(spec) * 0.7)
        for y in range(spec.N + 1):
            col = sp.fundamental_column(spec, IDENT, 0.7, y)
            np.testing.assert_allclose(col, P[y], atol=1e-12)


def test_backward_eigen_datum(families):
    for spec in families.values():
        q1 = lambda x, s=spec: np.array([s.polynomials.eval_Q(1, int(v)) for v in np.atleast_1d(x)])
        lam = bd.eigenvalue(spec, 1)
        sol = sp.backward_solution(spec, STABLE, q1, tol=1e-10)
        for y in (0, 1, 3):
            if spec.finite and y > spec.N:
                continue
            ref = STABLE.value(1.3, lam) * spec.polynomials.eval_Q(1, y)
            assert sol(1.3, y) == pytest.approx(ref, abs=1e-9)


def test_backward_constant_is_exact(families):
    one = lambda x: np.ones_like(x, dtype=float)
    for spec in families.values():
        sol = sp.backward_solution(spec, GAMMA, one)
        for y in states_of(spec, 10):
            assert sol(2.0, int(y)) == 1.0


def test_backward_matches_kernel(families):
    g = lambda x: np.cos(np.asarray(x, dtype=float))
    for name in ("krawtchouk", "immigration-death"):
        spec = families[name]
        X = sp.state_cutoff(spec)
        xs = np.arange(X + 1)
        for y in (0, 2):
            col = sp.fundamental_column(spec, STABLE, 0.8, y, tol=1e-12, xmax=X)
            ref = float(np.dot(col, g(xs)))
            assert sp.solve_backward(spec, STABLE, g, 0.8, y, tol=1e-10).value == \
                pytest.approx(ref, abs=1e-9)


def test_forward_invariant_and_point_mass(families):
    for spec in families.values():
        m = lambda x, s=spec: bd.invariant_mass(s, x)
        sol = sp.forward_solution(spec, GAMMA, m)
        for x in states_of(spec, 8):
            assert sol(1.5, int(x)) == pytest.approx(float(m(int(x))), abs=1e-14)
        z = 1
        fwd = sp.forward_solution(spec, GAMMA, sp.delta(z), tol=1e-10)
        ker = sp.fundamental_solution(spec, GAMMA, z, tol=1e-10)
        for x in states_of(spec, 8):
            assert fwd(1.5, int(x)) == pytest.approx(ker(1.5, int(x)), abs=2e-10)


def test_backward_forward_duality(families):
    spec = families["hahn"]
    xs = np.arange(spec.N + 1)
    g = lambda x: np.asarray(x, dtype=float) ** 2
    f = lambda x: np.where(np.asarray(x) <= 2, 1.0 / 3, 0.0)
    u = [sp.solve_backward(spec, STABLE, g, 2.0, int(y)).value for y in xs]
    v = [sp.solve_forward(spec, STABLE, f, 2.0, int(x)).value for x in xs]
    assert np.dot(u, f(xs)) == pytest.approx(np.dot(v, g(xs)), abs=1e-12)


def test_tail_bound_is_honest():
    spec = bd.make("meixner", b=0.5, d=1, beta=2)
    g = lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float))
    for ev in (STABLE, GAMMA):
        for t in (0.05, 1.0):
            loose = sp.solve_backward(spec, ev, g, t, 3, tol=1e-4)
            tight = sp.solve_backward(spec, ev, g, t, 3, tol=1e-12)
            assert loose.tail_bound <= 1e-4
            assert abs(loose.value - tight.value) <= loose.tail_bound + tight.tail_bound


def test_domain_errors(families):
    spec = families["krawtchouk"]
    with pytest.raises(DomainError):
        sp.fundamental(spec, GAMMA, 1.0, spec.N + 1, 0)
    with pytest.raises(DomainError):
        sp.fundamental(spec, GAMMA, -1.0, 0, 0)
