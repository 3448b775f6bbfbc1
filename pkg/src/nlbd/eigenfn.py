"""Eigenfunctions of the convolution (non-local) time derivative.

For a Bernstein function ``Phi`` with Levy tail ``nu_bar``, the convolution
derivative is

    D f(t) = int_0^t f'(s) nu_bar(t - s) ds,

and ``e(t; lam) = E[exp(lam E(t))]`` (``E`` the inverse subordinator) solves
``D e = lam e`` with ``e(0) = 1``. Its Laplace transform in ``t`` is
``Phi(eta) / (eta (Phi(eta) - lam))``. In the stable case
``e(t; lam) = E_alpha(lam t^alpha)`` with the Mittag-Leffler function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import laplace
from .bernstein import BernsteinFunction
from .errors import DomainError, NumericalError

# below |z| <= 1 the alternating series has no cancellation problems
_SERIES_RADIUS = 1.0
# closer than this to alpha = 1 the integral representation's kernel is too
# peaked for adaptive quadrature; interpolate towards exp instead
_ALPHA_NEAR_ONE = 1e-5


def _ml_series(alpha: float, z: float) -> float:
    terms = []
    k = 0
    lz = math.log(abs(z))
    while True:
        lt = k * lz - math.lgamma(alpha * k + 1)
        t = math.exp(lt) * (-1 if (z < 0 and k % 2) else 1)
        terms.append(t)
        if k > 2 and lt < math.log(1e-17) + math.log(max(1.0, abs(math.fsum(terms)))):
            # terms decay monotonically once alpha k + 1 > |z|^(1/alpha)
            if alpha * k + 1 > abs(z) ** (1 / alpha) + 2:
                break
        k += 1
        if k > 200_000:
            raise NumericalError(f"Mittag-Leffler series did not converge at z={z}")
    return math.fsum(terms)


def _ml_negative(alpha: float, x: float) -> float:
    """``E_alpha(-x)`` for ``x > 0`` from the real integral representation

        E_alpha(-x) = sin(a pi)/(a pi) int_0^inf exp(-(x s)^(1/a))
                      / (s^2 + 2 s cos(a pi) + 1) ds.
    """
    sa, ca = math.sin(alpha * math.pi), math.cos(alpha * math.pi)
    w = x ** (1 / alpha)
    inv = 1 / alpha

    def f(s):
        return math.exp(-w * s ** inv) / ((s + ca) ** 2 + sa * sa)

    S = (50.0 / w) ** alpha  # beyond S the exponential factor is below e^-50
    p = -ca
    pts = sorted({q for k in (0, 1, 10, 100) for q in (p - k * sa, p + k * sa) if 0 < q < S})
    segs = [0.0] + pts + [S]
    parts = [integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=500)[0]
             for a, b in zip(segs[:-1], segs[1:])]
    return sa / (alpha * math.pi) * math.fsum(parts)


def mittag_leffler(alpha: float, z) -> float:
    """One-parameter Mittag-Leffler function ``E_alpha(z)`` for real ``z``.

    Regimes: ``exp`` at ``alpha = 1``; power series for ``|z| <= 1`` and for
    ``z > 0``; the integral representation above for ``z < -1``, blended
    linearly in ``alpha`` towards ``exp`` when ``1 - alpha < 1e-5`` (absolute
    error of order 1e-14 there).
    """
    if not (0 < alpha <= 1):
        raise DomainError("Mittag-Leffler requires 0 < alpha <= 1")
    if np.ndim(z):
        return np.vectorize(lambda v: mittag_leffler(alpha, float(v)))(z)
    z = float(z)
    if z == 0.0:
        return 1.0
    if alpha == 1.0:
        return math.exp(z)
    if abs(z) <= _SERIES_RADIUS or z > 0:
        return _ml_series(alpha, z)
    if 1 - alpha < _ALPHA_NEAR_ONE:
        a0 = 1 - _ALPHA_NEAR_ONE
        w = (1 - alpha) / _ALPHA_NEAR_ONE
        return w * _ml_negative(a0, -z) + (1 - w) * math.exp(z)
    return _ml_negative(alpha, -z)


def _ml_time_derivative(alpha: float, mu: float, tau: float) -> float:
    """``d/dtau E_alpha(-mu tau^alpha)`` for ``tau > 0``."""
    x = mu * tau ** alpha
    if x <= _SERIES_RADIUS:
        # (1/tau) sum_{k>=1} (-x)^k / Gamma(alpha k)
        terms = []
        k = 1
        while True:
            t = (-x) ** k / special.gamma(alpha * k)
            terms.append(t)
            if k > 3 and abs(t) < 1e-18 and alpha * k > 2:
                break
            k += 1
        return math.fsum(terms) / tau
    sa, ca = math.sin(alpha * math.pi), math.cos(alpha * math.pi)
    inv = 1 / alpha
    w = mu ** inv * tau

    def f(s):
        return s ** inv * math.exp(-w * s ** inv) / ((s + ca) ** 2 + sa * sa)

    S = (60.0 / w) ** alpha
    p = -ca
    pts = sorted({q for k in (0, 1, 10, 100) for q in (p - k * sa, p + k * sa) if 0 < q < S})
    segs = [0.0] + pts + [S]
    parts = [integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=500)[0]
             for a, b in zip(segs[:-1], segs[1:])]
    return -sa / (alpha * math.pi) * mu ** inv * math.fsum(parts)


@dataclass(frozen=True)
class EigenEvaluator:
    """Evaluator of ``e(t; lam)`` for one Bernstein function.

    ``method`` is ``"mittag-leffler"`` (stable kind only) or ``"laplace"``;
    ``None`` picks Mittag-Leffler for the stable kind. ``rtol``/``atol``
    bound the a posteriori error estimate of the Laplace inversion.
    """

    fn: BernsteinFunction
    method: str = None
    rtol: float = 1e-6
    atol: float = 1e-12
    nodes: int = laplace.DEFAULT_NODES

    def __post_init__(self):
        m = self.method
        if m is None:
            m = "mittag-leffler" if self.fn.kind == "stable" else "laplace"
            object.__setattr__(self, "method", m)
        if m not in ("mittag-leffler", "laplace"):
            raise DomainError(f"unknown eigenfunction method {m!r}")
        if m == "mittag-leffler" and self.fn.kind != "stable":
            raise DomainError("the Mittag-Leffler method needs the stable kind")

    # values ------------------------------------------------------------------
    def __call__(self, t, lam):
        return self.value(t, lam)

    def value(self, t, lam):
        """``e(t; lam)`` for ``t >= 0`` and ``lam <= 0`` (broadcasting)."""
        t = np.asarray(t, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if np.any(t < 0) or np.any(lam > 0):
            raise DomainError("eigenfunction needs t >= 0 and lam <= 0")
        t, lam = np.broadcast_arrays(t, lam)
        out = np.ones(t.shape)
        live = (t > 0) & (lam < 0)
        if np.any(live):
            out[live] = self._value(t[live], lam[live])
        return out if out.ndim else float(out)

    def _value(self, t, lam):
        kind = self.fn.kind
        if kind == "identity":
            return np.exp(lam * t)
        if self.method == "mittag-leffler":
            a = self.fn.alpha
            return np.array([mittag_leffler(a, l * s ** a) for s, l in zip(t, lam)])
        mu = -lam[:, None]
        fn = self.fn
        val, err = laplace.invert(lambda s: fn.eigen_laplace(mu, s), t,
                                  n_nodes=self.nodes, return_error=True)
        bad = err > self.rtol * np.abs(val) + self.atol
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NumericalError(
                f"inversion missed tolerance at t={t[i]}, lam={lam[i]}", float(err[i]))
        return val

    def derivative(self, t, lam):
        """``d/dt e(t; lam)`` for ``t > 0``.

        Stable kind under the Mittag-Leffler method: integral representation
        (series near 0). Otherwise inversion of ``lam / (Phi(eta) - lam)``,
        the transform of the derivative.
        """
        t = np.asarray(t, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if np.any(t <= 0) or np.any(lam > 0):
            raise DomainError("derivative needs t > 0 and lam <= 0")
        t, lam = np.broadcast_arrays(t, lam)
        if self.fn.kind == "identity":
            out = lam * np.exp(lam * t)
        elif self.method == "mittag-leffler":
            a = self.fn.alpha
            out = np.array([0.0 if l == 0 else _ml_time_derivative(a, -l, s)
                            for s, l in zip(t.ravel(), lam.ravel())]).reshape(t.shape)
        else:
            fn = self.fn
            mu = -lam[..., None]
            out = laplace.invert(lambda s: -mu / (fn.phi(s) + mu), t, n_nodes=self.nodes)
        return out if out.ndim else float(out)

    # residual of the eigen-equation ----------------------------------------
    def conv_derivative_residual(self, t: float, lam: float) -> float:
        """``|D e(t; lam) - lam e(t; lam)|`` with ``D`` computed by quadrature.

        Stable kind: Caputo form ``int_0^t e'(s) nu_bar(t-s) ds``, split at
        ``t/2``; the left piece uses ``s = u^(1/alpha)`` to remove the
        ``s^(alpha-1)`` singularity of ``e'`` and the right piece an algebraic
        weight for ``(t-s)^-alpha``. Other kinds: regularized form
        ``d/dt int_0^t (e(t-u) - 1) nu_bar(u) du``, differentiated with a
        five-point stencil, which avoids the non-integrable-looking behaviour
        of ``e'`` at ``0`` for logarithmic ``Phi``.
        """
        if t <= 0 or lam >= 0:
            raise DomainError("residual needs t > 0 and lam < 0")
        fn = self.fn
        if fn.kind == "identity":
            raise DomainError("the identity time change has no convolution derivative")
        target = lam * self.value(t, lam)
        if fn.kind == "stable":
            a = fn.alpha
            ev = self if self.method == "mittag-leffler" else EigenEvaluator(fn)
            g1a = math.gamma(1 - a)

            def left(u):
                s = u ** (1 / a)
                return (ev.derivative(s, lam) * (1 / a) * u ** (1 / a - 1)
                        * (t - s) ** -a / g1a)

            def right(s):
                return ev.derivative(s, lam) / g1a

            i1, e1 = integrate.quad(left, 0, (t / 2) ** a, epsabs=1e-13, epsrel=1e-11, limit=200)
            i2, e2 = integrate.quad(right, t / 2, t, weight="alg", wvar=(0, -a),
                                    epsabs=1e-13, epsrel=1e-11, limit=200)
            if e1 + e2 > 1e-6:
                raise NumericalError("residual quadrature did not converge", e1 + e2)
            return abs(i1 + i2 - target)
        h = 0.01 * t
        R = [self._regularized(t + k * h, lam) for k in (-2, -1, 1, 2)]
        d = (R[0] - 8 * R[1] + 8 * R[2] - R[3]) / (12 * h)
        return abs(d - target)

    def _regularized(self, t: float, lam: float) -> float:
        fn = self.fn

        def g(u):
            return (self.value(t - u, lam) - 1.0) * fn.levy_tail(u)

        pts = [p for p in (1e-6 * t, 1e-3 * t, 0.1 * t) if p < t]
        val, err = integrate.quad(g, 0, t, points=pts, epsabs=1e-13, epsrel=1e-11, limit=400)
        if err > 1e-7:
            raise NumericalError("regularized convolution did not converge", err)
        return val

    # uniform envelope ----------------------------------------------------------
    def uniform_bound(self, t: float) -> float:
        """Envelope ``K(t) >= lam e(t; -lam)`` over ``lam >= 0``.

        Maximum of the ``lam -> inf`` limit ``nu_bar(t)`` and the values on a
        log-spaced grid ``lam in [1e-3, 1e6]``.
        """
        if t <= 0:
            raise DomainError("uniform bound needs t > 0")
        lams = np.logspace(-3, 6, 91)
        grid = float(np.max(lams * self.value(t, -lams)))
        if self.fn.kind == "identity":
            return max(grid, 1 / (math.e * t))
        return max(grid, float(self.fn.levy_tail(t)))


def eigenfunction(ev: EigenEvaluator, t, lam):
    return ev.value(t, lam)


def conv_derivative_residual(ev: EigenEvaluator, t: float, lam: float) -> float:
    return ev.conv_derivative_residual(t, lam)


def uniform_bound(ev: EigenEvaluator, t: float) -> float:
    return ev.uniform_bound(t)
