"""Driftless Bernstein functions and their Levy tails.

A subordinator ``sigma`` has ``E exp(-lam sigma(y)) = exp(-y Phi(lam))`` with

    Phi(lam) = int_0^inf (1 - exp(-lam s)) nu(ds).

Built-in kinds:

==================  ==========================  ==============================
kind                Phi(lam)                    Levy tail nu((t, inf))
==================  ==========================  ==============================
stable              lam^a                       t^-a / Gamma(1-a)
tempered-stable     (lam+th)^a - th^a           a th^a Gamma(-a, th t)/Gamma(1-a)
geometric-stable    log(1 + lam^a)              numerical inversion of Phi(s)/s
gamma               log(1 + lam)                E_1(t)
==================  ==========================  ==============================

Two more kinds exist for testing and extension: ``identity`` (Phi(lam) = lam,
i.e. no time change, which is *not* driftless and has no Levy tail) and
``custom`` (a user callable, checked for the Bernstein sign pattern).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from . import laplace
from .errors import DomainError, InvalidSpecError

_ALIASES = {
    "stable": "stable",
    "tempered": "tempered-stable",
    "tempered-stable": "tempered-stable",
    "tempered_stable": "tempered-stable",
    "geometric-stable": "geometric-stable",
    "geometric_stable": "geometric-stable",
    "geometric": "geometric-stable",
    "gamma": "gamma",
    "identity": "identity",
    "custom": "custom",
}


@dataclass(frozen=True)
class BernsteinFunction:
    """Tagged parameter set of a Bernstein function.

    ``gamma`` is stored as geometric-stable with ``alpha = 1`` semantics but
    keeps its own tag for reporting.
    """

    kind: str
    alpha: Optional[float] = None
    theta: Optional[float] = None
    custom: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        kind = _ALIASES.get(self.kind)
        if kind is None:
            raise InvalidSpecError(f"unknown Bernstein kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        a = self.alpha
        if kind in ("stable", "tempered-stable"):
            if a is None or not 0 < a < 1:
                raise InvalidSpecError(f"{kind} requires 0 < alpha < 1")
        if kind == "geometric-stable":
            if a is None or not 0 < a <= 1:
                raise InvalidSpecError("geometric-stable requires 0 < alpha <= 1")
        if kind == "tempered-stable":
            if self.theta is None or not self.theta > 0:
                raise InvalidSpecError("tempered-stable requires theta > 0")
        if kind == "gamma":
            object.__setattr__(self, "alpha", 1.0)
        if kind == "custom":
            if self.custom is None:
                raise InvalidSpecError("custom kind needs a callable Phi")
            _check_bernstein(self.custom)

    # constructors ---------------------------------------------------------
    @classmethod
    def stable(cls, alpha):
        return cls("stable", alpha=float(alpha))

    @classmethod
    def tempered(cls, alpha, theta):
        return cls("tempered-stable", alpha=float(alpha), theta=float(theta))

    @classmethod
    def geometric_stable(cls, alpha):
        return cls("geometric-stable", alpha=float(alpha))

    @classmethod
    def gamma(cls):
        return cls("gamma")

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def from_callable(cls, phi: Callable):
        return cls("custom", custom=phi)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("stable", "tempered-stable", "geometric-stable"):
            out["alpha"] = self.alpha
        if self.kind == "tempered-stable":
            out["theta"] = self.theta
        return out

    # Laplace exponent -----------------------------------------------------
    def phi(self, lam):
        """``Phi(lam)``; accepts real ``lam >= 0`` or complex arrays."""
        lam = np.asarray(lam)
        if not np.iscomplexobj(lam):
            if np.any(lam < 0):
                raise DomainError("Phi is evaluated at lam >= 0 only")
            lam = lam.astype(float)
        k = self.kind
        if k == "stable":
            out = np.power(lam, self.alpha)
        elif k == "tempered-stable":
            th = self.theta
            out = np.power(lam + th, self.alpha) - th ** self.alpha
        elif k == "geometric-stable":
            out = np.log1p(np.power(lam, self.alpha))
        elif k == "gamma":
            out = np.log1p(lam)
        elif k == "identity":
            out = lam * 1.0
        else:
            out = np.asarray(self.custom(lam))
        return out if out.ndim else out[()]

    # Levy tail --------------------------------------------------------------
    def levy_tail(self, t):
        """``nu((t, inf))`` for ``t > 0``."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("Levy tail requires t > 0")
        k = self.kind
        if k == "stable":
            out = t ** -self.alpha / math.gamma(1 - self.alpha)
        elif k == "tempered-stable":
            a, th = self.alpha, self.theta
            out = a * th ** a * _upper_gamma_neg(a, th * t) / math.gamma(1 - a)
        elif k == "gamma" or (k == "geometric-stable" and self.alpha == 1):
            out = special.exp1(t)
        elif k == "identity":
            raise DomainError("the identity time change has no Levy measure")
        elif k == "geometric-stable":
            out = np.vectorize(lambda s: _geo_tail(self.alpha, float(s)))(t)
        else:
            f = self.custom
            out = laplace.invert(lambda s: f(s) / s, t)
        return out if np.ndim(out) else float(out)

    # Laplace-domain building blocks ---------------------------------------
    def eigen_laplace(self, lam, eta):
        """Laplace transform in ``t`` of the eigenfunction ``e(t; -lam)``:
        ``Phi(eta) / (eta (Phi(eta) + lam))``."""
        p = self.phi(eta)
        return p / (eta * (p + lam))

    def integrated_eigen_laplace(self, lam, eta):
        """Transform of ``t -> int_0^t e(s; -lam) ds``."""
        return self.eigen_laplace(lam, eta) / eta

    def potential_laplace(self, eta):
        """Laplace transform of the potential ``U(t) = E[E(t)]``: ``1/(eta Phi(eta))``."""
        return 1.0 / (eta * self.phi(eta))

    def potential(self, t):
        """Potential ``U(t) = E[E(t)]`` (mean of the inverse subordinator)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("potential requires t >= 0")
        k = self.kind
        if k == "stable":
            out = t ** self.alpha / math.gamma(1 + self.alpha)
        elif k == "identity":
            out = t * 1.0
        else:
            out = np.zeros_like(t)
            pos = t > 0
            out[pos] = laplace.invert(self.potential_laplace, t[pos])
        return out if out.ndim else float(out)

    def potential_density(self, t):
        """``U'(t)``, by inversion of ``1/Phi(eta)`` (closed form if stable)."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("potential density requires t > 0")
        k = self.kind
        if k == "stable":
            a = self.alpha
            out = t ** (a - 1) / math.gamma(a)
        elif k == "identity":
            out = np.ones_like(t)
        else:
            out = laplace.invert(lambda s: 1.0 / self.phi(s), t)
        return out if out.ndim else float(out)

    def rv_order_at_zero(self) -> float:
        """Regular-variation index of ``Phi`` at ``0+``."""
        k = self.kind
        if k in ("stable", "geometric-stable"):
            return float(self.alpha)
        if k in ("tempered-stable", "gamma", "identity"):
            return 1.0
        lam = np.array([1e-8, 1e-6])
        v = self.phi(lam)
        return float(np.log(v[1] / v[0]) / np.log(lam[1] / lam[0]))


def from_dict(obj: dict) -> BernsteinFunction:
    """Build from ``{"kind": ..., "alpha": ..., "theta": ...}``."""
    try:
        kind = obj["kind"]
    except (KeyError, TypeError) as exc:
        raise InvalidSpecError(f"malformed bernstein spec: {obj!r}") from exc
    extra = set(obj) - {"kind", "alpha", "theta"}
    if extra:
        raise InvalidSpecError(f"unknown bernstein fields {sorted(extra)}")
    return BernsteinFunction(kind, alpha=obj.get("alpha"), theta=obj.get("theta"))


def _upper_gamma_neg(a: float, x):
    """``Gamma(-a, x)`` for ``0 < a < 1`` and ``x > 0``.

    For ``x <= 1`` use ``Gamma(-a, x) = (x^-a e^-x - Gamma(1-a, x)) / a``
    (no cancellation there); for larger ``x`` that difference cancels, so
    integrate ``e^-x int_0^inf (x+u)^(-1-a) e^-u du`` directly.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x <= 1.0
    xs = x[small]
    out[small] = (xs ** -a * np.exp(-xs)
                  - special.gammaincc(1 - a, xs) * math.gamma(1 - a)) / a
    for i in np.flatnonzero(~small.ravel()):
        xi = x.flat[i]
        v, _ = integrate.quad(lambda u: (xi + u) ** (-1 - a) * math.exp(-u),
                              0, np.inf, epsabs=0, epsrel=1e-13)
        out.flat[i] = math.exp(-xi) * v
    return out


@lru_cache(maxsize=4096)
def _geo_tail(alpha: float, t: float) -> float:
    # int_0^inf e^{-st} nu_bar(t) dt = Phi(s)/s
    return float(laplace.invert(lambda s: np.log1p(s ** alpha) / s, t))


def _check_bernstein(phi: Callable) -> None:
    """Finite-difference sign checks: Phi(0+) ~ 0, increasing, concave."""
    lam = np.logspace(-6, 4, 81)
    try:
        v = np.asarray(phi(lam), dtype=float)
    except Exception as exc:  # noqa: BLE001 - user callable
        raise InvalidSpecError(f"custom Phi failed to evaluate: {exc}") from exc
    if v.shape != lam.shape or not np.all(np.isfinite(v)):
        raise InvalidSpecError("custom Phi must map arrays to finite arrays")
    if abs(float(np.asarray(phi(np.array([0.0])))[0])) > 1e-12:
        raise InvalidSpecError("custom Phi must vanish at 0")
    slope = np.diff(v) / np.diff(lam)
    if np.any(np.diff(v) <= 0):
        raise InvalidSpecError("custom Phi must be increasing")
    if np.any(np.diff(slope) > 1e-12 * np.abs(slope[:-1]).max()):
        raise InvalidSpecError("custom Phi must be concave")
