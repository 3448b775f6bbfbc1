"""Classical orthogonal polynomials of a discrete variable.

Four families are supported, all in the standard hypergeometric
normalization (so that ``P_n(0) = 1``):

* Charlier ``C_n(x; rho)``, orthogonal for the Poisson(rho) law on N_0;
* Meixner ``M_n(x; beta, c)``, orthogonal for the negative binomial law;
* Krawtchouk ``K_n(x; p, N)``, orthogonal for Binomial(N, p);
* Hahn ``Q_n(x; alpha, beta, N)``, orthogonal for the (normalized)
  hypergeometric-type weight ``binom(alpha+x, x) binom(beta+N-x, N-x)``.

Evaluation uses three-term recurrences. Running the recurrence in the
degree ``n`` at a fixed state ``x`` loses accuracy once ``n`` is much larger
than ``x`` (the polynomial solution becomes recessive), so for integer
states the recurrence is always run in the smaller of the two indices and
the duality ``P_n(x) = P_x(n)`` (dual Hahn for the Hahn family) supplies the
rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

KINDS = ("charlier", "meixner", "krawtchouk", "hahn")


def _is_int(v) -> bool:
    return float(v).is_integer()


@dataclass(frozen=True)
class PolynomialFamily:
    """Parameter set of one discrete orthogonal polynomial family.

    Use the constructors :meth:`charlier`, :meth:`meixner`,
    :meth:`krawtchouk` and :meth:`hahn` rather than the raw initializer.
    For Meixner, ``rho`` is the ratio parameter usually written ``c``.
    """

    kind: str
    rho: Optional[float] = None
    beta: Optional[float] = None
    p: Optional[float] = None
    alpha: Optional[float] = None
    N: Optional[int] = None

    def __post_init__(self):
        k = self.kind
        if k not in KINDS:
            raise DomainError(f"unknown polynomial family {k!r}")
        if k == "charlier":
            if not (self.rho is not None and self.rho > 0):
                raise DomainError("Charlier requires rho > 0")
        elif k == "meixner":
            if not (self.rho is not None and 0 < self.rho < 1):
                raise DomainError("Meixner requires 0 < rho < 1")
            if not (self.beta is not None and self.beta > 0):
                raise DomainError("Meixner requires beta > 0")
        elif k == "krawtchouk":
            if self.N is None or not _is_int(self.N) or self.N < 1:
                raise DomainError("Krawtchouk requires an integer N >= 1")
            if not (self.p is not None and 0 < self.p < 1):
                raise DomainError("Krawtchouk requires 0 < p < 1")
        else:
            if self.N is None or not _is_int(self.N) or self.N < 1:
                raise DomainError("Hahn requires an integer N >= 1")
            for name in ("alpha", "beta"):
                v = getattr(self, name)
                if v is None or not _is_int(v) or v < 0:
                    raise DomainError(f"Hahn requires a nonnegative integer {name}")

    # constructors -----------------------------------------------------
    @classmethod
    def charlier(cls, rho: float) -> "PolynomialFamily":
        return cls("charlier", rho=float(rho))

    @classmethod
    def meixner(cls, rho: float, beta: float) -> "PolynomialFamily":
        return cls("meixner", rho=float(rho), beta=float(beta))

    @classmethod
    def krawtchouk(cls, N: int, p: float) -> "PolynomialFamily":
        return cls("krawtchouk", p=float(p), N=int(N))

    @classmethod
    def hahn(cls, alpha: int, beta: int, N: int) -> "PolynomialFamily":
        return cls("hahn", alpha=int(alpha), beta=int(beta), N=int(N))

    # support ------------------------------------------------------------
    @property
    def finite(self) -> bool:
        return self.kind in ("krawtchouk", "hahn")

    @property
    def self_dual(self) -> bool:
        return self.kind != "hahn"

    def check_state(self, x) -> None:
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0) or (self.finite and np.any(xa > self.N)):
            raise DomainError(f"state {x} outside the support of {self.kind}")

    def check_degree(self, n) -> None:
        na = np.asarray(n)
        if np.any(na < 0) or not np.all(np.mod(na, 1) == 0):
            raise DomainError(f"degree {n} must be a nonnegative integer")
        if self.finite and np.any(na > self.N):
            raise DomainError(f"degree {n} exceeds N={self.N}")

    # weight -------------------------------------------------------------
    def log_weight(self, x):
        """Log of the orthogonality probability mass at integer ``x``."""
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k == "charlier":
            r = self.rho
            return -r + x * math.log(r) - gammaln(x + 1)
        if k == "meixner":
            c, b = self.rho, self.beta
            return (gammaln(b + x) - gammaln(b) - gammaln(x + 1)
                    + x * math.log(c) + b * math.log1p(-c))
        if k == "krawtchouk":
            N, p = self.N, self.p
            return (gammaln(N + 1) - gammaln(x + 1) - gammaln(N - x + 1)
                    + x * math.log(p) + (N - x) * math.log1p(-p))
        a, b, N = self.alpha, self.beta, self.N
        return (gammaln(a + x + 1) - gammaln(x + 1) - gammaln(a + 1)
                + gammaln(b + N - x + 1) - gammaln(N - x + 1) - gammaln(b + 1)
                - _log_binom(a + b + N + 1, N))

    def weight(self, x):
        """Orthogonality probability mass at integer ``x`` (zero off support)."""
        xa = np.asarray(x, dtype=float)
        inside = (xa >= 0) & (np.mod(xa, 1) == 0)
        if self.finite:
            inside &= xa <= self.N
        safe = np.where(inside, xa, 0.0)
        out = np.where(inside, np.exp(self.log_weight(safe)), 0.0)
        return out if out.ndim else float(out)

    # norms --------------------------------------------------------------
    def log_norm2(self, n):
        """``log(d_n^2)`` where ``d_n^2 = sum_x P_n(x)^2 m(x)``."""
        n = np.asarray(n, dtype=float)
        k = self.kind
        if k == "charlier":
            return gammaln(n + 1) - n * math.log(self.rho)
        if k == "meixner":
            c, b = self.rho, self.beta
            return gammaln(n + 1) - n * math.log(c) - (gammaln(b + n) - gammaln(b))
        if k == "krawtchouk":
            N, p = self.N, self.p
            return n * (math.log1p(-p) - math.log(p)) - _log_binom(N, n)
        a, b, N = self.alpha, self.beta, self.N
        ab = a + b
        return (gammaln(n + ab + 1 + N + 1) - gammaln(n + ab + 1)
                + gammaln(b + 1 + n) - gammaln(b + 1) + gammaln(n + 1)
                + gammaln(N - n + 1)
                - np.log(2 * n + ab + 1)
                - (gammaln(a + 1 + n) - gammaln(a + 1))
                - 2 * gammaln(N + 1)
                - _log_binom(ab + N + 1, N))

    def norm(self, n):
        """``d_n``, the l2(m) norm of ``P_n``."""
        self.check_degree(n)
        v = np.exp(0.5 * self.log_norm2(n))
        return v if np.ndim(v) else float(v)

    # recurrences ----------------------------------------------------------
    def _coeffs(self, n: int, x):
        """Coefficients (A, B(x), C) of ``A P_{n+1} = B P_n - C P_{n-1}``."""
        k = self.kind
        if k == "charlier":
            r = self.rho
            return r, n + r - x, n
        if k == "meixner":
            c, b = self.rho, self.beta
            return c * (n + b), (c - 1) * x + n + (n + b) * c, n
        if k == "krawtchouk":
            N, p = self.N, self.p
            A = p * (N - n)
            C = n * (1 - p)
            return A, A + C - x, C
        a, b, N = self.alpha, self.beta, self.N
        s = 2 * n + a + b
        A = (n + a + b + 1) * (n + a + 1) * (N - n) / ((s + 1) * (s + 2))
        C = 0.0 if n == 0 else n * (n + a + b + N + 1) * (n + b) / (s * (s + 1))
        return A, A + C - x, C

    def _dual_coeffs(self, n: int, lam):
        """Dual Hahn recurrence coefficients in the variable ``lam``."""
        a, b, N = self.alpha, self.beta, self.N
        A = (n + a + 1) * (n - N)
        C = n * (n - b - N - 1)
        return A, lam + A + C, C

    def _run_scaled(self, nmax: int, arg, dual: bool = False):
        """Rows ``0..nmax`` of the forward recurrence as ``(mantissa, log_scale)``.

        The recurrence is linear, so whenever an entry grows past 1e150 the
        current pair of rows is divided down and the factor kept in log form.
        """
        arg = np.asarray(arg, dtype=float)
        man = np.empty((nmax + 1,) + arg.shape)
        lsc = np.zeros((nmax + 1,) + arg.shape)
        man[0] = 1.0
        coeffs = self._dual_coeffs if dual else self._coeffs
        prev = np.zeros_like(arg)
        cur = np.ones_like(arg)
        scale = np.zeros_like(arg)
        for n in range(nmax):
            A, B, C = coeffs(n, arg)
            nxt = (B * cur - C * prev) / A
            big = np.abs(nxt) > 1e150
            if np.any(big):
                f = np.where(big, np.abs(nxt), 1.0)
                nxt = nxt / f
                cur = cur / f
                scale = scale + np.log(f)
            prev, cur = cur, nxt
            man[n + 1] = cur
            lsc[n + 1] = scale
        return man, lsc

    def _run(self, nmax: int, arg, dual: bool = False) -> np.ndarray:
        man, lsc = self._run_scaled(nmax, arg, dual)
        return man * np.exp(lsc)

    def direct_P(self, n: int, x):
        """``P_n(x)`` by the recurrence in ``n`` at fixed ``x`` (any real x)."""
        self.check_degree(n)
        v = self._run(int(n), x)[int(n)]
        return v if np.ndim(v) else float(v)

    def dual_P(self, n: int, x: int) -> float:
        """The dual side of the duality relation: ``P_x(n)`` or ``R_x(n(n+a+b+1))``."""
        self.check_degree(n)
        self.check_state(x)
        if self.kind == "hahn":
            lam = n * (n + self.alpha + self.beta + 1)
            return float(self._run(int(x), lam, dual=True)[int(x)])
        return float(self._run(int(x), float(n))[int(x)])

    def _table_scaled(self, nmax: int, x):
        """``P_n(x)`` for ``n = 0..nmax`` as ``(mantissa, log_scale)``.

        Degrees ``n <= x`` come from the recurrence in ``n``; higher degrees
        are obtained through duality with a recurrence of length ``x``.
        """
        self.check_degree(nmax)
        self.check_state(x)
        if not _is_int(x):
            return self._run_scaled(int(nmax), float(x))
        x = int(x)
        lo = min(nmax, x)
        man = np.empty(nmax + 1)
        lsc = np.empty(nmax + 1)
        man[: lo + 1], lsc[: lo + 1] = self._run_scaled(lo, float(x))
        if nmax > x:
            ns = np.arange(x + 1, nmax + 1, dtype=float)
            if self.kind == "hahn":
                m2, l2 = self._run_scaled(x, ns * (ns + self.alpha + self.beta + 1), dual=True)
            else:
                m2, l2 = self._run_scaled(x, ns)
            man[x + 1:], lsc[x + 1:] = m2[x], l2[x]
        return man, lsc

    def table_P(self, nmax: int, x: int) -> np.ndarray:
        """``[P_0(x), ..., P_nmax(x)]`` at a state ``x`` (may overflow for
        extreme arguments; see :meth:`table_S`)."""
        man, lsc = self._table_scaled(nmax, x)
        return man * np.exp(lsc)

    def table_Q(self, nmax: int, x: int) -> np.ndarray:
        """``[Q_0(x), ..., Q_nmax(x)]`` with ``Q_n = P_n / d_n``."""
        man, lsc = self._table_scaled(nmax, x)
        return man * np.exp(lsc - 0.5 * self.log_norm2(np.arange(nmax + 1)))

    def table_S(self, nmax: int, x: int) -> np.ndarray:
        """``Q_n(x) sqrt(m(x))`` for ``n = 0..nmax``.

        By dual orthogonality ``sum_n Q_n(x)^2 m(x) = 1``, so every entry lies
        in ``[-1, 1]`` and never overflows.
        """
        man, lsc = self._table_scaled(nmax, x)
        lw = 0.5 * float(self.log_weight(float(x)))
        return man * np.exp(lsc - 0.5 * self.log_norm2(np.arange(nmax + 1)) + lw)

    def eval_P(self, n: int, x) -> float:
        self.check_degree(n)
        self.check_state(x)
        if np.ndim(x) == 0 and _is_int(x):
            return float(self.table_P(int(n), int(x))[int(n)])
        return self.direct_P(n, x)

    def eval_Q(self, n: int, x) -> float:
        return self.eval_P(n, x) * math.exp(-0.5 * float(self.log_norm2(n)))


def _log_binom(a, k):
    return gammaln(a + 1) - gammaln(k + 1) - gammaln(a - k + 1)


# module-level operations --------------------------------------------------

def eval_P(family: PolynomialFamily, n: int, x) -> float:
    """``P_n(x)`` in the standard hypergeometric normalization."""
    return family.eval_P(n, x)


def norm(family: PolynomialFamily, n: int) -> float:
    """``d_n = ||P_n||`` in l2 of the orthogonality measure."""
    return family.norm(n)


def eval_Q(family: PolynomialFamily, n: int, x) -> float:
    """Orthonormal polynomial ``Q_n(x) = P_n(x) / d_n``."""
    return family.eval_Q(n, x)


def duality_defect(family: PolynomialFamily, n: int, x: int) -> float:
    """Absolute defect of the duality relation at ``(n, x)``.

    Both sides are computed by independent recurrences: the left side in
    the degree ``n`` at the state ``x``, the right side in the degree ``x``
    (of the dual family for Hahn) at the argument derived from ``n``.
    """
    family.check_degree(n)
    family.check_state(x)
    if family.finite:
        family.check_degree(x)
    return abs(family.direct_P(n, x) - family.dual_P(n, x))
