"""Solvable birth-death processes.

A birth-death process on ``E = {0..N}`` or ``E = N_0`` has generator

    G f(x) = b(x) (f(x+1) - f(x)) + d(x) (f(x-1) - f(x)).

It is *solvable* when ``d`` is a polynomial of degree at most two and
``b - d`` has degree at most one. Then ``G`` is diagonalized by a classical
discrete orthogonal polynomial family, with eigenvalues

    lambda_n = n * slope(b - d) + n (n - 1) * (leading coefficient of d).

Four parametric families are built in: immigration-death (Charlier),
Meixner, Krawtchouk (Ehrenfest urn) and Hahn. Rates are stored as
coefficient triples ``(c0, c1, c2)`` of ``c0 + c1 x + c2 x^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidSpecError
from .orthopoly import PolynomialFamily

_ALIASES = {
    "immigration-death": "immigration-death",
    "immigration_death": "immigration-death",
    "charlier": "immigration-death",
    "meixner": "meixner",
    "krawtchouk": "krawtchouk",
    "ehrenfest": "krawtchouk",
    "hahn": "hahn",
}


class ProcessClass(str, Enum):
    FINITE_STATE = "FiniteState"
    IMMIGRATION_DEATH = "ImmigrationDeath"
    MEIXNER = "Meixner"


def _poly(c, x):
    x = np.asarray(x, dtype=float)
    return c[0] + x * (c[1] + x * c[2])


def _is_int(v, tol=1e-9):
    return abs(v - round(v)) <= tol * max(1.0, abs(v))


@dataclass(frozen=True)
class BirthDeathSpec:
    """Immutable description of a solvable birth-death process.

    Parameters follow the family: immigration-death ``(b, d)``, Meixner
    ``(b, d, beta)`` with ``b < d``, Krawtchouk ``(b, d, N)`` and Hahn
    ``(d, alpha, beta, N)``. Use :func:`make` or :func:`from_rates`.
    """

    family: str
    b: Optional[float] = None
    d: Optional[float] = None
    alpha: Optional[int] = None
    beta: Optional[float] = None
    N: Optional[int] = None

    def __post_init__(self):
        fam = _ALIASES.get(self.family)
        if fam is None:
            raise InvalidSpecError(f"unknown family {self.family!r}")
        object.__setattr__(self, "family", fam)

        def pos(name):
            v = getattr(self, name)
            if v is None or not (v > 0) or not math.isfinite(v):
                raise InvalidSpecError(f"{fam} requires {name} > 0, got {v}")

        def nat(name, lo):
            v = getattr(self, name)
            if v is None or not _is_int(v) or v < lo:
                raise InvalidSpecError(f"{fam} requires integer {name} >= {lo}, got {v}")
            object.__setattr__(self, name, int(round(v)))

        pos("d")
        if fam == "immigration-death":
            pos("b")
        elif fam == "meixner":
            pos("b")
            pos("beta")
            if not self.b < self.d:
                raise InvalidSpecError("Meixner requires b < d")
        elif fam == "krawtchouk":
            pos("b")
            nat("N", 1)
        else:
            nat("N", 1)
            nat("alpha", 0)
            nat("beta", 0)
        # nonnegativity on the state space (catches any coefficient mistakes)
        xs = np.arange(self.N + 1) if self.finite else np.arange(64)
        if np.any(self.birth(xs) < -1e-12) or np.any(self.death(xs) < -1e-12):
            raise InvalidSpecError(f"negative rates for {self}")

    # rate polynomials -------------------------------------------------------
    @property
    def birth_coeffs(self) -> tuple:
        f = self.family
        if f == "immigration-death":
            return (self.b, 0.0, 0.0)
        if f == "meixner":
            return (self.b * self.beta, self.b, 0.0)
        if f == "krawtchouk":
            return (self.b * self.N, -self.b, 0.0)
        a, N, d = self.alpha, self.N, self.d
        return (d * N * (a + 1), d * (N - a - 1), -d)

    @property
    def death_coeffs(self) -> tuple:
        if self.family == "hahn":
            return (0.0, self.d * (self.N + self.beta + 1), -self.d)
        return (0.0, self.d, 0.0)

    def birth(self, x):
        return _poly(self.birth_coeffs, x)

    def death(self, x):
        return _poly(self.death_coeffs, x)

    @property
    def finite(self) -> bool:
        return self.family in ("krawtchouk", "hahn")

    def in_space(self, x) -> bool:
        return (float(x).is_integer() and x >= 0
                and (not self.finite or x <= self.N))

    def check_state(self, x) -> None:
        if not self.in_space(x):
            raise DomainError(f"state {x} is outside the state space")

    @property
    def polynomials(self) -> PolynomialFamily:
        f = self.family
        if f == "immigration-death":
            return PolynomialFamily.charlier(self.b / self.d)
        if f == "meixner":
            return PolynomialFamily.meixner(self.b / self.d, self.beta)
        if f == "krawtchouk":
            return PolynomialFamily.krawtchouk(self.N, self.b / (self.b + self.d))
        return PolynomialFamily.hahn(self.alpha, self.beta, self.N)

    def to_dict(self) -> dict:
        keys = {
            "immigration-death": ("b", "d"),
            "meixner": ("b", "d", "beta"),
            "krawtchouk": ("b", "d", "N"),
            "hahn": ("d", "alpha", "beta", "N"),
        }[self.family]
        return {"family": self.family, "params": {k: getattr(self, k) for k in keys}}


def make(family: str, **params) -> BirthDeathSpec:
    """Build a spec from a family name and its rate parameters."""
    allowed = {"b", "d", "alpha", "beta", "N"}
    extra = set(params) - allowed
    if extra:
        raise InvalidSpecError(f"unknown parameters {sorted(extra)}")
    return BirthDeathSpec(family, **params)


def from_dict(obj: dict) -> BirthDeathSpec:
    """Build a spec from ``{"family": ..., "params": {...}}``."""
    try:
        return make(obj["family"], **obj.get("params", {}))
    except (KeyError, TypeError) as exc:
        raise InvalidSpecError(f"malformed process spec: {exc}") from exc


def from_rates(birth_coeffs, death_coeffs) -> BirthDeathSpec:
    """Recognize a solvable process from polynomial rate coefficients.

    Coefficients are given lowest degree first. The rates are validated
    against the solvability conditions and matched to one of the built-in
    families, so that the returned spec has exactly these rates.
    """
    bc = [float(c) for c in birth_coeffs] + [0.0] * (3 - len(birth_coeffs))
    dc = [float(c) for c in death_coeffs] + [0.0] * (3 - len(death_coeffs))
    if len(bc) > 3 or len(dc) > 3 or any(bc[3:]) or any(dc[3:]):
        raise InvalidSpecError("rates must be polynomials of degree <= 2")
    if dc[0] != 0:
        raise InvalidSpecError("death rate must vanish at 0")
    if not math.isclose(bc[2], dc[2], rel_tol=1e-12, abs_tol=1e-15):
        raise InvalidSpecError("b - d must have degree <= 1")
    b0, b1, b2 = bc[:3]
    d1, d2 = dc[1], dc[2]
    if b2 == 0 and d2 == 0:
        if d1 <= 0:
            raise InvalidSpecError("death rate must be positive away from 0")
        if b1 == 0:
            if b0 <= 0:
                raise InvalidSpecError("birth rate must be positive")
            return make("immigration-death", b=b0, d=d1)
        if b1 > 0:
            if b1 >= d1:
                raise InvalidSpecError(
                    "limit ratio b(x)/d(x+1) >= 1: no invariant probability")
            if b0 <= 0:
                raise InvalidSpecError("Meixner requires b(0) > 0")
            return make("meixner", b=b1, d=d1, beta=b0 / b1)
        N = b0 / -b1
        if not (_is_int(N) and N >= 1):
            raise InvalidSpecError("birth rate must vanish at an integer N >= 1")
        return make("krawtchouk", b=-b1, d=d1, N=round(N))
    if b2 < 0:
        d = -b2
        # b(x) = d (N - x)(x + alpha + 1): roots N and -(alpha + 1)
        roots = np.roots([b2, b1, b0])
        if np.any(np.abs(np.imag(roots)) > 1e-9):
            raise InvalidSpecError("birth rate has no real roots")
        r = np.sort(np.real(roots))
        N, alpha = r[1], -r[0] - 1
        beta = d1 / d - N - 1
        for name, v in (("N", N), ("alpha", alpha), ("beta", beta)):
            if not _is_int(v, 1e-7) or round(v) < (1 if name == "N" else 0):
                raise InvalidSpecError(f"rates do not match a Hahn process ({name}={v})")
        return make("hahn", d=d, alpha=round(alpha), beta=round(beta), N=round(N))
    raise InvalidSpecError("quadratic growth of both rates: not solvable on N_0")


def classify(spec_or_rates) -> ProcessClass:
    """Class of a spec, or of raw ``(birth_coeffs, death_coeffs)``."""
    spec = spec_or_rates
    if not isinstance(spec, BirthDeathSpec):
        spec = from_rates(*spec_or_rates)
    if spec.finite:
        return ProcessClass.FINITE_STATE
    if spec.family == "immigration-death":
        return ProcessClass.IMMIGRATION_DEATH
    return ProcessClass.MEIXNER


# operators -----------------------------------------------------------------

def apply_generator(spec: BirthDeathSpec, f: Callable, x) -> float:
    """``G f(x)``; terms with a vanishing rate are skipped, so ``f`` is
    only evaluated inside the state space."""
    spec.check_state(x)
    fx = f(x)
    bx, dx = float(spec.birth(x)), float(spec.death(x))
    out = 0.0
    if bx != 0.0:
        out += bx * (f(x + 1) - fx)
    if dx != 0.0:
        out += dx * (f(x - 1) - fx)
    return out


def apply_forward(spec: BirthDeathSpec, f: Callable, x) -> float:
    """Forward (adjoint) operator ``L f(x)``, with ``f`` taken as zero off E:

        L f(x) = b(x-1) f(x-1) + d(x+1) f(x+1) - (b(x) + d(x)) f(x).
    """
    spec.check_state(x)
    out = -(float(spec.birth(x)) + float(spec.death(x))) * f(x)
    if spec.in_space(x - 1):
        out += float(spec.birth(x - 1)) * f(x - 1)
    if spec.in_space(x + 1):
        out += float(spec.death(x + 1)) * f(x + 1)
    return out


_TINY = 1e-290


@lru_cache(maxsize=64)
def _mass_table(spec: BirthDeathSpec, size: int) -> np.ndarray:
    """``m(0..size-1)`` by the ratio recursion ``m(x+1) = m(x) b(x) / d(x+1)``
    from the closed-form ``m(0)``; each step is exact to one rounding, so
    the Pearson equation holds locally to a few ulps."""
    top = size - 1 if not spec.finite else min(size - 1, spec.N)
    xs = np.arange(top)
    ratio = spec.birth(xs) / spec.death(xs + 1)
    m0 = math.exp(float(spec.polynomials.log_weight(0)))
    out = np.empty(top + 1)
    out[0] = m0
    out[1:] = m0 * np.cumprod(ratio) if top else out[1:]
    out.flags.writeable = False
    return out


def _table_for(spec: BirthDeathSpec, xmax: int) -> np.ndarray:
    size = 64
    while size <= xmax:
        size *= 2
    return _mass_table(spec, size)


def _mass_parts(spec: BirthDeathSpec, x):
    """``(inside, m, far, log m)``: ``m`` from the ratio table (0 where
    ``far``), ``log m`` from the closed form where ``far``."""
    xa = np.asarray(x, dtype=float)
    inside = (xa >= 0) & (np.mod(xa, 1) == 0)
    if spec.finite:
        inside &= xa <= spec.N
    xi = np.where(inside, xa, 0.0).astype(np.int64)
    table = _table_for(spec, int(xi.max()) if xi.size else 0)
    mv = np.where(xi < table.size, table[np.minimum(xi, table.size - 1)], 0.0)
    far = ~(mv > _TINY) & inside
    mv = np.where(far | ~inside, 0.0, mv)
    lf = spec.polynomials.log_weight(xi.astype(float)) if np.any(far) else None
    return inside, mv, far, lf


def log_invariant_mass(spec: BirthDeathSpec, x):
    """Log of the invariant probability mass (``-inf`` off the state space).

    Uses the ratio recursion where the mass is representable and the closed
    form deep in the tail where it would underflow.
    """
    inside, mv, far, lf = _mass_parts(spec, x)
    with np.errstate(divide="ignore"):
        out = np.log(mv)
    if lf is not None:
        out = np.where(far, lf, out)
    out = np.where(inside, out, -np.inf)
    return out if out.ndim else float(out)


def invariant_mass(spec: BirthDeathSpec, x):
    """Invariant probability mass ``m(x)``."""
    inside, mv, far, lf = _mass_parts(spec, x)
    out = mv
    if lf is not None:
        out = np.where(far, np.exp(lf), out)
    return out if out.ndim else float(out)


def pearson_residual(spec: BirthDeathSpec, x, mass: Optional[Callable] = None,
                     relative: bool = False) -> float:
    """Residual of the discrete Pearson equation at ``x``:

        (d m)(x+1) - (d m)(x) - (b(x) - d(x)) m(x).

    ``mass`` replaces the invariant mass (to probe perturbed inputs). With
    ``relative=True`` the residual is divided by the largest term; in that
    mode the built-in mass is handled in log space so tiny masses far in
    the tail do not underflow.
    """
    spec.check_state(x)
    bx, dx, d1 = float(spec.birth(x)), float(spec.death(x)), float(spec.death(x + 1))
    if mass is None and relative and float(invariant_mass(spec, x + 1)) < _TINY:
        if spec.finite and x == spec.N:
            return 0.0  # both terms vanish: b(N) = 0 and m(N+1) = 0
        if dx == 0.0 and bx == 0.0:
            return 0.0
        l1 = math.log(d1) + log_invariant_mass(spec, x + 1)
        l2 = math.log(bx) + log_invariant_mass(spec, x)
        return abs(math.expm1(-abs(l1 - l2)))
    m = mass if mass is not None else (lambda z: float(invariant_mass(spec, z)))
    mx = m(x)
    mx1 = m(x + 1) if spec.in_space(x + 1) else 0.0
    terms = (d1 * mx1, dx * mx, (bx - dx) * mx)
    r = terms[0] - terms[1] - terms[2]
    if relative:
        scale = max(abs(t) for t in terms)
        return abs(r) / scale if scale > 0 else 0.0
    return r


def eigenvalue(spec: BirthDeathSpec, n: int) -> float:
    """``lambda_n = n slope(b - d) + n (n - 1) d_2``."""
    if n < 0 or int(n) != n or (spec.finite and n > spec.N):
        raise DomainError(f"eigenvalue index {n} out of range")
    b, d = spec.birth_coeffs, spec.death_coeffs
    return n * (b[1] - d[1]) + n * (n - 1) * d[2]


def eigenvalues(spec: BirthDeathSpec, nmax: int) -> np.ndarray:
    n = np.arange(nmax + 1, dtype=float)
    b, d = spec.birth_coeffs, spec.death_coeffs
    return n * (b[1] - d[1]) + n * (n - 1) * d[2]


def limit_ratio(spec: BirthDeathSpec) -> float:
    """``lim b(x) / d(x+1)`` for infinite state spaces."""
    if spec.finite:
        raise DomainError("limit ratio is defined for infinite state spaces only")
    return spec.birth_coeffs[1] / spec.death_coeffs[1]


def geometric_tail(spec: BirthDeathSpec) -> tuple[float, int]:
    """``(rho, x0)`` with ``m(x) <= rho^(x - x0) m(x0)`` for ``x >= x0``.

    ``rho = (1 + l) / 2`` where ``l`` is the limit ratio; ``x0`` is the first
    state from which ``b(y) / d(y+1) < rho`` for every ``y``. The ratio is a
    monotone rational function, so a forward scan suffices.
    """
    l = limit_ratio(spec)
    rho = 0.5 * (1.0 + l)
    x = 0
    while float(spec.birth(x)) / float(spec.death(x + 1)) >= rho:
        x += 1
    return rho, x


def truncation_point(spec: BirthDeathSpec, tol: float = 1e-14) -> int:
    """Largest state to keep so that the neglected mass is below ``tol``.

    For finite state spaces this is ``N``.
    """
    if spec.finite:
        return spec.N
    rho, x0 = geometric_tail(spec)
    X = max(x0, int(spec.birth(0) / spec.death(1)))
    # tail beyond X is at most m(X+1) / (1 - rho) once X+1 >= x0
    while log_invariant_mass(spec, X + 1) - math.log1p(-rho) > math.log(tol):
        X += 1
    return X


def generator_matrix(spec: BirthDeathSpec) -> np.ndarray:
    """Dense rate matrix of a finite-state spec (rows sum to zero)."""
    if not spec.finite:
        raise DomainError("generator matrix requires a finite state space")
    x = np.arange(spec.N + 1)
    b, d = spec.birth(x), spec.death(x)
    Q = np.diag(b[:-1], 1) + np.diag(d[1:], -1)
    Q -= np.diag(b + d)
    return Q
