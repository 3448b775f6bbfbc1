"""Spectral series for the non-local Kolmogorov equations.

With orthonormal eigenpolynomials ``Q_n`` (eigenvalues ``lam_n``) and the
eigenfunctions ``e(t; lam)`` of the convolution derivative:

* backward:     u(t, y) = sum_n e(t; lam_n) g_n Q_n(y),  g_n = <g, Q_n>_m
* forward:      v(t, x) = m(x) sum_n e(t; lam_n) f_n Q_n(x),  f_n = <f/m, Q_n>_m
* fundamental:  p(t, x; y) = m(x) sum_n e(t; lam_n) Q_n(x) Q_n(y).

On finite state spaces the sums are finite and exact. On ``N_0`` they are
truncated at ``N`` with the bound (``S_n(z) = Q_n(z) sqrt(m(z))``)

    |tail| <= pre(z) e(t; lam_{N+1}) [ sum_{N<n<=cap} |c_n S_n(z)|
                                        + sqrt(C_cap) sqrt(T_cap(z)) ]

where ``C_cap`` bounds ``sum_{n>cap} c_n^2`` (Parseval defect of the
projection) and ``T_cap(z)`` bounds ``sum_{n>cap} S_n(z)^2`` by a geometric
extrapolation of the last computed terms. The bound uses that
``e(t; lam_n)`` is nonincreasing in ``n`` and the Cauchy-Schwarz inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import bdprocess as bd
from .bdprocess import BirthDeathSpec
from .eigenfn import EigenEvaluator
from .errors import DomainError, NotInL2Error, NumericalError

DEFAULT_TOL = 1e-8
START_CAP = 64
MAX_CAP = 1024
_CHUNK = 16


class SeriesValue(NamedTuple):
    value: float
    tail_bound: float
    n_terms: int


def _eval_fn(h: Callable, xs: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(h(xs), dtype=float)
        if out.shape == xs.shape:
            return out
    except Exception:  # noqa: BLE001 - fall back to pointwise evaluation
        pass
    return np.array([float(h(int(x))) for x in xs])


def state_cutoff(spec: BirthDeathSpec, extra: int = 0) -> int:
    """Largest state used in sums over ``E`` (``N`` on finite spaces)."""
    if spec.finite:
        return spec.N
    return max(bd.truncation_point(spec, 1e-17), int(extra))


def projection_cutoff(spec: BirthDeathSpec, extra: int = 0) -> int:
    """Largest state in projection sums.

    Since ``|S_n(x)| <= 1``, dropping states ``x > X`` perturbs every
    coefficient by at most ``sum_{x>X} |h(x)| sqrt(m(x))``; ``X`` is chosen
    so that ``sum_{x>X} sqrt(m(x)) < 1e-20``.
    """
    if spec.finite:
        return spec.N
    rho, x0 = bd.geometric_tail(spec)
    X = max(state_cutoff(spec), x0)
    log_tol = math.log(1e-20) + math.log1p(-math.sqrt(rho))
    while 0.5 * float(bd.log_invariant_mass(spec, X + 1)) > log_tol:
        X += 1
    return max(X, int(extra))


def _s_matrix(spec: BirthDeathSpec, cap: int, X: int) -> np.ndarray:
    """``S[n, x] = Q_n(x) sqrt(m(x))`` for ``n <= cap``, ``x <= X``."""
    fam = spec.polynomials
    return np.column_stack([fam.table_S(cap, x) for x in range(X + 1)])


def _tail_sq(row: np.ndarray) -> float:
    """Bound on ``sum_{n > len(row)-1} row_n^2`` by geometric extrapolation.

    Uses the largest squared ratio among the last 8 terms; returns ``inf``
    if that ratio is not below one (caller then enlarges the cap).
    """
    sq = row[-9:] ** 2
    if sq[-1] == 0.0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = sq[1:] / sq[:-1]
    r = r[np.isfinite(r)]
    q = float(r.max()) if r.size else 1.0
    if q >= 1.0:
        return math.inf
    return float(sq[-1] * q / (1 - q))


@dataclass
class Projection:
    """Coefficients of a function in the basis ``Q_n``.

    ``coeffs[n]`` for ``n <= cap``; ``norm2`` is the squared l2(m) norm of the
    projected function and ``rest2`` a bound on ``sum_{n>cap} coeffs_n^2``;
    ``dropped2`` is the squared mass of coefficients zeroed as round-off.
    """

    coeffs: np.ndarray
    norm2: float
    rest2: float
    dropped2: float = 0.0

    @property
    def cap(self) -> int:
        return len(self.coeffs) - 1


def project(spec: BirthDeathSpec, h: Callable, weight: str = "plain",
            cap: Optional[int] = None, xmax: int = 0) -> Projection:
    """Project ``h`` (``weight="plain"``) or ``h/m`` (``"divided-by-m"``).

    ``h`` is a function on states (vectorized or scalar). On ``N_0`` the sum
    over states stops at ``projection_cutoff`` (or at ``xmax`` if larger) and
    ``h`` must look square summable there: the last tenth of the retained
    states may carry at most 1e-3 of the norm.
    """
    if weight not in ("plain", "divided-by-m"):
        raise DomainError(f"unknown projection weight {weight!r}")
    X = projection_cutoff(spec, xmax)
    if cap is None:
        cap = spec.N if spec.finite else START_CAP
    if spec.finite:
        cap = min(cap, spec.N)
    xs = np.arange(X + 1)
    hv = _eval_fn(h, xs)
    lm = np.asarray(bd.log_invariant_mass(spec, xs))
    with np.errstate(divide="ignore", over="ignore"):
        if weight == "plain":
            w = hv * np.exp(0.5 * lm)  # h sqrt(m)
        else:
            w = np.where(hv == 0, 0.0, np.sign(hv) * np.exp(np.log(np.abs(hv)) - 0.5 * lm))
    if not np.all(np.isfinite(w)):
        raise NotInL2Error("function is not finite against the invariant mass")
    contrib = w ** 2
    norm2 = float(math.fsum(contrib))
    if not spec.finite and norm2 > 0:
        last = float(math.fsum(contrib[int(0.9 * X):]))
        if last > 1e-3 * norm2:
            raise NotInL2Error(
                f"partial sums not settled: last tenth of states holds {last / norm2:.3g} of the norm")
    S = _s_matrix(spec, cap, X)
    coeffs = S @ w
    # Q_0 = 1: take c_0 as a plain m-weighted mean so constants come out exact
    m = np.exp(lm)
    num = hv * m if weight == "plain" else hv
    coeffs[0] = math.fsum(num) / math.fsum(m)
    rest2 = max(norm2 - float(np.sum(coeffs ** 2)), 0.0) + 1e-14 * norm2
    if spec.finite:
        rest2 = 0.0
    # coefficients below the round-off floor of S @ w are noise; drop them
    # and carry their mass as a separate error term
    small = np.abs(coeffs) <= 64 * np.finfo(float).eps * math.sqrt(norm2)
    small[0] = False
    dropped2 = float(np.sum(coeffs[small] ** 2))
    coeffs[small] = 0.0
    return Projection(coeffs, norm2, rest2, dropped2)


@dataclass
class SpectralSolution:
    """Truncated eigen-expansion for one initial datum.

    ``kind`` is ``"backward"``, ``"forward"`` or ``"fundamental"``.
    ``truncation`` and ``tail_bound`` describe the last evaluation.
    """

    spec: BirthDeathSpec
    ev: EigenEvaluator
    kind: str
    projection: Projection
    tol: float = DEFAULT_TOL
    truncation: int = -1
    tail_bound: float = math.nan
    _rebuild: Optional[Callable] = field(default=None, repr=False)
    _ecache: dict = field(default_factory=dict, repr=False)

    @property
    def coefficients(self) -> np.ndarray:
        return self.projection.coeffs

    def __call__(self, t: float, z: int) -> float:
        return self.evaluate(t, z).value

    def evaluate(self, t: float, z: int) -> SeriesValue:
        """Value at time ``t`` and state ``z`` (``y`` backward, ``x`` forward)."""
        self.spec.check_state(z)
        if t < 0:
            raise DomainError("time must be nonnegative")
        while True:
            res = self._try(float(t), int(z))
            if res is not None:
                self.truncation, self.tail_bound = res.n_terms - 1, res.tail_bound
                return res
            cap = self.projection.cap
            if self._rebuild is None or cap >= MAX_CAP:
                raise NumericalError(
                    f"tail bound above tol={self.tol} with {cap + 1} terms")
            self.projection = self._rebuild(min(2 * cap, MAX_CAP))

    def _try(self, t: float, z: int) -> Optional[SeriesValue]:
        spec, proj = self.spec, self.projection
        cap = proj.cap
        c = proj.coeffs
        Sz = spec.polynomials.table_S(cap, z)
        lmz = float(bd.log_invariant_mass(spec, z))
        # prefactor turning sum c_n S_n(z) into the series value
        pre = math.exp(-0.5 * lmz) if self.kind == "backward" else math.exp(0.5 * lmz)
        terms = c * Sz
        # n = 0 term in closed form: e(t; 0) = 1, Q_0 = 1
        head = c[0] if self.kind == "backward" else c[0] * math.exp(lmz)
        lams = bd.eigenvalues(spec, cap)
        noise = pre * math.sqrt(proj.dropped2 * float(np.sum(Sz ** 2)))

        def total(e, n):
            return head + pre * float(np.sum(e[1:n] * terms[1:n]))

        if spec.finite:
            e = self._ecache.get(t)
            if e is None:
                e = self._ecache[t] = np.asarray(self.ev.value(t, lams))
            return SeriesValue(total(e, cap + 1), noise, cap + 1)
        absterm = np.abs(terms)
        # suffix[N] = sum_{N < n <= cap} |c_n S_n(z)|
        suffix = np.concatenate([np.cumsum(absterm[::-1])[::-1][1:], [0.0]])
        far = math.sqrt(proj.rest2) * math.sqrt(_tail_sq(Sz))
        if not math.isfinite(far):
            return None
        # inverted eigenfunction values carry an absolute error up to atol
        slack = self.ev.atol if self.ev.method == "laplace" else 0.0
        e = self._ecache.get(t, np.empty(0))
        for N in range(cap):
            if N + 1 >= e.size:
                hi = min(cap + 1, e.size + _CHUNK)
                e = np.concatenate([e, np.atleast_1d(self.ev.value(t, lams[e.size:hi]))])
                self._ecache[t] = e
            bound = pre * (abs(e[N + 1]) + slack) * (suffix[N] + far) + noise
            if bound <= self.tol:
                return SeriesValue(total(e, N + 1), bound, N + 1)
        return None


def _solution(spec, ev, kind, build, tol):
    cap0 = spec.N if spec.finite else START_CAP
    return SpectralSolution(spec, ev, kind, build(cap0), tol=tol, _rebuild=build)


def backward_solution(spec: BirthDeathSpec, ev: EigenEvaluator, g: Callable,
                      tol: float = DEFAULT_TOL) -> SpectralSolution:
    """Expansion of ``u(t, y)`` for the terminal datum ``g``."""
    return _solution(spec, ev, "backward", lambda cap: project(spec, g, "plain", cap), tol)


def forward_solution(spec: BirthDeathSpec, ev: EigenEvaluator, f: Callable,
                     tol: float = DEFAULT_TOL, xmax: int = 0) -> SpectralSolution:
    """Expansion of ``v(t, x)`` for the initial mass ``f``."""
    return _solution(spec, ev, "forward",
                     lambda cap: project(spec, f, "divided-by-m", cap, xmax), tol)


def _delta_projection(spec: BirthDeathSpec, y: int, cap: int) -> Projection:
    # coefficients of delta_y / m are Q_n(y); their tail follows from S_n(y)
    if spec.finite:
        cap = min(cap, spec.N)
    Sy = spec.polynomials.table_S(cap, y)
    lm = float(bd.log_invariant_mass(spec, y))
    coeffs = Sy * math.exp(-0.5 * lm)
    coeffs[0] = 1.0
    rest2 = 0.0 if spec.finite else _tail_sq(Sy) * math.exp(-lm)
    return Projection(coeffs, math.exp(-lm), rest2)


def fundamental_solution(spec: BirthDeathSpec, ev: EigenEvaluator, y: int,
                         tol: float = DEFAULT_TOL) -> SpectralSolution:
    """Expansion of ``x -> p(t, x; y)``."""
    spec.check_state(y)
    return _solution(spec, ev, "fundamental", lambda cap: _delta_projection(spec, y, cap), tol)


def fundamental(spec: BirthDeathSpec, ev: EigenEvaluator, t: float, x: int, y: int,
                tol: float = DEFAULT_TOL) -> SeriesValue:
    """``p(t, x; y)``, the probability of moving from ``y`` to ``x`` by time ``t``."""
    spec.check_state(x)
    return fundamental_solution(spec, ev, y, tol).evaluate(t, x)


def solve_backward(spec: BirthDeathSpec, ev: EigenEvaluator, g: Callable, t: float,
                   y: int, tol: float = DEFAULT_TOL) -> SeriesValue:
    """Strong solution ``u(t, y)`` of the backward equation with datum ``g``."""
    return backward_solution(spec, ev, g, tol).evaluate(t, y)


def solve_forward(spec: BirthDeathSpec, ev: EigenEvaluator, f: Callable, t: float,
                  x: int, tol: float = DEFAULT_TOL) -> SeriesValue:
    """Strong solution ``v(t, x)`` of the forward equation with initial mass ``f``."""
    return forward_solution(spec, ev, f, tol).evaluate(t, x)


def delta(z: int) -> Callable:
    """Point mass at ``z`` as a function on states."""
    return lambda x: np.where(np.asarray(x) == z, 1.0, 0.0)


def fundamental_column(spec: BirthDeathSpec, ev: EigenEvaluator, t: float, y: int,
                       tol: float = DEFAULT_TOL, xmax: Optional[int] = None) -> np.ndarray:
    """``[p(t, x; y) for x = 0..xmax]`` (``xmax`` defaults to the state cutoff)."""
    sol = fundamental_solution(spec, ev, y, tol)
    X = state_cutoff(spec) if xmax is None else xmax
    return np.array([sol.evaluate(t, x).value for x in range(X + 1)])
