"""Monte Carlo for time-changed birth-death processes.

``N_Phi(t) = N(E(t))`` where ``N`` is the birth-death chain and ``E`` the
inverse of an independent subordinator ``sigma``. The subordinator is sampled
on an operational-time grid ``y_k = k dy`` with exact increments, and
``E(t)`` is read off as the first grid point with ``sigma(y_k) > t``; this
overestimates ``E(t)`` by at most one step ``dy``. The chain is sampled
exactly with exponential clocks.

Reproducibility: samples are generated in fixed chunks of
:data:`CHUNK` paths; chunk ``k`` of seed ``s`` draws from
``SeedSequence(s, spawn_key=(k,))`` split into independent subordinator and
chain streams. Results are therefore bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import bdprocess as bd
from .bdprocess import BirthDeathSpec
from .bernstein import BernsteinFunction
from .errors import CoverageError, DomainError, SamplerError

CHUNK = 10_000
_BLOCK = 256          # grid steps generated per vectorized block
_MAX_REJECT_ROUNDS = 200


def worker_count() -> int:
    """Worker threads: ``NLBD_THREADS`` if set, else the CPU count."""
    env = os.environ.get("NLBD_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


# ---------------------------------------------------------------------------
# subordinator increments

def _stable_std(alpha: float, rng: np.random.Generator, size) -> np.ndarray:
    """Positive stable variates with ``E exp(-lam S) = exp(-lam^alpha)``.

    Kanter's representation with ``U ~ Unif(0, pi)`` and ``W ~ Exp(1)``.
    """
    u = rng.uniform(0.0, np.pi, size)
    w = rng.standard_exponential(size)
    a = alpha
    return (np.sin(a * u) / np.sin(u) ** (1 / a)
            * (np.sin((1 - a) * u) / w) ** ((1 - a) / a))


def increments(fn: BernsteinFunction, dy: float, rng: np.random.Generator, size) -> np.ndarray:
    """I.i.d. increments ``sigma(y + dy) - sigma(y)``.

    Their Laplace transform is ``exp(-dy Phi(lam))``.
    """
    k = fn.kind
    if k == "stable":
        return dy ** (1 / fn.alpha) * _stable_std(fn.alpha, rng, size)
    if k == "tempered-stable":
        return _tempered(fn, dy, rng, size)
    if k == "gamma":
        return rng.standard_gamma(dy, size)
    if k == "geometric-stable":
        g = rng.standard_gamma(dy, size)
        if fn.alpha == 1:
            return g
        return g ** (1 / fn.alpha) * _stable_std(fn.alpha, rng, size)
    if k == "identity":
        return np.full(size, dy)
    raise DomainError(f"no sampler for Bernstein kind {k!r}")


def _tempered(fn: BernsteinFunction, dy: float, rng, size) -> np.ndarray:
    """Exponential tilting: propose stable, accept with ``exp(-theta s)``.

    The acceptance rate is ``exp(-dy theta^alpha)``; below 1% the step is
    split into substeps whose increments are summed.
    """
    a, th = fn.alpha, fn.theta
    sub = max(1, math.ceil(dy * th ** a / math.log(100)))
    h = dy / sub
    shape = (size,) if np.isscalar(size) else tuple(size)
    total = np.zeros(shape)
    for _ in range(sub):
        out = np.empty(shape)
        todo = np.ones(shape, dtype=bool)
        for _ in range(_MAX_REJECT_ROUNDS):
            n = int(todo.sum())
            if n == 0:
                break
            s = h ** (1 / a) * _stable_std(a, rng, n)
            ok = rng.uniform(size=n) < np.exp(-th * s)
            idx = np.flatnonzero(todo)[ok]
            out.flat[idx] = s[ok]
            todo.flat[idx] = False
        else:
            raise SamplerError("tempered-stable rejection budget exhausted")
        if todo.any():
            raise SamplerError("tempered-stable rejection budget exhausted")
        total += out
    return total


# ---------------------------------------------------------------------------
# single-path objects

@dataclass
class MonotonePath:
    """Subordinator values on the grid ``times = k * step``."""

    times: np.ndarray
    values: np.ndarray
    step: float


@dataclass
class ChainPath:
    """Jump times and states of a birth-death path (``states[0]`` at time 0)."""

    event_times: np.ndarray
    states: np.ndarray
    initial: int

    def state_at(self, y) -> np.ndarray:
        idx = np.searchsorted(self.event_times, y, side="right")
        return self.states[idx]


def sample_subordinator(fn: BernsteinFunction, horizon: float, step: float,
                        rng: np.random.Generator) -> MonotonePath:
    """Grid path of ``sigma`` extended until it exceeds ``horizon``."""
    if step <= 0:
        raise DomainError("step must be positive")
    vals = [np.zeros(1)]
    level = 0.0
    while level <= horizon:
        inc = increments(fn, step, rng, _BLOCK)
        block = level + np.cumsum(inc)
        vals.append(block)
        level = float(block[-1])
    values = np.concatenate(vals)
    return MonotonePath(np.arange(values.size) * step, values, step)


def inverse_time(path: MonotonePath, t: float) -> float:
    """Smallest grid ``y`` with ``sigma(y) > t`` (``0`` at ``t = 0``)."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    if t == 0:
        return 0.0
    k = int(np.searchsorted(path.values, t, side="right"))
    if k >= path.values.size:
        raise CoverageError(f"path ends at {path.values[-1]} <= t={t}")
    return float(path.times[k])


def sample_chain(spec: BirthDeathSpec, y0: int, horizon: float,
                 rng: np.random.Generator) -> ChainPath:
    """Exact path on ``[0, horizon]`` with exponential holding times."""
    spec.check_state(y0)
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    times, states = [], [int(y0)]
    x, clock = int(y0), 0.0
    while True:
        b, d = float(spec.birth(x)), float(spec.death(x))
        clock += rng.exponential(1.0 / (b + d))
        if clock > horizon:
            break
        x += 1 if rng.uniform() * (b + d) < b else -1
        times.append(clock)
        states.append(x)
    return ChainPath(np.array(times), np.array(states), int(y0))


def sample_time_changed(spec: BirthDeathSpec, fn: BernsteinFunction, y0: int, times,
                        rng_sub: np.random.Generator, rng_chain: np.random.Generator,
                        step: float = 1e-3, max_extend: int = 8) -> np.ndarray:
    """``N(E(t_i))`` from one subordinator path and one chain path."""
    times = np.asarray(times, dtype=float)
    horizon = float(times.max()) if times.size else 0.0
    path = sample_subordinator(fn, horizon, step, rng_sub)
    for _ in range(max_extend):
        try:
            ops = np.array([inverse_time(path, t) for t in times])
            break
        except CoverageError:
            more = sample_subordinator(fn, horizon, step, rng_sub)
            path = MonotonePath(
                np.arange(path.values.size + more.values.size - 1) * step,
                np.concatenate([path.values, path.values[-1] + more.values[1:]]), step)
    else:
        raise CoverageError("subordinator path did not cover the horizon")
    if ops.max() == 0:
        return np.full(times.shape, int(y0))
    chain = sample_chain(spec, y0, float(ops.max()), rng_chain)
    return chain.state_at(ops)


# ---------------------------------------------------------------------------
# batched engine

def _batch_inverse(fn: BernsteinFunction, times: np.ndarray, n: int, step: float,
                   rng: np.random.Generator) -> np.ndarray:
    """``E(t_j)`` for ``n`` independent paths; returns shape ``(n, len(times))``."""
    out = np.zeros((n, times.size))
    pos = np.flatnonzero(times > 0)
    if pos.size == 0:
        return out
    tsorted = np.sort(np.unique(times[pos]))
    col = {t: np.flatnonzero(times == t) for t in tsorted}
    level = np.zeros(n)
    done = np.zeros((n, tsorted.size), dtype=bool)
    res = np.zeros((n, tsorted.size))
    active = np.arange(n)
    k0 = 0
    while active.size:
        inc = increments(fn, step, rng, (active.size, _BLOCK))
        cs = level[active, None] + np.cumsum(inc, axis=1)
        for j, t in enumerate(tsorted):
            need = ~done[active, j]
            if not need.any():
                continue
            over = cs[need] > t
            hit = over.any(axis=1)
            rows = active[need][hit]
            res[rows, j] = (k0 + np.argmax(over[hit], axis=1) + 1) * step
            done[rows, j] = True
        level[active] = cs[:, -1]
        k0 += _BLOCK
        active = active[~done[active, -1]]
    for j, t in enumerate(tsorted):
        out[:, col[t]] = res[:, [j]]
    return out


def _batch_chain(spec: BirthDeathSpec, x0: np.ndarray, ops: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    """Chain states at operational times ``ops`` (rows nondecreasing)."""
    n, m = ops.shape
    order = np.argsort(ops, axis=1, kind="stable")
    x = x0.astype(np.int64).copy()
    rate = spec.birth(x) + spec.death(x)
    nxt = rng.standard_exponential(n) / rate
    out = np.empty((n, m), dtype=np.int64)
    rows = np.arange(n)
    for j in range(m):
        target = ops[rows, order[:, j]]
        move = nxt <= target
        while move.any():
            idx = np.flatnonzero(move)
            xi = x[idx]
            b = spec.birth(xi)
            d = spec.death(xi)
            up = rng.uniform(size=idx.size) * (b + d) < b
            x[idx] = xi + np.where(up, 1, -1)
            r = spec.birth(x[idx]) + spec.death(x[idx])
            nxt[idx] += rng.standard_exponential(idx.size) / r
            move[idx] = nxt[idx] <= target[idx]
        out[rows, order[:, j]] = x
    return out


def sample_stationary(spec: BirthDeathSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from the invariant mass by inverse CDF on the state cutoff."""
    from .spectral import state_cutoff

    xs = np.arange(state_cutoff(spec) + 1)
    p = bd.invariant_mass(spec, xs)
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.uniform(size=n), side="right")


def _chunk(spec, fn, times, y0, step, seed, k, n):
    ss = np.random.SeedSequence(seed, spawn_key=(k,))
    s_sub, s_chain = ss.spawn(2)
    rng_sub, rng_chain = np.random.default_rng(s_sub), np.random.default_rng(s_chain)
    if isinstance(y0, str):
        x0 = sample_stationary(spec, n, rng_chain)
    else:
        x0 = np.full(n, int(y0))
    ops = _batch_inverse(fn, times, n, step, rng_sub)
    return _batch_chain(spec, x0, ops, rng_chain)


def default_step(fn: BernsteinFunction, horizon: float) -> float:
    """``1e-3`` times the operational-time scale ``U(horizon)``."""
    if horizon <= 0:
        return 1e-3
    return 1e-3 * max(float(fn.potential(horizon)), 1e-6)


def simulate(spec: BirthDeathSpec, fn: BernsteinFunction, times, n_samples: int,
             seed: int, y0: Union[int, str] = 0, step: Optional[float] = None,
             workers: Optional[int] = None) -> np.ndarray:
    """States ``N_Phi(t_j)`` for ``n_samples`` independent samples.

    ``y0`` is a state or ``"stationary"`` (start drawn from the invariant
    mass). Returns an integer array of shape ``(n_samples, len(times))``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0):
        raise DomainError("times must be a 1-d array of nonnegative values")
    if n_samples < 1:
        raise DomainError("n_samples must be positive")
    if isinstance(y0, str):
        if y0 != "stationary":
            raise DomainError(f"unknown start {y0!r}")
    else:
        spec.check_state(y0)
    if step is None:
        step = default_step(fn, float(times.max()) if times.size else 0.0)
    sizes = [min(CHUNK, n_samples - i) for i in range(0, n_samples, CHUNK)]
    jobs = [(spec, fn, times, y0, step, seed, k, n) for k, n in enumerate(sizes)]
    nw = workers or worker_count()
    if nw <= 1 or len(jobs) == 1:
        parts = [_chunk(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            parts = list(ex.map(lambda j: _chunk(*j), jobs))
    return np.concatenate(parts, axis=0)


def simulate_inverse(fn: BernsteinFunction, times, n_samples: int, seed: int,
                     step: Optional[float] = None) -> np.ndarray:
    """Samples of ``E(t_j)``, shape ``(n_samples, len(times))``."""
    times = np.asarray(times, dtype=float)
    if step is None:
        step = default_step(fn, float(times.max()))
    parts = []
    for k, i in enumerate(range(0, n_samples, CHUNK)):
        n = min(CHUNK, n_samples - i)
        ss = np.random.SeedSequence(seed, spawn_key=(k,))
        parts.append(_batch_inverse(fn, times, n, step, np.random.default_rng(ss.spawn(2)[0])))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# estimators

def empirical_pmf(states: np.ndarray, size: int) -> np.ndarray:
    """Relative frequencies of ``0..size-1`` (larger states are lumped into
    the last cell)."""
    s = np.minimum(np.asarray(states).ravel(), size - 1)
    return np.bincount(s, minlength=size) / s.size


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance; the shorter vector is zero padded."""
    n = max(len(p), len(q))
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: len(p)] = p
    qq[: len(q)] = q
    return 0.5 * float(np.abs(pp - qq).sum())


def jackknife_cov(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Sample covariance and its delete-one jackknife standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    a = a - a.mean()
    b = b - b.mean()
    A, B, C = a.sum(), b.sum(), (a * b).sum()
    est = (C - A * B / n) / (n - 1)
    m = n - 1
    Ai, Bi, Ci = A - a, B - b, C - a * b
    loo = (Ci - Ai * Bi / m) / (m - 1)
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return float(est), se


def mc_covariance(spec: BirthDeathSpec, fn: BernsteinFunction, t: float, s: float,
                  n_samples: int, seed: int, step: Optional[float] = None,
                  workers: Optional[int] = None) -> tuple[float, float]:
    """Covariance of ``(N_Phi(t), N_Phi(s))`` under the stationary start."""
    if n_samples < 100:
        raise DomainError("mc_covariance needs at least 100 samples")
    states = simulate(spec, fn, [t, s], n_samples, seed, "stationary", step, workers)
    return jackknife_cov(states[:, 0], states[:, 1])


def write_samples(path: str, times, states: np.ndarray, meta: dict) -> str:
    """CSV ``sample_id,t,state`` plus a JSON sidecar ``<path>.json``."""
    times = np.asarray(times, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "t", "state"])
        for i, row in enumerate(states):
            for t, x in zip(times, row):
                w.writerow([i, format(t, ".17g"), int(x)])
    side = path + ".json"
    with open(side, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return side
