"""``nlbd`` command-line front end.

Configuration is a JSON object read from ``--config PATH`` (``-`` or no
flag means standard input)::

    {
      "process":   {"family": "immigration-death", "params": {"b": 1, "d": 1}},
      "bernstein": {"kind": "stable", "alpha": 0.5},
      "times":     [0.5, 1.0],
      "tol":       1e-8,
      "seed":      7,
      "samples":   100000,
      "solve":     {"direction": "forward", "datum": {"kind": "point", "at": 0},
                    "states": [0, 1, 2]},
      "simulate":  {"y0": 0, "step": null},
      "covariance": {"pairs": [[0, 0], [1, 0], [2, 1]]},
      "out":       "result.csv"
    }

Command-line flags override the matching file fields, which override the
built-in defaults. Tables go to ``--out`` as CSV (17 significant digits) with
a JSON sidecar ``<out>.json``; without ``--out`` the CSV goes to standard
output and no sidecar is written. Errors are reported as one JSON object on
standard error with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Optional

import numpy as np

from . import __version__
from . import bdprocess as bd
from . import bernstein as bn
from . import correlation as co
from . import simulate as sim
from . import spectral as sp
from .eigenfn import EigenEvaluator, mittag_leffler
from .errors import InvalidSpecError, NlbdError

EXIT_CODES = {"invalid_spec": 2, "domain": 2, "numerical": 3, "not_in_l2": 3,
              "sampler": 4, "coverage": 4}

DEFAULT_SAMPLES = 100_000
DEFAULT_PAIRS = [[0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [3.0, 3.0]]


class _JsonArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidSpecError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# configuration

def _load_config(path: Optional[str], stdin) -> dict:
    if path in (None, "-"):
        text = stdin.read()
        where = "<stdin>"
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise InvalidSpecError(f"cannot read config {path}: {exc.strerror}") from exc
        where = path
    if not text.strip():
        return {}
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"{where}: invalid JSON ({exc.msg})") from exc
    if not isinstance(cfg, dict):
        raise InvalidSpecError("config must be a JSON object")
    return cfg


def _merge_flags(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    for key in ("seed", "tol", "samples", "out"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    tol = cfg.get("tol", sp.DEFAULT_TOL)
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise InvalidSpecError("tol must be a positive number")
    cfg["tol"] = float(tol)
    return cfg


def _process(cfg: dict) -> bd.BirthDeathSpec:
    if "process" not in cfg:
        raise InvalidSpecError("config lacks a 'process' entry")
    return bd.from_dict(cfg["process"])


def _bernstein(cfg: dict, required: bool = True) -> Optional[bn.BernsteinFunction]:
    if "bernstein" not in cfg:
        if required:
            raise InvalidSpecError("config lacks a 'bernstein' entry")
        return None
    return bn.from_dict(cfg["bernstein"])


def _times(cfg: dict, default) -> np.ndarray:
    t = np.asarray(cfg.get("times", default), dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise InvalidSpecError("times must be a nonempty, strictly increasing list of t >= 0")
    return t


def _seed(cfg: dict) -> int:
    seed = cfg.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise InvalidSpecError("a seed in [0, 2^64) is required")
    return seed


def _samples(cfg: dict) -> int:
    n = cfg.get("samples", DEFAULT_SAMPLES)
    if not isinstance(n, int) or n < 0:
        raise InvalidSpecError("samples must be a nonnegative integer")
    return n


def _states(cfg_solve: dict, spec: bd.BirthDeathSpec) -> list:
    states = cfg_solve.get("states")
    if states is None:
        # infinite E: states carrying all but 1e-6 of the invariant mass
        return list(range(bd.truncation_point(spec, 1e-6) + 1))
    out = []
    for s in states:
        if not isinstance(s, int):
            raise InvalidSpecError("states must be integers")
        spec.check_state(s)
        out.append(s)
    return out


def _datum(obj, spec: bd.BirthDeathSpec) -> Callable:
    """Named function, point mass, invariant mass or inline table."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidSpecError("datum must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "constant":
        c = float(obj.get("value", 1.0))
        return lambda x: np.full(np.shape(x), c)
    if kind == "point":
        at = obj.get("at")
        if not isinstance(at, int):
            raise InvalidSpecError("point datum needs an integer 'at'")
        spec.check_state(at)
        return sp.delta(at)
    if kind == "invariant":
        return lambda x: bd.invariant_mass(spec, x)
    if kind == "identity":
        return lambda x: np.asarray(x, dtype=float)
    if kind == "table":
        vals = np.asarray(obj.get("values", []), dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise InvalidSpecError("table datum needs a nonempty 'values' list")

        def table(x):
            x = np.asarray(x)
            out = np.zeros(x.shape)
            inside = x < vals.size
            out[inside] = vals[x[inside]]
            return out
        return table
    raise InvalidSpecError(f"unknown datum kind {kind!r}")


# ---------------------------------------------------------------------------
# output

def _emit(cfg: dict, header: list, rows: list, meta: dict, stdout) -> None:
    out = cfg.get("out")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(buf.getvalue())
        with open(out + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        stdout.write(buf.getvalue())


def _echo(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k != "out"}


# ---------------------------------------------------------------------------
# commands

def cmd_solve(cfg: dict, stdout) -> None:
    spec, fn = _process(cfg), _bernstein(cfg)
    ev = EigenEvaluator(fn)
    sc = cfg.get("solve", {})
    direction = sc.get("direction", "backward")
    if direction not in ("backward", "forward"):
        raise InvalidSpecError("solve.direction must be 'backward' or 'forward'")
    default_datum = {"kind": "constant", "value": 1.0} if direction == "backward" \
        else {"kind": "point", "at": 0}
    datum = _datum(sc.get("datum", default_datum), spec)
    times = _times(cfg, [1.0])
    states = _states(sc, spec)
    if direction == "backward":
        sol = sp.backward_solution(spec, ev, datum, cfg["tol"])
    else:
        sol = sp.forward_solution(spec, ev, datum, cfg["tol"], xmax=max(states))
    rows, tails = [], []
    for t in times:
        for z in states:
            r = sol.evaluate(float(t), z)
            # display-only clamp of negative truncation artifacts in masses
            v = max(r.value, 0.0) if direction == "forward" else r.value
            rows.append([float(t), z, v])
            tails.append(r.tail_bound)
    col = "y" if direction == "backward" else "x"
    val = "u" if direction == "backward" else "v"
    meta = {"command": "solve", "config": _echo(cfg),
            "tail_bounds": tails, "max_tail_bound": max(tails)}
    _emit(cfg, ["t", col, val], rows, meta, stdout)


def _spectral_pmf(spec, ev, t, y0, size, tol):
    if y0 == "stationary":
        p = np.asarray(bd.invariant_mass(spec, np.arange(size)), dtype=float)
    elif t == 0:
        p = np.zeros(size)
        p[min(y0, size - 1)] = 1.0
    else:
        p = sp.fundamental_column(spec, ev, t, y0, tol, xmax=size - 1)
    p = np.clip(p, 0.0, None)
    p[-1] = max(1.0 - p[:-1].sum(), 0.0)
    return p


def cmd_simulate(cfg: dict, stdout) -> None:
    spec, fn = _process(cfg), _bernstein(cfg)
    seed, n = _seed(cfg), _samples(cfg)
    if n < 1:
        raise InvalidSpecError("simulate needs samples >= 1")
    times = _times(cfg, [0.0, 1.0])
    sc = cfg.get("simulate", {})
    y0 = sc.get("y0", 0)
    states = sim.simulate(spec, fn, times, n, seed, y0=y0, step=sc.get("step"))
    ev = EigenEvaluator(fn)
    size = (spec.N + 1) if spec.finite else sp.state_cutoff(spec) + 1
    summary = []
    for j, t in enumerate(times):
        emp = sim.empirical_pmf(states[:, j], size)
        ref = _spectral_pmf(spec, ev, float(t), y0, size, cfg["tol"])
        summary.append({"t": float(t), "empirical_pmf": emp.tolist(),
                        "spectral_pmf": ref.tolist(), "tv": sim.tv_distance(emp, ref)})
    meta = {"command": "simulate", "config": _echo(cfg), "summary": summary}
    out = cfg.get("out")
    if out:
        sim.write_samples(out, times, states, meta)
    else:
        json.dump({"summary": [{"t": s["t"], "tv": s["tv"]} for s in summary]},
                  stdout, sort_keys=True)
        stdout.write("\n")


def _verdict_json(v: co.DependenceVerdict) -> dict:
    return {"verdict": str(v), "kind": v.kind, "order": v.order,
            "fitted_order": None if math.isinf(v.fitted_order) else v.fitted_order,
            "tail_ratio": v.tail_ratio, "numeric_kind": v.numeric_kind, "agree": v.agree}


def cmd_covariance(cfg: dict, stdout) -> None:
    spec, fn = _process(cfg), _bernstein(cfg)
    ev = EigenEvaluator(fn)
    pairs = cfg.get("covariance", {}).get("pairs", DEFAULT_PAIRS)
    try:
        pairs = [(float(t), float(s)) for t, s in pairs]
    except (TypeError, ValueError) as exc:
        raise InvalidSpecError("covariance.pairs must be a list of [t, s]") from exc
    if any(t < 0 or s < 0 for t, s in pairs):
        raise InvalidSpecError("covariance times must be nonnegative")
    n = _samples(cfg)
    mc = {}
    if n > 0:
        seed = _seed(cfg)
        grid = sorted({x for p in pairs for x in p})
        states = sim.simulate(spec, fn, grid, n, seed, y0="stationary",
                              step=cfg.get("simulate", {}).get("step"))
        col = {x: j for j, x in enumerate(grid)}
        for t, s in pairs:
            mc[(t, s)] = sim.jackknife_cov(states[:, col[t]], states[:, col[s]])
    rows = []
    for t, s in pairs:
        exact = co.covariance(spec, fn, t, s, ev)
        est, se = mc.get((t, s), (math.nan, math.nan))
        rows.append([t, s, exact, est, se])
    verdict = None if fn.kind == "identity" else _verdict_json(co.dependence_class(spec, fn, ev))
    meta = {"command": "covariance", "config": _echo(cfg), "dependence": verdict}
    _emit(cfg, ["t", "s", "cov_exact", "cov_mc", "se"], rows, meta, stdout)


def cmd_classify(cfg: dict, stdout) -> None:
    spec = _process(cfg)
    fn = _bernstein(cfg, required=False)
    res = {"process_class": bd.classify(spec).value}
    if fn is not None and fn.kind != "identity":
        res["dependence"] = _verdict_json(co.dependence_class(spec, fn))
    text = json.dumps(res, indent=2, sort_keys=True) + "\n"
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _selftest_checks() -> dict:
    checks = {}
    specs = [bd.make("immigration-death", b=1.5, d=1.0),
             bd.make("meixner", b=0.5, d=1.0, beta=2.0),
             bd.make("krawtchouk", b=1.0, d=2.0, N=6),
             bd.make("hahn", d=1.0, alpha=1, beta=2, N=5)]
    worst = 0.0
    for s in specs:
        xs = np.arange(s.N + 1 if s.finite else 60)
        worst = max(worst, max(abs(bd.pearson_residual(s, int(x), relative=True)) for x in xs))
    checks["pearson"] = worst <= 1e-12
    worst = 0.0
    for s in specs:
        P = s.polynomials
        xs = np.arange(s.N + 1 if s.finite else 200)
        m = bd.invariant_mass(s, xs)
        k = min(5, s.N) if s.finite else 5
        Q = np.array([[P.eval_Q(n, int(x)) for x in xs] for n in range(k + 1)])
        G = (Q * m) @ Q.T
        worst = max(worst, float(np.max(np.abs(G - np.eye(k + 1)))))
    checks["orthonormality"] = worst < 1e-8
    z = np.linspace(-5, 1, 13)
    checks["mittag_leffler"] = bool(np.all(np.abs(mittag_leffler(1.0, z) - np.exp(z))
                                           <= 1e-12 * np.maximum(1, np.exp(z))))
    s = specs[2]
    ev = EigenEvaluator(bn.BernsteinFunction.identity())
    lam1 = bd.eigenvalue(s, 1)
    a1 = co.linear_coefficients(s).a1
    checks["classical_covariance"] = abs(co.covariance(s, ev.fn, 2.0, 0.5, ev)
                                         - a1 * a1 * math.exp(1.5 * lam1)) < 1e-10
    return checks


def cmd_selftest(cfg: dict, stdout) -> None:
    checks = _selftest_checks()
    json.dump({"checks": checks, "passed": all(checks.values())}, stdout, sort_keys=True)
    stdout.write("\n")
    if not all(checks.values()):
        raise SelftestFailure("selftest failed: " +
                              ", ".join(k for k, v in checks.items() if not v))


class SelftestFailure(NlbdError):
    code = "selftest"


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "covariance": cmd_covariance,
            "classify": cmd_classify, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    p = _JsonArgParser(prog="nlbd", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"nlbd {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_JsonArgParser)
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("--config", metavar="PATH",
                       help="JSON config file ('-' for stdin; default stdin)")
        c.add_argument("--seed", type=int, metavar="U64")
        c.add_argument("--tol", type=float, metavar="REAL")
        c.add_argument("--samples", type=int, metavar="N")
        c.add_argument("--out", metavar="PATH")
    return p


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        # selftest needs no config unless one is named
        if args.command == "selftest" and args.config is None:
            cfg = {}
        else:
            cfg = _load_config(args.config, stdin)
        cfg = _merge_flags(cfg, args)
        COMMANDS[args.command](cfg, stdout)
    except NlbdError as exc:
        code = getattr(exc, "code", "error")
        payload = {"error": code, "message": str(exc)}
        est = getattr(exc, "estimate", None)
        if est is not None:
            payload["estimate"] = float(est)
        stderr.write(json.dumps(payload) + "\n")
        return EXIT_CODES.get(code, 1)
    except OSError as exc:
        stderr.write(json.dumps({"error": "io", "message": str(exc)}) + "\n")
        return 5
    return 0


def main_entry() -> None:
    """Console-script wrapper that exits with :func:`main`'s status."""
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
