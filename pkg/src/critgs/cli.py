"""Command-line front end.

Usage::

    critgs solve d=5 p=2 omega=1 --out run1
    critgs sweep d=5 p=2 omega_list=10,100,1000,10000 --out sweep1
    critgs spectrum d=5 p=2 omega=1000 k=5
    critgs pscheck d=7 p=3/2
    critgs apxa d=5 p=2
    critgs census d=5 p=2 omega=1e4 m_lo=1 m_hi=1e6

Settings come from built-in defaults, then ``--config FILE`` (``key = value``
lines), then ``key=value`` arguments and flags, later sources winning.  Unknown
keys are rejected.  Every number is written with 17 significant digits and no
output file carries timestamps, so identical runs give identical bytes.

Exit codes: 0 success, 2 configuration error, 3 solver error,
4 certification inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .asymptotics import (
    SWEEP_COLUMNS,
    SWEEP_TOL,
    apxa_expansion,
    fit_slope,
    limit_constant,
    sweep_row,
)
from .domain import (
    DEFAULT_STEP,
    ProblemParams,
    RadialGrid,
    RadialProfile,
    TailModel,
    functionals,
    sobolev_sigma,
)
from .errors import (
    ConfigError,
    CritGSError,
    InconclusiveError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidParameterError,
    OutOfRangeError,
)
from .pucci_serrin import as_rational, check_condition
from .radial_ode import ATOL, M_SEARCH, RTOL, ShootingResult, ShotClass, ShotKind, ground_state_census, shoot
from .rescale import rescale
from .spectral import (
    RESIDUAL_TOL,
    critical_operator,
    eigenfunction_match,
    free_operator,
    lambda_w_target,
    linearize_rescaled,
    spectrum_near_zero,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INCONCLUSIVE = 0, 2, 3, 4
CACHE_SCHEMA = 1
QUAD_EPSREL = 1e-12  # fixed in domain._quad; part of the cache key


# ----------------------------------------------------------------------------
# number formatting


def fmt(x: Any) -> str:
    """17 significant digits for floats; ``nan``/``inf`` spelled out."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


_NUM = "@@num:"


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else _NUM + "%.17g" % x
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, ShotKind):
        return obj.name.lower()
    return obj


def dumps(obj: Any) -> str:
    """JSON with every float at 17 significant digits (non-finite -> null)."""
    text = json.dumps(_jsonable(obj), indent=2)
    return re.sub(r'"' + re.escape(_NUM) + r'([^"]*)"', r"\1", text) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """All settings of one invocation.  ``p`` keeps its text so fractions stay exact."""

    subcommand: str
    d: Optional[int] = None
    p: Optional[str] = None
    omega: Optional[float] = None
    omega_list: tuple[float, ...] = ()
    tol: Optional[float] = None  # bisection, relative bracket width
    ode_rtol: float = RTOL
    ode_atol: float = ATOL
    step: float = DEFAULT_STEP
    eig_h: Optional[float] = None
    eig_tol: float = RESIDUAL_TOL
    k: int = 5
    operator: str = "phi"
    radius: Optional[float] = None
    truncation: bool = True
    samples: int = 400
    m_lo: float = M_SEARCH[0]
    m_hi: float = M_SEARCH[1]
    m_star: Optional[float] = None
    per_decade: int = 10_000
    eps_list: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    workers: int = 1
    out: str = "."
    cache_dir: Optional[str] = None
    no_cache: bool = False

    @property
    def p_exact(self) -> Fraction:
        return as_rational(Fraction(self.p))

    @property
    def p_value(self) -> float:
        return float(Fraction(self.p))

    @property
    def bisection_tol(self) -> float:
        if self.tol is not None:
            return self.tol
        return SWEEP_TOL if self.subcommand in ("sweep", "spectrum") else 1e-12

    def params(self, omega: Optional[float] = None) -> ProblemParams:
        return ProblemParams(self.d, self.p_value, self.omega if omega is None else omega)

    def shoot_options(self) -> dict:
        return {"step": self.step, "rtol": self.ode_rtol, "atol": self.ode_atol}

    def cache(self) -> Optional["ProfileCache"]:
        if self.no_cache:
            return None
        root = self.cache_dir if self.cache_dir else os.path.join(self.out, ".critgs-cache")
        return ProfileCache(root, self.step, self.ode_rtol, self.ode_atol)

    def validate(self) -> "RunConfig":
        """Check required keys and the parameter regime before any work is done."""
        need = {"solve": ("d", "p", "omega"), "sweep": ("d", "p", "omega_list"),
                "spectrum": ("d",), "pscheck": ("d", "p"), "apxa": ("d", "p"),
                "census": ("d", "p", "omega")}[self.subcommand]
        missing = [k for k in need if getattr(self, k) in (None, ())]
        if missing:
            raise ConfigError(f"{self.subcommand}: missing {', '.join(missing)}")
        if self.p is not None:
            try:
                Fraction(self.p)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"p={self.p!r} is not a number") from exc
        for name in ("tol", "ode_rtol", "ode_atol", "step", "eig_h", "eig_tol"):
            v = getattr(self, name)
            if v is not None and not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if self.k < 3:
            raise ConfigError("k must be at least 3")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if not 0 < self.m_lo < self.m_hi:
            raise ConfigError("need 0 < m_lo < m_hi")

        sub = self.subcommand
        if sub in ("solve", "census") or (sub == "spectrum" and self.operator == "phi"):
            if self.omega is None or self.p is None:
                raise ConfigError(f"{sub}: needs p and omega")
            prm = self.params()
            if prm.d == 3 and not 3 < prm.p < 5:
                raise InvalidParameterError("in dimension 3 a ground state needs 3 < p < 5")
        if sub == "sweep":
            if any(b <= a for a, b in zip(self.omega_list, self.omega_list[1:])):
                raise ConfigError("omega_list must be strictly increasing")
            for w in self.omega_list:
                self.params(w)
        if sub == "spectrum":
            if self.operator not in ("phi", "critical", "free"):
                raise ConfigError(f"unknown operator {self.operator!r}")
            if self.operator == "free" and not (self.omega or 0) > 0:
                raise ConfigError("the free operator needs omega > 0")
        if sub == "apxa":
            self.params(1.0 if self.omega is None else self.omega)
        if sub == "pscheck" and self.omega is not None and not self.omega > 0:
            raise ConfigError("omega must be positive")
        return self


COMMON_KEYS = {"d", "p", "out"}
SOLVER_KEYS = {"tol", "ode_rtol", "ode_atol", "step", "cache_dir", "no_cache"}
ALLOWED = {
    "solve": COMMON_KEYS | SOLVER_KEYS | {"omega", "m_lo", "m_hi"},
    "sweep": COMMON_KEYS | SOLVER_KEYS | {"omega_list", "workers"},
    "spectrum": COMMON_KEYS | SOLVER_KEYS | {"omega", "eig_h", "eig_tol", "k", "operator",
                                            "radius", "truncation"},
    "pscheck": COMMON_KEYS | {"omega", "m_star", "per_decade"},
    "apxa": COMMON_KEYS | {"omega", "eps_list"},
    "census": COMMON_KEYS | {"omega", "samples", "m_lo", "m_hi", "tol", "workers"},
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float(Fraction(text))


def _convert(key: str, text: str) -> Any:
    kind = _TYPES[key]
    text = text.strip()
    try:
        if "tuple" in kind:
            return tuple(_number(t) for t in text.split(",") if t.strip())
        if "bool" in kind:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in kind:
            v = _number(text)
            if v != int(v):
                raise ValueError(text)
            return int(v)
        if "float" in kind:
            return _number(text)
        return text
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse {key}={text!r}") from exc


def parse_assignments(items: Sequence[str], source: str) -> dict[str, str]:
    """``key=value`` strings to a dict; duplicates are an error."""
    out: dict[str, str] = {}
    for raw in items:
        if "=" not in raw:
            raise ConfigError(f"{source}: expected key=value, got {raw!r}")
        key, val = raw.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"{source}: duplicate key {key!r}")
        out[key] = val.strip()
    return out


def read_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    lines = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return parse_assignments(lines, path)


def build_config(subcommand: str, file_values: dict[str, str], flag_values: dict[str, str]) -> RunConfig:
    """Defaults < file < flags; unknown keys rejected."""
    merged = {**file_values, **flag_values}
    unknown = sorted(set(merged) - ALLOWED[subcommand])
    if unknown:
        raise ConfigError(f"{subcommand}: unknown key(s) {', '.join(unknown)}")
    values = {k: _convert(k, v) for k, v in merged.items()}
    if "p" in values:
        values["p"] = str(values["p"])
    return RunConfig(subcommand=subcommand, **values).validate()


# ----------------------------------------------------------------------------
# profile cache


class ProfileCache:
    """On-disk store of ShootingResults keyed by (d, p, ω, tolerances, code version).

    Entries carry ``CACHE_SCHEMA``; an entry with another schema, version or key
    is ignored and overwritten, never reused.
    """

    def __init__(self, root: str, step: float = DEFAULT_STEP, rtol: float = RTOL, atol: float = ATOL):
        self.root = Path(root)
        self.step, self.rtol, self.atol = step, rtol, atol

    def key(self, params: ProblemParams, tol: float) -> dict:
        return {"d": params.d, "p": fmt(params.p), "omega": fmt(params.omega),
                "tol": fmt(tol), "step": fmt(self.step), "rtol": fmt(self.rtol),
                "atol": fmt(self.atol), "quad_epsrel": fmt(QUAD_EPSREL),
                "version": __version__, "schema": CACHE_SCHEMA}

    def path(self, params: ProblemParams, tol: float) -> Path:
        text = json.dumps(self.key(params, tol), sort_keys=True)
        return self.root / (hashlib.sha256(text.encode()).hexdigest()[:32] + ".npz")

    def load(self, params: ProblemParams, tol: float) -> Optional[ShootingResult]:
        path = self.path(params, tol)
        if not path.exists():
            return None
        try:
            with np.load(path, allow_pickle=False) as z:
                if int(z["schema"]) != CACHE_SCHEMA or str(z["key"]) != json.dumps(self.key(params, tol), sort_keys=True):
                    return None
                grid = RadialGrid(int(z["grid_d"]), float(z["grid_r0"]), float(z["grid_rmax"]), int(z["grid_n"]))
                t = z["tail"]
                tail = None if np.isnan(t[0]) else TailModel(float(t[0]), float(t[1]), float(t[2]))
                prof = RadialProfile(grid, z["values"].copy(), z["derivs"].copy(), tail=tail)
                trace = tuple(
                    (float(M), ShotClass(ShotKind[str(k)], float(r), bool(dv)))
                    for M, k, r, dv in zip(z["trace_m"], z["trace_kind"], z["trace_r"], z["trace_div"])
                )
                br = z["bracket"]
                return ShootingResult(params, float(z["m_star"]), (float(br[0]), float(br[1])), prof,
                                      trace, float(z["ode_residual"]), float(z["cut_radius"]))
        except (OSError, KeyError, ValueError):
            return None

    def store(self, result: ShootingResult, tol: float) -> None:
        params = result.params
        path = self.path(params, tol)
        path.parent.mkdir(parents=True, exist_ok=True)
        g, prof = result.profile.grid, result.profile
        tail = prof.tail
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        os.close(fd)
        with open(tmp, "wb") as fh:
            np.savez(
                fh,
                schema=np.int64(CACHE_SCHEMA),
                key=np.str_(json.dumps(self.key(params, tol), sort_keys=True)),
                grid_d=np.int64(g.d), grid_r0=np.float64(g.r0), grid_rmax=np.float64(g.r_max),
                grid_n=np.int64(g.n),
                values=np.asarray(prof.values), derivs=np.asarray(prof.derivs),
                tail=np.array([math.nan] * 3 if tail is None else [tail.amplitude, tail.rate, tail.power]),
                m_star=np.float64(result.m_star), bracket=np.array(result.bracket, dtype=float),
                ode_residual=np.float64(result.ode_residual), cut_radius=np.float64(result.cut_radius),
                trace_m=np.array([m for m, _ in result.trace], dtype=float),
                trace_kind=np.array([c.kind.name for _, c in result.trace], dtype=str),
                trace_r=np.array([c.radius for _, c in result.trace], dtype=float),
                trace_div=np.array([c.divergent for _, c in result.trace], dtype=bool),
            )
        os.replace(tmp, path)


def solve_cached(params: ProblemParams, cfg: RunConfig, cache: Optional[ProfileCache]) -> tuple[ShootingResult, bool]:
    tol = cfg.bisection_tol
    if cache is not None:
        hit = cache.load(params, tol)
        if hit is not None:
            return hit, True
    result = shoot(params, tol=tol, m_range=(cfg.m_lo, cfg.m_hi), **cfg.shoot_options())
    if cache is not None:
        cache.store(result, tol)
    return result, False


# ----------------------------------------------------------------------------
# subcommands


def _out(cfg: RunConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _say(msg: str) -> None:
    print(msg, file=sys.stdout)


def cmd_solve(cfg: RunConfig) -> int:
    params = cfg.params()
    result, hit = solve_cached(params, cfg, cfg.cache())
    prof = result.profile
    rep = functionals(prof, params)
    out = _out(cfg)
    _write(out / "profile.csv", _csv_text(("r", "u", "u_prime"),
                                          list(zip(prof.grid.nodes, prof.values, prof.derivs))))
    scale = rep.grad_sq + params.omega * rep.mass
    sigma = sobolev_sigma(params.d) ** (params.d / 2.0)
    func = asdict(rep)
    func.update(nehari_rel=rep.nehari / scale, pohozaev_rel=rep.pohozaev / scale,
                talenti_grad_sq=sigma, grad_bound_holds=bool(rep.grad_sq <= sigma))
    _write(out / "functionals.json", dumps(func))
    tail = prof.tail
    summary = {
        "d": params.d, "p": params.p, "omega": params.omega,
        "m_star": result.m_star, "bracket": list(result.bracket), "n_shots": result.n_shots,
        "ode_residual": result.ode_residual, "cut_radius": result.cut_radius,
        "grid": {"r0": prof.grid.r0, "r_max": prof.grid.r_max, "n": prof.grid.n},
        "tail": None if tail is None else {"amplitude": tail.amplitude, "rate": tail.rate, "power": tail.power},
        "tolerances": {"bisection": cfg.bisection_tol, "ode_rtol": cfg.ode_rtol,
                       "ode_atol": cfg.ode_atol, "step": cfg.step, "quad_epsrel": QUAD_EPSREL},
        "version": __version__,
    }
    _write(out / "summary.json", dumps(summary))
    _say(f"M* = {fmt(result.m_star)}  N/scale = {rep.nehari / scale:.3g}  "
         f"P/scale = {rep.pohozaev / scale:.3g}  cache {'hit' if hit else 'miss'}  -> {out}")
    return EXIT_OK


def _sweep_job(args):
    params, cfg = args
    return sweep_row(params, cfg.bisection_tol, cfg.cache(), cfg.shoot_options())[0]


def cmd_sweep(cfg: RunConfig) -> int:
    jobs = [(cfg.params(w), cfg) for w in cfg.omega_list]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    out = _out(cfg)
    header = list(SWEEP_COLUMNS) + ["errors"]
    body = [[getattr(r, c) for c in SWEEP_COLUMNS] + [r.error] for r in rows]
    _write(out / "sweep.csv", _csv_text(header, body))

    diag: dict[str, Any] = {"d": cfg.d, "p": cfg.p_value, "tol": cfg.bisection_tol,
                            "rows": [asdict(r) for r in rows]}
    try:
        diag["limit_constant"] = limit_constant(cfg.d, cfg.p_value)
    except (CritGSError, ArithmeticError) as exc:
        diag["limit_constant"] = None
        diag["limit_constant_error"] = str(exc)
    ok = [r for r in rows if r.ok]
    diag["m_star_slope"] = fit_slope([r.omega for r in ok], [r.m_star for r in ok]) if len(ok) >= 2 else None
    _write(out / "sweep_diagnostics.json", dumps(diag))
    _say(f"{len(ok)}/{len(rows)} rows ok -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    info: dict[str, Any] = {"operator": cfg.operator, "d": cfg.d}
    if cfg.operator == "phi":
        params = cfg.params()
        result, _ = solve_cached(params, cfg, cfg.cache())
        state = rescale(result, params)
        kw = {} if cfg.eig_h is None else {"h": cfg.eig_h}
        op = linearize_rescaled(state, radius=cfg.radius, **kw)
        info.update(p=params.p, omega=params.omega, m_star=result.m_star, alpha=state.alpha, beta=state.beta)
    elif cfg.operator == "critical":
        kw = {} if cfg.eig_h is None else {"h": cfg.eig_h}
        op = critical_operator(cfg.d, **({"radius": cfg.radius} if cfg.radius else {}), **kw)
    else:
        kw = {} if cfg.eig_h is None else {"h": cfg.eig_h}
        op = free_operator(cfg.d, cfg.omega, **({"radius": cfg.radius} if cfg.radius else {}), **kw)
        info.update(omega=cfg.omega)
    rep = spectrum_near_zero(op, k=cfg.k, truncation=cfg.truncation, residual_tol=cfg.eig_tol)
    info.update(
        eigenvalues=rep.eigenvalues, eigenvalues_original_units=rep.eigenvalues * rep.scale,
        residuals=rep.residuals, gap=rep.gap, gap_original_units=rep.gap_original_units,
        scale=rep.scale, radius=rep.radius, n_cells=rep.n_cells,
        refinement_delta=rep.refinement_delta, truncation_delta=rep.truncation_delta,
        negative_count=rep.negative_count,
    )
    if cfg.operator == "critical":
        idx, mismatch = eigenfunction_match(rep, lambda_w_target(cfg.d))
        info.update(lambda_w_index=idx, lambda_w_mismatch=mismatch)
    out = _out(cfg)
    _write(out / "spectrum.json", dumps(info))
    _say(f"gap = {fmt(rep.gap)} (x{fmt(rep.scale)})  max residual = {rep.residuals.max():.3g} -> {out}")
    return EXIT_OK


def cmd_pscheck(cfg: RunConfig) -> int:
    rep = check_condition(cfg.d, cfg.p_exact, cfg.omega, cfg.m_star, cfg.per_decade)
    c = rep.coefficients
    info = {
        "d": rep.d, "p": str(c.p), "omega": rep.omega, "verdict": rep.verdict,
        "g_min": rep.g_min, "u_min": rep.u_min, "certificate": rep.certificate,
        "witness": None if rep.witness is None else asdict(rep.witness),
        "scan": None if rep.scan is None else {"u_lo": rep.scan[0], "u_hi": rep.scan[1], "n": rep.scan[2]},
        "coefficients_exact": {"A2": c.a2, "A_p+1": c.a_p1, "A_q+1": c.a_q1, "A_2p": c.a_2p, "A_p+q": c.a_pq},
        "coefficients": c.as_floats(),
        "hint": rep.hint, "notes": list(rep.notes),
    }
    out = _out(cfg)
    _write(out / "pscheck.json", dumps(info))
    _say(f"d={rep.d} p={c.p}: {rep.verdict} ({rep.certificate})")
    return EXIT_INCONCLUSIVE if rep.verdict == "inconclusive" else EXIT_OK


def cmd_apxa(cfg: RunConfig) -> int:
    omega = 1.0 if cfg.omega is None else cfg.omega
    rep = apxa_expansion(cfg.d, cfg.p_value, omega, cfg.eps_list)
    info = asdict(rep)
    info["fits"] = {k: {"fitted": f, "predicted": pr,
                        "rel_err": abs(f - pr) / pr if math.isfinite(f) else None}
                    for k, (f, pr) in rep.fits.items()}
    info["inconclusive"] = list(rep.inconclusive)
    info["sigma_d2_over_d"] = rep.sigma_d2 / rep.d
    info["strict_bound"] = rep.strict_bound
    out = _out(cfg)
    _write(out / "apxa.json", dumps(info))
    _say(f"strict bound {'holds' if rep.strict_bound else 'fails'}; "
         + ", ".join(f"{k} {fmt(f)[:6]}/{fmt(pr)}" for k, (f, pr) in rep.fits.items()))
    if rep.inconclusive:
        raise InconclusiveError(f"non-monotone deviations for {', '.join(rep.inconclusive)}")
    return EXIT_OK


def cmd_census(cfg: RunConfig) -> int:
    params = cfg.params()
    rep = ground_state_census(params, (cfg.m_lo, cfg.m_hi), cfg.samples,
                              tol=cfg.bisection_tol, workers=cfg.workers)
    out = _out(cfg)
    _write(out / "census.csv", _csv_text(("m", "kind"), [(m, k.name.lower()) for m, k in zip(rep.heights, rep.kinds)]))
    info = {
        "d": params.d, "p": params.p, "omega": params.omega, "m_range": [cfg.m_lo, cfg.m_hi],
        "samples": cfg.samples, "transitions": rep.transitions, "reverse": rep.reverse,
        "intervals": [list(i) for i in rep.intervals], "inconclusive": list(rep.inconclusive),
        "candidates": [asdict(c) for c in rep.candidates],
        "ground_state_index": rep.ground_state_index,
    }
    _write(out / "census.json", dumps(info))
    _say(f"{rep.transitions} undershoot->crossing, {rep.reverse} reverse, "
         f"{len(rep.inconclusive)} inconclusive -> {out}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "spectrum": cmd_spectrum,
            "pscheck": cmd_pscheck, "apxa": cmd_apxa, "census": cmd_census}


# ----------------------------------------------------------------------------
# entry point


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critgs", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"critgs {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run {name}")
        sp.add_argument("settings", nargs="*", metavar="key=value")
        sp.add_argument("--config", help="key = value file; command-line settings win")
        sp.add_argument("--out", help="output directory (default .)")
        if name in ("solve", "sweep", "spectrum"):
            sp.add_argument("--cache-dir", help="profile cache directory")
            sp.add_argument("--no-cache", action="store_true", help="neither read nor write the cache")
        if name in ("sweep", "census"):
            sp.add_argument("--workers", type=int, help="worker processes")
    return parser


def _error_payload(exc: BaseException, code: int) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    out_dir = args.out or "."
    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = parse_assignments(args.settings, "command line")
        if args.out:
            flags["out"] = args.out
        if getattr(args, "cache_dir", None):
            flags["cache_dir"] = args.cache_dir
        if getattr(args, "no_cache", False):
            flags["no_cache"] = "true"
        if getattr(args, "workers", None) is not None:
            flags["workers"] = str(args.workers)
        out_dir = flags.get("out", file_values.get("out", "."))
        cfg = build_config(args.subcommand, file_values, flags)
    except (ConfigError, InvalidParameterError, InvalidDimensionError, InvalidInputError) as exc:
        return _fail(exc, EXIT_CONFIG, out_dir)

    try:
        return COMMANDS[cfg.subcommand](cfg)
    except InconclusiveError as exc:
        return _fail(exc, EXIT_INCONCLUSIVE, cfg.out)
    except (InvalidParameterError, InvalidDimensionError, InvalidInputError, OutOfRangeError, ConfigError) as exc:
        return _fail(exc, EXIT_CONFIG, cfg.out)
    except (CritGSError, ArithmeticError) as exc:
        return _fail(exc, EXIT_SOLVER, cfg.out)


def _fail(exc: BaseException, code: int, out_dir: str) -> int:
    text = dumps(_error_payload(exc, code))
    sys.stderr.write(text)
    try:
        _write(Path(out_dir) / "error.json", text)
    except OSError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())
