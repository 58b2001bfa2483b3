"""Configuration-driven parameter sweeps.

A scan is described by an INI file::

    [scan]
    mode = reservoir_sweep        ; reservoir_sweep | gaussian_sweep | tau_curve | ep_curve | point_eval
    output = fig03.csv            ; optional

    [fixed]
    n_res = 0.01
    delta = 0

    [axis.m_res]
    min = 0
    max = 0.10049
    points = 200
    spacing = linear              ; linear | log
    ; or: values = 0, 0.008, 0.016

    [truncation]
    dim = 20                      ; integer or auto
    tol = 1e-8

    [tau]                         ; tau_curve only
    tau_max = 8
    points = 200

Grid points are evaluated independently (optionally in a process pool) and
gathered in input order, so the CSV is byte-identical for identical configs.
"""
import configparser
import csv
import hashlib
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamics
from .blockade_classifier import (CASE_LETTER, classify, small_tau_window, two_time_bunched,
                                  two_time_pab)
from .correlations import correlation_set
from .errors import ConfigError, SqBlockadeError
from .fock import TOL_TRUNC, GaussianParams, state_dsts
from .gaussian_analytics import (critical_r0, dsts_g2, dsts_g3, dsts_gk, dsts_mean_n,
                                 squeezing_variance)
from .master_equation import SystemParams, build_liouvillian
from .nonclassicality import (MAX_TWO_MODE_DIM, entanglement_potential, ep_dsts_closed_form,
                              two_mode_budget)

MODES = ("reservoir_sweep", "gaussian_sweep", "tau_curve", "ep_curve", "point_eval")
RESERVOIR_KEYS = ("delta", "epsilon", "gamma", "n_res", "m_res", "m_frac", "m_phase")
GAUSSIAN_KEYS = ("alpha", "phi", "r", "theta", "n_th")
MODE_KEYS = {
    "reservoir_sweep": RESERVOIR_KEYS,
    "tau_curve": RESERVOIR_KEYS,
    "gaussian_sweep": GAUSSIAN_KEYS,
    "ep_curve": GAUSSIAN_KEYS,
}
SECTION_KEYS = {
    "scan": {"mode", "output", "model", "title"},
    "truncation": {"dim", "tol"},
    "tau": {"tau_max", "points"},
}
AXIS_KEYS = {"min", "max", "points", "spacing", "values"}
WORKERS_ENV = "SQBLOCKADE_WORKERS"
SERIAL_BELOW = 64


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    @classmethod
    def linear(cls, name, lo, hi, points, spacing="linear"):
        if points < 2:
            raise ConfigError(f"axis {name}: points must be >= 2, got {points}")
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError(f"axis {name}: bounds must be finite")
        if spacing == "linear":
            v = np.linspace(lo, hi, points)
        elif spacing == "log":
            if lo <= 0 or hi <= 0:
                raise ConfigError(f"axis {name}: log spacing needs positive bounds")
            v = np.geomspace(lo, hi, points)
        else:
            raise ConfigError(f"axis {name}: spacing must be linear or log, got {spacing!r}")
        return cls(name, tuple(float(x) for x in v))


@dataclass(frozen=True)
class ScanConfig:
    mode: str
    fixed: dict
    axes: tuple
    dim: object = None          # int or None for automatic
    tol: float = TOL_TRUNC
    tau_max: float = dynamics.TAU_MAX
    tau_points: int = dynamics.TAU_POINTS
    model: str = "reservoir"    # point_eval only
    output: str = ""
    title: str = ""
    source: str = field(default="", compare=False)

    @property
    def param_keys(self):
        if self.mode == "point_eval":
            return RESERVOIR_KEYS if self.model == "reservoir" else GAUSSIAN_KEYS
        return MODE_KEYS[self.mode]

    @property
    def shape(self):
        return tuple(len(a.values) for a in self.axes)

    def canonical(self):
        """Normalized text used for hashing; independent of comments and key order."""
        parts = [f"mode={self.mode}", f"model={self.model}", f"dim={self.dim}",
                 f"tol={self.tol!r}", f"tau_max={self.tau_max!r}", f"tau_points={self.tau_points}"]
        parts += [f"fixed.{k}={self.fixed[k]!r}" for k in sorted(self.fixed)]
        parts += [f"axis.{a.name}=" + ",".join(repr(v) for v in a.values) for a in self.axes]
        return "\n".join(parts)

    @property
    def config_hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def with_points(self, points):
        """Resample every min/max axis to ``points`` values (explicit value lists are kept)."""
        axes = []
        for a in self.axes:
            if a.name in self._explicit_axes:
                axes.append(a)
            else:
                axes.append(Axis.linear(a.name, a.values[0], a.values[-1], points,
                                        self._spacing.get(a.name, "linear")))
        return replace(self, axes=tuple(axes))

    # bookkeeping for with_points; filled by parse_config
    _explicit_axes: frozenset = frozenset()
    _spacing: dict = field(default_factory=dict)


def _float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _int(section, key, raw):
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None
    if v != int(v):
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}")
    return int(v)


def parse_config(text, overrides=()):
    """Parse INI text; ``overrides`` are ``section.key=value`` strings applied on top."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config: {e}") from None
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().rsplit(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value.strip())

    if not cp.has_section("scan") or "mode" not in cp["scan"]:
        raise ConfigError("missing [scan] mode")
    mode = cp["scan"]["mode"].strip()
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    model = cp["scan"].get("model", "reservoir").strip()
    if model not in ("reservoir", "gaussian"):
        raise ConfigError(f"[scan] model must be reservoir or gaussian, got {model!r}")
    if mode != "point_eval" and "model" in cp["scan"]:
        raise ConfigError("[scan] model is only meaningful for point_eval")

    kw = {"mode": mode, "model": model, "source": text,
          "output": cp["scan"].get("output", "").strip(),
          "title": cp["scan"].get("title", "").strip()}
    allowed = RESERVOIR_KEYS if (mode == "point_eval" and model == "reservoir") else \
        GAUSSIAN_KEYS if mode == "point_eval" else MODE_KEYS[mode]

    fixed, axes, explicit, spacing = {}, [], set(), {}
    for section in cp.sections():
        sec = cp[section]
        if section in SECTION_KEYS:
            bad = set(sec) - SECTION_KEYS[section]
            if bad:
                raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(bad))}")
            if section == "tau" and mode not in ("tau_curve", "point_eval"):
                raise ConfigError("[tau] applies only to tau_curve and point_eval")
        elif section == "fixed":
            for k, v in sec.items():
                if k not in allowed:
                    raise ConfigError(f"[fixed] {k}: not a parameter of {mode} "
                                      f"(allowed: {', '.join(allowed)})")
                fixed[k] = _float(section, k, v)
        elif section.startswith("axis."):
            name = section[5:]
            if name not in allowed:
                raise ConfigError(f"[{section}]: {name} is not a parameter of {mode}")
            if mode == "point_eval":
                raise ConfigError("point_eval takes no axes")
            bad = set(sec) - AXIS_KEYS
            if bad:
                raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(bad))}")
            if "values" in sec:
                if set(sec) & {"min", "max", "points", "spacing"}:
                    raise ConfigError(f"[{section}]: give either values or min/max/points")
                try:
                    vals = tuple(float(x) for x in sec["values"].split(",") if x.strip())
                except ValueError:
                    raise ConfigError(f"[{section}] values: not a number list") from None
                if not vals or not all(math.isfinite(v) for v in vals):
                    raise ConfigError(f"[{section}] values must be finite and nonempty")
                axes.append(Axis(name, vals))
                explicit.add(name)
            else:
                missing = {"min", "max", "points"} - set(sec)
                if missing:
                    raise ConfigError(f"[{section}] missing {', '.join(sorted(missing))}")
                sp = sec.get("spacing", "linear").strip()
                axes.append(Axis.linear(name, _float(section, "min", sec["min"]),
                                        _float(section, "max", sec["max"]),
                                        _int(section, "points", sec["points"]), sp))
                spacing[name] = sp
        else:
            raise ConfigError(f"unknown section [{section}]")

    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate axis")
    clash = set(names) & set(fixed)
    if clash:
        raise ConfigError(f"parameter(s) both fixed and swept: {', '.join(sorted(clash))}")
    every = set(names) | set(fixed)
    if {"m_res", "m_frac"} <= every:
        raise ConfigError("give m_res or m_frac, not both")
    if mode not in ("point_eval",) and not axes:
        raise ConfigError(f"{mode} needs at least one [axis.*] section")

    if cp.has_section("truncation"):
        t = cp["truncation"]
        if "dim" in t:
            raw = t["dim"].strip().lower()
            kw["dim"] = None if raw == "auto" else _int("truncation", "dim", raw)
            if kw["dim"] is not None and kw["dim"] < 2:
                raise ConfigError("[truncation] dim must be >= 2")
        if "tol" in t:
            kw["tol"] = _float("truncation", "tol", t["tol"])
            if not kw["tol"] > 0:
                raise ConfigError("[truncation] tol must be > 0")
    if cp.has_section("tau"):
        t = cp["tau"]
        if "tau_max" in t:
            kw["tau_max"] = _float("tau", "tau_max", t["tau_max"])
            if not kw["tau_max"] > 0:
                raise ConfigError("[tau] tau_max must be > 0")
        if "points" in t:
            kw["tau_points"] = _int("tau", "points", t["points"])
            if kw["tau_points"] < 2:
                raise ConfigError("[tau] points must be >= 2")
    return ScanConfig(fixed=fixed, axes=tuple(axes), _explicit_axes=frozenset(explicit),
                      _spacing=spacing, **kw)


def load_config(path, overrides=()):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text, overrides)


# ---------------------------------------------------------------------------
# parameter resolution
# ---------------------------------------------------------------------------

def system_params(values):
    """SystemParams from a flat dict; M = |M| e^{-i m_phase} with |M| = m_res or m_frac sqrt(n(n+1))."""
    n = values.get("n_res", 0.0)
    if "m_frac" in values:
        mag = values["m_frac"] * math.sqrt(n * (n + 1))
    else:
        mag = values.get("m_res", 0.0)
    m = mag * complex(math.cos(values.get("m_phase", 0.0)), -math.sin(values.get("m_phase", 0.0)))
    return SystemParams(delta=values.get("delta", 0.0), epsilon=values.get("epsilon", 0.0),
                        gamma=values.get("gamma", 1.0), n_res=n, m_res=m)


def gaussian_params(values):
    return GaussianParams(alpha_mag=values.get("alpha", 0.0), alpha_phase=values.get("phi", 0.0),
                          sq_mag=values.get("r", 0.0), sq_phase=values.get("theta", 0.0),
                          n_th=values.get("n_th", 0.0))


# ---------------------------------------------------------------------------
# per-point evaluation
# ---------------------------------------------------------------------------

LABEL_COLUMNS = ["table2_case", "table2_panel",
                 "k1_c1", "k1_c2", "k1_kpb", "k2_c1", "k2_c2", "k2_kpb", "k3_c1", "k3_c2", "k3_kpb",
                 "simplified_2pb", "simplified_3pb"]
RESULT_COLUMNS = {
    "reservoir_sweep": ["m_abs", "mean_n", "g2", "g3", "g4", *LABEL_COLUMNS,
                        "dim", "trace_loss", "residual"],
    "gaussian_sweep": ["mean_n", "g2", "g3", "g4", *LABEL_COLUMNS, "ep_closed",
                       "truncated_variance"],
    "tau_curve": ["m_abs", "tau", "g2_tau", "g2_0", "two_time_pab", "two_time_bunched",
                  "mean_n", "dim", "trace_loss"],
    "ep_curve": ["ep_numeric", "ep_closed", "r0", "variance", "truncated_variance", "dim",
                 "trace_loss"],
}
RESULT_COLUMNS["point_eval:reservoir"] = RESULT_COLUMNS["reservoir_sweep"] + ["ep_numeric",
                                                                            "ep_error"]
RESULT_COLUMNS["point_eval:gaussian"] = RESULT_COLUMNS["gaussian_sweep"] + [
    "ep_numeric", "ep_error", "dim", "trace_loss"]


def _result_key(cfg):
    return f"point_eval:{cfg.model}" if cfg.mode == "point_eval" else cfg.mode


def columns(cfg):
    return [a.name for a in cfg.axes] + RESULT_COLUMNS[_result_key(cfg)] + ["config_hash", "error"]


def _labels(g2, g3, g4, mean_n):
    lab = classify(g2, g3, g4, mean_n)
    out = {"table2_case": lab.table2_case.value, "table2_panel": CASE_LETTER[lab.table2_case],
           "simplified_2pb": lab.simplified_2pb, "simplified_3pb": lab.simplified_3pb}
    for k, c in lab.refined.items():
        out[f"k{k}_c1"], out[f"k{k}_c2"], out[f"k{k}_kpb"] = c.criterion1, c.criterion2, c.kpb
    return out


def _reservoir_steady(cfg, p):
    d = dynamics.default_dim(p) if cfg.dim is None else cfg.dim
    L = build_liouvillian(d, p)
    return d, L, dynamics.steady_state(L)


def _eval_reservoir(cfg, values, with_ep=False):
    p = system_params(values)
    d, L, ss = _reservoir_steady(cfg, p)
    cs = correlation_set(ss.rho, tol_trace=max(cfg.tol, 1e-8))
    row = {"m_abs": abs(p.m_res), "mean_n": cs.mean_n, "g2": cs.g2, "g3": cs.g3, "g4": cs.g4,
           **_labels(cs.g2, cs.g3, cs.g4, cs.mean_n),
           "dim": d, "trace_loss": ss.trace_loss, "residual": ss.residual}
    if with_ep:
        row["ep_error"] = ""
        if d * d <= MAX_TWO_MODE_DIM:
            row["ep_numeric"] = entanglement_potential(ss.rho, tol_trunc=math.inf)
        else:
            row["ep_error"] = f"TruncationError: d^2={d * d} exceeds cap {MAX_TWO_MODE_DIM}"
    return [row]


def _ep_numeric(cfg, p):
    """Numeric EP; with dim=auto the budget is tightened below cfg.tol while d^2 fits the cap."""
    if cfg.dim is None:
        d, tol = two_mode_budget(p, min(TOL_TRUNC, cfg.tol), cfg.tol)
    else:
        d, tol = cfg.dim, cfg.tol
    rho = state_dsts(d, p, tol)
    return {"ep_numeric": entanglement_potential(rho, tol), "dim": rho.dim,
            "trace_loss": rho.trace_loss}


def _eval_gaussian(cfg, values, with_ep=False):
    p = gaussian_params(values)
    N = dsts_mean_n(p)
    g2, g3, g4 = dsts_g2(p), dsts_g3(p), dsts_gk(4, p)
    sv = squeezing_variance(p)
    row = {"mean_n": N, "g2": g2, "g3": g3, "g4": g4, **_labels(g2, g3, g4, N),
           "ep_closed": ep_dsts_closed_form(p.sq_mag, p.n_th), "truncated_variance": sv.truncated}
    if with_ep:
        # EP has its own truncation limits; a failure there keeps the correlations
        try:
            row.update(_ep_numeric(cfg, p), ep_error="")
        except (SqBlockadeError, ValueError, np.linalg.LinAlgError) as e:
            row["ep_error"] = f"{type(e).__name__}: {e}"
    return [row]


def _eval_tau(cfg, values):
    p = system_params(values)
    d, L, ss = _reservoir_steady(cfg, p)
    taus = dynamics.default_tau_grid(cfg.tau_points, cfg.tau_max)
    g = dynamics.g2_tau(L, ss.rho, taus)
    idx = small_tau_window(taus)
    pab = two_time_pab(g[0], g[idx])
    bunched = two_time_bunched(g[0], g[idx])
    mean_n = float(np.real(np.trace(np.diag(np.arange(d)) @ np.asarray(ss.rho))))
    return [{"m_abs": abs(p.m_res), "tau": t, "g2_tau": v, "g2_0": g[0], "two_time_pab": pab,
             "two_time_bunched": bunched, "mean_n": mean_n, "dim": d,
             "trace_loss": ss.trace_loss} for t, v in zip(taus, g)]


def _eval_ep(cfg, values):
    p = gaussian_params(values)
    sv = squeezing_variance(p)
    row = {"ep_closed": ep_dsts_closed_form(p.sq_mag, p.n_th), "r0": critical_r0(p.n_th),
           "variance": sv.variance, "truncated_variance": sv.truncated}
    row.update(_ep_numeric(cfg, p))
    return [row]


def evaluate(cfg, values):
    """Rows for one grid point; errors are caught and returned in the ``error`` column."""
    merged = {**cfg.fixed, **values}
    try:
        if cfg.mode == "reservoir_sweep":
            rows = _eval_reservoir(cfg, merged)
        elif cfg.mode == "gaussian_sweep":
            rows = _eval_gaussian(cfg, merged)
        elif cfg.mode == "tau_curve":
            rows = _eval_tau(cfg, merged)
        elif cfg.mode == "ep_curve":
            rows = _eval_ep(cfg, merged)
        else:
            ev = _eval_reservoir if cfg.model == "reservoir" else _eval_gaussian
            rows = ev(cfg, merged, with_ep=True)
        err = ""
    except (SqBlockadeError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        rows, err = [{}], f"{type(e).__name__}: {e}"
    for r in rows:
        r.update(values)
        r["config_hash"] = cfg.config_hash
        r["error"] = err
    return rows


# ---------------------------------------------------------------------------
# scan driver
# ---------------------------------------------------------------------------

@dataclass
class ScanResult:
    config: ScanConfig
    columns: list
    rows: list

    @property
    def n_failed(self):
        return sum(1 for r in self.rows if r.get("error"))

    def column(self, name):
        return [r.get(name) for r in self.rows]

    def grid(self, name, dtype=float):
        """Column reshaped to the axis grid (not valid for tau_curve, which has extra rows)."""
        return np.array(self.column(name), dtype=dtype).reshape(self.config.shape)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_cell(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def format_cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def grid_points(cfg):
    names = [a.name for a in cfg.axes]
    for combo in itertools.product(*(a.values for a in cfg.axes)):
        yield dict(zip(names, combo))


def _eval_chunk(args):
    cfg, chunk = args
    return [evaluate(cfg, v) for v in chunk]


def worker_count(requested=None):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def run_scan(cfg, workers=None):
    """Evaluate every grid point; results are in grid order whatever the worker count."""
    if cfg.mode == "point_eval":
        raise ConfigError("point_eval has no grid; use run_point")
    points = list(grid_points(cfg))
    n = worker_count(workers)
    if n == 1 or len(points) < SERIAL_BELOW:
        nested = [evaluate(cfg, v) for v in points]
    else:
        size = max(1, len(points) // (8 * n))
        chunks = [(cfg, points[i:i + size]) for i in range(0, len(points), size)]
        with ProcessPoolExecutor(max_workers=n) as pool:
            nested = [rows for part in pool.map(_eval_chunk, chunks) for rows in part]
    rows = [r for group in nested for r in group]
    return ScanResult(cfg, columns(cfg), rows)


def point_config(cfg, values=None):
    """A point_eval config sharing ``cfg``'s truncation, with axis values folded into ``fixed``."""
    model = cfg.model if cfg.mode == "point_eval" else (
        "gaussian" if cfg.param_keys == GAUSSIAN_KEYS else "reservoir")
    return replace(cfg, mode="point_eval", model=model, axes=(), fixed={**cfg.fixed, **(values or {})},
                   _explicit_axes=frozenset(), _spacing={})


def run_point(cfg, values=None, tau=False):
    """Full report for a single parameter point.

    ``values`` override the fixed parameters (use a scan's grid values to
    re-evaluate one of its points).  With ``tau=True`` reservoir points also
    carry the g2(tau) curve on the configured grid.
    """
    pcfg = point_config(cfg, values)
    row = evaluate(pcfg, {})[0]
    report = {"model": pcfg.model, "params": dict(pcfg.fixed), **row}
    if tau and pcfg.model == "reservoir" and not row["error"]:
        curve = _eval_tau(pcfg, pcfg.fixed)
        report["tau"] = np.array([c["tau"] for c in curve])
        report["g2_tau"] = np.array([c["g2_tau"] for c in curve])
        report["two_time_pab"] = curve[0]["two_time_pab"]
    return report
