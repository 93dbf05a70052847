"""Command-line runner: presets, configured runs, sweeps and run comparisons.

Config files are JSON.  Field names carry their units::

    {
      "model": "bloch",                  # bloch | reduced | full
      "initial": "up",                   # up | down | s | a | {"p_up": .., "p_s": .., "p_a": ..,
                                         #                      "p_down": .., "re_csa": .., "im_csa": ..}
      "g_over_kappa": 0.3,
      "gamma_over_kappa": 0.0,
      "nbar": 0.0,
      "tau_scale": 0.1,                  # t = tau_scale * (kappa/g^2) * tau
      "tau_end": 25.0,
      "dtau": 0.001,
      "sample_stride": 10,               # write every n-th RK4 step
      "postselect": false,
      "nmax": 8,                         # full model only
      "full_detuning": "phase",          # full model only: phase | frequency
      "thermal_pumping": "collective",   # bloch only: collective | printed
      "schedule": {"variant": "Heaviside", "A": 10, "tau0": 2.5},
      "schedule2": {"variant": "Zero"}   # second qubit (reduced/full)
    }

A sweep config wraps a run config::

    {
      "base": {...run config...},
      "axes": [{"field": "schedule.tau0", "values": [1.5, 2.5, 3.5]}],
      "reduce": ["concurrence_clamped", "f_s"],
      "steady_window": 5.0,
      "steady_tol": 1e-3,
      "max_runs": 10000,
      "workers": 1
    }

Exit codes: 0 ok, 1 usage or config error, 2 numeric failure, 3 compare
threshold exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .bloch import PUMPING_FORMS, integrate, steady_state
from .core import (
    DetuningSchedule,
    DickeState,
    Heaviside,
    Pulse,
    Sigmoid,
    SquareWave,
    StateError,
    SystemParams,
    Zero,
    schedule_from_dict,
    to_dicke_matrix,
)
from .integrate import IntegrationError
from .lindblad import DETUNING_MODES, FockTailError, integrate_operator
from .metrics import metric_record
from .postselect import DegeneratePostselectionError, postselect

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_THRESHOLD = 0, 1, 2, 3
MODELS = ("bloch", "reduced", "full")
NAMED_STATES = ("up", "down", "s", "a")

STATE_COLUMNS = ("p_up", "p_s", "p_a", "p_down", "re_csa", "im_csa")
METRIC_COLUMNS = (
    "concurrence_clamped",
    "concurrence_relaxed",
    "f_s",
    "f_a",
    "negativity",
    "purity",
)
POST_COLUMNS = (
    "postselected.success_prob",
    "postselected.concurrence_clamped",
    "postselected.concurrence_relaxed",
    "postselected.f_s",
)
COLUMNS = ("tau", *STATE_COLUMNS, *METRIC_COLUMNS, "delta_value")
NUMERIC_ERRORS = (IntegrationError, FockTailError, StateError, FloatingPointError)


class ConfigError(ValueError):
    """Config text that does not describe a valid run."""


class GridMismatchError(ValueError):
    """Two runs to be compared were sampled on different tau grids."""


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _fail(source: str, text: str | None, key: str, msg: str) -> ConfigError:
    line = _line_of(text, key.split(".")[-1])
    where = f"{source}:{line}" if line else source
    return ConfigError(f"{where}: field '{key}': {msg}")


def _named_state(name: str) -> DickeState:
    return {
        "up": DickeState(p_up=1.0),
        "down": DickeState(p_down=1.0),
        "s": DickeState(p_s=1.0),
        "a": DickeState(p_a=1.0),
    }[name]


def _state_to_json(d: DickeState):
    for name in NAMED_STATES:
        if d == _named_state(name):
            return name
    c = complex(d.c_sa)
    return {"p_up": d.p_up, "p_s": d.p_s, "p_a": d.p_a, "p_down": d.p_down, "re_csa": c.real, "im_csa": c.imag}


def _state_from_json(v) -> DickeState:
    if isinstance(v, str):
        if v not in NAMED_STATES:
            raise ValueError(f"unknown state {v!r}; choose from {list(NAMED_STATES)} or give populations")
        return _named_state(v)
    if not isinstance(v, dict):
        raise ValueError("expected a state name or an object of populations")
    allowed = {"p_up", "p_s", "p_a", "p_down", "re_csa", "im_csa"}
    unknown = set(v) - allowed
    if unknown:
        raise ValueError(f"unknown key(s) {sorted(unknown)}")
    return DickeState(
        float(v.get("p_up", 0.0)),
        float(v.get("p_s", 0.0)),
        float(v.get("p_a", 0.0)),
        float(v.get("p_down", 0.0)),
        complex(float(v.get("re_csa", 0.0)), float(v.get("im_csa", 0.0))),
    )


# --------------------------------------------------------------------------
# Run configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    model: str = "bloch"
    initial: DickeState = field(default_factory=DickeState.up)
    schedule: DetuningSchedule = field(default_factory=Zero)
    schedule2: DetuningSchedule = field(default_factory=Zero)
    g_over_kappa: float = 0.3
    gamma_over_kappa: float = 0.0
    nbar: float = 0.0
    tau_scale: float = 0.1
    tau_end: float = 25.0
    dtau: float = 1e-3
    sample_stride: int = 10
    postselect: bool = False
    nmax: int = 8
    full_detuning: str = "phase"
    thermal_pumping: str = "collective"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {list(MODELS)}, got {self.model!r}")
        if self.model == "bloch" and not isinstance(self.schedule2, Zero):
            raise ValueError("schedule2 needs model 'reduced' or 'full'")
        for name in ("tau_end", "dtau", "tau_scale", "g_over_kappa"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v!r}")
        for name in ("gamma_over_kappa", "nbar"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be >= 0, got {v!r}")
        if not isinstance(self.sample_stride, int) or self.sample_stride < 1:
            raise ValueError(f"sample_stride must be a positive integer, got {self.sample_stride!r}")
        if not isinstance(self.nmax, int) or self.nmax < 1:
            raise ValueError(f"nmax must be a positive integer, got {self.nmax!r}")
        if self.full_detuning not in DETUNING_MODES:
            raise ValueError(f"full_detuning must be one of {list(DETUNING_MODES)}")
        if self.thermal_pumping not in PUMPING_FORMS:
            raise ValueError(f"thermal_pumping must be one of {list(PUMPING_FORMS)}")

    @property
    def params(self) -> SystemParams:
        return SystemParams(
            g=self.g_over_kappa, kappa=1.0, gamma=self.gamma_over_kappa,
            nbar=self.nbar, tau_scale=self.tau_scale,
        )

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, DetuningSchedule):
                v = v.to_dict()
            elif isinstance(v, DickeState):
                v = _state_to_json(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, d: dict, source: str = "<config>", text: str | None = None) -> RunConfig:
        if not isinstance(d, dict):
            raise ConfigError(f"{source}: run config must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise _fail(source, text, unknown[0], f"unknown field; expected one of {sorted(names)}")
        kwargs = {}
        for key, value in d.items():
            try:
                if key in ("schedule", "schedule2"):
                    value = schedule_from_dict(value)
                elif key == "initial":
                    value = _state_from_json(value)
                elif key in ("sample_stride", "nmax"):
                    if isinstance(value, bool) or not isinstance(value, int):
                        raise ValueError(f"expected an integer, got {value!r}")
                elif key == "postselect":
                    if not isinstance(value, bool):
                        raise ValueError(f"expected true/false, got {value!r}")
                elif key in ("model", "full_detuning", "thermal_pumping"):
                    if not isinstance(value, str):
                        raise ValueError(f"expected a string, got {value!r}")
                elif isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValueError(f"expected a number, got {value!r}")
            except (ValueError, TypeError) as e:
                raise _fail(source, text, key, str(e)) from None
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except (ValueError, TypeError) as e:
            key = str(e).split()[0] if str(e).split()[0] in names else "model"
            raise _fail(source, text, key, str(e)) from None


def dumps_config(cfg) -> str:
    """Canonical JSON text of a run or sweep config."""
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    return RunConfig.from_dict(_load_json(text, source), source, text)


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    config: RunConfig


_H = Heaviside(10.0, 2.5)
_NOISY = {"gamma_over_kappa": 1e-3, "nbar": 0.06}


def _preset(name, description, **kw) -> Preset:
    return Preset(name, description, RunConfig(**kw))


PRESETS = {
    p.name: p
    for p in (
        _preset("fig2", "resonant decay of |up>: p_s peaks near tau=2.5, p_a stays zero",
                schedule=Zero(), tau_end=25.0),
        _preset("decay25", "resonant decay of |up>: p_down(25) = 1 - 11 exp(-10)",
                schedule=Zero(), tau_end=25.0),
        _preset("fig3", "Heaviside switch of amplitude 10 at tau0=2.5; steady concurrence above 0.3",
                schedule=_H, tau_end=25.0),
        _preset("fig3-tau0-1.5", "Heaviside switch at tau0=1.5, smaller steady concurrence",
                schedule=Heaviside(10.0, 1.5), tau_end=25.0),
        _preset("fig3-tau0-3.5", "Heaviside switch at tau0=3.5, smaller steady concurrence",
                schedule=Heaviside(10.0, 3.5), tau_end=25.0),
        _preset("fig3-tau0-25", "switch after the qubits have decayed: no entanglement",
                schedule=Heaviside(10.0, 25.0), tau_end=50.0),
        _preset("fig4", "symmetric and antisymmetric fidelities under the tau0=2.5 switch",
                schedule=_H, tau_end=25.0),
        _preset("fig5", "smooth sigmoid edge (b=3); tracks the Heaviside curve",
                schedule=Sigmoid(10.0, 3.0, 2.5), tau_end=25.0),
        _preset("fig5-heaviside", "Heaviside partner of fig5 on the same grid",
                schedule=_H, tau_end=25.0),
        _preset("fig6", "square-wave modulation, period 2.5, 16 edges: no entanglement",
                schedule=SquareWave(10.0, 2.5, 16), tau_end=45.0),
        _preset("pulse", "single pulse of width 0.5 from tau0=2.5",
                schedule=Pulse(10.0, 2.5, 0.5), tau_end=40.0),
        _preset("fig7-modulated", "postselection on not-|00>, with switch, gamma=1e-3, nbar=0.06",
                schedule=_H, tau_end=100.0, sample_stride=100, postselect=True, **_NOISY),
        _preset("fig7-unmodulated", "postselection on not-|00>, resonant, gamma=1e-3, nbar=0.06",
                schedule=Zero(), tau_end=100.0, sample_stride=100, postselect=True, **_NOISY),
        _preset("fig7-ideal", "postselection with switch, gamma=nbar=0",
                schedule=_H, tau_end=100.0, sample_stride=100, postselect=True),
        _preset("fig8", "slow concurrence decay with gamma=1e-3, nbar=0.06",
                schedule=_H, tau_end=100.0, sample_stride=100, **_NOISY),
        _preset("oracle-g01", "full cavity model (g=0.1, Nmax=8, phase detuning) on the switch scenario",
                model="full", schedule=_H, g_over_kappa=0.1, tau_end=25.0, sample_stride=100),
        _preset("oracle-g01-bloch", "Bloch partner of oracle-g01",
                schedule=_H, g_over_kappa=0.1, tau_end=25.0, sample_stride=100),
    )
}


def resolve(name_or_path: str) -> tuple[str, RunConfig]:
    """Preset name, or path to a run config file."""
    if name_or_path in PRESETS:
        return name_or_path, PRESETS[name_or_path].config
    path = Path(name_or_path)
    if not path.exists():
        raise ConfigError(f"{name_or_path}: neither a preset nor an existing file")
    return path.stem, parse_run_config(path.read_text(), str(path))


# --------------------------------------------------------------------------
# Running
# --------------------------------------------------------------------------


def simulate(cfg: RunConfig):
    params = cfg.params
    if cfg.model == "bloch":
        return integrate(cfg.initial, cfg.schedule, params, cfg.tau_end, cfg.dtau,
                         cfg.sample_stride, thermal_pumping=cfg.thermal_pumping)
    return integrate_operator(
        cfg.model, cfg.initial, cfg.schedule, params, cfg.tau_end, cfg.dtau, cfg.sample_stride,
        schedule2=cfg.schedule2, nmax=cfg.nmax, detuning=cfg.full_detuning,
    )


def trajectory_rows(traj, with_post: bool = False, last_only: bool = False) -> list[dict]:
    taus, rhos = traj.taus, traj.density_matrices()
    if last_only:
        taus, rhos = taus[-1:], rhos[-1:]
    second = getattr(traj, "schedule2", Zero())
    rows = []
    for tau, rho in zip(taus, rhos):
        m = to_dicke_matrix(rho)
        rec = metric_record(rho, tau)
        row = {"tau": float(tau)}
        row.update(zip(("p_up", "p_s", "p_a", "p_down"), (float(x) for x in np.real(np.diag(m)))))
        row["re_csa"], row["im_csa"] = float(m[1, 2].real), float(m[1, 2].imag)
        row.update({k: getattr(rec, k) for k in METRIC_COLUMNS})
        row["delta_value"] = float(traj.schedule(tau) - second(tau))
        if with_post:
            try:
                p = postselect(rho)
                row.update(zip(POST_COLUMNS, (p.success_prob, *p.concurrence, p.f_s_post)))
            except DegeneratePostselectionError:
                row.update(dict.fromkeys(POST_COLUMNS))
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    return format(v, ".17g")


def format_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def run(cfg: RunConfig) -> tuple[list[str], list[dict]]:
    traj = simulate(cfg)
    columns = list(COLUMNS) + (list(POST_COLUMNS) if cfg.postselect else [])
    return columns, trajectory_rows(traj, cfg.postselect)


def render(cfg: RunConfig, columns, rows, fmt: str) -> str:
    if fmt == "csv":
        return format_csv(rows, columns)
    return json.dumps({"config": cfg.to_dict(), "columns": columns, "rows": rows}, indent=1) + "\n"


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    axes: tuple  # ((field_path, (values...)), ...)
    reduce: tuple = ("concurrence_clamped",)
    steady_window: float = 5.0
    steady_tol: float = 1e-3
    max_runs: int = 10_000
    workers: int = 1

    def __post_init__(self):
        if not self.axes:
            raise ValueError("axes must be non-empty")
        for path, values in self.axes:
            if not values:
                raise ValueError(f"axis {path!r} has no values")
        if self.n_runs > self.max_runs:
            raise ValueError(f"grid has {self.n_runs} runs, above max_runs={self.max_runs}")
        known = set(COLUMNS) | set(POST_COLUMNS)
        bad = [m for m in self.reduce if m not in known]
        if bad:
            raise ValueError(f"unknown reduce metric(s) {bad}")

    @property
    def n_runs(self) -> int:
        return math.prod(len(v) for _, v in self.axes)

    def grid(self):
        """Points in lexicographic order of the axis values."""
        names = [p for p, _ in self.axes]
        for combo in itertools.product(*(sorted(v) for _, v in self.axes)):
            yield dict(zip(names, combo))

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "axes": [{"field": p, "values": list(v)} for p, v in self.axes],
            "reduce": list(self.reduce),
            "steady_window": self.steady_window,
            "steady_tol": self.steady_tol,
            "max_runs": self.max_runs,
            "workers": self.workers,
        }


def parse_sweep_config(text: str, source: str = "<sweep>") -> SweepConfig:
    d = _load_json(text, source)
    if not isinstance(d, dict):
        raise ConfigError(f"{source}: sweep config must be a JSON object")
    allowed = {"base", "axes", "reduce", "steady_window", "steady_tol", "max_runs", "workers"}
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise _fail(source, text, unknown[0], f"unknown field; expected one of {sorted(allowed)}")
    if "base" not in d:
        raise ConfigError(f"{source}: missing field 'base'")
    base = RunConfig.from_dict(d["base"], source, text)
    axes = []
    for ax in d.get("axes", []):
        if not isinstance(ax, dict) or set(ax) != {"field", "values"}:
            raise _fail(source, text, "axes", "each axis needs exactly 'field' and 'values'")
        try:
            with_point(base, {ax["field"]: ax["values"][0]} if ax["values"] else {})
        except ConfigError as e:
            raise _fail(source, text, "axes", f"axis {ax['field']!r}: {e}") from None
        axes.append((ax["field"], tuple(ax["values"])))
    kwargs = {k: d[k] for k in ("steady_window", "steady_tol", "max_runs", "workers") if k in d}
    if "reduce" in d:
        kwargs["reduce"] = tuple(d["reduce"])
    try:
        return SweepConfig(base, tuple(axes), **kwargs)
    except (ValueError, TypeError) as e:
        key = "axes" if "ax" in str(e) or "grid" in str(e) else "reduce"
        raise _fail(source, text, key, str(e)) from None


def with_point(base: RunConfig, point: dict) -> RunConfig:
    d = base.to_dict()
    for path, value in point.items():
        head, _, rest = path.partition(".")
        if head not in d:
            raise ConfigError(f"unknown field path {path!r}")
        if rest:
            if not isinstance(d[head], dict):
                raise ConfigError(f"field {head!r} has no sub-field {rest!r}")
            d[head] = {**d[head], rest: value}
        else:
            d[head] = value
    return RunConfig.from_dict(d, "<sweep point>")


def steady_flag(traj, window: float, tol: float) -> bool:
    """``max |d/dtau|`` of the sampled state over the trailing window below ``tol``."""
    if getattr(traj, "model", None) == "bloch":
        return steady_state(traj, min(window, traj.taus[-1]), tol)[1]
    taus = traj.taus
    keep = taus >= taus[-1] - window - 1e-12
    t, r = taus[keep], traj.density_matrices()[keep]
    if len(t) < 2:
        return False
    rate = np.abs(np.diff(r, axis=0)) / np.diff(t)[:, None, None]
    return bool(rate.max() < tol)


def _sweep_point(args):
    sweep, point = args
    row = dict(point)
    try:
        cfg = with_point(sweep.base, point)
        traj = simulate(cfg)
        final = trajectory_rows(traj, with_post=True, last_only=True)[-1]
        row.update({m: final[m] for m in sweep.reduce})
        row["steady"] = steady_flag(traj, sweep.steady_window, sweep.steady_tol)
        row["error"] = ""
    except (ConfigError, *NUMERIC_ERRORS) as e:
        row.update(dict.fromkeys(sweep.reduce))
        row["steady"] = None
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def sweep(cfg: SweepConfig) -> tuple[list[str], list[dict]]:
    points = list(cfg.grid())
    jobs = [(cfg, p) for p in points]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    columns = [p for p, _ in cfg.axes] + list(cfg.reduce) + ["steady", "error"]
    return columns, rows


# --------------------------------------------------------------------------
# Comparison
# --------------------------------------------------------------------------


@dataclass
class Comparison:
    taus: np.ndarray
    diffs: dict  # metric -> per-tau absolute difference

    def max_diff(self, metric: str, tau_min: float = -math.inf) -> tuple[float, float]:
        """``(max |diff|, tau at max)`` over ``tau >= tau_min``."""
        keep = self.taus >= tau_min
        if not keep.any():
            raise ValueError(f"no samples with tau >= {tau_min}")
        d = self.diffs[metric][keep]
        i = int(np.argmax(d))
        return float(d[i]), float(self.taus[keep][i])


def compare_rows(rows_a: list[dict], rows_b: list[dict], metrics=STATE_COLUMNS + METRIC_COLUMNS) -> Comparison:
    ta = np.array([r["tau"] for r in rows_a])
    tb = np.array([r["tau"] for r in rows_b])
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=0, atol=1e-9):
        raise GridMismatchError(
            f"tau grids differ ({len(ta)} vs {len(tb)} samples); use the same tau_end, dtau and sample_stride"
        )
    diffs = {m: np.abs(np.array([r[m] for r in rows_a]) - np.array([r[m] for r in rows_b])) for m in metrics}
    return Comparison(ta, diffs)


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _overrides(cfg: RunConfig, args) -> RunConfig:
    kw = {}
    if args.dtau is not None:
        kw["dtau"] = args.dtau
    if args.tau_end is not None:
        kw["tau_end"] = args.tau_end
    return replace(cfg, **kw) if kw else cfg


def _emit(text: str, out: str | None, filename: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / filename).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dicke-detuning", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", metavar="DIR", help="write files here instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--dtau", type=float)
        sp.add_argument("--tau-end", type=float)

    r = sub.add_parser("run", help="integrate one configuration")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH")
    src.add_argument("--preset", metavar="NAME")
    common(r)

    s = sub.add_parser("sweep", help="grid of runs, one summary row per point")
    s.add_argument("--config", metavar="PATH", required=True)
    s.add_argument("--workers", type=int, help="process pool size (overrides config)")
    common(s)

    c = sub.add_parser("compare", help="difference report between two runs")
    c.add_argument("a", help="preset name or config path")
    c.add_argument("b", help="preset name or config path")
    c.add_argument("--metric", default="concurrence_clamped",
                   choices=STATE_COLUMNS + METRIC_COLUMNS)
    c.add_argument("--tau-min", type=float, default=-math.inf,
                   help="ignore samples before this tau in the threshold test")
    c.add_argument("--threshold", type=float, help="exit 3 when max |diff| of --metric exceeds this")
    common(c)

    pr = sub.add_parser("presets", help="list the preset catalog")
    pr.add_argument("--format", choices=("text", "json"), default="text")
    return p


def _cmd_run(args) -> int:
    name, cfg = resolve(args.preset) if args.preset else resolve(args.config)
    cfg = _overrides(cfg, args)
    columns, rows = run(cfg)
    _emit(render(cfg, columns, rows, args.format), args.out, f"{name}.{args.format}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    cfg = parse_sweep_config(path.read_text(), str(path))
    cfg = replace(cfg, base=_overrides(cfg.base, args))
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    columns, rows = sweep(cfg)
    if args.format == "csv":
        text = format_csv(rows, columns)
    else:
        text = json.dumps({"sweep": cfg.to_dict(), "columns": columns, "rows": rows}, indent=1) + "\n"
    _emit(text, args.out, f"{path.stem}.{args.format}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    _, cfg_a = resolve(args.a)
    _, cfg_b = resolve(args.b)
    _, rows_a = run(_overrides(cfg_a, args))
    _, rows_b = run(_overrides(cfg_b, args))
    cmp = compare_rows(rows_a, rows_b)
    summary = []
    for m in cmp.diffs:
        d, t = cmp.max_diff(m, args.tau_min)
        summary.append({"metric": m, "max_abs_diff": d, "tau_at_max": t})
    if args.format == "csv":
        text = format_csv(summary, ["metric", "max_abs_diff", "tau_at_max"])
        per_tau = format_csv(
            [{"tau": t, **{m: cmp.diffs[m][i] for m in cmp.diffs}} for i, t in enumerate(cmp.taus)],
            ["tau", *cmp.diffs],
        )
    else:
        text = json.dumps({"a": args.a, "b": args.b, "summary": summary}, indent=1) + "\n"
        per_tau = json.dumps({"tau": cmp.taus.tolist(), **{m: v.tolist() for m, v in cmp.diffs.items()}}) + "\n"
    _emit(text, args.out, f"compare.{args.format}")
    if args.out is not None:
        _emit(per_tau, args.out, f"compare_per_tau.{args.format}")
    if args.threshold is not None:
        worst, tau = cmp.max_diff(args.metric, args.tau_min)
        if worst > args.threshold:
            print(f"{args.metric}: max |diff| {worst:.3e} at tau={tau:.6g} exceeds {args.threshold:g}",
                  file=sys.stderr)
            return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.format == "json":
        doc = {n: {"description": p.description, "config": p.config.to_dict()} for n, p in PRESETS.items()}
        sys.stdout.write(json.dumps(doc, indent=1) + "\n")
    else:
        width = max(map(len, PRESETS))
        for n, p in PRESETS.items():
            print(f"{n:<{width}}  {p.description}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "compare": _cmd_compare, "presets": _cmd_presets}[args.verb]
    try:
        return handler(args)
    except (ConfigError, GridMismatchError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as e:
        print(f"numeric failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
