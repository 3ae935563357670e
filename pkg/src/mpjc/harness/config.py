"""Experiment configuration: strict JSON schema, parsing and sweep axes.

A config is a plain JSON object. Unknown keys anywhere raise
:class:`ConfigError`, so typos never fall back silently to defaults.
"""
from __future__ import annotations

import copy
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..dynamics import OBSERVABLES, TimeGrid
from ..errors import ConfigError
from ..model import BathParams, ModelParams, SPIN_DEPHASING_CONVENTIONS, exact_factorial
from ..states import DEFAULT_EPS, MODE_KINDS, ModePrep, SpinPrep

TOP_KEYS = {
    "model", "bath", "spin", "mode1", "mode2", "modes", "cutoffs", "escalate", "grid",
    "observables", "sweep", "eps", "output", "spin_dephasing", "noon_order", "label",
}
MODEL_KEYS = {
    "omega0", "omega1", "omega2", "omega", "detuning", "g", "g1", "g2", "m",
    "chi", "chi1", "chi2", "gz", "gz1", "gz2",
}
BATH_KEYS = {"n_th", "rb", "db", "rq", "dq", "rate"}
SPIN_KEYS = {"kind", "p_e", "phi"}
MODE_KEYS = {"kind", "n", "alpha", "r", "theta", "nbar"}
GRID_KEYS = {"t0", "t1", "n_points", "units"}
GRID_UNITS = ("gt", "t", "rabi")
RANGE_KEYS = {"start", "stop", "step"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment: physics, initial state, grid and outputs."""

    model: ModelParams
    spin: SpinPrep
    mode1: ModePrep
    mode2: ModePrep | None
    grid: TimeGrid
    bath: BathParams | None = None
    observables: tuple[str, ...] = ("L", "C")
    sweep: dict = field(default_factory=dict)
    cutoffs: tuple[int, ...] | None = None
    escalate: bool = True
    eps: float = DEFAULT_EPS
    output: str | None = None
    spin_dephasing: str = "projector"
    noon_order: int | None = None
    label: str = ""
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n_modes(self) -> int:
        return 1 if self.mode2 is None else 2

    @property
    def open_system(self) -> bool:
        return self.bath is not None

    def with_raw(self, raw: dict) -> "ExperimentConfig":
        return config_from_dict(raw)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object, got {type(d).__name__}")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _num(v, where, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where} must be an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where} must be finite")
    return int(v) if integer else float(v)


def parse_model(d: dict) -> ModelParams:
    _check_keys(d, MODEL_KEYS, "model")
    get = lambda k, default=None: _num(d[k], f"model.{k}") if k in d else default  # noqa: E731
    m = _num(d.get("m", 1), "model.m", integer=True)
    omega = get("omega", 1.0)
    g1 = get("g1", get("g"))
    g2 = get("g2", get("g"))
    if g1 is None or g2 is None:
        raise ConfigError("model needs g1 and g2 (or g for both)")
    omega1, omega2 = get("omega1", omega), get("omega2", omega)
    if "omega0" in d and "detuning" in d:
        raise ConfigError("give either model.omega0 or model.detuning, not both")
    omega0 = get("omega0", m * omega + get("detuning", 0.0))
    chi, gz = get("chi", 0.0), get("gz", 0.0)
    try:
        return ModelParams(omega0, omega1, omega2, g1, g2, m, get("chi1", chi), get("chi2", chi),
                           get("gz1", gz), get("gz2", gz))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_bath(d) -> BathParams | None:
    if d is None:
        return None
    _check_keys(d, BATH_KEYS, "bath")
    rate = _num(d["rate"], "bath.rate") if "rate" in d else 0.0
    vals = {k: _num(d[k], f"bath.{k}") if k in d else (rate if k != "n_th" else 0.0)
            for k in ("n_th", "rb", "db", "rq", "dq")}
    try:
        return BathParams(**vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_spin(d: dict) -> SpinPrep:
    _check_keys(d, SPIN_KEYS, "spin")
    kind = d.get("kind", "thermal")
    if kind not in ("thermal", "superposition"):
        raise ConfigError(f"spin.kind must be thermal or superposition, got {kind!r}")
    try:
        if "phi" in d:
            if kind != "superposition" or "p_e" in d:
                raise ConfigError("spin.phi only applies to a superposition without p_e")
            return SpinPrep.superposition(_num(d["phi"], "spin.phi"))
        return SpinPrep.from_pe(kind, _num(d.get("p_e", 0.0), "spin.p_e"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_mode(d, where) -> ModePrep:
    _check_keys(d, MODE_KEYS, where)
    kind = d.get("kind", "fock")
    if kind not in MODE_KINDS:
        raise ConfigError(f"{where}.kind must be one of {MODE_KINDS}, got {kind!r}")
    try:
        if "nbar" in d:
            extra = set(d) - {"kind", "nbar", "theta"}
            if extra:
                raise ConfigError(f"{where}: nbar cannot be combined with {sorted(extra)}")
            prep = ModePrep.from_mean(kind, _num(d["nbar"], f"{where}.nbar"))
            if "theta" in d:
                prep = ModePrep(kind, {**prep.params, "theta": _num(d["theta"], f"{where}.theta")})
            return prep
        params = {}
        for k in ("n", "r", "theta"):
            if k in d:
                params[k] = _num(d[k], f"{where}.{k}", integer=(k == "n"))
        if "alpha" in d:
            a = d["alpha"]
            if isinstance(a, list):
                if len(a) != 2:
                    raise ConfigError(f"{where}.alpha as a list must be [re, im]")
                params["alpha"] = complex(_num(a[0], where), _num(a[1], where))
            else:
                params["alpha"] = _num(a, f"{where}.alpha")
        return ModePrep(kind, params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_grid(d: dict, model: ModelParams) -> TimeGrid:
    """Grid in physical time. ``units``: ``gt`` (times g_tilde), ``t`` or ``rabi``
    (multiples of the Rabi period ``2 pi / (sqrt(m!) g_tilde)``)."""
    _check_keys(d, GRID_KEYS, "grid")
    units = d.get("units", "gt")
    if units not in GRID_UNITS:
        raise ConfigError(f"grid.units must be one of {GRID_UNITS}, got {units!r}")
    t0 = _num(d.get("t0", 0.0), "grid.t0")
    t1 = _num(d.get("t1", 10.0), "grid.t1")
    n = _num(d.get("n_points", 600), "grid.n_points", integer=True)
    gt = model.g_tilde
    if units == "gt":
        if gt == 0:
            raise ConfigError("grid in g_tilde units needs a nonzero coupling")
        scale = 1 / gt
    elif units == "rabi":
        if gt == 0:
            raise ConfigError("grid in Rabi periods needs a nonzero coupling")
        scale = 2 * math.pi / (math.sqrt(exact_factorial(model.m)) * gt)
    else:
        scale = 1.0
    try:
        return TimeGrid(t0 * scale, t1 * scale, n)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def expand_values(spec, where) -> list:
    """Explicit list or ``{"start", "stop", "step"}`` range (stop inclusive)."""
    if isinstance(spec, list):
        if not spec:
            raise ConfigError(f"{where} must not be empty")
        return list(spec)
    _check_keys(spec, RANGE_KEYS, where)
    start, stop, step = (_num(spec[k], f"{where}.{k}") for k in ("start", "stop", "step"))
    if step <= 0 or stop < start:
        raise ConfigError(f"{where}: need step > 0 and stop >= start")
    n = int(round((stop - start) / step))
    if not math.isclose(start + n * step, stop, rel_tol=0, abs_tol=1e-9 * max(1.0, abs(stop))):
        raise ConfigError(f"{where}: (stop - start) is not a multiple of step")
    # rounding keeps values like 0.43 exact in the output table
    digits = max(0, -int(math.floor(math.log10(step))) + 3)
    return [round(start + k * step, digits) for k in range(n + 1)]


def set_path(raw: dict, path: str, value):
    """Set ``a.b.c`` in a nested dict; ``None`` deletes the key."""
    keys = path.split(".")
    d = raw
    for k in keys[:-1]:
        if d.get(k) is None:
            d[k] = {}
        d = d[k]
    if value is None:
        d.pop(keys[-1], None)
    else:
        d[keys[-1]] = value


def get_path(raw: dict, path: str, default=None):
    d = raw
    for k in path.split("."):
        if not isinstance(d, dict) or k not in d:
            return default
        d = d[k]
    return d


def config_from_dict(raw: dict) -> ExperimentConfig:
    _check_keys(raw, TOP_KEYS, "config")
    raw = copy.deepcopy(raw)
    if "model" not in raw:
        raise ConfigError("config needs a model section")
    model = parse_model(raw["model"])
    modes = _num(raw.get("modes", 2), "modes", integer=True)
    if modes not in (1, 2):
        raise ConfigError(f"modes must be 1 or 2, got {modes}")
    spin = parse_spin(raw.get("spin", {}))
    mode1 = parse_mode(raw.get("mode1", {"kind": "fock", "n": 0}), "mode1")
    mode2 = parse_mode(raw.get("mode2", {"kind": "fock", "n": 0}), "mode2") if modes == 2 else None
    if modes == 1:
        if "mode2" in raw:
            raise ConfigError("mode2 given for a single-mode config")
        if model.g2 != 0 or model.gz2 != 0 or model.chi2 != 0:
            raise ConfigError("single-mode config must leave mode-2 couplings at zero")
        if model.chi1 != 0:
            raise ConfigError("the single-mode model has no Kerr term; chi1 must be zero")
    grid = parse_grid(raw.get("grid", {}), model)
    obs = raw.get("observables", ["L", "C"])
    if not isinstance(obs, list) or not set(obs) <= set(OBSERVABLES):
        raise ConfigError(f"observables must be a subset of {OBSERVABLES}, got {obs!r}")
    cut = raw.get("cutoffs", "auto")
    if cut == "auto":
        cutoffs = None
    else:
        if not isinstance(cut, list) or len(cut) != modes:
            raise ConfigError(f"cutoffs must be 'auto' or a list of {modes} integers")
        cutoffs = tuple(_num(c, "cutoffs", integer=True) for c in cut)
        if any(c < model.m + 1 for c in cutoffs):
            raise ConfigError(f"cutoffs must be >= m+1 = {model.m + 1}")
    escalate = raw.get("escalate", cutoffs is None)
    if not isinstance(escalate, bool):
        raise ConfigError("escalate must be true or false")
    eps = _num(raw.get("eps", DEFAULT_EPS), "eps")
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    deph = raw.get("spin_dephasing", "projector")
    if deph not in SPIN_DEPHASING_CONVENTIONS:
        raise ConfigError(f"spin_dephasing must be one of {SPIN_DEPHASING_CONVENTIONS}")
    sweep = raw.get("sweep", {})
    _check_keys(sweep, set(sweep), "sweep")
    sweep = {name: expand_values(spec, f"sweep.{name}") for name, spec in sweep.items()}
    for name in sweep:
        _validate_axis(raw, name)
    noon = raw.get("noon_order")
    noon = model.m if noon is None else _num(noon, "noon_order", integer=True)
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a path string")
    return ExperimentConfig(
        model=model, spin=spin, mode1=mode1, mode2=mode2, grid=grid,
        bath=parse_bath(raw.get("bath")), observables=tuple(obs), sweep=sweep, cutoffs=cutoffs,
        escalate=escalate, eps=eps, output=output, spin_dephasing=deph, noon_order=noon,
        label=str(raw.get("label", "")), raw=raw,
    )


def _validate_axis(raw: dict, name: str):
    """Sweep axes are dotted config paths whose leaf is a known parameter name."""
    keys = name.split(".")
    allowed = {"model": MODEL_KEYS, "bath": BATH_KEYS, "spin": SPIN_KEYS, "mode1": MODE_KEYS,
               "mode2": MODE_KEYS, "grid": GRID_KEYS}
    if len(keys) != 2 or keys[0] not in allowed or keys[1] not in allowed[keys[0]]:
        raise ConfigError(f"sweep axis {name!r} does not name a parameter (use e.g. 'spin.p_e')")


def sweep_points(cfg: ExperimentConfig) -> list[tuple[dict, dict]]:
    """``(axis values, raw config)`` for every point of the Cartesian sweep, in order."""
    names = list(cfg.sweep)
    out = []
    for combo in itertools.product(*(cfg.sweep[n] for n in names)):
        raw = copy.deepcopy(cfg.raw)
        raw.pop("sweep", None)
        for n, v in zip(names, combo):
            set_path(raw, n, v)
        out.append((dict(zip(names, combo)), raw))
    return out


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def override(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **changes)


def as_jsonable(obj):
    """Parameters in a stable, JSON-serialisable form for CSV metadata."""
    if isinstance(obj, dict):
        return {str(k): as_jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [as_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
