"""TOML run configurations.

A configuration has one table per module.  Unknown keys are rejected with the
dotted path of the offending entry, and every value is resolved to a frozen
dataclass so a run can be echoed in full and repeated.

Example::

    scenario = "single-steady"

    [dot]
    gamma21 = 0.1
    gamma10 = 1.0

    [pump]
    M = 1000

    [modes]
    g = 1.0

    [sweep]
    R_start = 0.0
    R_stop = 1.0
    R_num = 201
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError, DataFormatError, QdsldError
from .model import DotParams, GaussianProfile, ModeSet, PumpParams, SystemParams, WaveguideParams

SCENARIOS = ("single-steady", "threshold", "multi-steady", "sweep", "spectrum", "passive", "fit")
SOLVERS = ("analytic", "integrate", "newton", "order-exact", "order-approx")

# sections each scenario cannot run without
REQUIRED = {
    "single-steady": ("dot", "pump", "modes"),
    "threshold": ("dot", "pump", "threshold"),
    "multi-steady": ("dot", "pump", "modes"),
    "sweep": ("dot", "pump", "modes", "sweep"),
    "spectrum": ("dot", "pump", "modes", "spectrum"),
    "passive": ("passive", "spectrum"),
    "fit": ("fit",),
}


@dataclass(frozen=True)
class ModeSpec:
    """Mode set description.

    Three forms: a single mode (``g``, ``delta``); an explicit list
    (``detunings`` with ``couplings`` or a ``profile``); an equidistant grid
    (``n``, ``spacing``, optional ``first``) with a Gaussian ``profile`` or a
    constant ``g``.
    """

    g: float | None = None
    delta: float = 0.0
    n: int | None = None
    spacing: float = 1.0
    first: float | None = None
    detunings: tuple[float, ...] | None = None
    couplings: tuple[float, ...] | None = None
    profile: GaussianProfile | None = None

    def build(self) -> ModeSet:
        if self.detunings is not None:
            if self.couplings is not None:
                return ModeSet(self.detunings, self.couplings)
            if self.profile is None:
                raise ConfigError("modes.detunings needs modes.couplings or modes.profile")
            return ModeSet.gaussian(self.detunings, self.profile)
        if self.n is not None:
            if self.n < 1:
                raise ConfigError("modes.n must be positive")
            if self.profile is not None:
                return ModeSet.uniform_grid(self.n, self.spacing, self.profile, self.first)
            if self.g is None:
                raise ConfigError("modes.n needs modes.profile or modes.g")
            start = -(self.n // 2) * self.spacing if self.first is None else self.first
            d = start + self.spacing * np.arange(self.n)
            return ModeSet(tuple(d), (self.g,) * self.n)
        if self.g is None:
            raise ConfigError("modes needs one of: g, n, detunings")
        return ModeSet.single(self.g, self.delta)


@dataclass(frozen=True)
class SweepSpec:
    """Pump-rate grid; ``R_values`` overrides the linear ``R_start..R_stop`` grid."""

    R_start: float = 0.0
    R_stop: float = 1.0
    R_num: int = 101
    R_values: tuple[float, ...] | None = None
    layout: str = "totals"

    def grid(self) -> np.ndarray:
        if self.R_values is not None:
            R = np.asarray(self.R_values, dtype=float)
            if R.size == 0:
                raise ConfigError("sweep.R_values must be non-empty")
            return R
        if self.R_num < 1:
            raise ConfigError("sweep.R_num must be positive")
        if self.R_stop < self.R_start:
            raise ConfigError("sweep.R_stop must not be below sweep.R_start")
        return np.linspace(self.R_start, self.R_stop, self.R_num)


@dataclass(frozen=True)
class ThresholdSpec:
    """Cases are the Cartesian product of ``delta`` and ``g``."""

    delta: tuple[float, ...] = (0.0,)
    g: tuple[float, ...] = (1.0,)
    R_stop: float = 1.0
    R_num: int = 201


@dataclass(frozen=True)
class SolverSpec:
    methods: tuple[str, ...] = ("order-exact",)
    tol: float = 1e-10
    coupling_fraction: float = 2.0 / 3.0


@dataclass(frozen=True)
class SpectrumSpec:
    omega_start: float = -10.0
    omega_stop: float = 10.0
    omega_num: int = 401
    units: str = "arbitrary"
    linewidth_model: str = "coupling"
    continuum: bool = False

    def grid(self) -> np.ndarray:
        if self.omega_num < 2:
            raise ConfigError("spectrum.omega_num must be at least 2")
        if not self.omega_stop > self.omega_start:
            raise ConfigError("spectrum.omega_stop must exceed spectrum.omega_start")
        return np.linspace(self.omega_start, self.omega_stop, self.omega_num)


@dataclass(frozen=True)
class PassiveSpec:
    gamma: float = 1.0
    n: float = 1.0
    mode_frequencies: tuple[float, ...] = (0.0,)
    unitarity_draws: int = 100
    seed: int = 0


@dataclass(frozen=True)
class SyntheticSpec:
    """Noise-free synthetic data; ``kind`` is ``"model"`` or ``"gaussian"``."""

    kind: str = "model"
    amplitude: float = 2.467e-4
    center: float = 1.506e15
    width: float = 7.962e12
    scale: float = 1.0
    points: int = 200
    span: float = 5.0


@dataclass(frozen=True)
class FitSpec:
    data: str | None = None
    synthetic: SyntheticSpec | None = None
    fits: tuple[str, ...] = ("gaussian", "model")
    branch: str = "weak"
    n_modes: int | None = None


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    dots: tuple[DotParams, ...] = ()
    weights: tuple[float, ...] | None = None
    pump: PumpParams | None = None
    wg: WaveguideParams = field(default_factory=WaveguideParams)
    gamma_ref: float = 1.0
    modes: ModeSpec | None = None
    sweep: SweepSpec | None = None
    threshold: ThresholdSpec | None = None
    solver: SolverSpec = field(default_factory=SolverSpec)
    spectrum: SpectrumSpec | None = None
    passive: PassiveSpec | None = None
    fit: FitSpec | None = None
    base_dir: str = "."

    def system(self, R: float | None = None) -> SystemParams:
        pump = self.pump if R is None else PumpParams(R, self.pump.M)
        return SystemParams(self.modes.build(), self.dots, pump, self.wg, self.gamma_ref, self.weights)

    def echo(self) -> dict:
        """Fully resolved parameters as plain JSON types."""
        out = _plain(dataclasses.asdict(self))
        out.pop("base_dir")
        return out


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------- parsing

def _coerce(value, tp: str, where: str):
    if value is None:
        return None
    base = tp.replace(" | None", "").strip()
    try:
        if base == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if base == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return value
        if base == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if base == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if base.startswith("tuple[float"):
            if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float))
                                                  for v in value):
                raise TypeError
            return tuple(float(v) for v in value)
        if base.startswith("tuple[str"):
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise TypeError
            return tuple(value)
    except TypeError:
        raise ConfigError(f"{where}: expected {base}, got {type(value).__name__} {value!r}") from None
    raise ConfigError(f"{where}: unsupported field type {tp}")  # pragma: no cover


def _section(cls, table, where: str, skip=()):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    fields = {f.name: f for f in dataclasses.fields(cls) if f.name not in skip}
    unknown = sorted(set(table) - set(fields) - set(skip))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(where + '.' + k for k in unknown)}")
    kwargs = {k: _coerce(v, str(fields[k].type), f"{where}.{k}") for k, v in table.items() if k in fields}
    try:
        return cls(**kwargs)
    except QdsldError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _profile(table, where):
    return _section(GaussianProfile, table, where)


def _dots(raw):
    if isinstance(raw, dict):
        return (_section(DotParams, raw, "dot"),), None
    if isinstance(raw, list) and raw:
        dots, weights = [], []
        for k, t in enumerate(raw):
            where = f"dot[{k}]"
            if "weight" not in t:
                raise ConfigError(f"{where}.weight is required for several dot classes")
            weights.append(_coerce(t["weight"], "float", f"{where}.weight"))
            dots.append(_section(DotParams, t, where, skip=("weight",)))
        return tuple(dots), tuple(weights)
    raise ConfigError("dot: expected a table or a non-empty array of tables")


def _fit(raw):
    syn = raw.get("synthetic")
    spec = _section(FitSpec, {k: v for k, v in raw.items() if k != "synthetic"}, "fit", skip=("synthetic",))
    if syn is not None:
        syn = _section(SyntheticSpec, syn, "fit.synthetic")
        if syn.kind not in ("model", "gaussian"):
            raise ConfigError("fit.synthetic.kind must be 'model' or 'gaussian'")
        spec = dataclasses.replace(spec, synthetic=syn)
    if (spec.data is None) == (spec.synthetic is None):
        raise ConfigError("fit: give exactly one of fit.data or [fit.synthetic]")
    bad = sorted(set(spec.fits) - {"gaussian", "model"})
    if bad or not spec.fits:
        raise ConfigError(f"fit.fits: entries must be 'gaussian' or 'model', got {list(spec.fits)}")
    if spec.branch not in ("weak", "strong"):
        raise ConfigError("fit.branch must be 'weak' or 'strong'")
    return spec


def parse_config(doc: dict, scenario: str | None = None, base_dir: str = ".") -> RunConfig:
    known = {"scenario", "gamma_ref", "dot", "pump", "waveguide", "modes", "sweep", "threshold",
             "solver", "spectrum", "passive", "fit"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    file_scenario = doc.get("scenario")
    if file_scenario is not None and scenario is not None and file_scenario != scenario:
        raise ConfigError(f"scenario: config is for {file_scenario!r}, command line asked for {scenario!r}")
    scenario = scenario or file_scenario
    if scenario is None:
        raise ConfigError("missing required field(s): scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario: {scenario!r} is not one of {', '.join(SCENARIOS)}")
    missing = [s for s in REQUIRED[scenario] if s not in doc]
    if missing:
        raise ConfigError(f"missing required field(s) for {scenario}: {', '.join(missing)}")

    kw: dict[str, Any] = {"scenario": scenario, "base_dir": base_dir}
    if "gamma_ref" in doc:
        kw["gamma_ref"] = _coerce(doc["gamma_ref"], "float", "gamma_ref")
    if "dot" in doc:
        kw["dots"], kw["weights"] = _dots(doc["dot"])
    if "pump" in doc:
        p = dict(doc["pump"]) if isinstance(doc["pump"], dict) else doc["pump"]
        if isinstance(p, dict):
            p.setdefault("R", 0.0)
        kw["pump"] = _section(PumpParams, p, "pump")
    if "waveguide" in doc:
        kw["wg"] = _section(WaveguideParams, doc["waveguide"], "waveguide")
    if "modes" in doc:
        m = doc["modes"]
        prof = m.get("profile") if isinstance(m, dict) else None
        spec = _section(ModeSpec, {k: v for k, v in m.items() if k != "profile"}, "modes", skip=("profile",))
        if prof is not None:
            spec = dataclasses.replace(spec, profile=_profile(prof, "modes.profile"))
        spec.build()  # validate now, not halfway through a run
        kw["modes"] = spec
    if "sweep" in doc:
        kw["sweep"] = _section(SweepSpec, doc["sweep"], "sweep")
        kw["sweep"].grid()
        if kw["sweep"].layout not in ("totals", "profiles"):
            raise ConfigError("sweep.layout must be 'totals' or 'profiles'")
    if "threshold" in doc:
        kw["threshold"] = _section(ThresholdSpec, doc["threshold"], "threshold")
        if not kw["threshold"].delta or not kw["threshold"].g:
            raise ConfigError("threshold.delta and threshold.g must be non-empty")
    if "solver" in doc:
        kw["solver"] = _section(SolverSpec, doc["solver"], "solver")
        bad = sorted(set(kw["solver"].methods) - set(SOLVERS))
        if bad or not kw["solver"].methods:
            raise ConfigError(f"solver.methods: unknown or empty {bad}; choose from {', '.join(SOLVERS)}")
    if "spectrum" in doc:
        kw["spectrum"] = _section(SpectrumSpec, doc["spectrum"], "spectrum")
        kw["spectrum"].grid()
        if kw["spectrum"].units not in ("arbitrary", "physical"):
            raise ConfigError("spectrum.units must be 'arbitrary' or 'physical'")
        if kw["spectrum"].linewidth_model not in ("coupling", "rate"):
            raise ConfigError("spectrum.linewidth_model must be 'coupling' or 'rate'")
    if "passive" in doc:
        kw["passive"] = _section(PassiveSpec, doc["passive"], "passive")
    if "fit" in doc:
        kw["fit"] = _fit(doc["fit"])
    return RunConfig(**kw)


def load_config(path, scenario: str | None = None) -> RunConfig:
    """Read and validate a TOML configuration file."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc, scenario, str(path.parent))


def bundled_config(name: str) -> Path:
    """Path of a configuration shipped with the package (``fig4``, ``fig8`` ...)."""
    p = Path(__file__).parent / "configs" / f"{name.removesuffix('.toml')}.toml"
    if not p.exists():
        raise FileNotFoundError(p)
    return p
