"""TOML run configuration: parsing, validation and environment overrides.

Frequencies may be written either as angular frequencies (``omega_*``, rad
per unit time) or as ordinary frequencies (``f_*``, cycles per unit time);
the latter is converted with omega = 2 pi f. Every validation failure is a
:class:`ConfigurationError` naming the offending field.
"""

from __future__ import annotations

import hashlib
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controllers import ControllerKind, controller_from_dict
from .errors import ConfigurationError, DomainError
from .ramsey import CycleSchedule, build_schedule, duty_schedule
from .spectra import TWO_PI, PowerSpectrum, Spur, spur_comb, with_spur_fraction

ENV_PREFIX = "LLOSIM_"
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class OutputOptions:
    directory: Path = Path("out")
    format: str = "csv"
    precision: int = 10
    traces: int = 0


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    digest: str
    spectrum: PowerSpectrum
    schedule_section: dict
    controllers: tuple[ControllerKind, ...]
    ensemble_size: int
    seed: int
    grid_points: int
    output: OutputOptions
    workers: int = 1
    sections: dict = field(default_factory=dict)

    def schedule(self, **overrides) -> CycleSchedule:
        return schedule_from(dict(self.schedule_section, **overrides))


def _num(section: dict, key: str, where: str, default=None, positive=False, allow_zero=False):
    if key not in section:
        if default is None:
            raise ConfigurationError(f"missing required field {where}.{key}", field=f"{where}.{key}")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"{where}.{key} must be a number", field=f"{where}.{key}")
    v = float(v)
    if positive and not (v > 0 or (allow_zero and v == 0)):
        raise ConfigurationError(f"{where}.{key} must be positive, got {v}", field=f"{where}.{key}")
    return v


def _omega(section: dict, name: str, where: str, default=None):
    """Read omega_<name> or f_<name> (converted to angular frequency)."""
    if f"omega_{name}" in section:
        return _num(section, f"omega_{name}", where, positive=True)
    if f"f_{name}" in section:
        return TWO_PI * _num(section, f"f_{name}", where, positive=True)
    if default is not None:
        return default
    raise ConfigurationError(f"missing {where}.omega_{name} (or f_{name})", field=f"{where}.omega_{name}")


def spectrum_from(section: dict) -> PowerSpectrum:
    where = "spectrum"
    exponent = _num(section, "exponent", where)
    amplitude = _num(section, "amplitude", where, default=1.0)
    lo = _omega(section, "low", where)
    hi = _omega(section, "cut", where)
    ref = _omega(section, "ref", where, default=lo)
    spurs: tuple[Spur, ...] = ()
    for i, s in enumerate(section.get("spur", [])):
        spurs += (Spur(_omega(s, "s", f"spectrum.spur[{i}]"), _num(s, "power", f"spectrum.spur[{i}]", positive=True)),)
    try:
        spectrum = PowerSpectrum(exponent, amplitude, lo, hi, spurs, omega_ref=ref)
    except ValueError as exc:
        raise ConfigurationError(str(exc), field=where) from exc
    comb = section.get("comb")
    if comb:
        cw = "spectrum.comb"
        start = _omega(comb, "start", cw)
        step = _omega(comb, "step", cw)
        count = int(_num(comb, "count", cw, default=10.0))
        if "fraction" in comb:
            frac = _num(comb, "fraction", cw, positive=True, allow_zero=True)
            if frac > 0:
                spectrum = with_spur_fraction(spectrum, start, step, count, frac)
        else:
            power = _num(comb, "power", cw, positive=True)
            spectrum = PowerSpectrum(
                spectrum.exponent,
                spectrum.amplitude,
                spectrum.omega_low,
                spectrum.omega_cut,
                spectrum.spurs + spur_comb(start, step, count, power),
                spectrum.omega_ref,
            )
    return spectrum


def schedule_from(section: dict) -> CycleSchedule:
    where = "schedule"
    n_cycles = int(_num(section, "n_cycles", where, positive=True))
    if "ramsey" in section:
        durations = section["ramsey"]
        if not isinstance(durations, list) or not durations:
            raise ConfigurationError("schedule.ramsey must be a non-empty list", field="schedule.ramsey")
        dead = _num(section, "dead_time", where, default=0.0)
        return build_schedule(n_cycles, [float(d) for d in durations], dead)
    cycle_time = _num(section, "cycle_time", where, default=1.0, positive=True)
    d = _num(section, "duty_factor", where, default=1.0)
    n_windows = int(_num(section, "n_windows", where, default=1.0, positive=True))
    return duty_schedule(n_cycles, cycle_time, d, n_windows)


def _controllers_from(items) -> tuple[ControllerKind, ...]:
    if not isinstance(items, list) or not items:
        raise ConfigurationError("at least one [[controllers]] entry is required", field="controllers")
    out = []
    for c in items:
        if not isinstance(c, dict):
            raise ConfigurationError("controllers entries must be tables", field="controllers")
        out.append(controller_from_dict(c))
    return tuple(out)


def env_overrides(environ=None) -> dict:
    """Values of LLOSIM_SEED, LLOSIM_OUT, LLOSIM_WORKERS, LLOSIM_FORMAT, LLOSIM_CONFIG."""
    environ = os.environ if environ is None else environ
    out = {}
    for key in ("SEED", "OUT", "WORKERS", "FORMAT", "CONFIG"):
        v = environ.get(ENV_PREFIX + key)
        if v not in (None, ""):
            out[key.lower()] = v
    return out


def _int_override(value, name):
    try:
        v = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name} must be an integer, got {value!r}", field=name) from exc
    return v


def load_config(
    path: str | os.PathLike,
    seed=None,
    out=None,
    workers=None,
    fmt=None,
) -> RunConfig:
    """Read and validate a config file; explicit arguments win over the file."""
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc.strerror}", field="config") from exc
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"invalid TOML in {p}: {exc}", field="config") from exc
    digest = hashlib.sha256(data).hexdigest()

    if "spectrum" not in raw:
        raise ConfigurationError("missing [spectrum] section", field="spectrum")
    sched = raw.get("schedule", {})
    try:
        spectrum = spectrum_from(raw["spectrum"])
    except DomainError as exc:
        raise ConfigurationError(str(exc), field="spectrum") from exc
    if "schedule" in raw:
        try:
            schedule_from(sched)  # validate early
        except DomainError as exc:
            raise ConfigurationError(str(exc), field="schedule") from exc
    controllers = _controllers_from(raw.get("controllers", [{"kind": "free_run"}]))

    ens = raw.get("ensemble", {})
    size = int(_num(ens, "size", "ensemble", default=1000.0, positive=True))
    grid = int(_num(ens, "grid_points", "ensemble", default=2000.0, positive=True))
    if seed is None:
        if "seed" not in ens:
            raise ConfigurationError(
                "a master seed is required (ensemble.seed, --seed or LLOSIM_SEED)", field="ensemble.seed"
            )
        seed = ens["seed"]
    seed = _int_override(seed, "ensemble.seed")
    if seed < 0:
        raise ConfigurationError("seed must be non-negative", field="ensemble.seed")

    o = raw.get("output", {})
    fmt = fmt or o.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigurationError(f"output.format must be one of {list(FORMATS)}, got {fmt!r}", field="output.format")
    precision = int(_num(o, "precision", "output", default=10.0, positive=True))
    if precision > 17:
        raise ConfigurationError("output.precision must be <= 17", field="output.precision")
    output = OutputOptions(
        Path(out or o.get("directory", "out")),
        fmt,
        precision,
        int(_num(o, "traces", "output", default=0.0, positive=True, allow_zero=True)),
    )
    if workers is None:
        workers = os.cpu_count() or 1
    workers = _int_override(workers, "workers")
    if workers < 1:
        raise ConfigurationError("workers must be >= 1", field="workers")
    return RunConfig(
        raw=raw,
        digest=digest,
        spectrum=spectrum,
        schedule_section=sched,
        controllers=controllers,
        ensemble_size=size,
        seed=seed,
        grid_points=grid,
        output=output,
        workers=workers,
        sections={k: v for k, v in raw.items() if k in ("covariance", "accuracy", "sweep", "optimize")},
    )
