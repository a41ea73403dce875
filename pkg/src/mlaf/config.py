"""Run configuration: flat-key INI text, validated field by field.

Sections mirror the run structure::

    [grid]        n, L
    [model]       kind, nu, alpha
    [forcing]     enabled, shell_m, amplitude, seed
    [initial]     kind (taylor-green | random | zero), amplitude, seed
    [time]        t_end, dt (omit for CFL-derived), output_every, spinup (number | auto)
    [diagnostics] n_max, ladder_c_prefactor
    [paths]       outdir

Every key is echoed into the run report for provenance.  Validation errors
name the offending ``section.key``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .model import ModelKind

__all__ = ["RunConfig", "load_config", "config_from_dict", "DEFAULTS"]

DEFAULTS: dict = {
    "grid": {"n": "32", "L": "6.283185307179586"},
    "model": {"kind": "ml-alpha", "nu": "0.1", "alpha": "0.25"},
    "forcing": {"enabled": "true", "shell_m": "3", "amplitude": "0.25", "seed": "1"},
    "initial": {"kind": "taylor-green", "amplitude": "1.0", "seed": "1"},
    "time": {"t_end": "10.0", "output_every": "10", "spinup": "auto"},
    "diagnostics": {"n_max": "6", "ladder_c_prefactor": "5.0"},
    "paths": {"outdir": "runs/out"},
}


@dataclass
class RunConfig:
    n: int = 32
    L: float = 6.283185307179586
    kind: ModelKind = ModelKind.ML_ALPHA
    nu: float = 0.1
    alpha: float = 0.25
    forcing_enabled: bool = True
    shell_m: int = 3
    amplitude: float = 0.25
    seed: int = 1
    ic_kind: str = "taylor-green"
    ic_amplitude: float = 1.0
    ic_seed: int = 1
    t_end: float = 10.0
    dt: float | None = None
    output_every: int = 10
    spinup: float | None = None  # None means "auto": 5 large-eddy times
    n_max: int = 6
    ladder_c_prefactor: float = 5.0
    outdir: Path = field(default_factory=lambda: Path("runs/out"))

    def validate(self):
        def fail(key, why):
            raise ConfigurationError(f"{key}: {why}")

        if self.n % 2 != 0 or self.n < 8:
            fail("grid.n", f"must be even and >= 8, got {self.n}")
        if not self.L > 0:
            fail("grid.L", f"must be > 0, got {self.L}")
        if not self.nu > 0:
            fail("model.nu", f"must be > 0, got {self.nu}")
        if self.alpha < 0:
            fail("model.alpha", f"must be >= 0, got {self.alpha}")
        if self.forcing_enabled:
            if self.shell_m < 2:
                fail("forcing.shell_m", f"must be >= 2, got {self.shell_m}")
            if self.shell_m > self.n // 3 - 1:
                fail(
                    "forcing.shell_m",
                    f"shell {self.shell_m} does not fit below the dealias cut of n = {self.n}",
                )
            if not self.amplitude > 0:
                fail("forcing.amplitude", f"must be > 0, got {self.amplitude}")
        if self.ic_kind not in ("taylor-green", "random", "zero"):
            fail("initial.kind", f"must be taylor-green | random | zero, got {self.ic_kind!r}")
        if not self.t_end > 0:
            fail("time.t_end", f"must be > 0, got {self.t_end}")
        if self.dt is not None and not self.dt > 0:
            fail("time.dt", f"must be > 0 when given, got {self.dt}")
        if self.output_every < 1:
            fail("time.output_every", f"must be >= 1, got {self.output_every}")
        if self.spinup is not None and self.spinup < 0:
            fail("time.spinup", f"must be >= 0, got {self.spinup}")
        if self.n_max < 2:
            fail("diagnostics.n_max", f"must be >= 2, got {self.n_max}")
        if self.ladder_c_prefactor < 0:
            fail("diagnostics.ladder_c_prefactor", "must be >= 0")
        return self

    def echo(self) -> dict:
        """Flat section.key -> value mapping for the run report."""
        return {
            "grid.n": self.n,
            "grid.L": self.L,
            "model.kind": self.kind.value,
            "model.nu": self.nu,
            "model.alpha": self.alpha,
            "forcing.enabled": self.forcing_enabled,
            "forcing.shell_m": self.shell_m,
            "forcing.amplitude": self.amplitude,
            "forcing.seed": self.seed,
            "initial.kind": self.ic_kind,
            "initial.amplitude": self.ic_amplitude,
            "initial.seed": self.ic_seed,
            "time.t_end": self.t_end,
            "time.dt": self.dt,
            "time.output_every": self.output_every,
            "time.spinup": self.spinup,
            "diagnostics.n_max": self.n_max,
            "diagnostics.ladder_c_prefactor": self.ladder_c_prefactor,
            "paths.outdir": str(self.outdir),
        }


def _get(parser, section, key, conv, where):
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except (ValueError, KeyError):
        raise ConfigurationError(f"{where}: cannot parse {raw!r}") from None


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(raw)


def config_from_dict(sections: dict) -> RunConfig:
    """Build and validate a RunConfig from a {section: {key: str}} mapping."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive (grid.L)
    parser.read_dict(DEFAULTS)
    parser.read_dict(sections)

    def kind(raw):
        try:
            return ModelKind(raw.strip().lower())
        except ValueError:
            raise ConfigurationError(
                f"model.kind: must be ml-alpha | leray-alpha | nse, got {raw!r}"
            ) from None

    spinup_raw = parser.get("time", "spinup").strip().lower()
    spinup = None if spinup_raw == "auto" else _get(parser, "time", "spinup", float, "time.spinup")
    dt = None
    if parser.has_option("time", "dt") and parser.get("time", "dt").strip():
        dt = _get(parser, "time", "dt", float, "time.dt")

    cfg = RunConfig(
        n=_get(parser, "grid", "n", int, "grid.n"),
        L=_get(parser, "grid", "L", float, "grid.L"),
        kind=kind(parser.get("model", "kind")),
        nu=_get(parser, "model", "nu", float, "model.nu"),
        alpha=_get(parser, "model", "alpha", float, "model.alpha"),
        forcing_enabled=_get(parser, "forcing", "enabled", _bool, "forcing.enabled"),
        shell_m=_get(parser, "forcing", "shell_m", int, "forcing.shell_m"),
        amplitude=_get(parser, "forcing", "amplitude", float, "forcing.amplitude"),
        seed=_get(parser, "forcing", "seed", int, "forcing.seed"),
        ic_kind=parser.get("initial", "kind").strip().lower(),
        ic_amplitude=_get(parser, "initial", "amplitude", float, "initial.amplitude"),
        ic_seed=_get(parser, "initial", "seed", int, "initial.seed"),
        t_end=_get(parser, "time", "t_end", float, "time.t_end"),
        dt=dt,
        output_every=_get(parser, "time", "output_every", int, "time.output_every"),
        spinup=spinup,
        n_max=_get(parser, "diagnostics", "n_max", int, "diagnostics.n_max"),
        ladder_c_prefactor=_get(
            parser, "diagnostics", "ladder_c_prefactor", float, "diagnostics.ladder_c_prefactor"
        ),
        outdir=Path(parser.get("paths", "outdir")),
    )
    return cfg.validate()


def load_config(path) -> RunConfig:
    """Parse an INI config file; unknown sections or keys are rejected."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"config file not found: {path}")
    sections: dict = {}
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigurationError(f"{section}: unknown config section")
        for key in parser[section]:
            if key not in DEFAULTS[section] and not (section == "time" and key == "dt"):
                raise ConfigurationError(f"{section}.{key}: unknown config key")
        sections[section] = dict(parser[section])
    return config_from_dict(sections)
