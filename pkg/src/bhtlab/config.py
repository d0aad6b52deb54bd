"""Experiment configuration: INI parsing, defaults and validation."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from fractions import Fraction

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULTS", "load_config", "parse_fraction_list",
           "parse_exponents"]


class ConfigError(ValueError):
    pass


def parse_fraction_list(text: str) -> tuple[Fraction, ...]:
    """Comma-separated rationals such as ``1, -1/2, 0.3, 1e3``."""
    out = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(Fraction(tok))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad number {tok!r}") from exc
    return tuple(out)


def parse_exponents(text: str) -> tuple[tuple[Fraction, ...], ...]:
    """Semicolon-separated tuples with space-separated entries, e.g. ``2 2; 3/2 3``."""
    out = []
    for grp in text.split(";"):
        grp = grp.strip()
        if not grp:
            continue
        try:
            out.append(tuple(Fraction(t) for t in grp.replace(",", " ").split()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad exponent group {grp!r}") from exc
    return tuple(out)


def _fmt(vals) -> str:
    return ", ".join(str(v) for v in vals)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    alphas: tuple = ()
    exponents: tuple = ()
    mode: str = "desk"
    L: int | None = None
    eta_prefactor: Fraction = Fraction(1)
    lambda0: float | None = None
    seed: int = 0
    N: int = 512
    length: float = 16.0
    count: int = 10
    out: str = "out"
    options: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.N < 2 or self.N & (self.N - 1):
            raise ConfigError("N must be a power of two")
        if not self.length > 0:
            raise ConfigError("domain length must be positive")
        if any(a == 0 or a == -1 for a in self.alphas):
            raise ConfigError("alpha list must avoid 0 and -1; use the degenerate experiment")
        if self.mode not in ("paper", "desk"):
            raise ConfigError("mode must be 'paper' or 'desk'")
        if self.count < 0:
            raise ConfigError("count must be nonnegative")
        if self.eta_prefactor <= 0:
            raise ConfigError("eta_prefactor must be positive")
        return self

    def opt(self, key: str, default):
        """Typed lookup in ``options`` using the type of ``default``."""
        if key not in self.options:
            return default
        raw = self.options[key]
        if isinstance(default, bool):
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "alphas": _fmt(self.alphas),
            "exponents": "; ".join(" ".join(str(p) for p in g) for g in self.exponents),
            "mode": self.mode,
            "L": "" if self.L is None else str(self.L),
            "eta_prefactor": str(self.eta_prefactor),
            "lambda0": "" if self.lambda0 is None else repr(self.lambda0),
            "seed": str(self.seed),
            "N": str(self.N),
            "length": repr(self.length),
            "count": str(self.count),
            "options": {k: str(v) for k, v in sorted(self.options.items())},
        }


F = Fraction
# Per-experiment defaults reproduce the acceptance setups.
DEFAULTS: dict[str, dict] = {
    "adjoint": dict(alphas=(F(1), F(2), F(-1, 2), F(-2), F(3, 10)), N=512, length=16.0, count=10),
    "degenerate": dict(alphas=(F(1, 1000), F(-999, 1000), F(-1001, 1000), F(1000)),
                       N=512, length=16.0, count=3),
    "odd_symmetry": dict(alphas=(F(1),), N=512, length=16.0, count=10),
    "frame": dict(alphas=(F(1),), N=1024, length=32.0, count=20),
    "coefficients": dict(alphas=(F(1),), count=12),
    "tiles": dict(alphas=(F(1),), count=100),
    "oscillation": dict(alphas=(F(1),), count=50),
    "selection": dict(exponents=((F(8, 5), F(8, 5), F(8, 5)),), count=50),
    "counting": dict(count=200),
    "cz": dict(N=256, length=16.0, count=100),
    "khinchine": dict(exponents=((F(8, 5), F(8, 5), F(8, 5)),), count=20),
    "scaling": dict(exponents=((F(8, 5), F(8, 5), F(8, 5)),), count=20),
    "closure": dict(count=12),
    "norm_ratio": dict(alphas=(F(1), F(1, 2), F(-1, 3)),
                       exponents=((F(2), F(2)), (F(3), F(3)), (F(3, 2), F(3))),
                       N=512, length=16.0, count=20),
    "alpha_profile": dict(alphas=(F(-1, 2), F(-1, 4), F(-1, 8), F(1, 8), F(1, 4), F(1, 2), F(1000)),
                          exponents=((F(2), F(2)),), N=512, length=16.0, count=6),
    "weak_type": dict(alphas=(F(1),), exponents=((F(8, 5), F(8, 5), F(8, 5)),),
                      N=4096, length=64.0, lambda0=0.4, count=20),
    "maximal": dict(alphas=(F(1),), exponents=((F(3, 2), F(2)),), N=1024, length=16.0, count=8),
    "pipeline": dict(alphas=(F(1),), exponents=((F(8, 5), F(8, 5), F(8, 5)),), L=4,
                     eta_prefactor=F(5), N=1024, length=8.0, count=30),
}

_KNOWN = {"experiment", "alphas", "exponents", "mode", "l", "eta_prefactor", "lambda0",
          "seed", "n", "length", "count", "out"}


def default_config(name: str, **over) -> ExperimentConfig:
    if name not in DEFAULTS:
        raise ConfigError(f"unknown experiment {name!r}")
    kw = dict(DEFAULTS[name])
    kw.update(over)
    return ExperimentConfig(experiment=name, **kw).validate()


def load_config(path: str | None, experiment: str, seed: int | None = None,
                mode: str | None = None, out: str | None = None) -> ExperimentConfig:
    """Read the ``[experiment]`` section of an INI file over the experiment defaults.

    Unknown keys are kept as string options for the experiment.  Command
    line values for seed, mode and output directory take precedence.
    """
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    kw = dict(DEFAULTS[experiment])
    options: dict = {}
    if path is not None:
        cp = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not cp.has_section("experiment"):
            raise ConfigError("config needs an [experiment] section")
        sec = cp["experiment"]
        name = sec.get("experiment", experiment)
        if name != experiment:
            raise ConfigError(f"config is for {name!r}, not {experiment!r}")
        try:
            if "alphas" in sec:
                kw["alphas"] = parse_fraction_list(sec["alphas"])
            if "exponents" in sec:
                kw["exponents"] = parse_exponents(sec["exponents"])
            if "mode" in sec:
                kw["mode"] = sec["mode"].strip()
            if "l" in sec:
                kw["L"] = int(sec["l"]) if sec["l"].strip() else None
            if "eta_prefactor" in sec:
                kw["eta_prefactor"] = Fraction(sec["eta_prefactor"].strip())
            if "lambda0" in sec:
                kw["lambda0"] = float(sec["lambda0"]) if sec["lambda0"].strip() else None
            if "seed" in sec:
                kw["seed"] = int(sec["seed"])
            if "n" in sec:
                kw["N"] = int(sec["n"])
            if "length" in sec:
                kw["length"] = float(sec["length"])
            if "count" in sec:
                kw["count"] = int(sec["count"])
            if "out" in sec:
                kw["out"] = sec["out"].strip()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        options = {k: v for k, v in sec.items() if k not in _KNOWN}
    cfg = ExperimentConfig(experiment=experiment, options=options, **kw)
    over = {}
    if seed is not None:
        over["seed"] = seed
    if mode is not None:
        over["mode"] = mode
    if out is not None:
        over["out"] = out
    return replace(cfg, **over).validate()
