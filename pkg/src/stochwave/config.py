"""Experiment configuration: flat ``key = value`` INI files.

The ``[run]`` section holds the base configuration. Every further section
``[run.NAME]`` is a sub-run whose keys override the base; a file passes only
if all its sub-runs pass.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import math
from dataclasses import dataclass, field, fields

KINDS = ("lift", "renorm-study", "evolve", "gronwall", "cone", "besov-report", "oracle-compare")

CHECKS = {
    "lift": ("snapshot", "coercivity", "form-bounds"),
    "renorm-study": ("renorm",),
    "evolve": ("energy",),
    "gronwall": ("gronwall",),
    "cone": ("agreement", "classical", "local-gronwall"),
    "besov-report": ("appendix",),
    "oracle-compare": ("oracle",),
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists one message per field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    kind: str
    check: str = ""
    name: str = "run"
    d: int = 2
    M: float = 16.0
    n: int = 128
    eps: float = 0.125
    seed: int = 1
    noise: str = "white"
    n_seeds: int = 10
    L_base: float = 1.0
    R: float = 4.0
    L: float = 4.0
    cfl: float = 0.25
    dt: float = 0.0
    T: float = 5.0
    cubic: bool = True
    taper: float = 0.0
    stride: int = 10
    width: float = 0.0
    n_samples: int = 100
    n_apexes: int = 5
    tol: float = math.nan
    eps_list: tuple = ()
    radii: tuple = ()
    resolutions: tuple = ()
    lift_resolutions: tuple = ()
    data: str = ""

    def __post_init__(self):
        if not self.check and self.kind in CHECKS:
            self.check = CHECKS[self.kind][0]

    @property
    def data_width(self) -> float:
        """Gaussian data width; defaults to ``M/16``."""
        return self.width if self.width > 0 else self.M / 16

    def canonical(self) -> str:
        items = []
        for f in fields(self):
            items.append(f"{f.name}={getattr(self, f.name)!r}")
        return "\n".join(items)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _convert(name: str, raw: str):
    kind = _FIELDS[name].type
    raw = raw.strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "tuple":
        return tuple(float(x) for x in raw.replace(",", " ").split()) if raw else ()
    return raw


def parse_section(items, base: dict | None = None) -> tuple[dict, list[str]]:
    values = dict(base or {})
    errors = []
    for key, raw in items:
        if key not in _FIELDS:
            errors.append(f"{key}: unknown key")
            continue
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            errors.append(f"{key}: {exc}")
    return values, errors


def load(path: str, seed: int | None = None) -> list[ExperimentConfig]:
    """Read a config file into one config per sub-run (validated)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return from_parser(parser, seed)


def loads(text: str, seed: int | None = None) -> list[ExperimentConfig]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([str(exc)]) from exc
    return from_parser(parser, seed)


def from_parser(parser: configparser.ConfigParser, seed: int | None = None) -> list[ExperimentConfig]:
    if "run" not in parser:
        raise ConfigError(["missing [run] section"])
    errors = []
    base, errs = parse_section(parser["run"].items())
    errors += errs
    sections = [("run", base)]
    for sec in parser.sections():
        if sec == "run":
            continue
        if not sec.startswith("run."):
            errors.append(f"[{sec}]: unknown section")
            continue
        vals, errs = parse_section(parser[sec].items(), base)
        vals["name"] = sec[4:]
        errors += [f"[{sec}] {e}" for e in errs]
        sections.append((sec, vals))
    if len(sections) > 1:
        sections = sections[1:]  # the base only provides defaults
    configs = []
    for sec, vals in sections:
        if seed is not None:
            vals = {**vals, "seed": seed}
        if "kind" not in vals:
            errors.append(f"[{sec}] kind: missing")
            continue
        cfg = ExperimentConfig(**vals)
        errors += [f"[{sec}] {e}" for e in validate(cfg)]
        configs.append(cfg)
    if errors:
        raise ConfigError(errors)
    return configs


def validate(cfg: ExperimentConfig) -> list[str]:
    """Static checks; returns one message per violated field (empty when valid)."""
    from .dynamics import max_stable_dt

    errs = []
    if cfg.kind not in KINDS:
        return [f"kind: unknown experiment {cfg.kind!r}; expected one of {', '.join(KINDS)}"]
    if cfg.check not in CHECKS[cfg.kind]:
        errs.append(f"check: {cfg.check!r} is not available for {cfg.kind}; expected one of {CHECKS[cfg.kind]}")
    if cfg.noise not in ("white", "zero"):
        errs.append(f"noise: must be 'white' or 'zero', got {cfg.noise!r}")
    if cfg.d not in (2, 3):
        errs.append(f"d: must be 2 or 3, got {cfg.d}")
    if cfg.n < 8 or cfg.n % 2:
        errs.append(f"n: must be even and >= 8, got {cfg.n}")
    if not cfg.M > 0:
        errs.append(f"M: must be positive, got {cfg.M}")
    if not cfg.eps > 0:
        errs.append(f"eps: must be positive, got {cfg.eps}")
    if not cfg.L_base > 0:
        errs.append(f"L_base: must be positive, got {cfg.L_base}")
    if not 0 < cfg.R <= cfg.M / 2:
        errs.append(f"R: ball B({cfg.R}) must fit in the torus (0 < R <= M/2 = {cfg.M / 2:g})")
    if not 0 < cfg.cfl <= 0.5:
        errs.append(f"cfl: must lie in (0, 0.5], got {cfg.cfl}")
    if cfg.T < 0:
        errs.append(f"T: must be nonnegative, got {cfg.T}")
    if cfg.taper < 0:
        errs.append(f"taper: must be nonnegative, got {cfg.taper}")
    if cfg.stride < 1:
        errs.append(f"stride: must be >= 1, got {cfg.stride}")
    if cfg.n_seeds < 1 or cfg.n_samples < 1 or cfg.n_apexes < 1:
        errs.append("n_seeds, n_samples, n_apexes: must be >= 1")
    if cfg.dt and cfg.n >= 8 and cfg.n % 2 == 0 and cfg.d in (2, 3) and cfg.M > 0:
        from .spectral import TorusGrid

        limit = max_stable_dt(TorusGrid(cfg.d, cfg.M, cfg.n), 0.5)
        if cfg.dt > limit:
            errs.append(f"dt: {cfg.dt:g} exceeds the CFL limit {limit:.4g}")
    if cfg.dt < 0:
        errs.append(f"dt: must be nonnegative, got {cfg.dt}")
    if list(cfg.eps_list) != sorted(cfg.eps_list, reverse=True) or len(set(cfg.eps_list)) != len(cfg.eps_list):
        errs.append("eps_list: must be strictly decreasing")
    if cfg.kind == "cone":
        if cfg.check == "agreement":
            if cfg.R < cfg.L:
                errs.append(f"R: need R >= L, got R = {cfg.R}, L = {cfg.L}")
            if not cfg.L > 0:
                errs.append(f"L: must be positive, got {cfg.L}")
            if 2 * (cfg.L / 2) + 1 > cfg.M / 2:
                errs.append(f"L: cone apex time L/2 gives radius {cfg.L:g} + 1 beyond half the torus")
        elif 2 * cfg.T + 1 > cfg.M / 2 and cfg.check == "local-gronwall":
            errs.append(f"T: cone apex with 2t + 1 = {2 * cfg.T + 1:g} > M/2 = {cfg.M / 2:g}")
    if cfg.data and not errs:
        errs += _check_data(cfg)
    return errs


def _check_data(cfg: ExperimentConfig) -> list[str]:
    import numpy as np

    from . import container
    from .spectral import TorusGrid

    try:
        snap = container.load(cfg.data)
    except (OSError, ValueError) as exc:
        return [f"data: {exc}"]
    if (snap.d, snap.n) != (cfg.d, cfg.n) or snap.M != cfg.M:
        return [f"data: grid (d={snap.d}, n={snap.n}, M={snap.M:g}) does not match the config"]
    missing = [k for k in ("u0", "u1") if k not in snap.fields]
    if missing:
        return [f"data: missing fields {missing}"]
    if cfg.kind == "cone" and cfg.check == "agreement" and "u0_L" in snap.fields:
        ball = TorusGrid(cfg.d, cfg.M, cfg.n).distance() <= 2 * cfg.L + 1
        for k in ("u0", "u1"):
            if not np.array_equal(snap.fields[k][ball], snap.fields.get(k + "_L", snap.fields[k])[ball]):
                return [f"data: {k} and {k}_L differ on B(2L+1)"]
    return []


def replace(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return dataclasses.replace(cfg, **kw)


def combined_digest(configs) -> str:
    return hashlib.sha256("\n--\n".join(c.canonical() for c in configs).encode()).hexdigest()[:16]
