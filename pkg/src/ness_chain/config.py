"""Flat JSON run configuration.

Units are hbar = k_B = mass = 1.  Every physical quantity has its own key;
unknown keys are rejected so typos surface as configuration errors.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .bath_kernels import BathSet, CutoffKind, beta_from_temperature, check_cutoff, default_cutoff
from .chain_model import ChainModel, NonlinearityKind, NonlinearitySpec
from .spectral_integrals import QuadratureSpec

SWEEPABLE = ("lambda2", "strength", "gamma", "T_C")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepAxis:
    var: str
    start: float
    stop: float
    steps: int

    def values(self) -> np.ndarray:
        """``steps`` intervals, so ``steps + 1`` points including both ends."""
        if self.steps == 0:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.steps + 1)


@dataclass(frozen=True)
class RunConfig:
    n_sites: int = 2
    omega_r: float = 10.0
    lambda2: float = 10.0
    gamma: float = 1.0
    T_H: float = 100.0
    T_C: float = 0.002
    cutoff: float | None = None
    cutoff_kind: str = "Hard"
    nonlinearity: str = "KG"
    strength: float = 0.0
    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    max_subdivisions: int = 20000
    output: str | None = None
    format: str = "json"
    dump_kernel_table: bool = False
    frequency_matrix: list[list[float]] | None = None
    sweep: list[SweepAxis] = field(default_factory=list)

    def model(self) -> ChainModel:
        fm = None
        if self.frequency_matrix is not None:
            fm = tuple(tuple(float(x) for x in row) for row in self.frequency_matrix)
        return ChainModel(self.n_sites, self.omega_r, self.lambda2, self.gamma, fm)

    def baths(self, model: ChainModel | None = None) -> BathSet:
        model = model or self.model()
        n = model.n_sites
        temps = np.linspace(self.T_H, self.T_C, n) if n > 1 else np.array([self.T_H])
        betas = tuple(beta_from_temperature(float(t)) for t in temps)
        cutoff = self.cutoff if self.cutoff is not None else default_cutoff(model)
        return BathSet(betas, cutoff, CutoffKind(self.cutoff_kind))

    def nonlinearity_spec(self) -> NonlinearitySpec:
        return NonlinearitySpec(NonlinearityKind(self.nonlinearity), self.strength)

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(self.rel_tol, self.abs_tol, self.max_subdivisions)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["sweep"] = [
            {"var": a.var, "from": a.start, "to": a.stop, "steps": a.steps} for a in self.sweep
        ]
        return d


_FIELDS = set(RunConfig.__dataclass_fields__)


def parse_sweep(items: Any) -> list[SweepAxis]:
    if not isinstance(items, list):
        raise ConfigError("sweep must be a list of {var, from, to, steps}")
    axes = []
    for it in items:
        try:
            ax = SweepAxis(str(it["var"]), float(it["from"]), float(it["to"]), int(it["steps"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad sweep entry {it!r}: {exc}") from None
        axes.append(ax)
    return axes


def validate_sweep(axes: list[SweepAxis]) -> None:
    if len(axes) > 2:
        raise ConfigError("at most two swept variables")
    names = [a.var for a in axes]
    if len(set(names)) != len(names):
        raise ConfigError("a variable may be swept only once")
    for a in axes:
        if a.var not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {a.var!r}; choose from {SWEEPABLE}")
        if a.steps < 0 or (a.steps > 0 and not a.stop > a.start):
            raise ConfigError(f"empty sweep range for {a.var}: from {a.start} to {a.stop} in {a.steps} steps")


def config_from_dict(raw: dict[str, Any]) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(raw) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    kw = dict(raw)
    if "sweep" in kw:
        kw["sweep"] = parse_sweep(kw["sweep"])
    try:
        cfg = RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Build every derived object once so bad values fail before any work is done."""
    if cfg.format not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {cfg.format!r}")
    validate_sweep(cfg.sweep)
    try:
        if float(cfg.T_H) < 0 or float(cfg.T_C) < 0:
            raise ConfigError("temperatures must be non-negative")
        model = cfg.model()
        check_cutoff(model, cfg.baths(model))
        cfg.nonlinearity_spec()
        cfg.quadrature()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_dict(raw)
