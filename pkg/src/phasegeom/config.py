"""Declarative run configuration for the verification runner."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .metrics import CATALOG as METRIC_CATALOG

SUITES = ("spacetime", "kinematics", "structures", "perturbations")
CONNECTION_KINDS = ("levi_civita", "levi_civita_plus", "explicit")
PHI_KINDS = ("projective", "weyl_like", "symmetric", "antisymmetric", "totally_antisymmetric")
PERTURBATION_KINDS = ("none", "sigma", "em")
SIGMA_KINDS = ("psi", "phi", "mixed", "nu_tau", "antisymmetric_bar", "generic")
FLAG_NAMES = ("dual_pair", "acc", "contact", "acpj", "jacobi")


class ConfigError(ValueError):
    """Malformed configuration."""


class UnknownIdError(ConfigError):
    """A metric, field or construction identifier is not in the catalog."""


@dataclass(frozen=True)
class Constants:
    c: float = 1.0
    hbar: float = 1.0
    m_particle: float = 1.0


@dataclass(frozen=True)
class Sampling:
    count: int = 50
    seed: int = 0
    ranges: tuple[tuple[float, float], ...] | None = None
    radius: float = 0.7
    max_alpha: float = 1e3
    workers: int = 1


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-9
    derivative: float = 1e-8
    bracket: float = 1e-8


@dataclass(frozen=True)
class RunConfig:
    metric: str = "minkowski"
    metric_params: Mapping[str, float] = field(default_factory=dict)
    connection: Mapping[str, Any] = field(default_factory=lambda: {"kind": "levi_civita"})
    perturbation: Mapping[str, Any] = field(default_factory=lambda: {"kind": "none"})
    constants: Constants = field(default_factory=Constants)
    sampling: Sampling = field(default_factory=Sampling)
    tolerances: Tolerances = field(default_factory=Tolerances)
    suites: tuple[str, ...] = SUITES
    expect: Mapping[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["suites"] = list(self.suites)
        if d["sampling"]["ranges"] is not None:
            d["sampling"]["ranges"] = [list(r) for r in d["sampling"]["ranges"]]
        d["metric_params"] = dict(self.metric_params)
        d["connection"] = json.loads(json.dumps(self.connection))
        d["perturbation"] = json.loads(json.dumps(self.perturbation))
        d["expect"] = dict(self.expect)
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def with_overrides(self, **kw) -> "RunConfig":
        """Apply flat overrides: ``metric``, ``seed``, ``samples``, ``tol``, ``c``."""
        cfg = self
        if kw.get("metric") is not None:
            cfg = replace(cfg, metric=kw["metric"], metric_params={})
        if kw.get("seed") is not None:
            cfg = replace(cfg, sampling=replace(cfg.sampling, seed=int(kw["seed"])))
        if kw.get("samples") is not None:
            cfg = replace(cfg, sampling=replace(cfg.sampling, count=int(kw["samples"])))
        if kw.get("tol") is not None:
            t = float(kw["tol"])
            cfg = replace(cfg, tolerances=Tolerances(t, t, t))
        if kw.get("c") is not None:
            cfg = replace(cfg, constants=replace(cfg.constants, c=float(kw["c"])))
        if kw.get("suites") is not None:
            cfg = replace(cfg, suites=tuple(kw["suites"]))
        validate(cfg)
        return cfg


def _section(cls, data: Any, name: str):
    if data is None:
        return cls()
    if not isinstance(data, Mapping):
        raise ConfigError(f"{name} must be a mapping")
    known = set(cls.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {name}: {sorted(extra)}")
    try:
        return cls(**dict(data))
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _number(x, name: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{name} must be a number")
    return float(x)


def from_mapping(data: Mapping[str, Any]) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("configuration must be a mapping")
    known = set(RunConfig.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    sampling = _section(Sampling, data.get("sampling"), "sampling")
    if sampling.ranges is not None:
        try:
            sampling = replace(sampling, ranges=tuple((float(a), float(b)) for a, b in sampling.ranges))
        except (TypeError, ValueError):
            raise ConfigError("sampling.ranges must be four [lo, hi] pairs") from None
    suites = data.get("suites", SUITES)
    if isinstance(suites, str) or not isinstance(suites, (list, tuple)):
        raise ConfigError("suites must be a list")
    cfg = RunConfig(
        metric=data.get("metric", "minkowski"),
        metric_params=dict(data.get("metric_params") or {}),
        connection=dict(data.get("connection") or {"kind": "levi_civita"}),
        perturbation=dict(data.get("perturbation") or {"kind": "none"}),
        constants=_section(Constants, data.get("constants"), "constants"),
        sampling=sampling,
        tolerances=_section(Tolerances, data.get("tolerances"), "tolerances"),
        suites=tuple(suites),
        expect=dict(data.get("expect") or {}),
    )
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if not isinstance(cfg.metric, str) or cfg.metric not in METRIC_CATALOG:
        raise UnknownIdError(f"unknown metric {cfg.metric!r}; known: {sorted(METRIC_CATALOG)}")
    for k, v in cfg.metric_params.items():
        _number(v, f"metric_params.{k}")
    s = cfg.sampling
    if isinstance(s.count, bool) or not isinstance(s.count, int) or s.count < 1:
        raise ConfigError("sampling.count must be an integer >= 1")
    if isinstance(s.seed, bool) or not isinstance(s.seed, int) or s.seed < 0:
        raise ConfigError("sampling.seed must be a non-negative integer")
    if not isinstance(s.workers, int) or s.workers < 1:
        raise ConfigError("sampling.workers must be an integer >= 1")
    if s.ranges is not None and len(s.ranges) != 4:
        raise ConfigError("sampling.ranges needs four pairs")
    if _number(s.radius, "sampling.radius") <= 0:
        raise ConfigError("sampling.radius must be positive")
    for name in ("algebraic", "derivative", "bracket"):
        if _number(getattr(cfg.tolerances, name), f"tolerances.{name}") <= 0:
            raise ConfigError(f"tolerances.{name} must be positive")
    for name in ("c", "hbar", "m_particle"):
        if _number(getattr(cfg.constants, name), f"constants.{name}") <= 0:
            raise ConfigError(f"constants.{name} must be positive")
    bad = [x for x in cfg.suites if x not in SUITES]
    if bad:
        raise UnknownIdError(f"unknown suites {bad}; known: {list(SUITES)}")
    for k, v in cfg.expect.items():
        if k not in FLAG_NAMES or not isinstance(v, bool):
            raise ConfigError(f"expect.{k} must be one of {FLAG_NAMES} with a boolean value")
    _validate_connection(cfg.connection)
    _validate_perturbation(cfg.perturbation)


def _validate_connection(conn: Mapping[str, Any]) -> None:
    kind = conn.get("kind")
    if kind not in CONNECTION_KINDS:
        raise UnknownIdError(f"unknown connection kind {kind!r}; known: {list(CONNECTION_KINDS)}")
    if kind == "levi_civita_plus":
        phi = conn.get("phi")
        if not isinstance(phi, Mapping) or phi.get("kind") not in PHI_KINDS:
            raise UnknownIdError(f"connection.phi.kind must be one of {list(PHI_KINDS)}")
        if "eps" in phi:
            _number(phi["eps"], "connection.phi.eps")
    if kind == "explicit":
        coeffs = conn.get("coefficients")
        try:
            import numpy as np

            arr = np.asarray(coeffs, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("connection.coefficients must be numeric") from None
        if arr.shape != (4, 4, 4):
            raise ConfigError("connection.coefficients must have shape 4x4x4")


def _validate_perturbation(pert: Mapping[str, Any]) -> None:
    from .perturbations import EM_CATALOG

    kind = pert.get("kind")
    if kind not in PERTURBATION_KINDS:
        raise UnknownIdError(f"unknown perturbation kind {kind!r}; known: {list(PERTURBATION_KINDS)}")
    if kind == "sigma":
        if pert.get("sigma") not in SIGMA_KINDS:
            raise UnknownIdError(f"perturbation.sigma must be one of {list(SIGMA_KINDS)}")
        for k, v in (pert.get("params") or {}).items():
            _number(v, f"perturbation.params.{k}")
    if kind == "em":
        if pert.get("field_id") not in EM_CATALOG:
            raise UnknownIdError(f"unknown field {pert.get('field_id')!r}; known: {sorted(EM_CATALOG)}")
        for key in ("q", "m"):
            if key not in pert:
                raise ConfigError(f"perturbation.{key} is required for em")
            _number(pert[key], f"perturbation.{key}")
        if float(pert["m"]) <= 0:
            raise ConfigError("perturbation.m must be positive")
        for k, v in (pert.get("params") or {}).items():
            _number(v, f"perturbation.params.{k}")


def load(path: str | Path) -> RunConfig:
    """Read a YAML (or JSON) document."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return from_mapping(data or {})
