"""JSON run configuration shared by all CLI subcommands."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any

import numpy as np

from .bounds import BETA_FORMS
from .correlations import CorrelationQuery
from .hamiltonians import SpinHamiltonian, decouple_site, hamiltonian_from_dict
from .observables import DichotomicObservable, Observable, PauliObservable
from .protocols import NOISE_KINDS, AngleNoiseModel
from .quantum import MAX_SITES, QuantumState, check_sites

PROTOCOL_KINDS = ("rotation", "projective", "modified", "deferred")
STATE_KINDS = ("all_up", "product", "random")


class ConfigError(ValueError):
    """Malformed configuration (bad JSON, unknown keys, wrong types)."""


class GridSpecError(ValueError):
    pass


@dataclass
class ModelConfig:
    n_sites: int = 8
    u0: float = 1.0
    rc: float = 1.0
    fields: list | None = None
    couplings: list | None = None
    max_sites: int = MAX_SITES


@dataclass
class StateConfig:
    kind: str = "all_up"
    bloch: list | None = None
    seed: int = 0


@dataclass
class QueryConfig:
    i: int = 0
    j: int | list = 1
    a: str = "z"
    b: str = "z"
    t1: float = 0.0
    t2: float = 1.0
    keep_onsite: bool = True
    state: StateConfig = field(default_factory=StateConfig)


@dataclass
class NoiseConfig:
    kind: str = "none"
    delta: float = 0.0
    sigma: float = 0.0


@dataclass
class ProtocolConfig:
    kind: str = "rotation"
    shots: int = 10_000
    seed: int = 0
    theta: float = math.pi / 2
    threads: int = 1
    noise: NoiseConfig = field(default_factory=NoiseConfig)


@dataclass
class GridConfig:
    dt_min: float = 0.0
    dt_max: float = 4.0
    dt_steps: int = 81
    rho_min: int = 1
    rho_max: int = 20
    beta_form: str = "printed"


@dataclass
class VerifyConfig:
    n_fields: int = 3
    n_states: int = 3
    field_scale: float = 1.0
    check_commutator: bool = False


@dataclass
class OutputConfig:
    path: str | None = None
    format: str | None = None


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    query: QueryConfig = field(default_factory=QueryConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Any) -> "RunConfig":
        return _build(cls, d, "config")

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


# ------------------------------------------------------------------ parsing

_SCALARS = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce(value: Any, annotation: str, where: str) -> Any:
    if value is None:
        if "None" in annotation:
            return None
        raise ConfigError(f"{where} must not be null")
    if annotation.startswith("int | list"):
        if isinstance(value, list):
            return [_coerce(v, "int", where) for v in value]
        return _coerce(value, "int", where)
    if annotation.startswith("list"):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return value
    base = annotation.split(" |")[0]
    kind = _SCALARS.get(base)
    if kind is None:
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where} must be a {base}")
    if kind is int:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if kind is float:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where} must be a string")
    return value


def _build(cls, d: Any, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(d) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    kwargs = {}
    for name, value in d.items():
        f = known[name]
        default = f.default_factory() if callable(f.default_factory) else None
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        else:
            kwargs[name] = _coerce(value, str(f.type), f"{where}.{name}")
    return cls(**kwargs)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return RunConfig.from_json(text)


# ------------------------------------------------------------ realisation

def build_hamiltonian(cfg: RunConfig) -> SpinHamiltonian:
    m = cfg.model
    check_sites(m.n_sites, m.max_sites)
    d = {"n_sites": m.n_sites, "u0": m.u0, "rc": m.rc,
         "fields": m.fields, "couplings": m.couplings}
    return hamiltonian_from_dict(d)


def build_state(cfg: RunConfig) -> QuantumState:
    n = cfg.model.n_sites
    s = cfg.query.state
    if s.kind == "all_up":
        return QuantumState.all_up(n)
    if s.kind == "product":
        if s.bloch is None or len(s.bloch) != n:
            raise ValueError(f"product state needs {n} (polar, azimuth) pairs")
        return QuantumState.bloch_product([tuple(p) for p in s.bloch])
    if s.kind == "random":
        return QuantumState.random(n, np.random.default_rng(s.seed))
    raise ValueError(f"state kind must be one of {STATE_KINDS}")


def build_o2(cfg: RunConfig) -> Observable:
    q = cfg.query
    sites = q.j if isinstance(q.j, list) else [q.j]
    if len(sites) != len(q.b):
        raise ValueError("query.b needs one axis letter per site in query.j")
    if len(sites) == 1:
        return PauliObservable(sites[0], q.b)
    return DichotomicObservable.pauli_string(sites, q.b)


def build_query(cfg: RunConfig, h: SpinHamiltonian | None = None) -> CorrelationQuery:
    h = build_hamiltonian(cfg) if h is None else h
    q = cfg.query
    return CorrelationQuery(build_state(cfg), h, PauliObservable(q.i, q.a), build_o2(cfg),
                            q.t1, q.t2)


def build_h_prime(cfg: RunConfig, h: SpinHamiltonian) -> SpinHamiltonian:
    return decouple_site(h, cfg.query.i, keep_onsite=cfg.query.keep_onsite)


def build_noise(cfg: RunConfig) -> AngleNoiseModel:
    n = cfg.protocol.noise
    if n.kind not in NOISE_KINDS:
        raise ValueError(f"noise kind must be one of {NOISE_KINDS}")
    return AngleNoiseModel(n.kind, n.delta, n.sigma)


def grid_axes(cfg: RunConfig) -> tuple[np.ndarray, list[int]]:
    g = cfg.grid
    if not 0 <= g.dt_min <= g.dt_max:
        raise GridSpecError("need 0 <= dt_min <= dt_max")
    if g.dt_steps < 1 or (g.dt_steps == 1 and g.dt_min != g.dt_max):
        raise GridSpecError("dt_steps must be >= 1 (>= 2 for a non-degenerate range)")
    if g.rho_min < 1 or g.rho_max < g.rho_min:
        raise GridSpecError("need 1 <= rho_min <= rho_max")
    if g.beta_form not in BETA_FORMS:
        raise GridSpecError(f"beta_form must be one of {BETA_FORMS}")
    return np.linspace(g.dt_min, g.dt_max, g.dt_steps), list(range(g.rho_min, g.rho_max + 1))

