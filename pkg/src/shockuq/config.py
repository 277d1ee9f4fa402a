"""Run configuration: flat key=value text with section dots.

Example::

    domain.nx=201
    ic.kernel.kind=exponential
    solver.n_modes=3

Unknown keys and malformed values are rejected with the offending key
named.  parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields

from .chaos import ChaosBasis
from .errors import ConfigError
from .kernels import InitialConditionSpec, KernelSpec, KERNEL_KINDS, SCALING_MODES
from .numerics import Grid1D


@dataclass
class DomainConfig:
    x_min: float = -1.0
    x_max: float = 1.0
    nx: int = 201


@dataclass
class TimeConfig:
    t_end: float = 1.1
    dt: float = 1e-4


@dataclass
class KernelConfig:
    kind: str = "exponential"
    sigma2: float = 0.25
    corr_len: float = 1.0


@dataclass
class ICConfig:
    u_b: float = 0.0
    x0: float = 0.0
    s: float = 0.1
    scaling: str = "fluctuation"
    kernel: KernelConfig = field(default_factory=KernelConfig)


@dataclass
class SolverConfig:
    n_modes: int = 3
    chaos_order: int = 3
    s_int: int = 20000
    s_mc: int = 1000
    seed: int = 1234
    seed_int: int = 904512
    dissipation: str = "full"
    boundary: str = "rotation"
    repair_orthonormality: bool = False


@dataclass
class PostConfig:
    enabled: bool = True
    lambda_g: float = 7.0
    m_terms: int = 7
    n_quad: int = 100
    margin: int = 2
    projection: str = "quadrature"
    n_colloc: int = 3


@dataclass
class OutputConfig:
    directory: str = "out"
    prefix: str = "run"


@dataclass
class RunConfig:
    domain: DomainConfig = field(default_factory=DomainConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    ic: ICConfig = field(default_factory=ICConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    post: PostConfig = field(default_factory=PostConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def grid(self) -> Grid1D:
        return Grid1D(self.domain.x_min, self.domain.x_max, self.domain.nx)

    def kernel_spec(self) -> KernelSpec:
        k = self.ic.kernel
        return KernelSpec(k.kind, k.sigma2, k.corr_len)

    def ic_spec(self) -> InitialConditionSpec:
        return InitialConditionSpec(
            self.ic.u_b, self.ic.x0, self.ic.s, self.kernel_spec(), self.ic.scaling
        )

    def basis(self) -> ChaosBasis:
        return ChaosBasis.total_degree(self.solver.n_modes, self.solver.chaos_order)


_SECTIONS = {f.name for f in dc_fields(RunConfig)}
_ENUMS = {
    "ic.kernel.kind": KERNEL_KINDS,
    "ic.scaling": SCALING_MODES,
    "solver.dissipation": ("full", "mean_only", "central"),
    "solver.boundary": ("rotation", "projected", "frozen"),
    "post.projection": ("quadrature", "mc"),
}


def _walk(cfg: RunConfig):
    """Yield (dotted_key, owner_object, field_name, value) for every leaf."""
    def rec(obj, prefix):
        for f in dc_fields(obj):
            value = getattr(obj, f.name)
            key = f"{prefix}{f.name}"
            if hasattr(value, "__dataclass_fields__"):
                yield from rec(value, key + ".")
            else:
                yield key, obj, f.name, value
    yield from rec(cfg, "")


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for key, _, _, value in _walk(cfg):
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def _coerce(key: str, raw: str, current):
    if isinstance(current, bool):
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"config key {key!r}: expected a boolean, got {raw!r}")
    if isinstance(current, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: expected an integer, got {raw!r}") from exc
    if isinstance(current, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: expected a number, got {raw!r}") from exc
    value = raw.strip()
    allowed = _ENUMS.get(key)
    if allowed and value not in allowed:
        raise ConfigError(f"config key {key!r}: {value!r} not one of {allowed}")
    return value


def apply_overrides(cfg: RunConfig, overrides: dict[str, str]) -> RunConfig:
    """Set dotted keys from string values in place; unknown keys raise."""
    index = {key: (owner, name) for key, owner, name, _ in _walk(cfg)}
    for key, raw in overrides.items():
        if key not in index:
            raise ConfigError(f"unknown config key {key!r}")
        owner, name = index[key]
        setattr(owner, name, _coerce(key, raw, getattr(owner, name)))
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines ('#' starts a comment) into a validated RunConfig."""
    cfg = RunConfig()
    overrides: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = stripped.split("=", 1)
        overrides[key.strip()] = raw
    apply_overrides(cfg, overrides)
    validate_config(cfg)
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def validate_config(cfg: RunConfig) -> RunConfig:
    """Reject invalid values before any compute, naming the offending key."""
    checks = [
        ("domain.nx", cfg.domain.nx >= 3, "needs nx >= 3"),
        ("domain.x_max", cfg.domain.x_max > cfg.domain.x_min, "needs x_max > x_min"),
        ("time.t_end", cfg.time.t_end > 0, "needs t_end > 0"),
        ("time.dt", cfg.time.dt > 0, "needs dt > 0"),
        ("ic.s", cfg.ic.s >= 0, "needs s >= 0"),
        ("ic.kernel.sigma2", cfg.ic.kernel.sigma2 > 0, "needs sigma2 > 0"),
        ("ic.kernel.corr_len", cfg.ic.kernel.corr_len > 0, "needs corr_len > 0"),
        ("solver.n_modes", cfg.solver.n_modes >= 1, "needs n_modes >= 1"),
        ("solver.n_modes (vs nx)", cfg.solver.n_modes <= cfg.domain.nx, "needs n_modes <= nx"),
        ("solver.chaos_order", cfg.solver.chaos_order >= 1, "needs chaos_order >= 1"),
        ("solver.s_int", cfg.solver.s_int >= 2, "needs s_int >= 2"),
        ("solver.s_mc", cfg.solver.s_mc >= 2, "needs s_mc >= 2"),
        ("post.lambda_g", cfg.post.lambda_g > 0, "needs lambda_g > 0"),
        ("post.m_terms", 1 <= cfg.post.m_terms <= cfg.post.n_quad, "needs 1 <= m_terms <= n_quad"),
        ("post.margin", cfg.post.margin >= 0, "needs margin >= 0"),
        ("post.n_colloc", cfg.post.n_colloc >= 1, "needs n_colloc >= 1"),
        ("ic.x0", cfg.domain.x_min <= cfg.ic.x0 <= cfg.domain.x_max, "x0 outside domain"),
    ]
    for key, ok, why in checks:
        if not ok:
            raise ConfigError(f"config key {key!r}: {why}")
    if cfg.ic.kernel.kind not in KERNEL_KINDS:
        raise ConfigError(f"config key 'ic.kernel.kind': unknown kind {cfg.ic.kernel.kind!r}")
    if cfg.ic.scaling not in SCALING_MODES:
        raise ConfigError(f"config key 'ic.scaling': unknown mode {cfg.ic.scaling!r}")
    return cfg
