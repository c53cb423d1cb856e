"""Run configuration: flat ``key = value`` text with strict key checking.

Example::

    # clamped disk, four modes
    domain = disk:1
    bc = dirichlet
    modes = 4
    resolution = 128x64

Blank lines and ``#`` comments are ignored.  Unknown keys, repeated keys and
malformed values raise :class:`~biplate.errors.ConfigError` naming the line
and key.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from typing import Optional

from .discretize import MAX_MODES, BCKind, Resolution, default_resolution
from .errors import ConfigError
from .geometry import DomainSpec

THREADS_ENV = "BIPLATE_THREADS"


def parse_resolution(text: str, domain: Optional[DomainSpec] = None) -> Resolution:
    """``"128x64"`` gives ``Resolution(128, 64)``; ``"2x"`` doubles the default once, ``"4x"`` twice."""
    text = text.strip().lower()
    if text.endswith("x") and text[:-1].isdigit():
        factor = int(text[:-1])
        if factor < 1 or factor & (factor - 1):
            raise ValueError(f"refinement factor must be a power of two, got {factor}")
        if domain is None:
            raise ValueError("a relative resolution needs a domain")
        return default_resolution(domain).doubled(factor.bit_length() - 1)
    parts = text.split("x")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ValueError(f"resolution must look like 128x64 or 2x, got {text!r}")
    return Resolution(int(parts[0]), int(parts[1]))


def parse_mu_grid(text: str) -> tuple:
    """``"0.05:0.95:19"`` (start:stop:count) or a comma list ``"0.2,0.3,0.5"``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"mu grid range must be start:stop:count, got {text!r}")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 2:
            raise ValueError("mu grid needs at least 2 points")
        return tuple(round(a + (b - a) * i / (n - 1), 12) for i in range(n))
    return tuple(float(v) for v in text.split(",") if v.strip())


def _list(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a batch run; defaults are written into each report."""

    domain: str = "disk:1"
    bc: str = "navier"
    mu: Optional[float] = None
    modes: int = 1
    resolution: Optional[str] = None
    doublings: int = 2
    method: str = "auto"
    mu_grid: str = "0.05:0.95:19"
    E: float = 12.0
    thickness: float = 1.0
    mass_per_area: float = 1.0
    identities: tuple = ()
    field: str = "poly:x3y"
    sign_variant: str = "both"
    birman_variant: str = "kappa"
    tolerance: float = 1e-8
    identity_tolerance: float = 1e-2
    margin_floor: float = 0.01
    stencil_order: int = 2
    output: Optional[str] = None
    threads: int = 1

    # parsed views ----------------------------------------------------
    @property
    def domain_spec(self) -> DomainSpec:
        return DomainSpec.parse(self.domain)

    @property
    def bc_kind(self) -> BCKind:
        return BCKind.parse(self.bc, mu=self.mu)

    @property
    def resolution_spec(self) -> Resolution:
        dom = self.domain_spec
        if self.resolution is None:
            return default_resolution(dom)
        return parse_resolution(self.resolution, dom)

    @property
    def mu_values(self) -> tuple:
        return parse_mu_grid(self.mu_grid)

    def validate(self) -> "RunConfig":
        checks = [
            ("domain", lambda: self.domain_spec),
            ("bc", lambda: self.bc_kind),
            ("resolution", lambda: self.resolution_spec),
            ("mu_grid", lambda: self.mu_values),
        ]
        for key, fn in checks:
            try:
                fn()
            except (ValueError, TypeError) as exc:
                raise ConfigError(str(exc), key=key) from None
        if not 1 <= self.modes <= MAX_MODES:
            raise ConfigError(f"modes must lie in 1..{MAX_MODES}", key="modes")
        if self.doublings < 2:
            raise ConfigError("a convergence study needs at least 2 doublings (3 resolutions)", key="doublings")
        if self.method not in ("auto", "modal", "2d"):
            raise ConfigError("method must be auto, modal or 2d", key="method")
        if self.sign_variant not in ("+", "-", "general", "both"):
            raise ConfigError("sign_variant must be +, -, general or both", key="sign_variant")
        if self.birman_variant not in ("kappa", "1/kappa"):
            raise ConfigError("birman_variant must be kappa or 1/kappa", key="birman_variant")
        if self.stencil_order not in (2, 3):
            raise ConfigError("stencil_order must be 2 or 3", key="stencil_order")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1", key="threads")
        for key in ("E", "thickness", "mass_per_area", "tolerance", "identity_tolerance", "margin_floor"):
            if getattr(self, key) <= 0:
                raise ConfigError("must be positive", key=key)
        if self.mu is not None and not 0 < self.mu < 1:
            raise ConfigError("Poisson ratio must lie in (0, 1)", key="mu")
        return self

    def merged(self, **overrides) -> "RunConfig":
        """Copy with the non-``None`` overrides applied (command-line flags win)."""
        clean = {k: v for k, v in overrides.items() if v is not None and v != ()}
        unknown = set(clean) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
        return replace(self, **clean)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_CONVERTERS = {
    "domain": str, "bc": str, "mu": float, "modes": int, "resolution": str, "doublings": int,
    "method": str, "mu_grid": str, "E": float, "thickness": float, "mass_per_area": float,
    "identities": _list, "field": str, "sign_variant": str, "birman_variant": str,
    "tolerance": float, "identity_tolerance": float, "margin_floor": float, "stencil_order": int,
    "output": str, "threads": int,
}


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` with line/key context."""
    values, seen = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key; allowed keys are {', '.join(sorted(_CONVERTERS))}",
                              line=lineno, key=key)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", line=lineno, key=key)
        seen[key] = lineno
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", line=lineno, key=key) from None
    cfg = RunConfig(**values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        if exc.key in seen:
            raise ConfigError(str(exc).split("] ", 1)[-1], line=seen[exc.key], key=exc.key) from None
        raise


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def thread_count(default: int = 1) -> int:
    """Worker threads from the environment override, else ``default``."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]`` on a thread pool; output order follows ``items``."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
