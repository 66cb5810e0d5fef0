"""Plain-text run configuration: '[section]' headers and 'key = value' lines.

The format is deliberately flat so any language can parse it.  Unknown
sections or keys are rejected, and every parse error carries the offending
line number.  Example:

    [model]
    alpha = 0.6
    eps = 0.01

    [mesh]
    M = 100
    T = 1.0
    N = 40
    kind = uniform

    [solver]
    scheme = sftr

    [output]
    ic = random
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .grid import Grid2D
from .stepper import RunConfig, Scheme, TimeMesh

__all__ = ["CliConfig", "ConfigError", "parse_config"]


class ConfigError(ValueError):
    """Config parse/validation failure; ``kind`` is MISSING_KEY or BAD_VALUE."""

    def __init__(self, kind: str, message: str, line: int = 0):
        self.kind = kind
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"{kind}{where}: {message}")


_SCHEMA = {
    "model": {"alpha", "eps"},
    "mesh": {"M", "a", "b", "T", "N", "kind", "gamma"},
    "solver": {"scheme", "fp_tol", "fp_max_iter", "seed"},
    "output": {"dir", "ic", "snapshots"},
}
_REQUIRED = {"model": {"alpha", "eps"}, "mesh": {"M", "T", "N"}, "solver": {"scheme"}}

_SCHEMES = {
    "sftr": Scheme.SFTR_HALF,
    "fbdf2": Scheme.FBDF2,
    "l21sigma": Scheme.L21SIGMA,
}


@dataclass
class CliConfig:
    """A validated RunConfig plus the output-side switches."""

    run: RunConfig
    out_dir: Path
    ic: str  # random | sine | file:PATH
    snapshot_times: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)  # section -> key -> value, echoed in headers


def _scan(path) -> dict:
    """Read sections into {section: {key: (value, line)}} with line numbers."""
    sections: dict = {}
    current = None
    with open(path) as fh:
        for lineno, rawline in enumerate(fh, start=1):
            line = rawline.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                if current not in _SCHEMA:
                    raise ConfigError("BAD_VALUE", f"unknown section [{current}]", lineno)
                sections.setdefault(current, {})
                continue
            if "=" not in line:
                raise ConfigError("BAD_VALUE", f"expected 'key = value', got {line!r}", lineno)
            if current is None:
                raise ConfigError("BAD_VALUE", "key before any [section] header", lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _SCHEMA[current]:
                raise ConfigError("BAD_VALUE", f"unknown key '{key}' in [{current}]", lineno)
            if key in sections[current]:
                raise ConfigError("BAD_VALUE", f"duplicate key '{key}'", lineno)
            sections[current][key] = (value, lineno)
    return sections


def _take(sections, section, key, convert, default=None, required=False):
    entry = sections.get(section, {}).get(key)
    if entry is None:
        if required:
            raise ConfigError("MISSING_KEY", f"[{section}] {key} is required")
        return default
    value, lineno = entry
    try:
        return convert(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError("BAD_VALUE", f"[{section}] {key} = {value!r}: {exc}", lineno)


def parse_config(path) -> CliConfig:
    """Parse and validate a config file into a CliConfig."""
    sections = _scan(path)
    for section, keys in _REQUIRED.items():
        for key in keys:
            if key not in sections.get(section, {}):
                raise ConfigError("MISSING_KEY", f"[{section}] {key} is required")

    alpha = _take(sections, "model", "alpha", float, required=True)
    eps = _take(sections, "model", "eps", float, required=True)
    M = _take(sections, "mesh", "M", int, required=True)
    a = _take(sections, "mesh", "a", float, 0.0)
    b = _take(sections, "mesh", "b", float, 1.0)
    T = _take(sections, "mesh", "T", float, required=True)
    N = _take(sections, "mesh", "N", int, required=True)
    kind = _take(sections, "mesh", "kind", str, "uniform")
    gamma = _take(sections, "mesh", "gamma", float, 1.0)
    scheme_name = _take(sections, "solver", "scheme", str, required=True)
    fp_tol = _take(sections, "solver", "fp_tol", float, 1e-6)
    fp_max_iter = _take(sections, "solver", "fp_max_iter", int, 100)
    seed = _take(sections, "solver", "seed", int, None)
    out_dir = _take(sections, "output", "dir", str, ".")
    ic = _take(sections, "output", "ic", str, "random")
    snapshots = _take(sections, "output", "snapshots", str, "")

    def err(section, key, message):
        line = sections.get(section, {}).get(key, ("", 0))[1]
        raise ConfigError("BAD_VALUE", f"[{section}] {key}: {message}", line)

    if not (0.0 < alpha <= 1.0):
        err("model", "alpha", f"order {alpha} outside (0, 1]")
    if eps <= 0:
        err("model", "eps", "interface width must be positive")
    if scheme_name not in _SCHEMES:
        err("solver", "scheme", f"unknown scheme {scheme_name!r}, expected one of {sorted(_SCHEMES)}")
    scheme = _SCHEMES[scheme_name]
    if kind not in ("uniform", "graded"):
        err("mesh", "kind", f"unknown mesh kind {kind!r}")
    if kind == "graded" and scheme is not Scheme.L21SIGMA:
        err("mesh", "kind", f"scheme {scheme_name} requires a uniform mesh")
    if ic not in ("random", "sine") and not ic.startswith("file:"):
        err("output", "ic", f"expected random, sine, or file:PATH, got {ic!r}")

    try:
        grid = Grid2D(a, b, M)
        mesh = (
            TimeMesh.uniform(T, N)
            if kind == "uniform"
            else TimeMesh.graded(T, N, gamma)
        )
        run_config = RunConfig(
            alpha=alpha,
            eps=eps,
            grid=grid,
            mesh=mesh,
            scheme=scheme,
            fp_tol=fp_tol,
            fp_max_iter=fp_max_iter,
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError("BAD_VALUE", str(exc))

    snapshot_times = []
    if snapshots.strip():
        line = sections["output"]["snapshots"][1]
        for part in snapshots.split(","):
            try:
                snapshot_times.append(float(part.strip()))
            except ValueError:
                raise ConfigError(
                    "BAD_VALUE", f"[output] snapshots: bad time {part.strip()!r}", line
                )

    raw = {sec: {k: v for k, (v, _) in kv.items()} for sec, kv in sections.items()}
    return CliConfig(run_config, Path(out_dir), ic, snapshot_times, raw)
