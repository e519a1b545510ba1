"""INI run configuration with per-manifold defaults and line-numbered validation.

Sections and keys (all optional; unknown keys are rejected)::

    [grid]         manifold, n, length
    [function]     min_pos, max_pos, rho0, amplitude
    [spectral]     k_list, t_list, degrees
    [asymptotics]  convergence_k, convergence_t, point_half_width, point_samples,
                   decay_k, far_field_k, bochner_k, eps, bochner_eps, D, n0,
                   factor, x_norm, trials, slack
    [morse]        k, t, trace_k, trace_t
    [tolerances]   convergence_rel, trace_limit, mckean_singer_rel
    [run]          seed, output_dir

Numbers may be written as arithmetic in ``pi`` (``3*pi/2``); lists are
comma-separated.  On the torus the same profile is used along both axes.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import os
from dataclasses import asdict, dataclass, field, fields

from .complex import (
    MorseProfile1D,
    blended_morse_function_1d,
    build_circle_complex,
    build_torus_complex,
    max_admissible_k,
    product_morse_function_2d,
)
from .errors import ConfigurationError, WittenLabError

OUTPUT_DIR_ENV = "WITTENLAB_OUTPUT_DIR"


@dataclass
class RunConfig:
    manifold: str = "circle"
    n: int = 2048
    length: float = 2 * math.pi
    min_pos: float = math.pi / 2
    max_pos: float = 3 * math.pi / 2
    rho0: float = 0.6
    amplitude: float = 1.0
    k_list: list = field(default_factory=lambda: [0.0, 4.0, 16.0, 64.0])
    t_list: list = field(default_factory=lambda: [0.01, 0.1, 1.0])
    degrees: list = field(default_factory=list)
    convergence_k: list = field(default_factory=lambda: [25.0, 50.0, 100.0, 200.0])
    convergence_t: list = field(default_factory=lambda: [1.0])
    point_half_width: float = 2.0
    point_samples: int = 9
    decay_k: float = 400.0
    far_field_k: list = field(default_factory=lambda: [16.0, 64.0, 256.0])
    bochner_k: float = 256.0
    eps: float = 0.25
    bochner_eps: float = 0.4
    D: float = 2.0
    n0: float = 4.0
    factor: float = 10.0
    x_norm: float = 8.0
    trials: int = 50
    slack: float = 0.1
    morse_k: float = 64.0
    morse_t: float = 8.0
    trace_k: list = field(default_factory=lambda: [64.0, 128.0, 256.0])
    trace_t: list = field(default_factory=lambda: [2.0, 4.0, 8.0])
    convergence_rel: float = 0.05
    trace_limit: float = 0.05
    mckean_singer_rel: float = 1e-8
    seed: int = 0
    output_dir: str = ""

    @property
    def dim(self):
        return 1 if self.manifold == "circle" else 2

    def build(self):
        """Return ``(complex, f)`` for this configuration."""
        if self.manifold == "circle":
            cx = build_circle_complex(self.n, self.length)
            f = blended_morse_function_1d(cx, self.min_pos, self.max_pos, self.rho0, self.amplitude)
        else:
            cx = build_torus_complex(self.n, self.n, self.length, self.length)
            prof = MorseProfile1D(self.length, self.min_pos, self.max_pos, self.rho0, self.amplitude)
            f = product_morse_function_2d(cx, prof, prof)
        return cx, f

    def all_k(self):
        return set(self.k_list) | set(self.convergence_k) | set(self.far_field_k) | set(self.trace_k) | {
            self.decay_k, self.bochner_k, self.morse_k}

    def validate(self, k_values=None):
        if self.manifold not in ("circle", "torus"):
            raise ConfigurationError(f"manifold must be 'circle' or 'torus', got {self.manifold!r}")
        for name in ("k_list", "t_list", "convergence_k", "convergence_t", "far_field_k", "trace_k", "trace_t"):
            if not getattr(self, name):
                raise ConfigurationError(f"{name} must be nonempty")
        for name in ("convergence_rel", "trace_limit", "mckean_singer_rel", "slack", "factor", "n0"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if any(t <= 0 for t in [*self.t_list, *self.convergence_t, *self.trace_t, self.morse_t]):
            raise ConfigurationError("times must be positive")
        if not 0 < self.eps < 0.5 or not 0 < self.bochner_eps < 0.5:
            raise ConfigurationError("eps must lie in (0, 1/2)")
        if not self.D > 1:
            raise ConfigurationError(f"D must exceed 1, got {self.D}")
        if any(r < 0 or r > self.dim for r in self.degrees):
            raise ConfigurationError(f"degrees must lie in [0, {self.dim}]")
        try:
            cx, f = self.build()
        except WittenLabError as exc:
            raise ConfigurationError(str(exc)) from exc
        k_max = max_admissible_k(cx, f)
        values = self.all_k() if k_values is None else set(k_values)
        too_big = sorted(k for k in values if k > k_max)
        if too_big:
            raise ConfigurationError(
                f"k={too_big[-1]:g} exceeds the overflow guard for this grid; max admissible k is {k_max:.6g}"
            )
        if any(k < 0 for k in values):
            raise ConfigurationError("k must be non-negative")
        return cx, f

    def manifest(self):
        return asdict(self)


TORUS_DEFAULTS = {"n": 32, "rho0": 0.6, "morse_k": 64.0, "morse_t": 8.0, "trace_k": [16.0, 32.0, 64.0],
                  "trace_limit": 0.1}

# (section, key) -> RunConfig attribute
SCHEMA = {
    ("grid", "manifold"): "manifold",
    ("grid", "n"): "n",
    ("grid", "length"): "length",
    ("function", "min_pos"): "min_pos",
    ("function", "max_pos"): "max_pos",
    ("function", "rho0"): "rho0",
    ("function", "amplitude"): "amplitude",
    ("spectral", "k_list"): "k_list",
    ("spectral", "t_list"): "t_list",
    ("spectral", "degrees"): "degrees",
    ("asymptotics", "convergence_k"): "convergence_k",
    ("asymptotics", "convergence_t"): "convergence_t",
    ("asymptotics", "point_half_width"): "point_half_width",
    ("asymptotics", "point_samples"): "point_samples",
    ("asymptotics", "decay_k"): "decay_k",
    ("asymptotics", "far_field_k"): "far_field_k",
    ("asymptotics", "bochner_k"): "bochner_k",
    ("asymptotics", "eps"): "eps",
    ("asymptotics", "bochner_eps"): "bochner_eps",
    ("asymptotics", "d"): "D",
    ("asymptotics", "n0"): "n0",
    ("asymptotics", "factor"): "factor",
    ("asymptotics", "x_norm"): "x_norm",
    ("asymptotics", "trials"): "trials",
    ("asymptotics", "slack"): "slack",
    ("morse", "k"): "morse_k",
    ("morse", "t"): "morse_t",
    ("morse", "trace_k"): "trace_k",
    ("morse", "trace_t"): "trace_t",
    ("tolerances", "convergence_rel"): "convergence_rel",
    ("tolerances", "trace_limit"): "trace_limit",
    ("tolerances", "mckean_singer_rel"): "mckean_singer_rel",
    ("run", "seed"): "seed",
    ("run", "output_dir"): "output_dir",
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text):
    """Evaluate a numeric literal or arithmetic over ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc


def _coerce(attr, raw):
    default = RunConfig.__dataclass_fields__[attr]
    kind = default.type
    if attr in ("manifold", "output_dir"):
        return raw.strip()
    if kind == "list":
        items = [s for s in raw.split(",") if s.strip()]
        if attr == "degrees":
            return [int(parse_number(s)) for s in items]
        return [parse_number(s) for s in items]
    if kind == "int":
        value = parse_number(raw)
        if value != int(value):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    return parse_number(raw)


def _key_lines(text):
    lines, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip().lower()
            lines.setdefault((section, None), no)
        elif section is not None and ("=" in s or ":" in s):
            key = s.split("=", 1)[0].split(":", 1)[0].strip().lower()
            lines[section, key] = no
    return lines


def load_config(path, overrides=None):
    """Parse an INI file into a validated :class:`RunConfig`.

    ``overrides`` maps attribute names to values applied after the file.
    """
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, source=str(path), overrides=overrides)


def parse_config(text, source="<string>", overrides=None):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    lines = _key_lines(text)
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            where = f"{source}:{lines.get((section.lower(), key), '?')}"
            attr = SCHEMA.get((section.lower(), key))
            if attr is None:
                raise ConfigurationError(f"{where}: unknown key {key!r} in section [{section}]")
            try:
                values[attr] = _coerce(attr, raw)
            except ValueError as exc:
                raise ConfigurationError(f"{where}: {exc}") from exc
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return make_config(values)


def make_config(values=None):
    """RunConfig from partial values, filling manifold-specific defaults."""
    values = dict(values or {})
    manifold = values.get("manifold", "circle")
    base = dict(TORUS_DEFAULTS) if manifold == "torus" else {}
    base.update(values)
    unknown = set(base) - {f.name for f in fields(RunConfig)}
    if unknown:
        raise ConfigurationError(f"unknown settings: {sorted(unknown)}")
    cfg = RunConfig(**base)
    cfg.validate()
    return cfg


def resolve_output_dir(cfg, cli_value=None):
    """CLI flag, then the environment variable, then the config, then ``./wittenlab-output``."""
    out = cli_value or os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir or "wittenlab-output"
    os.makedirs(out, exist_ok=True)
    return out
