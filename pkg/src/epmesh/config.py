"""Run configuration: a small ``key = value`` format with bracketed sections.

Example::

    [model]
    kind = epdiff
    alpha = 0.3133

    [grid]
    Lx = 2*pi
    nx = 128

Numeric values may be simple arithmetic in numbers and ``pi``.
"""

import ast
import math
import operator
from dataclasses import dataclass, fields

from .models import ModelKind, ModelSpec

DEFAULT_DT = 0.0204
DEFAULT_TOL = 1e-9


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class SimConfig:
    model: str = "epdiff"
    alpha: float = 0.3133
    g: float = 1.0
    depth_force: str = "exact"
    Lx: float = 2 * math.pi
    Ly: float = 2 * math.pi
    nx: int = 128
    ny: int = 128
    particles_per_cell: int = 16
    density: float = 1.0
    dt: float = DEFAULT_DT
    t_end: float = 1.0
    fp_tol: float = DEFAULT_TOL
    fp_max_iter: int = 50
    cg_tol: float = DEFAULT_TOL
    cg_max_iter: int = 500
    preconditioner: str = "jacobi"
    output_dir: str = "out"
    snapshot_stride: int = 10
    dump_particles: bool = False
    dump_components: bool = False
    figures: bool = True
    ic: str = "two_lines"
    amplitude: float = 1.0
    width: float = 0.2
    separation: float = math.pi / 2
    orientation: str = "x"
    length: float = math.pi
    offset: float = 0.0
    jitter: float = 0.0
    seed: int = 0

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def model_spec(self):
        return ModelSpec(ModelKind(self.model), self.alpha, self.g, self.depth_force)


# section -> {config key: SimConfig field}
SCHEMA = {
    "model": {"kind": "model", "alpha": "alpha", "g": "g", "depth_force": "depth_force"},
    "grid": {"Lx": "Lx", "Ly": "Ly", "nx": "nx", "ny": "ny"},
    "particles": {"per_cell": "particles_per_cell", "density": "density"},
    "time": {"dt": "dt", "t_end": "t_end", "fp_tol": "fp_tol", "fp_max_iter": "fp_max_iter",
             "cg_tol": "cg_tol", "cg_max_iter": "cg_max_iter", "preconditioner": "preconditioner"},
    "output": {"dir": "output_dir", "snapshot_stride": "snapshot_stride",
               "dump_particles": "dump_particles", "dump_components": "dump_components",
               "figures": "figures"},
    "ic": {"name": "ic", "amplitude": "amplitude", "width": "width", "separation": "separation",
           "orientation": "orientation", "length": "length", "offset": "offset",
           "jitter": "jitter", "seed": "seed"},
}

_TYPES = {f.name: f.type for f in fields(SimConfig)}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_number(text):
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ValueError(text)

    return ev(ast.parse(text, mode="eval"))


def _convert(field_name, raw):
    kind = _TYPES[field_name]
    if field_name == "length" and raw.lower() == "none":
        return None
    if kind is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    if kind is int:
        v = _eval_number(raw)
        if float(v) != int(v):
            raise ValueError(raw)
        return int(v)
    if kind is float:
        v = float(_eval_number(raw))
        if not math.isfinite(v):
            raise ValueError(raw)
        return v
    return raw


def parse_config(text):
    """Parse and validate configuration text into a :class:`SimConfig`."""
    values = {}
    origin = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, key)
        name = SCHEMA[section][key]
        try:
            values[name] = _convert(name, raw)
        except (ValueError, SyntaxError):
            raise ConfigError(f"invalid value {raw!r} for {key}", lineno, key) from None
        origin[name] = (lineno, key)
    cfg = SimConfig(**values)
    validate(cfg, origin)
    return cfg


def validate(cfg, origin=None):
    origin = origin or {}

    def fail(name, message):
        line, key = origin.get(name, (None, name))
        raise ConfigError(f"{key}: {message}", line, key)

    if cfg.model not in ("epdiff", "swalpha"):
        fail("model", f"unknown model {cfg.model!r}")
    if cfg.depth_force not in ("exact", "approx"):
        fail("depth_force", "must be 'exact' or 'approx'")
    if cfg.alpha < 0:
        fail("alpha", "must be non-negative")
    if cfg.model == "swalpha" and cfg.g <= 0:
        fail("g", "must be positive")
    for name in ("Lx", "Ly", "dt", "fp_tol", "cg_tol", "density"):
        if not getattr(cfg, name) > 0:
            fail(name, "must be positive")
    # t_end = 0 records the initial state only
    if not cfg.t_end >= 0:
        fail("t_end", "must be non-negative")
    for name in ("nx", "ny"):
        if getattr(cfg, name) < 8:
            fail(name, "must be at least 8")
    if cfg.particles_per_cell not in (1, 4, 9, 16, 25):
        fail("particles_per_cell", "must be a perfect square in {1, 4, 9, 16, 25}")
    for name in ("fp_max_iter", "cg_max_iter", "snapshot_stride"):
        if getattr(cfg, name) < 1:
            fail(name, "must be at least 1")
    if cfg.preconditioner not in ("jacobi", "ic", "none"):
        fail("preconditioner", "must be 'jacobi', 'ic' or 'none'")
    if cfg.ic not in ("two_lines", "uniform"):
        fail("ic", "must be 'two_lines' or 'uniform'")
    if cfg.orientation not in ("x", "y"):
        fail("orientation", "must be 'x' or 'y'")
    if cfg.length is not None and cfg.length <= 0:
        fail("length", "must be positive or none")
    if cfg.width <= 0:
        fail("width", "must be positive")
    if not 0 <= cfg.jitter < 0.5:
        fail("jitter", "must be in [0, 0.5)")
    if cfg.ic == "two_lines" and cfg.model != "epdiff":
        fail("ic", "the two-line state is defined for EP-Diff only")
