"""Flat, line-oriented experiment configuration.

Format: `[section]` headers followed by `key = value` lines; `#` starts
a comment; blank lines ignored.  Unknown sections or keys are rejected
with the offending line number.  Coefficient values are expressions in
the element-center coordinates `x` (and `y` in 2D); matrix-valued
coefficients list their packed components separated by `;`
(1D: xx; 2D: xx; xy; yy).

Sections and keys (all optional, defaults in parentheses):

    [mesh]         dim (1), extents ("1.0", one float per axis),
                   resolution (64), levels (1)
    [coefficients] a ("1.0"), b ("1.0"), C ("0.0"), D ("0.0")
    [strategy]     seeds ("laminate zero"), budget (50)
    [tolerances]   solver_tol (1e-10), guard_scale (1e-8), eta (0.05),
                   dirac_tol (derived), tol_den (derived),
                   dist_tol (derived)
    [run]          window (8), seed (0), outdir ("runs/out")
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import energy, mesh as meshmod
from .errors import ConfigurationError

_SEED_RE = re.compile(
    r"^(zero|random|laminate(:\d+)?|laminate-perturbed(:[0-9.eE+-]+(:\d+)?)?)$")

_EXPR_NAMES = {
    "where": np.where, "abs": np.abs, "sign": np.sign,
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt,
    "minimum": np.minimum, "maximum": np.maximum, "pi": np.pi,
}


@dataclass
class RunConfig:
    dim: int = 1
    extents: tuple = (1.0,)
    resolution: int = 64
    levels: int = 1
    a_expr: str = "1.0"
    b_expr: str = "1.0"
    C_expr: str = "0.0"
    D_expr: str = "0.0"
    seeds: tuple = ("laminate", "zero")
    budget: int = 50
    solver_tol: float = 1e-10
    guard_scale: float = 1e-8
    eta: float = 0.05
    dirac_tol: float | None = None
    tol_den: float | None = None
    dist_tol: float | None = None
    window: int = 8
    seed: int = 0
    outdir: str = "runs/out"
    raw_lines: tuple = field(default_factory=tuple, repr=False)

    def build_meshes(self):
        """One mesh per refinement level, coarsest first."""
        extents = self.extents if len(self.extents) == self.dim \
            else self.extents * self.dim
        meshes = [meshmod.build_mesh(extents,
                                     (self.resolution,) * self.dim,
                                     dim=self.dim)]
        for _ in range(self.levels - 1):
            meshes.append(meshmod.refine(meshes[-1]))
        finest = meshes[-1]
        if np.any(finest.shape % self.window != 0):
            raise ConfigurationError(
                f"window {self.window} does not divide the finest "
                f"element counts {tuple(finest.shape)}")
        return meshes

    def build_coeffs(self, mesh):
        """Evaluate the coefficient expressions at element centers."""
        a = _eval_scalar(self.a_expr, mesh, "a")
        b = _eval_scalar(self.b_expr, mesh, "b")
        C = _eval_matrix(self.C_expr, mesh, "C")
        D = _eval_matrix(self.D_expr, mesh, "D")
        return energy.CoefficientSet(mesh, a, b, C, D)

    def echo(self):
        """Config as a flat dict for the report."""
        return {
            "mesh": {"dim": self.dim, "extents": list(self.extents),
                     "resolution": self.resolution, "levels": self.levels},
            "coefficients": {"a": self.a_expr, "b": self.b_expr,
                             "C": self.C_expr, "D": self.D_expr},
            "strategy": {"seeds": list(self.seeds), "budget": self.budget},
            "tolerances": {"solver_tol": self.solver_tol,
                           "guard_scale": self.guard_scale,
                           "eta": self.eta, "dirac_tol": self.dirac_tol,
                           "tol_den": self.tol_den,
                           "dist_tol": self.dist_tol},
            "run": {"window": self.window, "seed": self.seed,
                    "outdir": self.outdir},
        }


def _eval_expr(expr, mesh, key):
    if "__" in expr:
        raise ConfigurationError(f"illegal expression for {key!r}")
    names = dict(_EXPR_NAMES)
    names["x"] = mesh.centers[:, 0]
    if mesh.dim > 1:
        names["y"] = mesh.centers[:, 1]
    try:
        val = eval(expr, {"__builtins__": {}}, names)
    except Exception as exc:
        raise ConfigurationError(
            f"cannot evaluate expression for {key!r}: {exc}") from exc
    return np.broadcast_to(np.asarray(val, float), (mesh.n_elem,)).copy()


def _eval_scalar(expr, mesh, key):
    return _eval_expr(expr, mesh, key)


def _eval_matrix(expr, mesh, key):
    parts = [p.strip() for p in expr.split(";")]
    if len(parts) == 1 and mesh.n_comp == 3:
        parts = [parts[0], "0.0", parts[0]]   # scalar means that * identity
    if len(parts) != mesh.n_comp:
        raise ConfigurationError(
            f"{key!r} needs {mesh.n_comp} packed components "
            f"(got {len(parts)})")
    cols = [_eval_expr(p, mesh, key) for p in parts]
    return np.stack(cols, axis=1)


def _parse_int(text, key, line_no, minimum=None):
    try:
        val = int(text)
    except ValueError:
        raise ConfigurationError(
            f"line {line_no}: {key!r} must be an integer, got {text!r}")
    if minimum is not None and val < minimum:
        raise ConfigurationError(
            f"line {line_no}: {key!r} must be >= {minimum}, got {val}")
    return val


def _parse_float(text, key, line_no, positive=False):
    try:
        val = float(text)
    except ValueError:
        raise ConfigurationError(
            f"line {line_no}: {key!r} must be a number, got {text!r}")
    if positive and val <= 0:
        raise ConfigurationError(
            f"line {line_no}: {key!r} must be positive, got {val}")
    return val


def _parse_extents(text, key, line_no):
    try:
        vals = tuple(float(t) for t in text.split())
    except ValueError:
        raise ConfigurationError(
            f"line {line_no}: {key!r} must be floats, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise ConfigurationError(
            f"line {line_no}: {key!r} must be positive floats")
    return vals


def _parse_seeds(text, key, line_no):
    specs = tuple(text.split())
    if not specs:
        raise ConfigurationError(f"line {line_no}: {key!r} must list at "
                                 "least one seed")
    for s in specs:
        if not _SEED_RE.match(s):
            raise ConfigurationError(
                f"line {line_no}: unknown seed spec {s!r}")
    return specs


_SCHEMA = {
    "mesh": {
        "dim": lambda t, ln: _parse_int(t, "dim", ln, 1),
        "extents": lambda t, ln: _parse_extents(t, "extents", ln),
        "resolution": lambda t, ln: _parse_int(t, "resolution", ln, 1),
        "levels": lambda t, ln: _parse_int(t, "levels", ln, 1),
    },
    "coefficients": {k: (lambda t, ln: t) for k in ("a", "b", "C", "D")},
    "strategy": {
        "seeds": lambda t, ln: _parse_seeds(t, "seeds", ln),
        "budget": lambda t, ln: _parse_int(t, "budget", ln, 1),
    },
    "tolerances": {
        k: (lambda key: (lambda t, ln: _parse_float(t, key, ln,
                                                    positive=True)))(k)
        for k in ("solver_tol", "guard_scale", "eta", "dirac_tol",
                  "tol_den", "dist_tol")
    },
    "run": {
        "window": lambda t, ln: _parse_int(t, "window", ln, 1),
        "seed": lambda t, ln: _parse_int(t, "seed", ln, 0),
        "outdir": lambda t, ln: t,
    },
}

_FIELD_OF = {
    ("mesh", "dim"): "dim", ("mesh", "extents"): "extents",
    ("mesh", "resolution"): "resolution", ("mesh", "levels"): "levels",
    ("coefficients", "a"): "a_expr", ("coefficients", "b"): "b_expr",
    ("coefficients", "C"): "C_expr", ("coefficients", "D"): "D_expr",
    ("strategy", "seeds"): "seeds", ("strategy", "budget"): "budget",
    ("tolerances", "solver_tol"): "solver_tol",
    ("tolerances", "guard_scale"): "guard_scale",
    ("tolerances", "eta"): "eta",
    ("tolerances", "dirac_tol"): "dirac_tol",
    ("tolerances", "tol_den"): "tol_den",
    ("tolerances", "dist_tol"): "dist_tol",
    ("run", "window"): "window", ("run", "seed"): "seed",
    ("run", "outdir"): "outdir",
}


def parse_config_text(text):
    """Parse and validate configuration text into a RunConfig."""
    values = {}
    section = None
    lines = text.splitlines()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigurationError(
                    f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"line {line_no}: expected 'key = value', got {raw!r}")
        if section is None:
            raise ConfigurationError(
                f"line {line_no}: key outside of any [section]")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _SCHEMA[section]:
            raise ConfigurationError(
                f"line {line_no}: unknown key {key!r} in [{section}]")
        values[_FIELD_OF[(section, key)]] = \
            _SCHEMA[section][key](val, line_no)

    cfg = RunConfig(raw_lines=tuple(lines), **values)
    if len(cfg.extents) == 1 and cfg.dim > 1:
        cfg.extents = cfg.extents * cfg.dim
    if cfg.dim not in (1, 2):
        raise ConfigurationError(f"dim must be 1 or 2, got {cfg.dim}")
    if len(cfg.extents) != cfg.dim:
        raise ConfigurationError(
            f"extents needs {cfg.dim} values, got {len(cfg.extents)}")
    return cfg


def parse_config(path):
    """Read, parse, and validate a configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}")
    return parse_config_text(text)
