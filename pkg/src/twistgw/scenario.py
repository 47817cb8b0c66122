"""Scenario configs: schema, loading and construction of the model objects.

Configs are YAML documents validated by pydantic models that forbid unknown
keys. Every threshold a suite compares against lives in ``suites.tolerances``.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .geometry import ThetaMatrix, build_vielbein
from .grid import BoxGrid, ScalarField, StencilSpec
from .model import Configuration, GWParams
from .star import StarConfig

SCHEMA_VERSION = 1
CONFIG_DIR = Path(__file__).parent / "configs"


class ConfigError(ValueError):
    """A config that cannot be parsed or does not satisfy the schema."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        super().__init__(message)
        self.line = line
        self.field = field

    def diagnostic(self) -> dict:
        return {"error": "config", "message": str(self), "line": self.line, "field": self.field}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridBlock(_Strict):
    dim: int = 2
    half_width: float = 6.0
    points: int = 64
    margin: Optional[int] = None
    stencil_order: int = 8


class ThetaBlock(_Strict):
    blocks: Optional[list[float]] = None
    matrix: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _one_form(self):
        if (self.blocks is None) == (self.matrix is None):
            raise ValueError("give exactly one of theta.blocks or theta.matrix")
        return self

    def build(self) -> ThetaMatrix:
        if self.blocks is not None:
            return ThetaMatrix.block(self.blocks)
        return ThetaMatrix(np.array(self.matrix, dtype=float))


class TwistBlock(_Strict):
    family: Literal["identity", "sinusoidal", "shear", "file"] = "identity"
    amplitude: float = 0.0
    wavenumber: float = 1.0
    damping: Optional[float] = 2.0
    path: Optional[str] = None

    @model_validator(mode="after")
    def _file_needs_path(self):
        if self.family == "file" and not self.path:
            raise ValueError("twist.family 'file' needs twist.path")
        return self


class ParamsBlock(_Strict):
    mass_sq: Union[float, Literal["onshell"]] = 0.0
    lam: float = 0.0
    omega_sq: float = 0.0
    exploratory: bool = False


class StarBlock(_Strict):
    N: int = 4
    theta_scale: float = 1.0
    commutative: bool = False
    literal_xb: bool = False
    xt_mode: Literal["symmetrized", "pointwise"] = "symmetrized"


class FieldBlock(_Strict):
    family: Literal["zero", "gaussian", "gaussian_poly", "eigenmode", "onshell_ho"] = "gaussian"
    amplitude: float = 0.5
    center: Optional[list[float]] = None
    width: float = 1.5
    # gaussian_poly: list of [coefficient, power_0, ..., power_{D-1}]
    poly: list[list[float]] = Field(default_factory=list)
    # eigenmode: integer mode numbers per axis, sine modes vanishing on the faces
    modes: Optional[list[int]] = None


class Tolerances(_Strict):
    unit_law: float = 1e-14
    coordinate_commutator: float = 1e-10
    operator_identities: float = 1e-12
    reality: float = 1e-12
    slope_window: float = 0.5
    exact_floor: float = 1e-12
    trace_weighted: float = 1e-6
    trace_contrast: float = 10.0
    xtilde_identities: float = 1e-10
    vacuum: float = 1e-10
    commutative: float = 1e-7
    decomposition: float = 1e-6
    bookkeeping: float = 1e-5
    bookkeeping_eps: float = 1e-4
    nonconservation_ratio: float = 10.0
    simplified: float = 1e-6
    parity: float = 1e-10
    oracle: float = 1e-8
    poly_fixture: float = 1e-10
    j_routes: float = 1e-8
    antisymmetry: float = 1e-10
    assembly: float = 1e-10


class SuitesBlock(_Strict):
    checks: Optional[list[str]] = None
    skip: list[str] = Field(default_factory=list)
    random_fields: int = 20
    random_configs: int = 10
    oracle_points: int = 100
    orders: list[int] = Field(default_factory=lambda: [1, 2, 3])
    scales: list[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25])
    tolerances: Tolerances = Field(default_factory=Tolerances)


class OutputBlock(_Strict):
    dir: str = "twistgw-out"
    formats: list[Literal["json", "text", "csv"]] = Field(default_factory=lambda: ["json", "text", "csv"])
    snapshot: bool = False


class ScenarioConfig(_Strict):
    version: int
    name: str = "scenario"
    grid: GridBlock = Field(default_factory=GridBlock)
    theta: ThetaBlock
    twist: TwistBlock = Field(default_factory=TwistBlock)
    params: ParamsBlock = Field(default_factory=ParamsBlock)
    star: StarBlock = Field(default_factory=StarBlock)
    fields: FieldBlock = Field(default_factory=FieldBlock)
    suites: SuitesBlock = Field(default_factory=SuitesBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @field_validator("version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}; this build reads version {SCHEMA_VERSION}")
        return v

    def normal_form(self) -> dict:
        return self.model_dump(mode="json")

    def fingerprint(self) -> str:
        blob = json.dumps(self.normal_form(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _line_of(text: str, loc: tuple) -> int | None:
    """Best-effort line number of the key at ``loc`` in the YAML source."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            hit = None
            for k, v in node.value:
                if k.value == str(key):
                    hit = (k, v)
                    break
            if hit is None:
                return node.start_mark.line + 1
            if key == loc[-1]:
                return hit[0].start_mark.line + 1
            node = hit[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
    return node.start_mark.line + 1


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{source}: YAML syntax error: {exc}", line=line) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(err["loc"])
        dotted = ".".join(str(p) for p in loc)
        raise ConfigError(f"{source}: {dotted}: {err['msg']}", line=_line_of(text, loc), field=dotted) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def bundled_config(name: str) -> Path:
    return CONFIG_DIR / name


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.normal_form(), sort_keys=False)


# construction --------------------------------------------------------------

def build_grid(block: GridBlock) -> BoxGrid:
    spec = StencilSpec(block.stencil_order)
    margin = block.margin if block.margin is not None else spec.half_width + 2
    return BoxGrid(block.dim, block.half_width, block.points, margin)


def _envelope(grid: BoxGrid, damping: float | None) -> np.ndarray:
    if damping is None:
        return np.ones(grid.shape)
    return np.exp(-grid.radius_sq() / damping ** 2)


def build_twist(block: TwistBlock, grid: BoxGrid) -> list[ScalarField]:
    d = grid.dim
    xs = [grid.coordinate(mu) for mu in range(d)]
    if block.family == "file":
        from .io import read_snapshot

        fields, header = read_snapshot(block.path)
        if len(fields) != d or tuple(fields[0].shape) != grid.shape:
            raise ConfigError(f"twist file {block.path} does not match the grid", field="twist.path")
        return [ScalarField(grid, f) for f in fields]
    env = _envelope(grid, block.damping)
    out = [xs[a].copy() for a in range(d)]
    if block.family == "sinusoidal":
        for a in range(0, d, 2):
            out[a] = out[a] + block.amplitude * np.sin(block.wavenumber * xs[a + 1]) * env
    elif block.family == "shear":
        for a in range(0, d, 2):
            out[a] = out[a] + block.amplitude * xs[a + 1] * env
    return [ScalarField(grid, v) for v in out]


def onshell_frequencies(theta: ThetaMatrix, omega_sq: float) -> list[float]:
    """Oscillator frequencies ``2 Omega / theta_j`` of a block-diagonal ``Theta``."""
    d = theta.dim
    mat = theta.entries
    off = mat.copy()
    for j in range(0, d, 2):
        off[j, j + 1] = off[j + 1, j] = 0.0
    if np.any(off != 0):
        raise ConfigError("the on-shell oscillator field needs block-diagonal theta", field="fields.family")
    omega = float(np.sqrt(omega_sq))
    return [2.0 * omega / abs(mat[j, j + 1]) for j in range(0, d, 2)]


def onshell_mass_sq(theta: ThetaMatrix, omega_sq: float) -> float:
    """``m^2 = -sum_j 2 omega_j`` so that the oscillator ground state solves the field equation."""
    return -2.0 * sum(onshell_frequencies(theta, omega_sq))


def build_field(block: FieldBlock, grid: BoxGrid, theta: ThetaMatrix, omega_sq: float) -> ScalarField:
    d = grid.dim
    xs = [grid.coordinate(mu) for mu in range(d)]
    center = block.center or [0.0] * d
    if len(center) != d:
        raise ConfigError(f"fields.center needs {d} entries", field="fields.center")
    if block.family == "zero":
        return grid.zeros()
    if block.family in ("gaussian", "gaussian_poly"):
        r2 = sum((xs[mu] - center[mu]) ** 2 for mu in range(d))
        vals = block.amplitude * np.exp(-r2 / (2.0 * block.width ** 2))
        if block.family == "gaussian_poly":
            poly = np.zeros(grid.shape)
            for term in block.poly:
                if len(term) != d + 1:
                    raise ConfigError("fields.poly entries are [coefficient, powers...]", field="fields.poly")
                mono = np.full(grid.shape, term[0])
                for mu in range(d):
                    mono = mono * (xs[mu] - center[mu]) ** int(term[mu + 1])
                poly = poly + mono
            vals = vals * poly
        return ScalarField(grid, vals)
    if block.family == "eigenmode":
        modes = block.modes or [1] * d
        if len(modes) != d:
            raise ConfigError(f"fields.modes needs {d} entries", field="fields.modes")
        L = grid.half_width
        vals = np.full(grid.shape, block.amplitude)
        for mu in range(d):
            vals = vals * np.sin(modes[mu] * np.pi * (xs[mu] + L) / (2.0 * L))
        return ScalarField(grid, vals)
    # on-shell harmonic-oscillator ground state
    freqs = onshell_frequencies(theta, omega_sq)
    expo = np.zeros(grid.shape)
    for j, w in enumerate(freqs):
        expo = expo + w * (xs[2 * j] ** 2 + xs[2 * j + 1] ** 2)
    return ScalarField(grid, block.amplitude * np.exp(-0.5 * expo))


class Scenario:
    """A validated config together with the objects it describes."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.grid = build_grid(config.grid)
        self.stencil = StencilSpec(config.grid.stencil_order)
        self.theta = config.theta.build()
        if self.theta.dim != self.grid.dim:
            raise ConfigError("theta dimension differs from grid.dim", field="theta")
        p = config.params
        omega_sq = p.omega_sq
        if p.mass_sq == "onshell":
            if config.fields.family != "onshell_ho":
                raise ConfigError("params.mass_sq 'onshell' needs fields.family 'onshell_ho'", field="params.mass_sq")
            mass_sq = onshell_mass_sq(self.theta, omega_sq)
        else:
            mass_sq = float(p.mass_sq)
        self.params = GWParams(mass_sq, p.lam, omega_sq, p.exploratory)
        self.phi_a = build_twist(config.twist, self.grid)
        self.phi = build_field(config.fields, self.grid, self.theta, omega_sq)

    def configuration(self) -> Configuration:
        """Build the frame and star calculus; raises ``DegenerateFrame`` for a singular twist."""
        v = build_vielbein(self.phi_a, self.stencil)
        s = self.config.star
        sc = StarConfig(self.theta, v, N=s.N, theta_scale=s.theta_scale, commutative=s.commutative)
        return Configuration(self.phi, v, self.params, sc, s.xt_mode)

    @property
    def tolerances(self) -> Tolerances:
        return self.config.suites.tolerances

    @property
    def b_mode(self) -> str:
        return "literal" if self.config.star.literal_xb else "xtilde"
