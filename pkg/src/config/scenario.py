"""
Scenario files: flat KEY=value text, one setting per line

Parsed with python-dotenv so that every key keeps the line it came from
and validation errors can point at it.
"""
import io
from pathlib import Path
from typing import Dict, List, Literal, Optional

from dotenv.parser import parse_stream
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from utils.errors import ConfigError
from .settings import settings


def _split_list(value):
    if isinstance(value, str):
        return [tok for tok in value.replace(" ", ",").split(",") if tok]
    return value


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # graph
    graph: Literal["complete", "cycle"] = "complete"
    n: Optional[int] = None
    marked: List[int] = [0]
    edge_list: Optional[str] = None
    padding: int = 0

    # dynamics
    g: float = 1.0
    gamma: Optional[float] = None
    zeta: Optional[List[int]] = None
    zeta_marked: int = 0
    zeta_unmarked: int = 0
    control: Literal["zero", "constant", "analytic", "spline"] = "zero"
    control_values: Optional[List[float]] = None
    spline_file: Optional[str] = None
    t_end: Optional[float] = None
    samples: int = 201

    # integrator
    rel_tol: Optional[float] = None
    abs_tol: Optional[float] = None

    # optimizer
    budget: Optional[int] = None
    seed: Optional[int] = None
    bound: float = Field(default_factory=lambda: settings.optimizer.bound)
    spline_points: int = Field(default_factory=lambda: settings.optimizer.spline_points)
    horizon: Optional[float] = None
    horizon_min: float = Field(default_factory=lambda: settings.optimizer.horizon_min)
    horizon_max: float = Field(default_factory=lambda: settings.optimizer.horizon_max)
    zeta_values: List[int] = [1, 2]
    tie_unmarked_zeta: bool = True
    objective: Literal["terminal", "first_peak"] = "terminal"

    # error scan
    nu: float = 0.5
    nu_star: float = 0.0
    n_range: List[int] = [4, 8, 16, 32, 64, 100]
    timing_delay: Optional[float] = None

    output: Optional[str] = None

    @field_validator("marked", "zeta", "control_values", "zeta_values", mode="before")
    @classmethod
    def _comma_list(cls, value):
        return _split_list(value)

    @field_validator("n_range", mode="before")
    @classmethod
    def _range_list(cls, value):
        """Comma list or an inclusive range a..b[:step]"""
        if isinstance(value, str) and ".." in value:
            body, _, step = value.partition(":")
            start, stop = body.split("..")
            return list(range(int(start), int(stop) + 1, int(step or 1)))
        return _split_list(value)

    @field_validator("samples", "spline_points")
    @classmethod
    def _at_least_two(cls, value):
        if value < 2:
            raise ValueError("must be at least 2")
        return value

    @field_validator("rel_tol", "abs_tol", "bound", "t_end", "horizon")
    @classmethod
    def _positive(cls, value):
        if value is not None and value <= 0:
            raise ValueError("must be positive")
        return value

    @model_validator(mode="after")
    def _check(self) -> 'ScenarioConfig':
        if self.edge_list is None and self.n is None:
            raise ValueError("n is required unless edge_list is given")
        if self.control == "constant" and self.control_values is None:
            raise ValueError("control=constant needs control_values")
        if self.control == "spline" and self.spline_file is None:
            raise ValueError("control=spline needs spline_file")
        if self.padding < 0:
            raise ValueError("padding must be non-negative")
        if not 0 < self.horizon_min < self.horizon_max:
            raise ValueError("need 0 < horizon_min < horizon_max")
        return self

    def header_lines(self) -> List[str]:
        """Resolved settings as KEY=value lines, in field order"""
        lines = []
        for key, value in self.model_dump(exclude_none=True).items():
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key}={value}")
        return lines


FILE_KEYS = ("edge_list", "spline_file")


def parse_scenario_text(text: str, base_dir: Optional[Path] = None) -> ScenarioConfig:
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}

    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigError(f"cannot parse '{binding.original.string.strip()}'", line=line)
        if binding.key is None:
            continue
        key = binding.key.strip().lower()
        if key not in ScenarioConfig.model_fields:
            raise ConfigError(f"unknown key '{binding.key}'", line=line)
        if key in values:
            raise ConfigError(f"'{key}' set twice (first on line {lines[key]})", line=line)
        if binding.value is None or binding.value.strip() == "":
            raise ConfigError(f"'{key}' has no value", line=line)
        values[key] = binding.value.strip()
        lines[key] = line

    for key in FILE_KEYS:
        if key in values:
            path = Path(values[key])
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"{key} file not found: {path}", line=lines[key])
            values[key] = str(path)

    try:
        return ScenarioConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first["loc"] else None
        where = f"'{field}': " if field else ""
        raise ConfigError(f"{where}{first['msg']}", line=lines.get(field))


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}")
    config = parse_scenario_text(path.read_text(), base_dir=path.parent)
    logger.info(f"Loaded scenario {path}")
    return config
