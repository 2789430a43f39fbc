"""Sweep configuration: YAML file -> validated :class:`SweepConfig`.

Unknown keys anywhere in the file are errors, so a typo such as
``emax_grid`` fails loudly instead of silently running the default grid.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..aggregation import AggregateFn
from ..dataset import SynthKind, SynthSpec
from ..predictors import InvalidSpecError, PredictorKind, PredictorSpec

__all__ = [
    "ConfigError",
    "DataError",
    "DatasetConfig",
    "GridConfig",
    "PredictorConfig",
    "SweepConfig",
    "TopologyConfig",
    "load_config",
    "parse_config",
]


class ConfigError(ValueError):
    """Malformed or invalid configuration (CLI exit code 1)."""


class DataError(RuntimeError):
    """Dataset missing, unreadable, or lacking requested nodes (CLI exit code 2)."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Strict):
    start: float = 0.1
    stop: float = 5.0
    count: int = 50
    values: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check(self) -> "GridConfig":
        if self.values is not None:
            if not self.values:
                raise ValueError("values must not be empty")
            if any(not v > 0 for v in self.values):
                raise ValueError("every margin must be > 0")
            return self
        if not self.start > 0:
            raise ValueError("start must be > 0 (error margins are strictly positive)")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.count > 1 and self.stop < self.start:
            raise ValueError("stop must be >= start")
        return self

    def margins(self) -> list[float]:
        if self.values is not None:
            return sorted(set(float(v) for v in self.values))
        if self.count == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.count - 1)
        # rounding keeps 0.1-step grids free of representation noise (0.30000000000000004)
        return [round(self.start + i * step, 12) for i in range(self.count)]


class PredictorConfig(_Strict):
    kind: PredictorKind
    order: int = 4
    arma_p: int = 2
    arma_q: int = 2
    train_window: int = 20
    mu0: float = 0.5
    vss_alpha: float = 0.97
    vss_gamma: float = 4.8e-4
    mu_min: float = 1e-4
    mu_max: float = 1.0
    normalize: bool = True

    def to_spec(self) -> PredictorSpec:
        return PredictorSpec(**self.model_dump())


class SynthConfig(_Strict):
    node_id: int
    kind: SynthKind
    length: int = Field(ge=1)
    seed: int = 0
    level: float = 20.0
    slope: float = 0.0
    amplitude: float = 1.0
    period: float = 100.0
    noise_sd: float = 0.0
    step_sd: float = 0.1

    def to_spec(self) -> SynthSpec:
        return SynthSpec(**self.model_dump())


class DatasetConfig(_Strict):
    readings: Optional[str] = None
    locations: Optional[str] = None
    synthetic: Optional[list[SynthConfig]] = None
    nodes: Union[Literal["all"], list[int]] = "all"
    slice: tuple[int, Optional[int]] = (0, 5000)
    require_full_slice: bool = False
    t_min: float = -10.0
    t_max: float = 50.0

    @model_validator(mode="after")
    def _check(self) -> "DatasetConfig":
        if self.readings is not None and self.synthetic is not None:
            raise ValueError("give either readings or synthetic, not both")
        start, end = self.slice
        if start < 0:
            raise ValueError("slice start must be >= 0")
        if end is not None and end <= start:
            raise ValueError("slice must be non-empty (end > start)")
        if self.t_min >= self.t_max:
            raise ValueError("t_min must be below t_max")
        if self.synthetic is not None:
            ids = [s.node_id for s in self.synthetic]
            if len(set(ids)) != len(ids):
                raise ValueError("synthetic node ids must be unique")
        return self


class ClusterAssignment(_Strict):
    head: int
    members: list[int]


class KMeansConfig(_Strict):
    k: int = Field(ge=1)
    seed: int = 0


class TopologyConfig(_Strict):
    mode: Literal["StarDirect", "Relay", "Aggregation"] = "StarDirect"
    clusters: Optional[list[ClusterAssignment]] = None
    kmeans: Optional[KMeansConfig] = None
    nearest_heads: Optional[list[int]] = None
    aggregate: AggregateFn = AggregateFn.AVERAGE
    stage2_dps: bool = True

    @model_validator(mode="after")
    def _check(self) -> "TopologyConfig":
        sources = [s for s in (self.clusters, self.kmeans, self.nearest_heads) if s is not None]
        if len(sources) > 1:
            raise ValueError("choose one of clusters, kmeans, nearest_heads")
        if self.mode != "StarDirect" and not sources:
            raise ValueError(f"{self.mode} mode needs a cluster plan (clusters, kmeans or nearest_heads)")
        return self


class SweepConfig(_Strict):
    name: str = "sweep"
    dataset: DatasetConfig = DatasetConfig()
    predictors: list[Union[str, PredictorConfig]] = Field(
        default_factory=lambda: ["MA(2)", "MA(4)", "MA(10)", "ARMA(2,2)", "LMS", "LMS-VSS"]
    )
    grid: GridConfig = GridConfig()
    topology: TopologyConfig = TopologyConfig()
    include_warmup_in_reduction: bool = True
    jobs: int = Field(default=1, ge=1)

    @field_validator("grid", "dataset", "topology", mode="before")
    @classmethod
    def _empty_stanza(cls, v: Any) -> Any:
        return {} if v is None else v

    @field_validator("predictors")
    @classmethod
    def _predictors(cls, v: list) -> list:
        if not v:
            raise ValueError("at least one predictor is required")
        for p in v:
            try:
                PredictorSpec.parse(p) if isinstance(p, str) else p.to_spec()
            except InvalidSpecError as exc:
                raise ValueError(f"invalid predictor {p!r}: {exc}") from None
        labels = [s.label for s in cls._specs(v)]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate predictor labels: {labels}")
        return v

    @staticmethod
    def _specs(v: list) -> list[PredictorSpec]:
        return [PredictorSpec.parse(p) if isinstance(p, str) else p.to_spec() for p in v]

    def predictor_specs(self) -> list[PredictorSpec]:
        return self._specs(self.predictors)


def _clean_loc(loc: tuple) -> str:
    # union branches show up in the location as type tags ("str", "PredictorConfig", ...)
    parts = [
        str(p) for p in loc
        if not (isinstance(p, str) and (p in {"str", "int", "float", "list", "none"} or not p.islower() or "[" in p))
    ]
    return ".".join(parts) or "<root>"


def _format_validation(exc: ValidationError) -> str:
    errors = [(err, _clean_loc(err["loc"])) for err in exc.errors()]
    # when one union branch got far enough to complain, drop the other branch's type mismatch
    specific = {loc for err, loc in errors if not err["type"].endswith("_type")}
    lines = []
    for err, loc in errors:
        if err["type"].endswith("_type") and any(s == loc or s.startswith(loc + ".") for s in specific):
            continue
        if err["type"] == "extra_forbidden":
            lines.append(f"unknown key '{loc}'")
        else:
            lines.append(f"{loc}: {err['msg']}")
    return "; ".join(dict.fromkeys(lines))


def parse_config(data: Any, base_dir: Path | None = None) -> SweepConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    try:
        cfg = SweepConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    if base_dir is not None:
        ds = cfg.dataset
        updates = {
            key: str((base_dir / val).resolve())
            for key in ("readings", "locations")
            if (val := getattr(ds, key)) is not None and not Path(val).is_absolute()
        }
        if updates:
            cfg = cfg.model_copy(update={"dataset": ds.model_copy(update=updates)})
    return cfg


def load_config(path: str | Path) -> SweepConfig:
    """Load a YAML sweep config; relative dataset paths resolve against the file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: YAML parse error{where}: {getattr(exc, 'problem', exc)}") from None
    return parse_config(data, base_dir=path.parent)
