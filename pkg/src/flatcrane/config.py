"""Experiment configuration: strict JSON schema with defaults."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .beam_model import AnsatzShape, PhysicalParams
from .errors import ConfigError, DomainError
from .planner import PlanSpec, RestPosition


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamsBlock(_Strict):
    m_w: float = 450.0
    m_h: float = 200.0
    rhoA: float = 15.0
    EI: float = 1.5e5
    L: float = 10.0
    g: float = 9.81
    T_s: float = 0.05
    ansatz_coeffs: Optional[list[float]] = None


class RestBlock(_Strict):
    q1: float
    q3: float


class PlanBlock(_Strict):
    start: RestBlock
    goal: RestBlock
    N: int = 200
    head_len: int = 10
    tail_len: int = 10
    blend_degree: int = 9
    q3_min: float = 0.5
    q3_max: float = 9.5


class OutputBlock(_Strict):
    dir: str = "out"


class SimulateBlock(_Strict):
    u_csv: Optional[str] = None
    x0: Optional[list[float]] = Field(default=None, min_length=6, max_length=6)


class Tolerances(_Strict):
    open_loop_rel: float = 1e-8
    boundary_force: float = 1e-9
    final_state: float = 1e-6
    rank_ratio: float = 1e-10


class ExperimentConfig(_Strict):
    params: ParamsBlock = Field(default_factory=ParamsBlock)
    plan: PlanBlock
    output: OutputBlock = Field(default_factory=OutputBlock)
    variant: Literal["printed", "lagrange"] = "lagrange"
    tolerances: Tolerances = Field(default_factory=Tolerances)
    simulate: SimulateBlock = Field(default_factory=SimulateBlock)

    @model_validator(mode="after")
    def _heights(self):
        p = self.plan
        if not 0.0 < p.q3_min < p.q3_max < self.params.L:
            raise ValueError("need 0 < q3_min < q3_max < L")
        for rest in (p.start, p.goal):
            if not p.q3_min <= rest.q3 <= p.q3_max:
                raise ValueError(f"rest height {rest.q3} outside [q3_min, q3_max]")
        return self

    def physical_params(self) -> PhysicalParams:
        block = self.params.model_dump()
        coeffs = block.pop("ansatz_coeffs")
        ansatz = AnsatzShape(tuple(coeffs) if coeffs is not None else None)
        try:
            return PhysicalParams(**block, ansatz=ansatz)
        except DomainError as exc:
            name = exc.details.get("field", "params")
            raise ConfigError(f"params.{name}: {exc}", field=f"params.{name}") from exc

    def plan_spec(self) -> PlanSpec:
        p = self.plan
        try:
            return PlanSpec(
                RestPosition(p.start.q1, p.start.q3),
                RestPosition(p.goal.q1, p.goal.q3),
                N=p.N,
                head_len=p.head_len,
                tail_len=p.tail_len,
                blend_degree=p.blend_degree,
                q3_min=p.q3_min,
                q3_max=p.q3_max,
            )
        except ValueError as exc:
            raise ConfigError(f"plan: {exc}", field="plan") from exc


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ConfigError(f"{loc}: {first['msg']}", field=loc) from exc
    # surface parameter invariants at load time
    cfg.physical_params()
    cfg.plan_spec()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a config file; ``OSError`` propagates unchanged."""
    return parse_config(Path(path).read_text())
