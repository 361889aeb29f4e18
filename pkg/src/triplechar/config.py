"""Experiment configuration documents (JSON) for the command line."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ConfigError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AxisRange(_Section):
    min: float
    max: float
    count: int = Field(ge=1)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _ordered(self):
        if self.max < self.min:
            raise ValueError("axis max must not be below min")
        if self.spacing == "log" and self.min <= 0:
            raise ValueError("log spacing needs min > 0")
        return self


Axis = Union[list[float], AxisRange]


def axis_spec(ax: Axis):
    return ax.model_dump() if isinstance(ax, AxisRange) else list(ax)


class PolynomialSection(_Section):
    coeffs: list[float] = Field(min_length=1)


class SymbolSection(_Section):
    dimension: int = Field(default=1, ge=1)
    a: Optional[str] = None
    b: Optional[str] = None
    c: Optional[str] = None
    q1: Optional[str] = None
    q2: Optional[str] = None
    q3: Optional[str] = None
    phi: str = "0"
    da_dt: Optional[str] = None
    db_dt: Optional[str] = None
    dc_dt: Optional[str] = None
    name: str = ""

    @model_validator(mode="after")
    def _one_form(self):
        direct = [self.a, self.b, self.c]
        q = [self.q1, self.q2, self.q3]
        if all(v is not None for v in direct) and all(v is None for v in q):
            return self
        if all(v is not None for v in q) and all(v is None for v in direct):
            if any(v is not None for v in (self.da_dt, self.db_dt, self.dc_dt)):
                raise ValueError("analytic t-derivatives apply to a, b, c only")
            return self
        raise ValueError("give either all of a, b, c or all of q1, q2, q3")


class GridSection(_Section):
    t: Axis
    x: list[Axis] = Field(min_length=1)
    xi: list[Axis] = Field(min_length=1)


class ConditionsSection(_Section):
    eps_bar: float = Field(default=1 / 50, gt=0, lt=1)
    delta_E: float = Field(default=1e-2, gt=0)
    delta_H: float = Field(default=0.5, gt=0)
    reduced: bool = True
    delta1_min: float = Field(default=1e-3, gt=0)
    big_o_max: float = Field(default=1e4, gt=0)
    abs_tol: float = Field(default=1e-15, ge=0)
    smallness: bool = True
    eps1: float = Field(default=1e-2, gt=0)
    eps_dtS: float = Field(default=1e-2, gt=0)
    B: Optional[list[list[str]]] = None
    T: float = Field(default=1.0, gt=0)
    tol: float = Field(default=1e-12, ge=0)

    @field_validator("B")
    @classmethod
    def _square(cls, v):
        if v is not None and (len(v) != 3 or any(len(r) != 3 for r in v)):
            raise ValueError("B must be 3x3")
        return v


class ExtendSection(_Section):
    chi: str
    chi_tilde: str
    M: float = Field(gt=0)
    M_prime: float = 0.0
    chi0: Optional[str] = None
    delta1: Optional[float] = None
    T: Optional[float] = None


Complex = Union[float, tuple[float, float]]


class EnergySection(_Section):
    model: Literal["canonical", "example", "custom"] = "canonical"
    b1: float = 0.1
    b2: float = 1.0
    N: float = 8.0
    gamma: float = 1.0
    lam: float = 1.0
    eps1: float = 0.1
    t_start: float = 1e-3
    t_end: float = 1.0
    steps: int = 4096
    spacing: Literal["log", "linear"] = "log"
    state: Optional[list[Complex]] = None
    B: Optional[list[list[str]]] = None
    B_adjoint: Optional[list[list[str]]] = None
    F: Optional[list[str]] = None
    xi_list: Optional[list[list[float]]] = None
    N_star: Optional[float] = None
    N_list: list[float] = Field(default_factory=lambda: [4.0, 8.0, 16.0])
    gamma_list: list[float] = Field(default_factory=lambda: [0.0, 1.0, 10.0])
    lambda_list: list[float] = Field(default_factory=lambda: [1.0, 10.0])

    @field_validator("state")
    @classmethod
    def _three(cls, v):
        if v is not None and len(v) != 3:
            raise ValueError("state must have three components")
        return v

    @field_validator("F")
    @classmethod
    def _three_f(cls, v):
        if v is not None and len(v) != 3:
            raise ValueError("F must have three components")
        return v

    @field_validator("B", "B_adjoint")
    @classmethod
    def _square(cls, v):
        if v is not None and (len(v) != 3 or any(len(r) != 3 for r in v)):
            raise ValueError("matrix must be 3x3")
        return v

    def state_values(self):
        if self.state is None:
            return None
        return tuple(complex(*v) if isinstance(v, tuple) else complex(v) for v in self.state)


class OutputSection(_Section):
    directory: Optional[str] = None
    formats: list[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])


class ExperimentConfig(_Section):
    polynomial: Optional[PolynomialSection] = None
    symbol: Optional[SymbolSection] = None
    grid: Optional[GridSection] = None
    conditions: ConditionsSection = Field(default_factory=ConditionsSection)
    extend: Optional[ExtendSection] = None
    energy: Optional[EnergySection] = None
    output: OutputSection = Field(default_factory=OutputSection)

    def dumps(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        try:
            return cls.model_validate(data)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return ExperimentConfig.loads(p.read_text(encoding="utf-8"))
