"""Request, configuration and response models for the service layer.

A scenario bundles a body description with one task:

* ``volume_distance``: solve the minimizing cap for a list of interior
  points and report the distance, section area, normal and solver health;
* ``asymptotics``: normalize a boundary point, ladder down the affine
  normal and fit the expansion of the normalized section Hessian;
* ``validate``: run the internal-consistency property suite on the body.

The body schema mirrors the construction helpers in
:func:`voldist.geometry.body_from_dict`; shape and type errors are caught
here, semantic errors (non-convexity, singular maps) when the body is
built.
"""

from __future__ import annotations

from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AffineMapSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    linear: list[list[float]]
    translation: list[float] | None = None


class EllipsoidSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["ellipsoid"]
    center: list[float] = Field(min_length=3, max_length=4)
    linear: list[list[float]]


class QuarticGraphSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["quartic_graph"]
    c: float = 0.0
    a: list[float] = Field(default_factory=lambda: [0.0] * 5,
                           min_length=5, max_length=5)
    domain_radius: float = Field(default=0.8, gt=0.0)


class AffineImageSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["affine_image"]
    base: "BodySpec"
    map: AffineMapSpec


BodySpec = Annotated[Union[EllipsoidSpec, QuarticGraphSpec, AffineImageSpec],
                     Field(discriminator="type")]


class LadderSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t0: float = Field(default=0.2, gt=0.0, le=1.0)
    ratio: float = Field(default=0.5, gt=0.0, lt=1.0)
    count: int = Field(default=8, ge=4, le=64)
    diagnostics: bool = True


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    circle_nodes: int = Field(default=256, ge=16, le=65536)
    depth_nodes: int = Field(default=64, ge=8, le=4096)


class ToleranceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    solver: float = Field(default=1e-12, gt=0.0, lt=1e-3)
    fd_hessian: float = Field(default=1e-4, gt=0.0, lt=1e-1)


class ScenarioConfig(BaseModel):
    """One self-contained unit of work for the service or the CLI."""

    model_config = ConfigDict(extra="forbid")

    task: Literal["volume_distance", "asymptotics", "validate"]
    body: BodySpec
    points: list[list[float]] | None = None
    base_point: list[float] | None = None
    ladder: LadderSpec = Field(default_factory=LadderSpec)
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    label: str | None = None

    @model_validator(mode="after")
    def _task_arguments(self) -> "ScenarioConfig":
        if self.task == "volume_distance":
            if not self.points:
                raise ValueError("volume_distance needs at least one point")
        if self.task == "asymptotics":
            if self.base_point is None:
                raise ValueError("asymptotics needs a base_point on the "
                                 "boundary")
        return self


class CheckResult(BaseModel):
    """One named pass/fail check with the measured value and its bound."""

    name: str
    passed: bool
    value: float | None = None
    bound: float | None = None
    note: str | None = None


class RunResponse(BaseModel):
    """Service response: report payload, optional CSV text, health flags."""

    status: Literal["ok", "computation_failed"]
    task: str
    label: str | None = None
    report: dict[str, Any] = Field(default_factory=dict)
    checks: list[CheckResult] = Field(default_factory=list)
    csv: str | None = None
    error: str | None = None

    @property
    def all_passed(self) -> bool:
        return self.status == "ok" and all(c.passed for c in self.checks)
