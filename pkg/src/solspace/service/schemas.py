"""Request/response models for the HTTP facade."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ApiError(BaseModel):
    code: str  # not_found | conflict | validation | internal | busy
    message: str
    field: Optional[str] = None


class ErrorResponse(BaseModel):
    error: ApiError


class SpaceCreateRequest(BaseModel):
    dataset_path: str
    descriptor_pairs: int = 2048


class SpaceCreateResponse(BaseModel):
    space_id: str
    n: int
    channels: list[str]


class SessionCreateRequest(BaseModel):
    space_id: str
    config: dict[str, Any] = Field(default_factory=dict)


class SessionCreateResponse(BaseModel):
    session_id: str


class EventRequest(BaseModel):
    seq: int
    type: str
    payload: dict[str, Any] = Field(default_factory=dict)
    ts: float = 0.0


class EventResponse(BaseModel):
    sequence: int
    state_version: int
    async_cycle: bool = False


class TablePayload(BaseModel):
    solution_id: str
    spider: list[tuple[str, float, float]]
    radial: list[tuple[str, float]]
    detail_tier: str


class ClusterPayload(BaseModel):
    id: str
    members: list[str]
    representative: str
    children: list["ClusterPayload"] = Field(default_factory=list)


class LayoutPayload(BaseModel):
    star_ids: list[str]
    stars: list[tuple[float, float, float]]
    tables: list[tuple[str, str, tuple[float, float, float]]]
    room: tuple[float, float]
    sky_height: float
    table_height: float


class SessionState(BaseModel):
    session_id: str
    space_id: str
    version: int
    cycle: int
    busy: bool
    embedding_method: str
    seeds: list[str]
    survivor_count: int
    metric_channels: list[str]
    lod_thresholds: tuple[float, float]
    clusters: list[ClusterPayload]
    layout: Optional[LayoutPayload]
