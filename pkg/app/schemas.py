from pydantic import BaseModel, Field
from datetime import datetime
from typing import Dict, List, Literal, Optional, Union


Number = Union[str, int, float]


# === Model file ===
class TransitionIn(BaseModel):
    from_: str = Field(alias="from")
    to: str
    prob: Number

    class Config:
        populate_by_name = True
        extra = "forbid"


class RewardIn(BaseModel):
    from_: str = Field(alias="from")
    to: str
    cost: Number

    class Config:
        populate_by_name = True
        extra = "forbid"


class ModelFile(BaseModel):
    states: List[str]
    transitions: List[TransitionIn] = []
    rewards: List[RewardIn] = []

    class Config:
        extra = "forbid"


# === Requests ===
class SolveRequest(BaseModel):
    model: ModelFile
    until: str = "ALL=>ALL"
    start: str
    mode: Optional[Literal["exact", "float"]] = None
    cost: Optional[str] = None      # target set for expected cost
    hitting: Optional[str] = None   # target set for expected hitting time


class ZeroconfRequest(BaseModel):
    preset: Optional[str] = None
    probes: Optional[int] = None
    p: Optional[str] = None
    q: Optional[str] = None
    hosts: Optional[int] = None
    r: Optional[str] = None
    E: Optional[str] = None
    mode: Optional[Literal["exact", "float"]] = None
    samples: Optional[int] = None
    seed: Optional[int] = None


class CrowdsRequest(BaseModel):
    preset: Optional[str] = None
    jondos: Optional[int] = None
    colls: Optional[int] = None
    pf: Optional[str] = None
    init: Optional[Dict[str, str]] = None
    mode: Optional[Literal["exact", "float"]] = None
    samples: Optional[int] = None
    seed: Optional[int] = None


class SimulateRequest(BaseModel):
    model: Optional[ModelFile] = None
    preset: Optional[str] = None
    start: Optional[str] = None
    event: str
    seed: Optional[int] = None
    samples: Optional[int] = None
    max_steps: Optional[int] = None
    mode: Optional[Literal["exact", "float"]] = None


# === Reports ===
class ResultValue(BaseModel):
    name: str
    value: str
    provenance: Literal["closed-form", "solver", "simulation"]
    approx: Optional[float] = None


class RunReport(BaseModel):
    command: str
    parameters: Dict[str, str] = {}
    mode: str
    results: List[ResultValue] = []
    verdicts: Dict[str, bool] = {}
    flags: List[str] = []
    timing_seconds: Optional[float] = None

    def result(self, name: str) -> ResultValue:
        for item in self.results:
            if item.name == name:
                return item
        raise KeyError(name)


class RunRecordOut(BaseModel):
    run_id: int
    command: str
    mode: str
    created_at: Optional[datetime] = None
    report: RunReport

    class Config:
        from_attributes = True
