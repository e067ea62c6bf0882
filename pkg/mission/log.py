from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional

from tools.geometry import Index

if TYPE_CHECKING:
    from mapping.grid import SemanticOccupancyGrid
    from planners.gtsp import GtspInstance

# Exact column order of the CSV contracts
TIMELINE_FIELDS = ["clock_s", "distance_m", "v_f", "v_o", "v_bn", "v_bi", "pct_inspected", "phase"]
TIMING_FIELDS = ["replan_idx", "non_gtsp_s", "gtsp_s", "flight_s"]


@dataclass(frozen=True)
class TimelineRow:
    clock_s: float
    distance_m: float
    v_f: int
    v_o: int
    v_bn: int
    v_bi: int
    pct_inspected: float
    phase: str

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass
class TimingRow:
    replan_idx: int
    non_gtsp_s: float
    gtsp_s: float
    flight_s: float = 0.0

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class EdgeAudit:
    """One lazy edge decision: proceed, replan or excluded."""

    from_voxel: Index
    to_voxel: Index
    instance_cost: float
    path_distance: Optional[float]
    dd: float
    decision: str


@dataclass(frozen=True)
class Inspection:
    voxel: Index
    clock_s: float
    phase: str


@dataclass
class MissionLog:
    scenario: str
    planner: str
    seed: int
    inspectable: int = 0
    timeline: List[TimelineRow] = field(default_factory=list)
    timing: List[TimingRow] = field(default_factory=list)
    edges: List[EdgeAudit] = field(default_factory=list)
    inspections: List[Inspection] = field(default_factory=list)
    trajectory: List[Index] = field(default_factory=list)
    uninspectable: List[Index] = field(default_factory=list)
    # subset of uninspectable whose viewpoints all failed path planning
    unreachable: List[Index] = field(default_factory=list)
    outcome: str = "running"
    # end-of-run snapshots for --snapshots
    final_grid: Optional["SemanticOccupancyGrid"] = field(default=None, compare=False, repr=False)
    last_instance: Optional["GtspInstance"] = field(default=None, compare=False, repr=False)

    @property
    def final(self) -> Optional[TimelineRow]:
        return self.timeline[-1] if self.timeline else None

    @property
    def final_pct(self) -> float:
        return self.final.pct_inspected if self.final else 0.0

    @property
    def total_distance(self) -> float:
        return self.final.distance_m if self.final else 0.0

    @property
    def total_time(self) -> float:
        return self.final.clock_s if self.final else 0.0

    def flown_edges(self) -> List[EdgeAudit]:
        return [e for e in self.edges if e.decision == "proceed"]
