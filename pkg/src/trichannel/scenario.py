"""Scenario description, JSON (de)serialization and the synthetic generator.

A scenario holds timed waypoint trajectories for every object node
(linearly interpolated, linearly extrapolated after the last waypoint),
boundary polylines that become virtual nodes, and the ego task parameters.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import List, Optional, Sequence, Tuple

from .geometry import NodeKind, NodeState, Point
from .mesh import generate_virtual_nodes

SCHEMA_VERSION = 1


class ScenarioFormatError(ValueError):
    """Malformed scenario file content."""


@dataclass
class ObjectTrack:
    id: int
    kind: NodeKind
    radius: float
    waypoints: List[Tuple[float, float, float]]  # (t, x, y), t strictly increasing

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ScenarioFormatError(f"node {self.id}: empty trajectory")
        ts = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ScenarioFormatError(f"node {self.id}: waypoint times not strictly increasing")
        if self.radius < 0:
            raise ScenarioFormatError(f"node {self.id}: negative radius")
        if self.kind in (NodeKind.STATIC, NodeKind.VIRTUAL):
            xs = {(w[1], w[2]) for w in self.waypoints}
            if len(xs) > 1:
                raise ScenarioFormatError(f"node {self.id}: {self.kind.value} node moves")

    def position_at(self, t: float) -> Point:
        wp = self.waypoints
        if len(wp) == 1 or t <= wp[0][0]:
            return (wp[0][1], wp[0][2])
        for (t0, x0, y0), (t1, x1, y1) in zip(wp, wp[1:]):
            if t <= t1:
                f = (t - t0) / (t1 - t0)
                return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
        # Linear extrapolation past the last waypoint.
        (t0, x0, y0), (t1, x1, y1) = wp[-2], wp[-1]
        f = (t - t0) / (t1 - t0)
        return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))

    def velocity_at(self, t: float) -> Tuple[float, float]:
        wp = self.waypoints
        if len(wp) == 1 or t < wp[0][0]:
            return (0.0, 0.0)
        for (t0, x0, y0), (t1, x1, y1) in zip(wp, wp[1:]):
            if t <= t1:
                return ((x1 - x0) / (t1 - t0), (y1 - y0) / (t1 - t0))
        (t0, x0, y0), (t1, x1, y1) = wp[-2], wp[-1]
        return ((x1 - x0) / (t1 - t0), (y1 - y0) / (t1 - t0))


@dataclass
class Scenario:
    id: str
    nodes: List[ObjectTrack]
    boundaries: List[List[Point]]
    start: Point
    goal: Point
    ego_speed: float
    ego_radius: float
    time_limit: float
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.time_limit <= 0:
            raise ScenarioFormatError("time_limit must be positive")
        if self.start == self.goal:
            raise ScenarioFormatError("start and goal coincide")
        if self.ego_speed <= 0 or self.ego_radius < 0:
            raise ScenarioFormatError("invalid ego parameters")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ScenarioFormatError("duplicate node ids")

    @property
    def virtual_spacing(self) -> float:
        # Narrow enough that an ego disc cannot slip between wall nodes.
        return 2.0 * self.ego_radius * 0.9

    def virtual_nodes(self) -> List[NodeState]:
        next_id = max((n.id for n in self.nodes), default=-1) + 1
        out: List[NodeState] = []
        for boundary in self.boundaries:
            vns = generate_virtual_nodes(boundary, self.virtual_spacing,
                                         id_start=next_id)
            out.extend(vns)
            next_id += len(vns)
        return out

    def node_states_at(self, t: float, include_virtual: bool = True) -> List[NodeState]:
        out: List[NodeState] = []
        for track in self.nodes:
            x, y = track.position_at(t)
            vx, vy = track.velocity_at(t)
            out.append(NodeState(id=track.id, x=x, y=y, vx=vx, vy=vy,
                                 r=track.radius, kind=track.kind))
        if include_virtual:
            out.extend(self.virtual_nodes())
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "id": self.id,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "radius": n.radius,
                    "waypoints": [{"t": t, "x": x, "y": y} for t, x, y in n.waypoints],
                }
                for n in self.nodes
            ],
            "boundaries": [[list(p) for p in b] for b in self.boundaries],
            "start": list(self.start),
            "goal": list(self.goal),
            "ego": {"speed": self.ego_speed, "radius": self.ego_radius},
            "time_limit": self.time_limit,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            nodes = [
                ObjectTrack(
                    id=int(n["id"]),
                    kind=NodeKind(n["kind"]),
                    radius=float(n["radius"]),
                    waypoints=[(float(w["t"]), float(w["x"]), float(w["y"]))
                               for w in n["waypoints"]],
                )
                for n in data["nodes"]
            ]
            return cls(
                id=str(data["id"]),
                nodes=nodes,
                boundaries=[[(float(p[0]), float(p[1])) for p in b]
                            for b in data["boundaries"]],
                start=(float(data["start"][0]), float(data["start"][1])),
                goal=(float(data["goal"][0]), float(data["goal"][1])),
                ego_speed=float(data["ego"]["speed"]),
                ego_radius=float(data["ego"]["radius"]),
                time_limit=float(data["time_limit"]),
                schema_version=int(data.get("schema_version", SCHEMA_VERSION)),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, ScenarioFormatError):
                raise
            raise ScenarioFormatError(f"malformed scenario: {exc}") from exc

    def save(self, path: FsPath) -> None:
        FsPath(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: FsPath) -> "Scenario":
        try:
            data = json.loads(FsPath(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class SyntheticParams:
    """Knobs for the straight-road pedestrian-crossing generator."""

    road_length: float = 30.0
    road_width: float = 10.0
    ped_count_min: int = 10
    ped_count_max: int = 20
    ped_speed_min: float = 0.25
    ped_speed_max: float = 0.8
    ped_radius: float = 0.3
    ego_speed: float = 2.0
    ego_radius: float = 0.25
    time_limit: float = 25.0

    def __post_init__(self) -> None:
        if self.road_length <= 0 or self.road_width <= 0:
            raise ValueError("road dimensions must be positive")
        if not (0 <= self.ped_count_min <= self.ped_count_max):
            raise ValueError("invalid pedestrian count range")
        if not (0 < self.ped_speed_min <= self.ped_speed_max):
            raise ValueError("invalid pedestrian speed range")
        if self.ego_speed <= 0 or self.time_limit <= 0:
            raise ValueError("invalid ego task parameters")


def _bounce_waypoints(x: float, y: float, direction: float, speed: float,
                      lo: float, hi: float, horizon: float
                      ) -> List[Tuple[float, float, float]]:
    """Perpendicular crossing that reflects off the road margins."""
    wps = [(0.0, x, y)]
    t, pos, d = 0.0, y, direction
    while t < horizon:
        edge = hi if d > 0 else lo
        dt = (edge - pos) / (d * speed)
        if t + dt >= horizon:
            wps.append((horizon, x, pos + d * speed * (horizon - t)))
            break
        t += dt
        pos = edge
        d = -d
        wps.append((t, x, pos))
    return wps


def generate_synthetic(seed: int, params: SyntheticParams = SyntheticParams()) -> Scenario:
    """Straight road with pedestrians crossing perpendicularly.

    Deterministic per seed.  Pedestrians reflect off the road margins so
    they keep crossing without leaving the road; the two wall polylines
    have slightly different lengths so their virtual nodes never align
    into exactly cocircular quadruples.
    """
    rng = random.Random(seed)
    length, width = params.road_length, params.road_width
    count = rng.randint(params.ped_count_min, params.ped_count_max)
    margin = 0.6  # off-wall clearance for pedestrian centers
    min_sep = 2.0 * params.ped_radius + 1.0

    tracks: List[ObjectTrack] = []
    placed: List[Point] = []
    for i in range(count):
        for _ in range(200):
            x = rng.uniform(3.0, length - 3.0)
            y = rng.uniform(margin, width - margin)
            if all(math.hypot(x - px, y - py) >= min_sep for px, py in placed):
                break
        placed.append((x, y))
        direction = 1.0 if rng.random() < 0.5 else -1.0
        speed = rng.uniform(params.ped_speed_min, params.ped_speed_max)
        tracks.append(ObjectTrack(
            id=i,
            kind=NodeKind.DYNAMIC,
            radius=params.ped_radius,
            waypoints=_bounce_waypoints(x, y, direction, speed, margin,
                                        width - margin, params.time_limit),
        ))

    overhang = 0.3  # stagger wall node spacing (see docstring)
    boundaries = [
        [(-overhang, 0.0), (length + overhang, 0.0)],
        [(0.0, width), (length, width)],
    ]
    return Scenario(
        id=f"synthetic-{seed}",
        nodes=tracks,
        boundaries=boundaries,
        start=(0.5, width / 2.0),
        goal=(length - 0.5, width / 2.0),
        ego_speed=params.ego_speed,
        ego_radius=params.ego_radius,
        time_limit=params.time_limit,
    )
