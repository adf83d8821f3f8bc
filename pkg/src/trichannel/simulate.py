"""Closed-loop scenario execution and metric collection.

The ego replans at a fixed cadence with the selected method (the proposed
channel-sequence pipeline, or the Timed A* / A* single-channel baselines),
follows the resulting polyline, and accrues completion, planning-success
and collision metrics.  Runs are deterministic for a given scenario,
method and configuration.
"""
from __future__ import annotations

import enum
import math
import time as _time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .funnel import PathPolyline, funnel
from .geometry import NodeKind, NodeState, Point, dist
from .mesh import DegenerateInputError, build_dual, build_mesh, locate
from .scenario import Scenario
from .search import astar, timed_astar
from .sequencer import (ChannelSequence, SequenceFailure, SequencerConfig,
                        generate_sequence)


class MethodId(str, enum.Enum):
    PROPOSED = "proposed"
    TIMED_ASTAR = "timed_astar"
    ASTAR = "astar"


@dataclass
class Metrics:
    scenario_id: str
    method: str
    completed: bool
    completion_time: Optional[float]
    cycles_attempted: int
    cycles_succeeded: int
    collision_count: int
    collided: bool
    planner_latency_mean: float
    planner_latency_max: float


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    replan_interval: float = 0.1
    planner: SequencerConfig = field(default_factory=SequencerConfig)

    def sequencer_for(self, scenario: Scenario) -> SequencerConfig:
        return replace(
            self.planner,
            ego_speed=scenario.ego_speed,
            ego_radius=scenario.ego_radius,
        )


def detect_collision(ego: Point, ego_radius: float,
                     nodes: Sequence[NodeState]) -> bool:
    """True iff the ego disc overlaps any non-virtual node disc strictly."""
    return any(
        dist(ego, n.position) < ego_radius + n.r
        for n in nodes if n.kind is not NodeKind.VIRTUAL
    )


def _colliding_ids(ego: Point, ego_radius: float,
                   nodes: Sequence[NodeState]) -> Set[int]:
    return {
        n.id for n in nodes
        if n.kind is not NodeKind.VIRTUAL and dist(ego, n.position) < ego_radius + n.r
    }


def _advance_along_path(path: PathPolyline, cursor: float, travel: float
                        ) -> Tuple[Point, float]:
    """Point after moving ``travel`` from arc position ``cursor``."""
    target = cursor + travel
    walked = 0.0
    pts = path.points
    for a, b in zip(pts, pts[1:]):
        hop = dist(a, b)
        if walked + hop >= target and hop > 0:
            f = (target - walked) / hop
            return ((a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])), target)
        walked += hop
    return (pts[-1], walked)


def _funnel_channel(mesh, triangle_ids: Sequence[int], start: Point,
                    target: Point, padding: float) -> Optional[PathPolyline]:
    tris = [mesh.triangle_points(t) for t in triangle_ids]
    radius_of = {mesh.positions[v]: mesh.nodes[v].r
                 for tri_id in triangle_ids
                 for v in mesh.triangles[tri_id].vertices}
    try:
        return funnel(tris, start, target, padding, radius_of)
    except ValueError:
        return None


TrianglePoints = Tuple[Point, Point, Point]


def _nearest_in_triangle(tri: TrianglePoints, p: Point) -> Point:
    """``p`` itself when inside, else near the closest boundary point.

    The boundary projection is nudged toward the centroid so the result
    passes an exact point-in-triangle test despite rounding.
    """
    from .mesh import point_in_triangle

    if point_in_triangle(tri, p):
        return p
    best: Optional[Point] = None
    best_d = math.inf
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        abx, aby = b[0] - a[0], b[1] - a[1]
        denom = abx * abx + aby * aby
        t = 0.0 if denom == 0 else max(0.0, min(1.0, (
            (p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / denom))
        q = (a[0] + t * abx, a[1] + t * aby)
        d = dist(p, q)
        if d < best_d:
            best, best_d = q, d
    cx = (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0
    cy = (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0
    f = 1e-6
    return (best[0] + (cx - best[0]) * f, best[1] + (cy - best[1]) * f)


def _clear_chord(a: Point, b: Point,
                 discs: Sequence[Tuple[Point, float]], depth: int
                 ) -> List[Point]:
    if depth == 0:
        return [a, b]
    abx, aby = b[0] - a[0], b[1] - a[1]
    denom = abx * abx + aby * aby
    if denom == 0:
        return [a, b]
    worst: Optional[Tuple[float, Point, Point, float, float]] = None
    for c, radius in discs:
        t = ((c[0] - a[0]) * abx + (c[1] - a[1]) * aby) / denom
        if t <= 1e-9 or t >= 1.0 - 1e-9:
            continue  # endpoints are fixed; only interior grazes move
        q = (a[0] + t * abx, a[1] + t * aby)
        d = dist(q, c)
        pen = radius - d
        if pen > 1e-9 and (worst is None or pen > worst[0]):
            worst = (pen, q, c, radius, d)
    if worst is None:
        return [a, b]
    _, q, c, radius, d = worst
    if d < 1e-12:
        length = math.sqrt(denom)
        moved = (q[0] - aby / length * radius, q[1] + abx / length * radius)
    else:
        f = radius / d
        moved = (c[0] + (q[0] - c[0]) * f, c[1] + (q[1] - c[1]) * f)
    return (_clear_chord(a, moved, discs, depth - 1)[:-1]
            + _clear_chord(moved, b, discs, depth - 1))


def _clear_polyline(path: PathPolyline, obstacles: Sequence[NodeState],
                    ego_radius: float, margin: float = 0.05) -> PathPolyline:
    """Push path chords off the obstacle discs they graze.

    The funnel holds its bend points clear of the padded discs, but the
    straight chord wrapping a disc between two bends cuts inside the
    clearance circle; executed verbatim it can graze the obstacle.  The
    deepest interior graze per chord is pushed out radially and the halves
    re-checked, leaving a residual penetration well under ``margin``.
    """
    discs = [((n.x, n.y), n.r + ego_radius + margin) for n in obstacles]
    out_p = [path.points[0]]
    out_i = [path.segment_ids[0]]
    for a, b, sid in zip(path.points, path.points[1:], path.segment_ids[1:]):
        for q in _clear_chord(a, b, discs, 5)[1:]:
            out_p.append(q)
            out_i.append(sid)
    return PathPolyline(points=out_p, segment_ids=out_i)


@dataclass
class PlanResult:
    path: Optional[PathPolyline]
    corridor: List[TrianglePoints] = field(default_factory=list)
    sequence: Optional[ChannelSequence] = None


def plan_proposed(scenario: Scenario, ego: Point, t_now: float,
                  cfg: SequencerConfig) -> PlanResult:
    """Channel sequence plus per-segment funnel paths, concatenated.

    Fails when the sequence cannot be generated or the first segment's
    funnel fails; later segment funnels only truncate the concatenation.
    """
    nodes = scenario.node_states_at(t_now)
    try:
        result = generate_sequence(nodes, ego, scenario.goal, cfg)
    except DegenerateInputError:
        return PlanResult(path=None)
    if isinstance(result, SequenceFailure):
        return PlanResult(path=None)

    padding = cfg.effective_padding
    corridor: List[TrianglePoints] = [
        seg.triangle_points(i)
        for seg in result.segments for i in range(len(seg.triangles))
    ]
    points: List[Point] = []
    segment_ids: List[int] = []
    cursor = ego
    for si, seg in enumerate(result.segments):
        tris = [seg.triangle_points(i) for i in range(len(seg.triangles))]
        radius_of = {seg.points[v]: seg.radii[v] for v in seg.points}
        # Subgoals live in the anchor extrapolated to the event time, so
        # they can sit just outside the snapshot triangles the funnel sees;
        # project both endpoints into their triangles before threading.
        start_pt = _nearest_in_triangle(tris[0], cursor)
        target_pt = _nearest_in_triangle(tris[-1], seg.subgoal)
        try:
            part = funnel(tris, start_pt, target_pt, padding, radius_of,
                          segment_id=si)
        except ValueError:
            part = None
        if part is None:
            if si == 0:
                return PlanResult(path=None, corridor=corridor, sequence=result)
            break
        skip = 1 if points and part.points[0] == points[-1] else 0
        points.extend(part.points[skip:])
        segment_ids.extend(part.segment_ids[skip:])
        cursor = seg.subgoal
    if len(points) < 1:
        return PlanResult(path=None, corridor=corridor, sequence=result)
    path = _clear_polyline(PathPolyline(points=points, segment_ids=segment_ids),
                           [n for n in nodes if n.kind is not NodeKind.VIRTUAL],
                           scenario.ego_radius)
    return PlanResult(path=path, corridor=corridor, sequence=result)


def plan_baseline(scenario: Scenario, ego: Point, t_now: float,
                  cfg: SequencerConfig, method: MethodId) -> PlanResult:
    """Single-channel baseline: one search plus one funnel to the goal."""
    nodes = scenario.node_states_at(t_now)
    try:
        mesh = build_mesh(nodes, 0.0)
    except DegenerateInputError:
        return PlanResult(path=None)
    start_tri = locate(mesh, ego)
    goal_tri = locate(mesh, scenario.goal)
    if start_tri is None or goal_tri is None:
        return PlanResult(path=None)
    dual = build_dual(mesh, scenario.goal, cfg.ego_radius)
    if method is MethodId.ASTAR:
        channel = astar(dual, start_tri, goal_tri, ego_position=ego,
                        ego_speed=cfg.ego_speed)
    else:
        channel = timed_astar(
            dual, mesh, start_tri, goal_tri,
            ego_speed=cfg.ego_speed,
            width_threshold=cfg.effective_width_threshold,
            horizon=cfg.search_horizon,
            ego_position=ego,
        )
    if channel is None:
        return PlanResult(path=None)
    corridor = [mesh.triangle_points(t) for t in channel.triangles]
    path = _funnel_channel(mesh, channel.triangles, ego, scenario.goal,
                           cfg.effective_padding)
    if path is not None:
        path = _clear_polyline(
            path, [n for n in nodes if n.kind is not NodeKind.VIRTUAL],
            scenario.ego_radius)
    return PlanResult(path=path, corridor=corridor)


def plan_detailed(scenario: Scenario, method: MethodId, ego: Point,
                  t_now: float, cfg: SequencerConfig) -> PlanResult:
    if method is MethodId.PROPOSED:
        return plan_proposed(scenario, ego, t_now, cfg)
    return plan_baseline(scenario, ego, t_now, cfg, method)


def plan(scenario: Scenario, method: MethodId, ego: Point, t_now: float,
         cfg: SequencerConfig) -> Optional[PathPolyline]:
    return plan_detailed(scenario, method, ego, t_now, cfg).path


@dataclass
class SimState:
    t: float
    ego: Point
    path: Optional[PathPolyline] = None
    cursor: float = 0.0


def step(state: SimState, scenario: Scenario, dt: float) -> SimState:
    """Advance the clock: ego follows its path, or holds without one."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    ego, cursor = state.ego, state.cursor
    if state.path is not None:
        ego, cursor = _advance_along_path(state.path, cursor,
                                          scenario.ego_speed * dt)
    return SimState(t=state.t + dt, ego=ego, path=state.path, cursor=cursor)


def run_scenario(scenario: Scenario, method: MethodId,
                 cfg: Optional[SimConfig] = None) -> Metrics:
    """Execute one scenario with one method and collect metrics.

    A collision does not terminate the run; cycle counting stops at task
    completion.
    """
    cfg = cfg or SimConfig()
    seq_cfg = cfg.sequencer_for(scenario)
    state = SimState(t=0.0, ego=scenario.start)
    attempted = succeeded = 0
    collision_count = 0
    latencies: List[float] = []
    colliding: Set[int] = _colliding_ids(state.ego, scenario.ego_radius,
                                         scenario.node_states_at(0.0, include_virtual=False))
    completed = False
    completion_time: Optional[float] = None
    next_replan = 0.0

    while state.t < scenario.time_limit - 1e-9:
        if state.t >= next_replan - 1e-9:
            next_replan += cfg.replan_interval
            attempted += 1
            t0 = _time.perf_counter()
            path = plan(scenario, method, state.ego, state.t, seq_cfg)
            latencies.append(_time.perf_counter() - t0)
            if path is not None:
                succeeded += 1
                state.path = path
                state.cursor = 0.0
            else:
                state.path = None

        state = step(state, scenario, cfg.dt)

        obstacles = scenario.node_states_at(state.t, include_virtual=False)
        now_colliding = _colliding_ids(state.ego, scenario.ego_radius, obstacles)
        collision_count += len(now_colliding - colliding)
        colliding = now_colliding

        if dist(state.ego, scenario.goal) <= scenario.ego_radius:
            completed = True
            completion_time = state.t
            break

    return Metrics(
        scenario_id=scenario.id,
        method=method.value,
        completed=completed,
        completion_time=completion_time,
        cycles_attempted=attempted,
        cycles_succeeded=succeeded,
        collision_count=collision_count,
        collided=collision_count > 0,
        planner_latency_mean=sum(latencies) / len(latencies) if latencies else 0.0,
        planner_latency_max=max(latencies) if latencies else 0.0,
    )


def aggregate(metrics: Sequence[Metrics]) -> Dict[str, dict]:
    """Per-method summary: completion, mean time, planning success, collisions."""
    if not metrics:
        raise ValueError("no metrics to aggregate")
    out: Dict[str, dict] = {}
    methods = sorted({m.method for m in metrics})
    for method in methods:
        rows = [m for m in metrics if m.method == method]
        times = [m.completion_time for m in rows if m.completed]
        attempted = sum(m.cycles_attempted for m in rows)
        succeeded = sum(m.cycles_succeeded for m in rows)
        out[method] = {
            "runs": len(rows),
            "completion_rate": sum(m.completed for m in rows) / len(rows),
            "mean_completion_time": sum(times) / len(times) if times else None,
            "planning_success_rate": succeeded / attempted if attempted else None,
            "collision_rate": sum(m.collided for m in rows) / len(rows),
        }
    return out
