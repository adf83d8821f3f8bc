"""Channel sequence generation.

One cycle: build the mesh, transmit motion information, search a channel,
predict the first topological event, cut the unaffected prefix (anchored at
its last triangle), then repeat from the anchor at the event time with all
nodes advanced by the linear model.  Consecutive segments overlap on the
anchor triangle, so the union forms one spatially and temporally connected
corridor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .events import compute_event_time
from .funnel import funnel
from .geometry import NodeState, Point, Vector, dist, orient2d
from .mesh import Mesh, build_dual, build_mesh, locate, point_in_triangle
from .search import Channel, timed_astar
from .transmission import TransmissionConfig, transmit

VertexTriple = Tuple[int, int, int]


@dataclass(frozen=True)
class SequencerConfig:
    max_segments: int = 5
    tau_threshold: float = 10.0  # planning horizon, seconds
    transmission_enabled: bool = True
    transmission: TransmissionConfig = field(default_factory=TransmissionConfig)
    ego_radius: float = 0.5
    ego_speed: float = 2.0
    width_threshold: Optional[float] = None  # default 2 * ego_radius + 0.2
    sample_resolution: float = 0.1
    padding: Optional[float] = None  # default ego_radius + 0.1
    search_horizon: float = math.inf

    def __post_init__(self) -> None:
        if self.max_segments < 1:
            raise ValueError("max_segments must be >= 1")
        if self.tau_threshold <= 0:
            raise ValueError("tau_threshold must be positive")
        if self.sample_resolution <= 0:
            raise ValueError("sample_resolution must be positive")

    @property
    def effective_width_threshold(self) -> float:
        return self.width_threshold if self.width_threshold is not None else 2 * self.ego_radius + 0.2

    @property
    def effective_padding(self) -> float:
        return self.padding if self.padding is not None else self.ego_radius + 0.1


@dataclass
class ChannelSegment:
    """Prefix of one channel, valid on [t_start, t_end)."""

    t_start: float
    t_end: Optional[float]  # None for the final segment
    triangles: List[VertexTriple]  # CCW vertex-id triples at t_start
    subgoal: Point
    start_point: Point
    points: Dict[int, Point]  # vertex positions at t_start
    radii: Dict[int, float]

    @property
    def anchor(self) -> VertexTriple:
        return self.triangles[-1]

    def triangle_points(self, index: int) -> Tuple[Point, Point, Point]:
        a, b, c = self.triangles[index]
        return (self.points[a], self.points[b], self.points[c])

    def to_dict(self) -> dict:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "triangles": [list(t) for t in self.triangles],
            "anchor": list(self.anchor),
            "subgoal": list(self.subgoal),
            "start_point": list(self.start_point),
            "points": {str(i): list(p) for i, p in self.points.items()},
            "radii": {str(i): r for i, r in self.radii.items()},
        }


@dataclass
class ChannelSequence:
    segments: List[ChannelSegment]
    goal: Point
    terminated: str  # "goal" | "threshold" | "max_segments"

    def to_dict(self) -> dict:
        return {
            "goal": list(self.goal),
            "terminated": self.terminated,
            "segments": [s.to_dict() for s in self.segments],
        }


@dataclass(frozen=True)
class SequenceFailure:
    cycle: int
    time: float
    reason: str


SequenceResult = Union[ChannelSequence, SequenceFailure]


def last_triangle_index(e: int, m: int, channel_len: int) -> int:
    """Index of the segment's last triangle given the ego and event indices.

    ``e`` is where the ego is estimated to be at the event time, ``m`` where
    the event hits.  k = e when the ego is behind the event triangle, m - 1
    when the event hits the ego's own triangle; e > m never occurs by
    construction and is rejected.  k = -1 signals an empty (degenerate)
    segment.
    """
    if not (0 <= e < channel_len and 0 <= m < channel_len):
        raise ValueError(f"indices out of range: e={e}, m={m}, len={channel_len}")
    if e > m:
        raise ValueError(f"e={e} > m={m} violates the event-ordering contract")
    return e if e < m else m - 1


def _point_along(pts: Sequence[Point], travel: float) -> Point:
    if travel <= 0:
        return pts[0]
    for a, b in zip(pts, pts[1:]):
        hop = dist(a, b)
        if travel <= hop:
            if hop == 0:
                return b
            f = travel / hop
            return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
        travel -= hop
    return pts[-1]


def _point_along_chain(channel: Channel, travel: float) -> Point:
    return _point_along([channel.start_point] + list(channel.waypoints), travel)


def _taut_points(channel: Channel, mesh: Mesh, goal: Point,
                 cfg: "SequencerConfig") -> Optional[List[Point]]:
    """Taut funnel polyline through the whole channel, for ego estimation.

    The executed path is a funnel path, so estimating the future ego
    position along it is tighter than walking the dual node chain; the
    chain is the fallback when a portal is too narrow to thread.
    """
    tris = [mesh.triangle_points(t) for t in channel.triangles]
    radius_of = {mesh.positions[v]: mesh.nodes[v].r
                 for t in channel.triangles
                 for v in mesh.triangles[t].vertices}
    try:
        path = funnel(tris, channel.start_point, goal, cfg.effective_padding,
                      radius_of)
    except ValueError:
        return None
    return None if path is None else path.points


def ego_index_at(channel: Channel, mesh: Mesh, tau: float, ego_speed: float,
                 route: Optional[Sequence[Point]] = None) -> int:
    """Channel index of the triangle holding the ego advanced to time ``tau``.

    The ego is moved at ``ego_speed`` for (tau - channel.time) seconds along
    ``route`` when given (normally the taut funnel polyline, the path the
    ego actually follows), else along the dual-node chain; the result is
    clamped to the channel.
    """
    if tau < channel.time:
        raise ValueError(f"tau={tau} precedes channel time {channel.time}")
    travel = ego_speed * (tau - channel.time)
    if route is not None:
        p = _point_along(route, travel)
    else:
        p = _point_along_chain(channel, travel)
    for idx, tri_id in enumerate(channel.triangles):
        if point_in_triangle(mesh.triangle_points(tri_id), p):
            return idx
    # Point sits on numerical boundary: fall back to counting passed waypoints.
    travel = ego_speed * (tau - channel.time)
    cum = 0.0
    prev = channel.start_point
    idx = 0
    for i, w in enumerate(channel.waypoints):
        cum += dist(prev, w)
        prev = w
        if cum <= travel:
            idx = i
    return min(idx, len(channel.triangles) - 1)


def subgoal(anchor: Tuple[Point, Point, Point], est_ego: Point,
            vertex_radii: Sequence[float], ego_radius: float,
            grid: int = 48) -> Point:
    """Point inside the anchor closest to ``est_ego`` with vertex clearance.

    Clearance requires distance >= ego_radius + vertex radius from each
    anchor vertex.  Falls back to the centroid when the clearance region is
    empty.  The minimization runs on a barycentric grid with local
    refinement, accurate to a small fraction of the triangle size.
    """
    a, b, c = anchor
    clear = [ego_radius + r for r in vertex_radii]

    def feasible(p: Point) -> bool:
        return (point_in_triangle((a, b, c), p)
                and all(dist(p, v) >= cr for v, cr in zip(anchor, clear)))

    if feasible(est_ego):
        return est_ego

    ii, jj = np.meshgrid(np.arange(grid + 1), np.arange(grid + 1), indexing="ij")
    mask = ii + jj <= grid
    u = ii[mask] / grid
    v = jj[mask] / grid
    w = 1.0 - u - v
    xs = u * a[0] + v * b[0] + w * c[0]
    ys = u * a[1] + v * b[1] + w * c[1]
    ok = np.ones(xs.shape, dtype=bool)
    for vert, cr in zip(anchor, clear):
        ok &= (xs - vert[0]) ** 2 + (ys - vert[1]) ** 2 >= cr * cr
    if not ok.any():
        return ((a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0)

    d2 = (xs - est_ego[0]) ** 2 + (ys - est_ego[1]) ** 2
    d2[~ok] = np.inf
    best_i = int(np.argmin(d2))
    best = (float(xs[best_i]), float(ys[best_i]))

    # Local pattern-search refinement.
    scale = max(dist(a, b), dist(b, c), dist(c, a))
    step = scale / grid
    for _ in range(24):
        improved = False
        for dx, dy in ((step, 0), (-step, 0), (0, step), (0, -step)):
            cand = (best[0] + dx, best[1] + dy)
            if feasible(cand) and dist(cand, est_ego) < dist(best, est_ego):
                best = cand
                improved = True
        if not improved:
            step *= 0.5
    # Boundary grid points can round a hair outside the triangle; pull
    # toward the centroid until the exact containment test agrees.
    cen = ((a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0)
    pull = 1e-9
    while not point_in_triangle((a, b, c), best) and pull < 1.0:
        best = (best[0] + (cen[0] - best[0]) * pull,
                best[1] + (cen[1] - best[1]) * pull)
        pull *= 10.0
    return best


def _extrapolate(mesh: Mesh, node_id: int, offset: float) -> Point:
    p = mesh.positions[node_id]
    v = mesh.nodes[node_id].velocity
    return (p[0] + v[0] * offset, p[1] + v[1] * offset)


def _prefix_event(channel: Channel, mesh: Mesh, k: int, window: float,
                  sample_resolution: float,
                  velocities: Optional[Dict[int, Vector]]
                  ) -> Optional[Tuple[float, int]]:
    """Earliest event in triangles 0..k scanned over the whole window.

    Returns (offset, channel index) when one exists strictly before
    ``window``, else None.  Used to tighten the segment cut: the kept
    prefix must stay valid for the full window, not only until the ego
    reaches each triangle.
    """
    probe = Channel(time=channel.time,
                    triangles=channel.triangles[: k + 1],
                    crossed_edges=channel.crossed_edges[:k],
                    etas=[window] * (k + 1),
                    waypoints=channel.waypoints[: k + 1],
                    start_point=channel.start_point)
    report = compute_event_time(probe, mesh, sample_resolution,
                                velocities=velocities)
    if report is None:
        return None
    offset = report.time - channel.time
    return (offset, report.triangle_index) if offset < window else None


def _make_segment(mesh: Mesh, channel: Channel, upto: int, t_start: float,
                  t_end: Optional[float], start_point: Point,
                  seg_subgoal: Point) -> ChannelSegment:
    tri_ids = channel.triangles[: upto + 1]
    triples = [mesh.triangles[t].vertices for t in tri_ids]
    vertex_ids = sorted({v for tri in triples for v in tri})
    return ChannelSegment(
        t_start=t_start,
        t_end=t_end,
        triangles=list(triples),
        subgoal=seg_subgoal,
        start_point=start_point,
        points={v: mesh.positions[v] for v in vertex_ids},
        radii={v: mesh.nodes[v].r for v in vertex_ids},
    )


def generate_sequence(nodes: Sequence[NodeState], start: Point, goal: Point,
                      cfg: SequencerConfig) -> SequenceResult:
    """Run the full pipeline from time 0 until a terminal condition.

    ``nodes`` are the states at time 0; later cycles extrapolate them
    linearly.  Returns the channel sequence, or a failure naming the cycle
    when no admissible channel exists.
    """
    tau = 0.0
    start_pt = start
    anchor_ids: Optional[frozenset] = None
    segments: List[ChannelSegment] = []
    vel_of = {n.id: n.velocity for n in nodes}

    cycle = 0
    max_cycles = cfg.max_segments + int(cfg.tau_threshold / cfg.sample_resolution) + 8
    while cycle < max_cycles:
        mesh = build_mesh(nodes, tau)
        velocities: Optional[Dict[int, Vector]] = None
        if cfg.transmission_enabled:
            tnodes = transmit(mesh.nodes, mesh, cfg.transmission)
            velocities = {i: n.velocity for i, n in tnodes.items()}

        by_vertex_set = {frozenset(t.vertices): t.id for t in mesh.triangles}
        start_tri: Optional[int] = None
        if anchor_ids is not None:
            start_tri = by_vertex_set.get(anchor_ids)
            while start_tri is None:
                prev = segments[-1]
                if len(prev.triangles) > 1:
                    # Anchor vanished in the rebuilt mesh (non-channel flip
                    # elsewhere): truncate the previous segment and retry.
                    prev.triangles.pop()
                elif tau > prev.t_start:
                    # Nothing left to truncate: hand over earlier, while the
                    # anchor still existed.
                    tau = max(prev.t_start, tau - cfg.sample_resolution)
                    mesh = build_mesh(nodes, tau)
                    by_vertex_set = {frozenset(t.vertices): t.id
                                     for t in mesh.triangles}
                else:
                    break
                prev.t_end = tau
                prev.subgoal = _refit_subgoal(prev, vel_of, cfg)
                start_pt = prev.subgoal
                anchor_ids = frozenset(prev.anchor)
                start_tri = by_vertex_set.get(anchor_ids)
        if start_tri is None:
            start_tri = locate(mesh, start_pt)
        if start_tri is None:
            return SequenceFailure(cycle, tau, "start point outside the mesh")
        goal_tri = locate(mesh, goal)
        if goal_tri is None:
            return SequenceFailure(cycle, tau, "goal point outside the mesh")

        dual = build_dual(mesh, goal, cfg.ego_radius)
        channel = timed_astar(
            dual, mesh, start_tri, goal_tri,
            ego_speed=cfg.ego_speed,
            width_threshold=cfg.effective_width_threshold,
            horizon=cfg.search_horizon,
            time=tau,
            ego_position=start_pt,
            velocities=velocities,
        )
        if channel is None:
            return SequenceFailure(cycle, tau, "no admissible channel")

        event = compute_event_time(channel, mesh, cfg.sample_resolution,
                                   velocities=velocities)
        if event is None or event.time > cfg.tau_threshold:
            segments.append(_make_segment(mesh, channel, len(channel) - 1, tau,
                                          None, start_pt, goal))
            reason = "goal" if event is None else "threshold"
            return ChannelSequence(segments=segments, goal=goal, terminated=reason)

        tau_next = event.time
        m = event.triangle_index
        # The ego advance estimate and the anchor index must use the same
        # route, else the anchor can lag behind the estimated position and
        # drag the subgoal backwards.
        taut = _taut_points(channel, mesh, goal, cfg)
        # The prediction scans each triangle only until the ego reaches it,
        # so a kept triangle can still flip between its arrival and the cut
        # time.  Re-scan the kept prefix over the full window and pull the
        # cut earlier until it is genuinely unaffected.
        while True:
            e = min(ego_index_at(channel, mesh, tau_next, cfg.ego_speed,
                                 route=taut), m)
            k = last_triangle_index(e, m, len(channel))
            if k >= 0:
                refined = _prefix_event(channel, mesh, k, tau_next - tau,
                                        cfg.sample_resolution, velocities)
                if refined is not None:
                    tau_next = tau + refined[0]
                    m = refined[1]
                    continue
            # The anchor can collapse between samples; a subgoal inside an
            # inverted triangle is meaningless, so halve the window until
            # the anchor is properly oriented at the cut time.
            verts = mesh.triangles[channel.triangles[max(k, 0)]].vertices
            a, b, c = (_extrapolate(mesh, v, tau_next - tau) for v in verts)
            if orient2d(a, b, c) > 0:
                break
            tau_next = tau + (tau_next - tau) * 0.5
        offset = tau_next - tau

        if taut is not None:
            est_ego = _point_along(taut, cfg.ego_speed * offset)
        else:
            est_ego = _point_along_chain(channel, cfg.ego_speed * offset)
        # The subgoal targets the ego estimate but must sit inside the
        # anchor as extrapolated to the cut time; when the event hits the
        # ego's own triangle (k < 0) that triangle doubles as the anchor
        # and the segment just holds until the replan.
        anchor_tri = channel.triangles[max(k, 0)]
        verts = mesh.triangles[anchor_tri].vertices
        anchor_at_next = tuple(_extrapolate(mesh, v, offset) for v in verts)
        # Same safety margin as the funnel padding, so the subgoal never
        # sits at exact contact distance from a vertex disc.
        margin = cfg.effective_padding - cfg.ego_radius
        radii = [mesh.nodes[v].r + margin for v in verts]
        target = start_pt if k < 0 else est_ego
        sg = subgoal(anchor_at_next, target, radii, cfg.ego_radius)
        seg = _make_segment(mesh, channel, max(k, 0), tau, tau_next, start_pt, sg)
        segments.append(seg)

        if len(segments) >= cfg.max_segments:
            return ChannelSequence(segments=segments, goal=goal,
                                   terminated="max_segments")

        anchor_ids = frozenset(seg.anchor)
        start_pt = seg.subgoal
        tau = tau_next
        cycle += 1

    return ChannelSequence(segments=segments, goal=goal, terminated="max_segments")


def _refit_subgoal(segment: ChannelSegment, vel_of: Dict[int, Vector],
                   cfg: SequencerConfig) -> Point:
    # Re-place the subgoal inside the (possibly truncated) anchor as
    # extrapolated to the (possibly shortened) window end, staying as
    # close as clearance allows to the previous target.
    off = 0.0 if segment.t_end is None else segment.t_end - segment.t_start
    ids = segment.anchor
    tri = tuple((segment.points[v][0] + vel_of[v][0] * off,
                 segment.points[v][1] + vel_of[v][1] * off) for v in ids)
    margin = cfg.effective_padding - cfg.ego_radius
    radii = [segment.radii[v] + margin for v in ids]
    return subgoal(tri, segment.subgoal, radii, cfg.ego_radius)
