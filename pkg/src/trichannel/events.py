"""Prediction of the first topological event along a channel.

Each channel triangle is scanned over sampled time offsets up to the ego's
estimated arrival: vertices and the opposite vertices of adjacent triangles
are extrapolated linearly and run through the in-circle test.  The scan is
vectorized in floating point with the predicate error bounds; only samples
the filter cannot decide fall back to the exact predicate.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import (
    CCW_ERRBOUND,
    ICC_ERRBOUND,
    DegenerateTriangleError,
    InCircleSide,
    Point,
    Vector,
    incircle,
)
from .mesh import Mesh
from .search import Channel


@dataclass(frozen=True)
class EventReport:
    """First predicted connectivity change affecting the channel."""

    time: float  # absolute event time
    triangle_index: int  # index within the channel
    node_id: int  # triggering external node


def neighbors_of(mesh: Mesh, tri_id: int) -> List[int]:
    """Opposite vertices of the triangles edge-adjacent to ``tri_id``."""
    if tri_id < 0 or tri_id >= len(mesh.triangles):
        raise KeyError(f"unknown triangle id {tri_id}")
    own = set(mesh.triangles[tri_id].vertices)
    out = set()
    for neigh in mesh.adjacency[tri_id]:
        out.update(set(mesh.triangles[neigh].vertices) - own)
    return sorted(out)


def _exact_is_event(tri_pts: np.ndarray, tri_vels: np.ndarray,
                    probe_pt: Point, probe_vel: Vector, tau: float) -> bool:
    pts = tri_pts + tri_vels * tau
    p = (probe_pt[0] + probe_vel[0] * tau, probe_pt[1] + probe_vel[1] * tau)
    try:
        res = incircle(tuple(pts[0]), tuple(pts[1]), tuple(pts[2]), p)
    except DegenerateTriangleError:
        return True  # collapsing triangle: conservative event
    return res.side is not InCircleSide.OUTSIDE


def first_event_offset(tri_pts: np.ndarray, tri_vels: np.ndarray,
                       probe_pt: Point, probe_vel: Vector,
                       taus: np.ndarray) -> Optional[float]:
    """Earliest sampled offset at which the probe enters the circumcircle.

    ``tri_pts``/``tri_vels`` are (3, 2) arrays of vertex positions and
    velocities at the mesh snapshot.
    """
    if taus.size == 0:
        return None
    # A shared velocity is a rigid translation: the in-circle sign never
    # changes, so an existing triangle (cocircular neighbors included)
    # stays valid for the whole window.
    if np.array_equal(tri_vels, np.broadcast_to(np.asarray(probe_vel, dtype=float),
                                                tri_vels.shape)):
        return None
    ax = tri_pts[0, 0] + tri_vels[0, 0] * taus
    ay = tri_pts[0, 1] + tri_vels[0, 1] * taus
    bx = tri_pts[1, 0] + tri_vels[1, 0] * taus
    by = tri_pts[1, 1] + tri_vels[1, 1] * taus
    cx = tri_pts[2, 0] + tri_vels[2, 0] * taus
    cy = tri_pts[2, 1] + tri_vels[2, 1] * taus
    px = probe_pt[0] + probe_vel[0] * taus
    py = probe_pt[1] + probe_vel[1] * taus

    adx, ady = ax - px, ay - py
    bdx, bdy = bx - px, by - py
    cdx, cdy = cx - px, cy - py
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady)
    det_err = ICC_ERRBOUND * (
        (np.abs(bdxcdy) + np.abs(cdxbdy)) * alift
        + (np.abs(cdxady) + np.abs(adxcdy)) * blift
        + (np.abs(adxbdy) + np.abs(bdxady)) * clift
    )

    oleft = (ax - cx) * (by - cy)
    oright = (ay - cy) * (bx - cx)
    orient = oleft - oright
    orient_err = CCW_ERRBOUND * (np.abs(oleft) + np.abs(oright))

    det_pos = det > det_err
    det_neg = det < -det_err
    ori_pos = orient > orient_err
    ori_neg = orient < -orient_err
    # Event iff gamma = -det * orient <= 0, i.e. det and orient share a sign
    # (inside) or either is zero (cocircular / degenerate).
    certain_event = (det_pos & ori_pos) | (det_neg & ori_neg)
    certain_clear = (det_pos & ori_neg) | (det_neg & ori_pos)
    candidates = np.nonzero(~certain_clear)[0]
    for idx in candidates:
        if certain_event[idx]:
            return float(taus[idx])
        if _exact_is_event(tri_pts, tri_vels, probe_pt, probe_vel, float(taus[idx])):
            return float(taus[idx])
    return None


def compute_event_time(channel: Channel, mesh: Mesh, sample_resolution: float,
                       velocities: Optional[Dict[int, Vector]] = None
                       ) -> Optional[EventReport]:
    """Earliest topological event along the channel.

    Each channel triangle's time window is sampled from one resolution
    step up to (excluding) the ego's arrival at that triangle.  A
    cocircular sample counts as an event.  Extrapolation uses the given
    velocity table (e.g. transmitted velocities) or raw node velocities.
    The earliest event over all triangles wins; ties go to the lowest
    channel index.  Returns None when no triangle sees an event before
    the ego reaches it.
    """
    if sample_resolution <= 0:
        raise ValueError(f"sample_resolution must be positive, got {sample_resolution}")

    def vel(node_id: int) -> Vector:
        if velocities is not None:
            return velocities[node_id]
        return mesh.nodes[node_id].velocity

    best: Optional[Tuple[float, int, int]] = None
    for idx, tri_id in enumerate(channel.triangles):
        eta = channel.etas[idx]
        if best is not None:
            eta = min(eta, best[0])  # only earlier events can still win
        taus = np.arange(sample_resolution, eta, sample_resolution)
        if taus.size == 0:
            continue
        verts = mesh.triangles[tri_id].vertices
        tri_pts = np.array([mesh.positions[v] for v in verts], dtype=float)
        tri_vels = np.array([vel(v) for v in verts], dtype=float)

        for probe in neighbors_of(mesh, tri_id):
            tau = first_event_offset(tri_pts, tri_vels, mesh.positions[probe],
                                     vel(probe), taus)
            if tau is not None and (best is None or tau < best[0]):
                best = (tau, idx, probe)
    if best is not None:
        return EventReport(time=mesh.time + best[0], triangle_index=best[1],
                           node_id=best[2])
    return None
