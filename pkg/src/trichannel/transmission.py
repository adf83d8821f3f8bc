"""Motion information transmission along mesh edges.

A dynamic node's velocity is projected toward each adjacent node; the
neighbor adopts the projection when it dominates its own speed.  Sweeps are
synchronous (Jacobi-style): every projection within one sweep reads the
start-of-sweep velocities, making the result order-independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Tuple

from .geometry import NodeState, Point, Vector
from .mesh import Mesh


@dataclass(frozen=True)
class TransmissionConfig:
    alpha: float = 1.0  # meters; balances proximity against speed
    beta: float = 1.0  # heading-sharpness exponent
    passes: int = 1

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.passes < 1:
            raise ValueError(f"passes must be >= 1, got {self.passes}")


def project_velocity(v: Vector, p: Vector, cfg: TransmissionConfig) -> Vector:
    """Attenuated copy of ``v`` carried along displacement ``p``.

    Zero when the mover heads away (angle between v and p outside
    [-pi/2, pi/2]).  The result keeps the direction of ``v``.
    """
    px, py = p
    plen = math.hypot(px, py)
    if plen == 0.0:
        raise ValueError("zero displacement vector")
    vx, vy = v
    vlen = math.hypot(vx, vy)
    if vlen == 0.0:
        return (0.0, 0.0)
    # Normalize before the dot product: vlen * plen can underflow to zero
    # for subnormal inputs even when both factors are nonzero.
    cos_theta = (vx / vlen) * (px / plen) + (vy / vlen) * (py / plen)
    if cos_theta < 0.0:
        return (0.0, 0.0)
    cos_theta = min(cos_theta, 1.0)
    theta = math.acos(cos_theta)
    factor = (cfg.alpha / (plen + cfg.alpha)) * abs(math.pi / 2 - theta) ** cfg.beta * cos_theta
    return (factor * vx, factor * vy)


def _mesh_directed_edges(mesh: Mesh) -> Tuple[Tuple[int, int], ...]:
    out = set()
    for (u, v) in mesh.edge_to_triangles:
        out.add((u, v))
        out.add((v, u))
    return tuple(sorted(out))


def transmit(nodes: Dict[int, NodeState], mesh: Mesh,
             cfg: TransmissionConfig) -> Dict[int, NodeState]:
    """Propagate velocities across mesh edges for ``cfg.passes`` sweeps.

    Returns a new node table; positions and kind flags are untouched.  The
    result is meant only for the current planning cycle (search costs and
    event prediction), never for mutating ground-truth state.
    """
    edges = _mesh_directed_edges(mesh)
    velocities: Dict[int, Vector] = {i: n.velocity for i, n in nodes.items()}

    for _ in range(cfg.passes):
        snapshot = dict(velocities)
        best: Dict[int, Vector] = {}
        for (i, j) in edges:
            vi = snapshot[i]
            if vi == (0.0, 0.0):
                continue
            pi: Point = mesh.positions[i]
            pj: Point = mesh.positions[j]
            pij = (pj[0] - pi[0], pj[1] - pi[1])
            if vi[0] * pij[0] + vi[1] * pij[1] <= 0.0:
                continue
            proj = project_velocity(vi, pij, cfg)
            mag = math.hypot(*proj)
            if mag <= math.hypot(*snapshot[j]):
                continue
            prev = best.get(j)
            if prev is None or mag > math.hypot(*prev):
                best[j] = proj
        velocities.update(best)

    return {
        i: (n if velocities[i] == n.velocity
            else replace(n, vx=velocities[i][0], vy=velocities[i][1]))
        for i, n in nodes.items()
    }
