"""Privacy-aware planning: intensity fields, trajectory risk integrals, and a
time-layered dynamic-programming planner minimizing accumulated risk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .world import Environment, PrivacyRegion, Vec3, is_collision, segment_blocked


class Unreachable(Exception):
    """No feasible trajectory reaches the target within the time horizon."""


def privacy_intensity(p: Vec3, region: PrivacyRegion) -> float:
    """Violation intensity in [0, 1]: 1 inside the c1 core, 0 beyond c2,
    linear in distance between."""
    d = p.dist_to(region.center)
    if d >= region.c2:
        return 0.0
    if d <= region.c1:
        return 1.0
    return (d - region.c2) / (region.c1 - region.c2)


def total_privacy_risk(traj: Sequence[Tuple[float, Vec3]],
                       regions: Sequence[PrivacyRegion]) -> float:
    """Trapezoidal time integral of the summed intensities along a trajectory."""
    if len(traj) < 2:
        return 0.0
    times = [t for t, _ in traj]
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise ValueError("trajectory timestamps must be strictly increasing")
    values = [sum(privacy_intensity(p, r) for r in regions) for _, p in traj]
    risk = 0.0
    for i in range(len(traj) - 1):
        risk += 0.5 * (values[i] + values[i + 1]) * (times[i + 1] - times[i])
    return risk


def _point_segment_distance(c: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(c - a))
    t = float(np.clip((c - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(c - (a + t * ab)))


@dataclass
class DpLattice:
    """Layered value tables of the privacy DP over a cubic lattice.

    values[i] maps a flat node index to the minimum risk-to-go from layer i;
    moves[i] stores the offset index realizing it."""

    origin: np.ndarray
    pitch: float
    dims: Tuple[int, int, int]
    delta: float
    m_layers: int
    offsets: np.ndarray                      # (K, 3), row 0 is the hold move
    values: List[Dict[int, float]] = field(default_factory=list)
    moves: List[Dict[int, int]] = field(default_factory=list)

    def flat_of(self, ix: int, iy: int, iz: int) -> int:
        _, ny, nz = self.dims
        return (ix * ny + iy) * nz + iz

    def unflatten(self, flat: int) -> Tuple[int, int, int]:
        _, ny, nz = self.dims
        ix, rem = divmod(flat, ny * nz)
        iy, iz = divmod(rem, nz)
        return ix, iy, iz

    def node_point(self, flat: int) -> Vec3:
        ix, iy, iz = self.unflatten(flat)
        return Vec3(float(self.origin[0] + ix * self.pitch),
                    float(self.origin[1] + iy * self.pitch),
                    float(self.origin[2] + iz * self.pitch))


@dataclass
class PrivacyPlan:
    """DP result: node trajectory at stage boundaries plus its risk value."""

    trajectory: List[Tuple[float, Vec3]]
    t_f: float
    risk: float
    lattice: DpLattice
    start_layer: int

    def sampled(self, per_stage: int) -> List[Tuple[float, Vec3]]:
        """Trajectory densified to `per_stage` subintervals per DP stage."""
        out: List[Tuple[float, Vec3]] = [self.trajectory[0]]
        for (t0, p0), (t1, p1) in zip(self.trajectory, self.trajectory[1:]):
            for s in range(1, per_stage + 1):
                u = s / per_stage
                out.append((t0 + u * (t1 - t0),
                            Vec3(p0.x + u * (p1.x - p0.x),
                                 p0.y + u * (p1.y - p0.y),
                                 p0.z + u * (p1.z - p0.z))))
        return out


class _DpProblem:
    """Shared feasibility and stage-cost machinery for the DP and its audits."""

    def __init__(self, env: Environment, lattice: DpLattice, v_max: float,
                 samples_per_stage: int):
        self.env = env
        self.lattice = lattice
        self.v_max = v_max
        self.samples = samples_per_stage
        self._node_ok: Dict[int, bool] = {}
        self._move_len = np.linalg.norm(lattice.offsets * lattice.pitch, axis=1)
        speed_ok = self._move_len <= v_max * lattice.delta * (1 + 1e-9)
        self.move_indices = [k for k in range(lattice.offsets.shape[0]) if speed_ok[k]]

    def node_feasible(self, flat: int) -> bool:
        ok = self._node_ok.get(flat)
        if ok is None:
            p = self.lattice.node_point(flat)
            ok = not is_collision(p, self.env) and all(
                p.dist_to(r.center) > r.c1 for r in self.env.privacy_regions)
            self._node_ok[flat] = ok
        return ok

    def move_feasible(self, a: int, b: int) -> bool:
        """Whole constant-heading segment a -> b must respect hard constraints."""
        if a == b:
            return True
        pa = self.lattice.node_point(a)
        pb = self.lattice.node_point(b)
        if self.env.known_obstacles and segment_blocked(self.env, pa, pb):
            return False
        aa, bb = pa.as_array(), pb.as_array()
        for r in self.env.privacy_regions:
            if _point_segment_distance(r.center.as_array(), aa, bb) <= r.c1:
                return False
        return True

    def stage_cost(self, a: int, b: int) -> float:
        """Risk accumulated over one stage of duration delta along a -> b."""
        regions = self.env.privacy_regions
        if not regions:
            return 0.0
        pa = self.lattice.node_point(a).as_array()
        pb = self.lattice.node_point(b).as_array()
        n = self.samples
        total = 0.0
        prev = self._intensity_at(pa, regions)
        for s in range(1, n + 1):
            pt = pa + (s / n) * (pb - pa)
            cur = self._intensity_at(pt, regions)
            total += 0.5 * (prev + cur)
            prev = cur
        return total * self.lattice.delta / n

    @staticmethod
    def _intensity_at(p: np.ndarray, regions: Sequence[PrivacyRegion]) -> float:
        v = Vec3(float(p[0]), float(p[1]), float(p[2]))
        return sum(privacy_intensity(v, r) for r in regions)


def _lattice_offsets(planar: bool) -> np.ndarray:
    rows = [(0, 0, 0)]
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in ((0,) if planar else (-1, 0, 1)):
                if dx == dy == dz == 0:
                    continue
                rows.append((dx, dy, dz))
    return np.array(rows, dtype=int)


def plan_privacy_dp(env: Environment, p0: Vec3, pf: Vec3, m_layers: int,
                    t_max: float, v_max: float, pitch: Optional[float] = None,
                    planar: bool = False, samples_per_stage: int = 16) -> PrivacyPlan:
    """Backward time-layered DP from the target over a cubic lattice.

    The lattice is anchored at pf; p0 snaps to its nearest node. Each stage
    lasts delta = t_max / m_layers and moves along one of the 26 lattice
    directions (8 when planar) or holds; moves faster than v_max are pruned.
    Raises Unreachable when p0 belongs to no reachable layer.
    """
    if m_layers < 1:
        raise ValueError("m_layers must be at least 1")
    delta = t_max / m_layers
    if pitch is None:
        pitch = v_max * delta / (math.sqrt(2.0) if planar else math.sqrt(3.0))

    lo, hi = env.bounds.lo.as_array(), env.bounds.hi.as_array()
    anchor = pf.as_array()
    k_lo = np.ceil((lo - anchor) / pitch - 1e-9).astype(int)
    k_hi = np.floor((hi - anchor) / pitch + 1e-9).astype(int)
    if planar:
        k_lo[2] = k_hi[2] = 0
    dims = tuple(int(h - l) + 1 for l, h in zip(k_lo, k_hi))
    origin = anchor + k_lo * pitch
    lattice = DpLattice(origin=origin, pitch=pitch, dims=dims, delta=delta,
                        m_layers=m_layers, offsets=_lattice_offsets(planar))
    prob = _DpProblem(env, lattice, v_max, samples_per_stage)

    def snap(p: Vec3, label: str) -> int:
        idx = np.rint((p.as_array() - origin) / pitch).astype(int)
        if not all(0 <= idx[i] < dims[i] for i in range(3)):
            raise ValueError(f"{label} {p.as_tuple()} outside the DP lattice")
        return lattice.flat_of(int(idx[0]), int(idx[1]), int(idx[2]))

    pf_flat = snap(pf, "target")
    p0_flat = snap(p0, "start")
    if not prob.node_feasible(pf_flat) or not prob.node_feasible(p0_flat):
        raise ValueError("start or target violates the hard constraints")

    values: List[Dict[int, float]] = [dict() for _ in range(m_layers + 1)]
    moves: List[Dict[int, int]] = [dict() for _ in range(m_layers + 1)]
    values[m_layers][pf_flat] = 0.0
    nx, ny, nz = dims
    for i in range(m_layers - 1, -1, -1):
        layer = values[i]
        move_layer = moves[i]
        for q in sorted(values[i + 1]):
            v_next = values[i + 1][q]
            qx, qy, qz = lattice.unflatten(q)
            for k in prob.move_indices:
                dx, dy, dz = lattice.offsets[k]
                px, py, pz = qx - dx, qy - dy, qz - dz
                if not (0 <= px < nx and 0 <= py < ny and 0 <= pz < nz):
                    continue
                pred = lattice.flat_of(px, py, pz)
                if not prob.node_feasible(pred) or not prob.move_feasible(pred, q):
                    continue
                cand = v_next + prob.stage_cost(pred, q)
                if cand < layer.get(pred, math.inf):
                    layer[pred] = cand
                    move_layer[pred] = k
    lattice.values = values
    lattice.moves = moves

    reachable = [i for i in range(m_layers) if p0_flat in values[i]]
    if not reachable:
        raise Unreachable("start point belongs to no reachable DP layer")
    best_v = min(values[i][p0_flat] for i in reachable)
    i0 = max(i for i in reachable if values[i][p0_flat] == best_v)

    node = p0_flat
    trajectory: List[Tuple[float, Vec3]] = [(0.0, lattice.node_point(node))]
    for i in range(i0, m_layers):
        k = moves[i][node]
        ix, iy, iz = lattice.unflatten(node)
        dx, dy, dz = lattice.offsets[k]
        node = lattice.flat_of(ix + dx, iy + dy, iz + dz)
        trajectory.append(((i - i0 + 1) * delta, lattice.node_point(node)))
    t_f = (m_layers - i0) * delta
    return PrivacyPlan(trajectory, t_f, best_v, lattice, i0)
