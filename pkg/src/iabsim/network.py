"""Static network structure: nodes, panels, sectors and the backhaul tree."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .channel import AntennaPattern
from .mobility import wrap_angle

DONOR = "donor"
IAB = "iab"
UE = "ue"


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Panel:
    orientation_az: float
    n_sectors: int
    pattern: AntennaPattern
    coverage_width: float = math.pi

    def __post_init__(self):
        if self.n_sectors < 1:
            raise ValueError("a panel needs at least one sector")

    @property
    def sector_width(self) -> float:
        return self.coverage_width / self.n_sectors

    @property
    def sector_directions(self) -> tuple:
        w = self.sector_width
        start = self.orientation_az - self.coverage_width / 2.0
        return tuple(wrap_angle(start + w * (s + 0.5)) for s in range(self.n_sectors))


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    pos: tuple  # (x, y, z)
    panels: tuple = ()
    tx_power_dbm: float = 0.0
    noise_dbm: float = 0.0


def make_panels(n_panels: int, n_sectors: int, pattern: AntennaPattern,
                coverage_width: float = math.pi) -> tuple:
    return tuple(Panel(wrap_angle(2.0 * math.pi * i / n_panels), n_sectors, pattern, coverage_width)
                 for i in range(n_panels))


def azimuth(src, dst) -> float:
    return math.atan2(dst[1] - src[1], dst[0] - src[0])


def sector_covers(panel: Panel, sector_idx: int, node_pos, target_pos) -> bool:
    if not 0 <= sector_idx < panel.n_sectors:
        raise IndexError(f"sector {sector_idx} out of range")
    w = panel.sector_width
    rel = wrap_angle(azimuth(node_pos, target_pos) - panel.sector_directions[sector_idx])
    return -w / 2.0 <= rel < w / 2.0


def sector_indices(panel: Panel, node_pos, targets: np.ndarray) -> np.ndarray:
    """Covering sector of each target (-1 when outside the panel arc)."""
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    az = np.arctan2(targets[:, 1] - node_pos[1], targets[:, 0] - node_pos[0])
    rel = np.remainder(az - panel.orientation_az + math.pi, 2.0 * math.pi) - math.pi
    half = panel.coverage_width / 2.0
    inside = (rel >= -half) & (rel < half)
    idx = np.floor((rel + half) / panel.sector_width).astype(int)
    idx = np.minimum(idx, panel.n_sectors - 1)
    return np.where(inside, idx, -1)


def associate_backhaul_sector(parent: Node, child: Node) -> tuple[int, int]:
    """(panel, sector) of ``parent`` whose pointing direction is closest to ``child``."""
    if not parent.panels:
        raise TopologyError(f"node {parent.id} has no panels")
    target = azimuth(parent.pos, child.pos)
    best, best_diff = None, math.inf
    for p, panel in enumerate(parent.panels):
        for s, direction in enumerate(panel.sector_directions):
            diff = abs(wrap_angle(target - direction))
            if diff < best_diff - 1e-12:
                best, best_diff = (p, s), diff
    return best


@dataclass
class Topology:
    """Backhaul tree rooted at the donor.

    ``parent`` maps child id -> (parent id, parent panel, parent sector);
    ``rx_assoc`` maps child id -> (child panel, child sector) facing the parent.
    """

    donor: int
    parent: dict = field(default_factory=dict)
    rx_assoc: dict = field(default_factory=dict)
    hop_count: dict = field(default_factory=dict)

    def children_via(self, node_id: int, panel: int) -> list:
        return sorted(c for c, (p, pp, _) in self.parent.items() if p == node_id and pp == panel)

    def children(self, node_id: int) -> list:
        return sorted(c for c, (p, _, _) in self.parent.items() if p == node_id)

    def order(self) -> list:
        """Donor/IAB node ids sorted by hop count (parents first)."""
        return sorted(self.hop_count, key=lambda n: (self.hop_count[n], n))


def build_topology(nodes: Sequence[Node], parent_of: Mapping[int, int]) -> Topology:
    by_id = {n.id: n for n in nodes if n.kind in (DONOR, IAB)}
    donors = [n.id for n in by_id.values() if n.kind == DONOR]
    if len(donors) != 1:
        raise TopologyError(f"expected exactly one donor, found {len(donors)}")
    donor = donors[0]
    relays = {i for i, n in by_id.items() if n.kind == IAB}
    if set(parent_of) != relays:
        missing = relays - set(parent_of)
        extra = set(parent_of) - relays
        raise TopologyError(f"parent map mismatch: missing {sorted(missing)}, unknown {sorted(extra)}")
    topo = Topology(donor=donor, hop_count={donor: 0})
    for child in sorted(relays):
        par = parent_of[child]
        if par not in by_id or par == child:
            raise TopologyError(f"node {child} has invalid parent {par}")
        # walk up to the donor; revisiting a node means a cycle
        seen, cur, hops = {child}, par, 1
        while cur != donor:
            if cur in seen:
                raise TopologyError(f"cycle through node {cur}")
            seen.add(cur)
            cur = parent_of[cur]
            hops += 1
        topo.hop_count[child] = hops
        p, s = associate_backhaul_sector(by_id[par], by_id[child])
        topo.parent[child] = (par, p, s)
        topo.rx_assoc[child] = associate_backhaul_sector(by_id[child], by_id[par])
    return topo


def auto_parents(nodes: Sequence[Node]) -> dict:
    """Greedy nearest-attachment tree.

    Relays are attached in order of distance from the donor; each one picks
    the closest already-attached node (donor included).
    """
    donor = next(n for n in nodes if n.kind == DONOR)
    relays = sorted((n for n in nodes if n.kind == IAB),
                    key=lambda n: (math.dist(n.pos[:2], donor.pos[:2]), n.id))
    attached = [donor]
    parents = {}
    for n in relays:
        best = min(attached, key=lambda a: (math.dist(a.pos[:2], n.pos[:2]), a.id))
        parents[n.id] = best.id
        attached.append(n)
    return parents


def node_by_id(nodes: Sequence[Node], node_id: int) -> Optional[Node]:
    for n in nodes:
        if n.id == node_id:
            return n
    return None
