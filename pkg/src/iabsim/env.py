"""Slot-step simulation engine for an IAB network with mobile UEs and blockers.

One call to :meth:`IabEnv.step` executes one slot: half-duplex suppression,
receiver resolution, collisions, SINR/MCS capacity, access blockage, buffer
gating and update, rewards, then mobility and the next observations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import channel as ch
from .config import ExperimentConfig
from .mobility import Blocker, blocked_by_any, initial_waypoint_state, waypoint_step
from .network import (DONOR, IAB, Node, Topology, auto_parents, build_topology,
                      make_panels, sector_indices)

ACCESS = "access"
BACKHAUL = "backhaul"
SILENT = "silent"


@dataclass(frozen=True)
class Access:
    sector: int
    # round-robin names the UE it wants; learned policies leave it None
    target_ue: Optional[int] = None
    kind = ACCESS


@dataclass(frozen=True)
class Backhaul:
    child: int
    kind = BACKHAUL


@dataclass(frozen=True)
class Silent:
    kind = SILENT


AgentAction = Union[Access, Backhaul, Silent]


class ActionError(ValueError):
    pass


@dataclass(frozen=True)
class AgentInfo:
    index: int
    node: int
    panel: int
    children: tuple
    hops: int
    n_sectors: int
    hd: bool

    @property
    def n_actions(self) -> int:
        return self.n_sectors + len(self.children) + 1

    @property
    def obs_dim(self) -> int:
        return 2 * self.n_sectors + len(self.children) * (2 if self.hd else 1)

    def decode(self, idx: int) -> AgentAction:
        idx = int(idx)
        if not 0 <= idx < self.n_actions:
            raise ActionError(f"action index {idx} out of range for agent {self.index}")
        if idx < self.n_sectors:
            return Access(idx)
        if idx < self.n_sectors + len(self.children):
            return Backhaul(self.children[idx - self.n_sectors])
        return Silent()

    def encode(self, action: AgentAction) -> int:
        if isinstance(action, Access):
            return action.sector
        if isinstance(action, Backhaul):
            return self.n_sectors + self.children.index(action.child)
        return self.n_actions - 1


def reward_fd(bits: int, hops: int, empty_buffer: bool, action_kind: str, failed: bool,
              c_min: float, rho_bh: float = 0.8, zeta: float = 1.0) -> float:
    if empty_buffer:
        return 0.0
    if not failed and bits > 0:
        if action_kind == ACCESS:
            return (hops + 1) * bits / c_min
        if action_kind == BACKHAUL:
            return rho_bh * (hops + 1) * bits / c_min
    return -zeta


def reward_hd(bits: int, hops: int, in_er: bool, action_kind: str, child_buffer_after: float,
              failed: bool, c_min: float, rho_bh: float = 0.8, zeta: float = 1.0) -> float:
    """Half-duplex variant: backhaul reward is further divided by the
    child's post-reception buffer, and receiving nodes are zero-rewarded."""
    if in_er:
        return 0.0
    if not failed and bits > 0:
        if action_kind == ACCESS:
            return (hops + 1) * bits / c_min
        if action_kind == BACKHAUL:
            return rho_bh * (hops + 1) * bits / (c_min * child_buffer_after)
    return -zeta


@dataclass
class SlotOutcome:
    bits: np.ndarray               # B_p per agent
    rewards: np.ndarray
    collision: np.ndarray          # bool per agent
    blocked: np.ndarray
    empty_buffer: np.ndarray
    rx_suppressed: np.ndarray
    ue_bits: np.ndarray            # delivered bits per UE
    buffer_delta: dict             # node -> net change (relays only)
    donor_direct_bits: int = 0
    multihop_bits: int = 0
    receivers: dict = field(default_factory=dict)
    sinr: dict = field(default_factory=dict)
    capacity: Optional[np.ndarray] = None
    sent: dict = field(default_factory=dict)

    @property
    def delivered_bits(self) -> int:
        return int(self.ue_bits.sum())


@dataclass
class EnvState:
    slot: int
    ue_motion: list
    blockers: list
    buffers: dict                  # relay id -> bits; the donor is not stored (infinite)
    last_block: np.ndarray         # (n_agents, n_sectors) flags from the previous slot
    last_sent: dict                # node -> bits sent in the previous slot
    received_total: dict
    sent_total: dict
    ue_xy: np.ndarray
    blocker_xy: np.ndarray
    coverage: np.ndarray           # (n_agents, n_ues) covering sector or -1


def _direction(src, dst) -> tuple:
    d = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    return math.atan2(d[1], d[0]), math.atan2(d[2], math.hypot(d[0], d[1]))


class IabEnv:
    """IAB network environment; one agent per (node, panel)."""

    def __init__(self, cfg: ExperimentConfig, seed: int = 0, stream: int = 0):
        """``seed`` fixes the network instance (node drop); ``stream`` selects an
        independent UE/blocker trajectory for that same instance."""
        self.cfg = cfg
        self.stream = stream
        self.hd = cfg.env.duplex == "hd"
        self.mcs = cfg.mcs
        self.c_min = self.mcs.c_min
        self.pl = cfg.path_loss
        self.seed = seed
        self.reset(seed)

    # ------------------------------------------------------------------ setup
    def _build_nodes(self, rng) -> list:
        s = self.cfg.scenario
        donor = Node(0, DONOR, (float(s.donor_xy[0]), float(s.donor_xy[1]), s.donor_height_m),
                     make_panels(s.n_panels, s.n_sectors, self.cfg.donor_pattern),
                     s.donor_tx_power_dbm, s.iab_noise_dbm)
        nodes = [donor]
        if s.no_iab:
            return nodes
        if s.iab_positions is not None:
            xy = [tuple(map(float, p)) for p in s.iab_positions]
        else:
            x0, x1, y0, y1 = self.cfg.bounds
            xy = [(float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1))) for _ in range(s.n_iab)]
        for i, (x, y) in enumerate(xy, start=1):
            nodes.append(Node(i, IAB, (x, y, s.iab_height_m),
                              make_panels(s.n_panels, s.n_sectors, self.cfg.iab_pattern),
                              s.iab_tx_power_dbm, s.iab_noise_dbm))
        return nodes

    def reset(self, seed: Optional[int] = None):
        if seed is not None:
            self.seed = seed
        ss = np.random.SeedSequence(self.seed)
        topo_ss, ue_ss, blk_ss, sel_ss = ss.spawn(4)
        if self.stream:
            ue_ss, blk_ss, sel_ss = np.random.SeedSequence([self.seed, self.stream]).spawn(3)
        topo_rng = np.random.default_rng(topo_ss)
        cfg, s = self.cfg, self.cfg.scenario
        self.nodes = self._build_nodes(topo_rng)
        self.node_by_id = {n.id: n for n in self.nodes}
        if s.no_iab:
            parents = {}
        elif s.parents == "auto" or s.parents is None:
            parents = auto_parents(self.nodes)
        else:
            parents = {i + 1: int(p) for i, p in enumerate(s.parents)}
        self.topology: Topology = build_topology(self.nodes, parents)
        self.agents = []
        for n in self.nodes:
            for p in range(len(n.panels)):
                self.agents.append(AgentInfo(len(self.agents), n.id, p,
                                             tuple(self.topology.children_via(n.id, p)),
                                             self.topology.hop_count[n.id], s.n_sectors, self.hd))
        self.agent_index = {(a.node, a.panel): a.index for a in self.agents}
        self.relays = [n.id for n in self.nodes if n.kind == IAB]
        self._node_xyz = {n.id: np.array(n.pos, dtype=float) for n in self.nodes}

        # independent per-entity streams keep trajectories reproducible
        self._ue_rngs = [np.random.default_rng(x) for x in ue_ss.spawn(s.n_ues)]
        self._blk_rngs = [np.random.default_rng(x) for x in blk_ss.spawn(cfg.n_blockers)]
        self.rng = np.random.default_rng(sel_ss)
        self.ue_mob = cfg.ue_mobility
        self.blk_mob = cfg.blocker_mobility
        ue_motion = [initial_waypoint_state(self.ue_mob, r) for r in self._ue_rngs]
        blockers = [Blocker(initial_waypoint_state(self.blk_mob, r), cfg.blockers.radius_m,
                            cfg.blockers.height_m) for r in self._blk_rngs]
        self.state = EnvState(
            slot=0, ue_motion=ue_motion, blockers=blockers,
            buffers={r: 0 for r in self.relays},
            last_block=np.zeros((len(self.agents), s.n_sectors), dtype=np.int8),
            last_sent={n.id: 0 for n in self.nodes},
            received_total={r: 0 for r in self.relays},
            sent_total={r: 0 for r in self.relays},
            ue_xy=np.zeros((s.n_ues, 2)), blocker_xy=np.zeros((cfg.n_blockers, 2)),
            coverage=np.zeros((len(self.agents), s.n_ues), dtype=int),
        )
        self._sync_positions()
        return self.observations()

    # --------------------------------------------------------------- helpers
    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def frame(self) -> int:
        return self.state.slot // self.cfg.env.frame_slots

    def _sync_positions(self):
        st = self.state
        st.ue_xy = np.array([(m.x, m.y) for m in st.ue_motion], dtype=float).reshape(-1, 2)
        st.blocker_xy = np.array([(b.motion.x, b.motion.y) for b in st.blockers],
                                 dtype=float).reshape(-1, 2)
        cov = np.empty((self.n_agents, len(st.ue_motion)), dtype=int)
        for a in self.agents:
            node = self.node_by_id[a.node]
            cov[a.index] = sector_indices(node.panels[a.panel], node.pos, st.ue_xy)
        st.coverage = cov

    def _advance_mobility(self):
        st, dt = self.state, self.cfg.env.slot_s
        st.ue_motion = [waypoint_step(m, dt, self.ue_mob, r) for m, r in zip(st.ue_motion, self._ue_rngs)]
        st.blockers = [Blocker(waypoint_step(b.motion, dt, self.blk_mob, r), b.radius_m, b.height_m)
                       for b, r in zip(st.blockers, self._blk_rngs)]
        self._sync_positions()

    def ue_xyz(self, ue: int) -> np.ndarray:
        x, y = self.state.ue_xy[ue]
        return np.array([x, y, self.cfg.scenario.ue_height_m])

    def buffer_level(self, node: int) -> float:
        return math.inf if node == self.topology.donor else self.state.buffers[node]

    def observation(self, agent: int) -> np.ndarray:
        a, st = self.agents[agent], self.state
        ns = a.n_sectors
        cov = st.coverage[agent]
        pres = np.zeros(ns)
        pres[np.unique(cov[cov >= 0])] = 1.0
        norm = self.cfg.env.buffer_norm_cmin * self.c_min
        # x / (1 + x) keeps unbounded FD queues inside [0, 1)
        level = np.array([st.buffers[c] / norm for c in a.children], dtype=float)
        parts = [pres, st.last_block[agent].astype(float), level / (1.0 + level)]
        if self.hd:
            parts.append(np.array([st.last_sent[c] / norm for c in a.children], dtype=float))
        return np.concatenate(parts)

    def observations(self) -> list:
        return [self.observation(i) for i in range(self.n_agents)]

    def action_sets(self) -> list:
        return [a.n_actions for a in self.agents]

    # ------------------------------------------------------------------ step
    def _normalise_actions(self, actions: Sequence) -> list:
        if len(actions) != self.n_agents:
            raise ActionError(f"expected {self.n_agents} actions, got {len(actions)}")
        out = []
        for a, act in zip(self.agents, actions):
            if isinstance(act, (int, np.integer)):
                act = a.decode(act)
            if isinstance(act, Access) and not 0 <= act.sector < a.n_sectors:
                raise ActionError(f"agent {a.index}: sector {act.sector} out of range")
            if isinstance(act, Backhaul) and act.child not in a.children:
                raise ActionError(f"agent {a.index}: node {act.child} is not reachable via this panel")
            if not isinstance(act, (Access, Backhaul, Silent)):
                raise ActionError(f"agent {a.index}: unknown action {act!r}")
            out.append(act)
        return out

    def _sinr_db(self, active, acts, receivers, rx_pos) -> dict:
        """SINR of every active link; interference summed in milliwatts."""
        if not active:
            return {}
        tx_nodes = [self.node_by_id[self.agents[i].node] for i in active]
        tx_xyz = np.array([self._node_xyz[nd.id] for nd in tx_nodes])
        patterns = [nd.panels[self.agents[i].panel].pattern for nd, i in zip(tx_nodes, active)]
        g0 = np.array([p.boresight_gain_db for p in patterns])
        az_bw = np.array([p.az_hpbw_rad for p in patterns])
        el_bw = np.array([p.el_hpbw_rad for p in patterns])
        p_tx = np.array([nd.tx_power_dbm for nd in tx_nodes])
        rx_xyz = np.array([rx_pos[i] for i in active])

        # power[k, j]: transmitter k received at the receiver of link j.
        # Each beam is steered onto its own receiver (the diagonal).
        diff = rx_xyz[None, :, :] - tx_xyz[:, None, :]
        horiz = np.hypot(diff[..., 0], diff[..., 1])
        dist = np.sqrt(horiz ** 2 + diff[..., 2] ** 2)
        az = np.arctan2(diff[..., 1], diff[..., 0])
        el = np.arctan2(diff[..., 2], horiz)
        az_beam = np.diag(az)[:, None]
        el_beam = np.diag(el)[:, None]
        az_off = np.remainder(az - az_beam + math.pi, 2 * math.pi) - math.pi
        el_off = el - el_beam
        g_tx = g0[:, None] - 12.0 * el_off ** 2 / el_bw[:, None] ** 2 - 12.0 * az_off ** 2 / az_bw[:, None] ** 2
        # co-located pairs (a receiving node's own panels) are masked below
        power = p_tx[:, None] + g_tx - ch.path_loss_db_array(np.where(dist > 0, dist, self.pl.d0_m), self.pl)

        noise = np.empty(len(active))
        mask = ~np.eye(len(active), dtype=bool)
        for j, i in enumerate(active):
            kind, who = receivers[i]
            if kind == "ue":
                noise[j] = self.cfg.scenario.ue_noise_dbm
                continue
            noise[j] = self.node_by_id[who].noise_dbm
            for k, nd in enumerate(tx_nodes):
                if nd.id == who:
                    # ideal self-interference cancellation at the receiving node
                    mask[k, j] = False
                else:
                    power[k, j] += self._rx_gain_db(who, tx_xyz[k])
        mw = ch.dbm_to_mw(power)
        interference = np.where(mask, mw, 0.0).sum(axis=0)
        ratio = np.diag(mw) / (interference + ch.dbm_to_mw(noise))
        return {i: float(10.0 * np.log10(ratio[j])) for j, i in enumerate(active)}

    def _rx_gain_db(self, rx_node: int, src_xyz: np.ndarray) -> float:
        """Gain of the receive beam at ``rx_node``, aligned on its parent."""
        node = self.node_by_id[rx_node]
        p, _ = self.topology.rx_assoc[rx_node]
        parent = self._node_xyz[self.topology.parent[rx_node][0]]
        here = self._node_xyz[rx_node]
        az_b, el_b = _direction(here, parent)
        az_s, el_s = _direction(here, src_xyz)
        return ch.antenna_gain_db(node.panels[p].pattern, el_s - el_b, math.remainder(az_s - az_b, 2 * math.pi))

    def step(self, actions: Sequence):
        """Advance one slot. Returns (observations, rewards, outcome)."""
        acts = self._normalise_actions(actions)
        st, topo, n = self.state, self.topology, self.n_agents
        env_cfg = self.cfg.env
        start_buffers = dict(st.buffers)

        # (1) half-duplex suppression, resolved parents-first so that a
        # suppressed node cannot itself suppress its children
        suppressed_nodes = set()
        if self.hd:
            for node_id in topo.order():
                if node_id in suppressed_nodes:
                    continue
                for a in self.agents:
                    if a.node == node_id and isinstance(acts[a.index], Backhaul):
                        suppressed_nodes.add(acts[a.index].child)
        rx_suppressed = np.array([a.node in suppressed_nodes for a in self.agents])

        # (2) receiver resolution
        receivers = {}      # agent -> ("ue", ue) | ("node", node)
        for a in self.agents:
            act = acts[a.index]
            if rx_suppressed[a.index] or isinstance(act, Silent):
                continue
            if isinstance(act, Access):
                covered = np.flatnonzero(st.coverage[a.index] == act.sector)
                if covered.size == 0:
                    continue
                if act.target_ue is not None and act.target_ue in covered:
                    receivers[a.index] = ("ue", int(act.target_ue))
                else:
                    receivers[a.index] = ("ue", int(covered[self.rng.integers(covered.size)]))
            else:
                receivers[a.index] = ("node", act.child)

        # (3) collisions
        picks: dict = {}
        for i, (kind, who) in receivers.items():
            if kind == "ue":
                picks.setdefault(who, []).append(i)
        collision = np.zeros(n, dtype=bool)
        for ue, agents in picks.items():
            if len(agents) > 1:
                collision[agents] = True

        # (4)-(5) SINR and capacity over the active transmitter set
        active = sorted(receivers)
        rx_pos = {}
        for i in active:
            kind, who = receivers[i]
            rx_pos[i] = self.ue_xyz(who) if kind == "ue" else self._node_xyz[who]
        sinr = self._sinr_db(active, acts, receivers, rx_pos)
        capacity = np.zeros(n, dtype=np.int64)
        for i in active:
            capacity[i] = ch.rate_bits(sinr[i], self.mcs)

        # (6) access blockage
        blocked = np.zeros(n, dtype=bool)
        new_block = np.zeros_like(st.last_block)
        if len(st.blockers):
            radii = np.array([b.radius_m for b in st.blockers])
            heights = np.array([b.height_m for b in st.blockers])
            for i in active:
                kind, who = receivers[i]
                if kind != "ue":
                    continue
                hit = blocked_by_any(self._node_xyz[self.agents[i].node], rx_pos[i],
                                     st.blocker_xy, radii, heights)
                if hit.any():
                    blocked[i] = True
                    new_block[i, acts[i].sector] = 1

        # (7) buffer gating: equal share of a relay's buffer among its active panels
        active_count: dict = {}
        for i in active:
            active_count[self.agents[i].node] = active_count.get(self.agents[i].node, 0) + 1
        bits = np.zeros(n, dtype=np.int64)
        for i in active:
            if collision[i] or blocked[i] or capacity[i] == 0:
                continue
            node_id = self.agents[i].node
            if node_id == topo.donor:
                bits[i] = capacity[i]
            else:
                share = start_buffers[node_id] // active_count[node_id]
                bits[i] = min(int(capacity[i]), share)

        # (8) buffer update; received bits become transmittable next slot
        sent = {nd.id: 0 for nd in self.nodes}
        ue_bits = np.zeros(len(st.ue_motion), dtype=np.int64)
        donor_direct = multihop = 0
        credit: dict = {}
        for i in active:
            if bits[i] == 0:
                continue
            node_id = self.agents[i].node
            sent[node_id] += int(bits[i])
            kind, who = receivers[i]
            if kind == "ue":
                ue_bits[who] += bits[i]
                if node_id == topo.donor:
                    donor_direct += int(bits[i])
                else:
                    multihop += int(bits[i])
            else:
                credit[who] = credit.get(who, 0) + int(bits[i])
        for r in self.relays:
            st.buffers[r] -= sent[r]
            st.sent_total[r] += sent[r]
            got = credit.get(r, 0)
            st.buffers[r] += got
            st.received_total[r] += got
            assert st.buffers[r] >= 0

        # half-duplex engine assertion: nobody transmits while receiving
        if self.hd:
            receiving = {who for i in active for kind, who in [receivers[i]] if kind == "node"}
            transmitting = {self.agents[i].node for i in active}
            assert not (receiving & transmitting), "half-duplex violation"

        # (9) rewards
        empty = np.array([a.node != topo.donor and start_buffers[a.node] == 0 for a in self.agents])
        rewards = np.zeros(n)
        for a in self.agents:
            i = a.index
            act = acts[i]
            failed = bits[i] == 0
            if self.hd:
                after = st.buffers[act.child] if isinstance(act, Backhaul) else 0
                rewards[i] = reward_hd(int(bits[i]), a.hops, bool(empty[i] or rx_suppressed[i]), act.kind,
                                       after, failed, self.c_min, env_cfg.rho_bh, env_cfg.zeta)
            else:
                rewards[i] = reward_fd(int(bits[i]), a.hops, bool(empty[i]), act.kind, failed,
                                       self.c_min, env_cfg.rho_bh, env_cfg.zeta)

        outcome = SlotOutcome(
            bits=bits, rewards=rewards, collision=collision, blocked=blocked, empty_buffer=empty,
            rx_suppressed=rx_suppressed, ue_bits=ue_bits,
            buffer_delta={r: st.buffers[r] - start_buffers[r] for r in self.relays},
            donor_direct_bits=donor_direct, multihop_bits=multihop, receivers=receivers,
            sinr=sinr, capacity=capacity, sent=sent,
        )

        st.last_block = new_block
        st.last_sent = sent
        st.slot += 1
        self._advance_mobility()
        return self.observations(), rewards, outcome
