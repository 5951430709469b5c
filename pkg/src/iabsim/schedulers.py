"""Non-learning baselines sharing the agent interface: round-robin and random."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .env import Access, AgentInfo, Backhaul, IabEnv, Silent


@dataclass
class RrState:
    """Per-panel round-robin cursor. ``last_served`` is the UE id served last;
    the next pick is the smallest covered id above it, wrapping around."""

    refill_bits: float
    last_served: Optional[int] = None
    # first pick is covered[offset % n]; staggers panels that share UEs
    offset: int = 0
    served: dict = field(default_factory=dict)


def rr_pick(covered, last_served: Optional[int], offset: int = 0) -> Optional[int]:
    """Next UE id in cyclic id order; departed UEs are simply skipped."""
    covered = sorted(int(u) for u in covered)
    if not covered:
        return None
    if last_served is None:
        return covered[offset % len(covered)]
    for u in covered:
        if u > last_served:
            return u
    return covered[0]


def rr_action(state: RrState, agent: AgentInfo, coverage: np.ndarray, child_buffers: dict):
    """Refill the lowest-id starving child first, else serve the next covered UE."""
    for c in sorted(agent.children):
        if child_buffers[c] < state.refill_bits:
            return Backhaul(c)
    ue = rr_pick(np.flatnonzero(coverage >= 0), state.last_served, state.offset)
    if ue is None:
        return Silent()
    state.last_served = ue
    state.served[ue] = state.served.get(ue, 0) + 1
    return Access(int(coverage[ue]), target_ue=ue)


def rnd_action(n_actions: int, rng) -> int:
    """Uniform index over the full action set (sectors, children, silent)."""
    if n_actions < 1:
        raise ValueError("action set must be non-empty")
    return int(rng.integers(n_actions))


class RoundRobinPolicy:
    name = "rr"

    def __init__(self, env: IabEnv, refill_cmin: float = 10.0):
        self.states = [RrState(refill_cmin * env.c_min, offset=a.index) for a in env.agents]

    def act(self, env: IabEnv, obs=None) -> list:
        st = env.state
        return [rr_action(self.states[a.index], a, st.coverage[a.index], st.buffers) for a in env.agents]


class RandomPolicy:
    name = "rnd"

    def __init__(self, env: IabEnv, seed: int = 0):
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0x52D]))

    def act(self, env: IabEnv, obs=None) -> list:
        return [rnd_action(a.n_actions, self.rng) for a in env.agents]
