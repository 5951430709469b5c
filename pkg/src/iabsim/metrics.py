"""Per-frame metrics, rate statistics and the evaluation loop."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .env import IabEnv

SERVED_THRESHOLDS_MBPS = (0.0, 50.0)


def ue_rate_mbps(bits_per_frame, frame_s: float = 80 * 125e-6):
    """Average rate over one frame in Mbit/s."""
    bits = np.asarray(bits_per_frame, dtype=float)
    if np.any(bits < 0):
        raise ValueError("bit counts must be non-negative")
    out = bits / frame_s / 1e6
    return float(out) if out.ndim == 0 else out


def served_percentages(rates_mbps, thresholds=SERVED_THRESHOLDS_MBPS) -> tuple:
    """Percentage of UEs whose rate is strictly above each threshold."""
    r = np.asarray(rates_mbps, dtype=float)
    if r.size == 0:
        return tuple(0.0 for _ in thresholds)
    return tuple(100.0 * float(np.mean(r > t)) for t in thresholds)


def distribution_summary(rates_mbps) -> dict:
    """Quartiles (linear interpolation between order statistics), mean and the empirical CDF."""
    r = np.sort(np.asarray(rates_mbps, dtype=float).ravel())
    if r.size == 0:
        raise ValueError("cannot summarise an empty sample")
    p25, med, p75 = np.percentile(r, [25, 50, 75])
    return {
        "p25": float(p25), "median": float(med), "p75": float(p75), "mean": float(r.mean()),
        "cdf_x": r, "cdf_y": np.arange(1, r.size + 1) / r.size,
    }


@dataclass
class MetricsRecord:
    """Per-frame counters collected while running a policy."""

    n_ues: int
    delivered: list = field(default_factory=list)
    ue_bits: list = field(default_factory=list)
    donor_direct: list = field(default_factory=list)
    multihop: list = field(default_factory=list)
    backhaul: list = field(default_factory=list)
    collisions: list = field(default_factory=list)
    blockages: list = field(default_factory=list)
    rewards: list = field(default_factory=list)

    @property
    def frames(self) -> int:
        return len(self.delivered)

    def start_frame(self):
        self.delivered.append(0)
        self.ue_bits.append(np.zeros(self.n_ues, dtype=np.int64))
        for name in ("donor_direct", "multihop", "backhaul", "collisions", "blockages"):
            getattr(self, name).append(0)
        self.rewards.append(0.0)

    def add_slot(self, outcome, backhaul_bits: int) -> None:
        self.delivered[-1] += outcome.delivered_bits
        self.ue_bits[-1] += outcome.ue_bits
        self.donor_direct[-1] += outcome.donor_direct_bits
        self.multihop[-1] += outcome.multihop_bits
        self.backhaul[-1] += backhaul_bits
        self.collisions[-1] += int(outcome.collision.sum())
        self.blockages[-1] += int(outcome.blocked.sum())
        self.rewards[-1] += float(outcome.rewards.sum())

    def ue_rates_mbps(self, frame_s: float) -> np.ndarray:
        """Per-UE rate averaged over all frames."""
        return ue_rate_mbps(np.mean(np.array(self.ue_bits), axis=0), frame_s)

    def traffic_split(self) -> tuple:
        """Percent of delivered traffic sent straight from the donor vs. over relays."""
        total = sum(self.delivered)
        if total == 0:
            return (0.0, 0.0)
        return (100.0 * sum(self.donor_direct) / total, 100.0 * sum(self.multihop) / total)

    def summary(self, frame_s: float) -> dict:
        rates = self.ue_rates_mbps(frame_s)
        stats = distribution_summary(rates)
        served = served_percentages(rates)
        direct, hop = self.traffic_split()
        return {
            "frames": self.frames,
            "mean_delivered_bits": float(np.mean(self.delivered)),
            "total_delivered_bits": int(sum(self.delivered)),
            "mean_rate_mbps": stats["mean"], "p25_mbps": stats["p25"],
            "median_mbps": stats["median"], "p75_mbps": stats["p75"],
            "served_gt0_pct": served[0], "served_gt50_pct": served[1],
            "donor_direct_pct": direct, "multihop_pct": hop,
            "mean_backhaul_bits": float(np.mean(self.backhaul)),
            "collisions": int(sum(self.collisions)), "blockages": int(sum(self.blockages)),
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frame", "delivered_bits", "donor_direct_bits", "multihop_bits", "backhaul_bits",
                    "collisions", "blockages", "reward"] + [f"ue{u}_bits" for u in range(self.n_ues)])
        for f in range(self.frames):
            w.writerow([f, self.delivered[f], self.donor_direct[f], self.multihop[f], self.backhaul[f],
                        self.collisions[f], self.blockages[f], repr(self.rewards[f])]
                       + [int(b) for b in self.ue_bits[f]])
        return buf.getvalue()

    def jsonl_text(self) -> str:
        lines = []
        for f in range(self.frames):
            lines.append(json.dumps({
                "frame": f, "delivered_bits": int(self.delivered[f]),
                "donor_direct_bits": int(self.donor_direct[f]), "multihop_bits": int(self.multihop[f]),
                "backhaul_bits": int(self.backhaul[f]), "collisions": int(self.collisions[f]),
                "blockages": int(self.blockages[f]), "reward": self.rewards[f],
                "ue_bits": [int(b) for b in self.ue_bits[f]],
            }, sort_keys=True))
        return "\n".join(lines) + "\n"


class MaacPolicy:
    """Wraps trained actors; samples from them unless ``greedy``."""

    name = "marl"

    def __init__(self, learner, seed: int = 0, greedy: bool = False):
        self.learner = learner
        self.greedy = greedy
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE7A1]))

    def act(self, env: IabEnv, obs) -> list:
        return self.learner.act(obs, self.rng, greedy=self.greedy)


def run_policy(env: IabEnv, policy, frames: int) -> MetricsRecord:
    rec = MetricsRecord(env.cfg.scenario.n_ues)
    obs = env.observations()
    for _ in range(frames):
        rec.start_frame()
        for _ in range(env.cfg.env.frame_slots):
            obs, _, outcome = env.step(policy.act(env, obs))
            bh = sum(int(outcome.bits[i]) for i, (kind, _) in outcome.receivers.items() if kind == "node")
            rec.add_slot(outcome, bh)
    return rec


def make_policy(name: str, env: IabEnv, cfg: ExperimentConfig, seed: int, learner=None):
    from .schedulers import RandomPolicy, RoundRobinPolicy

    if name == "rr":
        return RoundRobinPolicy(env, cfg.eval.rr_refill_cmin)
    if name == "rnd":
        return RandomPolicy(env, seed)
    if name == "marl":
        if learner is None:
            raise ValueError("the marl policy needs trained parameters")
        return MaacPolicy(learner, seed)
    raise ValueError(f"unknown policy {name!r}")


def evaluate(cfg: ExperimentConfig, policy: str, seed: int, frames: Optional[int] = None,
             learner=None) -> MetricsRecord:
    """Run ``policy`` on network instance ``seed`` with a fresh mobility stream."""
    env = IabEnv(cfg, seed=seed, stream=1)
    pol = make_policy(policy, env, cfg, seed, learner)
    return run_policy(env, pol, cfg.eval.frames if frames is None else frames)


def average_summaries(summaries: Sequence[dict]) -> dict:
    """Field-wise mean over instances."""
    if not summaries:
        raise ValueError("nothing to average")
    return {k: float(np.mean([s[k] for s in summaries])) for k in summaries[0]}
