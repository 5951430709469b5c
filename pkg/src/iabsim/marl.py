"""Multi-actor attention-critic (MAAC) training for the panel agents.

Critics are centralised: every agent owns an observation-action encoder and
an output head, while the attention projections (query, key) and the value
network ``g`` are shared. Policies are per-agent softmax MLPs. Gradients
are derived by hand; see ``tests/test_marl.py`` for the finite-difference
checks.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import nn
from .config import ExperimentConfig, TrainConfig


def message_bits(mode: str, n_sectors: int, n_children: int, l_bits: int, b_bits: int = 0) -> int:
    """Size of one uploaded observation: two sector bitmaps plus per-child fields."""
    if min(n_sectors, n_children, l_bits, b_bits) < 0:
        raise ValueError("inputs must be non-negative")
    if mode == "fd":
        return 2 * n_sectors + n_children * l_bits
    if mode == "hd":
        return 2 * n_sectors + n_children * (l_bits + b_bits)
    raise ValueError(f"unknown duplex mode {mode!r}")


def onehot(idx, n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=int)
    out = np.zeros(idx.shape + (n,))
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


# --------------------------------------------------------------------- params
@dataclass
class CriticParams:
    encoders: list          # per agent: (obs+act) -> hidden, leaky
    heads: list             # per agent: 2*hidden -> hidden (leaky) -> 1 (linear)
    queries: list           # shared, per attention head: (hidden, d)
    keys: list              # shared, per attention head: (hidden, d)
    values: list            # shared, per attention head: MlpParams hidden -> d, leaky

    @property
    def n_agents(self) -> int:
        return len(self.encoders)

    @property
    def hidden(self) -> int:
        return self.encoders[0].out_dim

    @property
    def n_heads(self) -> int:
        return len(self.queries)

    def shared_arrays(self) -> list:
        out = []
        for q, k, v in zip(self.queries, self.keys, self.values):
            out += [q, k] + v.arrays()
        return out

    def unique_arrays(self, i: int) -> list:
        return self.encoders[i].arrays() + self.heads[i].arrays()

    def arrays(self) -> list:
        out = []
        for i in range(self.n_agents):
            out += self.unique_arrays(i)
        return out + self.shared_arrays()

    def named(self, prefix: str = "critic.") -> dict:
        out = {}
        for i in range(self.n_agents):
            out.update(self.encoders[i].named(f"{prefix}enc{i}."))
            out.update(self.heads[i].named(f"{prefix}head{i}."))
        for h in range(self.n_heads):
            out[f"{prefix}att{h}.Wq"] = self.queries[h]
            out[f"{prefix}att{h}.Wk"] = self.keys[h]
            out.update(self.values[h].named(f"{prefix}att{h}.g."))
        return out

    def copy(self) -> "CriticParams":
        return CriticParams([e.copy() for e in self.encoders], [h.copy() for h in self.heads],
                            [q.copy() for q in self.queries], [k.copy() for k in self.keys],
                            [v.copy() for v in self.values])


@dataclass
class MaacParams:
    policies: list
    critic: CriticParams
    target_policies: list
    target_critic: CriticParams

    def named(self) -> dict:
        out = {}
        for i, p in enumerate(self.policies):
            out.update(p.named(f"policy{i}."))
        for i, p in enumerate(self.target_policies):
            out.update(p.named(f"target_policy{i}."))
        out.update(self.critic.named("critic."))
        out.update(self.target_critic.named("target_critic."))
        return out

    def load_named(self, arrays: dict) -> None:
        mine = self.named()
        if set(mine) != set(arrays):
            raise ValueError("checkpoint does not match the network layout")
        for name, arr in mine.items():
            if arr.shape != arrays[name].shape:
                raise ValueError(f"shape mismatch for {name}")
            arr[...] = arrays[name]


def init_maac(obs_dims: Sequence[int], n_actions: Sequence[int], hidden: int, rng,
              heads: int = 1, slope: float = nn.DEFAULT_SLOPE) -> MaacParams:
    L, A = nn.LEAKY, nn.LINEAR
    d = hidden // heads
    policies = [nn.init_mlp([od, hidden, hidden, na], [L, L, L], rng, slope)
                for od, na in zip(obs_dims, n_actions)]
    encoders = [nn.init_mlp([od + na, hidden], [L], rng, slope) for od, na in zip(obs_dims, n_actions)]
    out_heads = [nn.init_mlp([2 * hidden, hidden, 1], [L, A], rng, slope) for _ in obs_dims]
    bound = 1.0 / math.sqrt(hidden)
    queries = [rng.uniform(-bound, bound, (hidden, d)) for _ in range(heads)]
    keys = [rng.uniform(-bound, bound, (hidden, d)) for _ in range(heads)]
    values = [nn.init_mlp([hidden, d], [L], rng, slope) for _ in range(heads)]
    critic = CriticParams(encoders, out_heads, queries, keys, values)
    return MaacParams(policies, critic, [p.copy() for p in policies], critic.copy())


# --------------------------------------------------------------------- critic
def _encode(critic: CriticParams, obs, acts):
    """Per-agent embeddings e_j, stacked as (N, B, H)."""
    caches, embs = [], []
    for j, enc in enumerate(critic.encoders):
        n_act = enc.in_dim - obs[j].shape[-1]
        x = np.concatenate([obs[j], onehot(acts[j], n_act)], axis=-1)
        e, c = nn.mlp_forward(enc, x)
        embs.append(e)
        caches.append(c)
    return np.stack(embs), caches


def _attend(critic: CriticParams, E):
    """Attention over the other agents for every agent (N, B, H) -> x (N, B, H).

    Internally batch-first: scores are (B, N, N) with row i over senders j.
    """
    n, b, hdim = E.shape
    Et = E.transpose(1, 0, 2)
    parts, caches = [], []
    for wq, wk, val in zip(critic.queries, critic.keys, critic.values):
        d = wq.shape[1]
        Qr = Et @ wq
        K = Et @ wk
        V, vcache = nn.mlp_forward(val, Et.reshape(b * n, hdim))
        V = V.reshape(b, n, d)
        if n == 1:
            parts.append(np.zeros((b, 1, d)))
            caches.append(None)
            continue
        S = (Qr @ K.transpose(0, 2, 1)) / math.sqrt(d)
        S[:, np.arange(n), np.arange(n)] = -np.inf
        W = nn.softmax(S, axis=-1)
        parts.append(W @ V)
        caches.append((Qr, K, V, vcache, W))
    return np.concatenate(parts, axis=-1).transpose(1, 0, 2), caches


def critic_forward(critic: CriticParams, obs, acts):
    """All agents' Q values, shape (N, B), plus the cache for backprop."""
    E, ecaches = _encode(critic, obs, acts)
    X, acaches = _attend(critic, E)
    qs, hcaches = [], []
    for i, head in enumerate(critic.heads):
        q, c = nn.mlp_forward(head, np.concatenate([E[i], X[i]], axis=-1))
        qs.append(q[:, 0])
        hcaches.append(c)
    return np.stack(qs), (E, ecaches, acaches, hcaches)


def attention_weights(critic: CriticParams, obs, acts) -> list:
    """Per head (B, N, N) weights; row i is agent i's distribution over j != i."""
    E, _ = _encode(critic, obs, acts)
    _, caches = _attend(critic, E)
    return [c[4] if c is not None else np.zeros((E.shape[1], 1, 1)) for c in caches]


def critic_q(params: MaacParams, i: int, obs, acts, use_target: bool = False) -> np.ndarray:
    critic = params.target_critic if use_target else params.critic
    single = np.asarray(obs[0]).ndim == 1
    if single:
        obs = [np.asarray(o)[None, :] for o in obs]
        acts = [np.atleast_1d(a) for a in acts]
    q, _ = critic_forward(critic, obs, acts)
    return q[i, 0] if single else q[i]


def critic_backward(critic: CriticParams, cache, dq) -> list:
    """Gradient of sum(dq * Q) w.r.t. ``critic.arrays()`` (same order)."""
    E, ecaches, acaches, hcaches = cache
    n, b, hdim = E.shape
    dE = np.zeros_like(E)
    dX = np.zeros_like(E)
    head_grads = []
    for i, head in enumerate(critic.heads):
        g, din = nn.mlp_backward(head, hcaches[i], dq[i][:, None])
        head_grads.append(g)
        dE[i] += din[:, :hdim]
        dX[i] = din[:, hdim:]
    Et = E.transpose(1, 0, 2)
    dXt = dX.transpose(1, 0, 2)
    dEt = np.zeros_like(Et)
    shared = []
    off = 0
    for h, (wq, wk, val) in enumerate(zip(critic.queries, critic.keys, critic.values)):
        d = wq.shape[1]
        dXh = dXt[:, :, off:off + d]
        off += d
        if acaches[h] is None:
            shared += [np.zeros_like(wq), np.zeros_like(wk)] + [np.zeros_like(a) for a in val.arrays()]
            continue
        Qr, K, V, vcache, W = acaches[h]
        dW = dXh @ V.transpose(0, 2, 1)
        dV = W.transpose(0, 2, 1) @ dXh
        dS = W * (dW - np.sum(W * dW, axis=-1, keepdims=True))
        scale = 1.0 / math.sqrt(d)
        dQr = (dS @ K) * scale
        dK = (dS.transpose(0, 2, 1) @ Qr) * scale
        flat = Et.reshape(b * n, hdim)
        gq = flat.T @ dQr.reshape(b * n, d)
        gk = flat.T @ dK.reshape(b * n, d)
        gv, dEv = nn.mlp_backward(val, vcache, dV.reshape(b * n, d))
        dEt += dQr @ wq.T + dK @ wk.T + dEv.reshape(b, n, hdim)
        shared += [gq, gk] + gv
    dE += dEt.transpose(1, 0, 2)
    grads = []
    for j, enc in enumerate(critic.encoders):
        g, _ = nn.mlp_backward(enc, ecaches[j], dE[j])
        grads += g + head_grads[j]
    return grads + shared


def critic_q_all_actions(critic: CriticParams, i: int, obs, acts, E=None) -> np.ndarray:
    """Q_i(o, (c, a_-i)) for every candidate action c of agent i: (B, |A_i|).

    Other agents' embeddings, keys and values do not depend on a_i, so only
    agent i's embedding, query and head are recomputed per candidate.
    ``E`` may carry precomputed embeddings from ``_encode``.
    """
    if E is None:
        E, _ = _encode(critic, obs, acts)
    n, b, hdim = E.shape
    enc = critic.encoders[i]
    n_act = enc.in_dim - obs[i].shape[-1]
    xi = np.concatenate([np.repeat(obs[i][:, None, :], n_act, axis=1),
                         np.broadcast_to(np.eye(n_act), (b, n_act, n_act))], axis=-1)
    Ei, _ = nn.mlp_forward(enc, xi)                      # (B, C, H)
    others = [j for j in range(n) if j != i]
    Eo = E[others].transpose(1, 0, 2)                    # (B, N-1, H)
    parts = []
    for wq, wk, val in zip(critic.queries, critic.keys, critic.values):
        d = wq.shape[1]
        if not others:
            parts.append(np.zeros((b, n_act, d)))
            continue
        K = Eo @ wk
        V, _ = nn.mlp_forward(val, Eo)
        S = ((Ei @ wq) @ K.transpose(0, 2, 1)) / math.sqrt(d)
        parts.append(nn.softmax(S, axis=-1) @ V)
    X = np.concatenate(parts, axis=-1)
    q, _ = nn.mlp_forward(critic.heads[i], np.concatenate([Ei, X], axis=-1))
    return q[..., 0]


# ------------------------------------------------------------------- policies
def policy_probs(policy: nn.MlpParams, obs) -> np.ndarray:
    logits, _ = nn.mlp_forward(policy, obs)
    return nn.softmax(logits)


def critic_loss_and_grads(params: MaacParams, batch: dict, gamma: float, tau: float,
                          reward_scale: float = 1.0):
    """Joint regression loss summed over agents and averaged over the batch."""
    obs, acts = batch["obs"], batch["acts"]
    n = params.critic.n_agents
    q_next, _ = critic_forward(params.target_critic, batch["next_obs"], batch["next_acts"])
    y = reward_scale * batch["rews"].T + gamma * (q_next - tau * batch["next_logp"].T)
    q, cache = critic_forward(params.critic, obs, acts)
    err = q - y
    bsz = err.shape[1]
    loss = float(np.sum(err ** 2) / bsz)
    grads = critic_backward(params.critic, cache, 2.0 * err / bsz)
    return loss, grads, y


def policy_surrogate_grads(policy: nn.MlpParams, obs_i, hat_a_i, q_hat, baseline, tau: float,
                           logit_reg: float = 0.0):
    """Gradient of the ascent objective mean(log pi(a|o) * A) - logit_reg * mean(logits^2),
    with A = -tau * log pi(a|o) + Q(o, a) - b(o, a_-i) held constant.
    Returns (objective, grads, A)."""
    logits, cache = nn.mlp_forward(policy, obs_i)
    logp_all = nn.log_softmax(logits)
    probs = np.exp(logp_all)
    bsz = len(hat_a_i)
    rows = np.arange(bsz)
    logp = logp_all[rows, hat_a_i]
    adv = -tau * logp + q_hat - baseline
    objective = float(np.mean(logp * adv)) - logit_reg * float(np.mean(logits ** 2))
    dlogits = (onehot(hat_a_i, probs.shape[1]) - probs) * (adv / bsz)[:, None]
    dlogits -= logit_reg * 2.0 * logits / logits.size
    grads, _ = nn.mlp_backward(policy, cache, dlogits)
    return objective, grads, adv


def soft_update(target: Sequence[np.ndarray], online: Sequence[np.ndarray], kappa: float) -> None:
    """target <- kappa * target + (1 - kappa) * online, in place."""
    for t, o in zip(target, online):
        if t.shape != o.shape:
            raise ValueError("target/online shape mismatch")
        t *= kappa
        t += (1.0 - kappa) * o


# -------------------------------------------------------------- replay buffer
class ReplayBuffer:
    """FIFO ring of joint transitions plus the per-agent side information
    uploaded with them (hat action, target next action and its log-prob)."""

    def __init__(self, capacity: int, obs_dims: Sequence[int]):
        self.capacity = int(capacity)
        n = len(obs_dims)
        self.obs = [np.zeros((capacity, d)) for d in obs_dims]
        self.next_obs = [np.zeros((capacity, d)) for d in obs_dims]
        self.acts = np.zeros((capacity, n), dtype=np.int64)
        self.rews = np.zeros((capacity, n))
        self.hat_acts = np.zeros((capacity, n), dtype=np.int64)
        self.next_acts = np.zeros((capacity, n), dtype=np.int64)
        self.next_logp = np.zeros((capacity, n))
        self.inserted = 0

    def __len__(self):
        return min(self.inserted, self.capacity)

    def add(self, obs, acts, rews, next_obs, hat_acts, next_acts, next_logp) -> None:
        """Insert a batch; ``obs``/``next_obs`` are per-agent (T, d) arrays."""
        t = len(acts)
        for k in range(t):
            slot = (self.inserted + k) % self.capacity
            for j in range(len(self.obs)):
                self.obs[j][slot] = obs[j][k]
                self.next_obs[j][slot] = next_obs[j][k]
            self.acts[slot] = acts[k]
            self.rews[slot] = rews[k]
            self.hat_acts[slot] = hat_acts[k]
            self.next_acts[slot] = next_acts[k]
            self.next_logp[slot] = next_logp[k]
        self.inserted += t

    def sample(self, batch_size: int, rng) -> dict:
        if len(self) == 0:
            raise ValueError("cannot sample from an empty replay buffer")
        idx = rng.choice(len(self), size=min(batch_size, len(self)), replace=False)
        return {
            "idx": idx,
            "obs": [o[idx] for o in self.obs],
            "next_obs": [o[idx] for o in self.next_obs],
            "acts": list(self.acts[idx].T),
            "rews": self.rews[idx],
            "hat_acts": list(self.hat_acts[idx].T),
            "next_acts": list(self.next_acts[idx].T),
            "next_logp": self.next_logp[idx],
        }


# -------------------------------------------------------------------- learner
class MaacLearner:
    """Central critic plus per-agent actors with their optimisers."""

    def __init__(self, obs_dims, n_actions, tcfg: TrainConfig, rng, init_rng=None):
        self.cfg = tcfg
        self.rng = rng
        self.obs_dims = list(obs_dims)
        self.n_actions = list(n_actions)
        self.params = init_maac(obs_dims, n_actions, tcfg.hidden_dim, init_rng or rng,
                                tcfg.attend_heads, tcfg.leaky_slope)
        self.critic_opt = nn.adam_init(self.params.critic.arrays(), lr=tcfg.lr_critic)
        self.policy_opts = [nn.adam_init(p.arrays(), lr=tcfg.lr_policy) for p in self.params.policies]
        self.n_critic_updates = 0
        self.n_policy_updates = 0

    @property
    def n_agents(self) -> int:
        return len(self.obs_dims)

    def act(self, obs: Sequence[np.ndarray], rng, greedy: bool = False) -> list:
        out = []
        for pol, o in zip(self.params.policies, obs):
            p = policy_probs(pol, o)
            out.append(int(np.argmax(p)) if greedy else int(nn.sample_categorical(p, rng)))
        return out

    def side_info(self, obs_seq, next_obs_seq, rng):
        """Per-agent hat actions on o (current policy) and target actions on o'."""
        t = len(obs_seq[0])
        hat = np.zeros((t, self.n_agents), dtype=np.int64)
        nxt = np.zeros((t, self.n_agents), dtype=np.int64)
        logp = np.zeros((t, self.n_agents))
        for i in range(self.n_agents):
            hat[:, i] = nn.sample_categorical(policy_probs(self.params.policies[i], obs_seq[i]), rng)
            lp = nn.log_softmax(nn.mlp_forward(self.params.target_policies[i], next_obs_seq[i])[0])
            nxt[:, i] = nn.sample_categorical(np.exp(lp), rng)
            logp[:, i] = lp[np.arange(t), nxt[:, i]]
        return hat, nxt, logp

    def critic_update(self, batch: dict):
        c = self.cfg
        if c.resample_actions:
            hat, nxt, logp = self.side_info(batch["obs"], batch["next_obs"], self.rng)
            batch = dict(batch, hat_acts=list(hat.T), next_acts=list(nxt.T), next_logp=logp)
        loss, grads, _ = critic_loss_and_grads(self.params, batch, c.gamma, c.tau, c.reward_scale)
        grads = nn.clip_by_global_norm(grads, c.grad_clip)
        nn.adam_step(self.params.critic.arrays(), grads, self.critic_opt)
        self.n_critic_updates += 1
        soft_update(self.params.target_critic.arrays(), self.params.critic.arrays(), c.kappa)
        return loss, batch

    def policy_packages(self, batch: dict) -> list:
        """Values the central entity sends back: per agent (o_i, hat a_i, Q_i(o, hat a), b)."""
        obs, hat = batch["obs"], batch["hat_acts"]
        rows = np.arange(len(hat[0]))
        E, _ = _encode(self.params.critic, obs, hat)
        packages = []
        for i in range(self.n_agents):
            q_all = critic_q_all_actions(self.params.critic, i, obs, hat, E)
            probs = policy_probs(self.params.policies[i], obs[i])
            packages.append((obs[i], hat[i], q_all[rows, hat[i]], np.sum(probs * q_all, axis=1)))
        return packages

    def apply_policy_update(self, i: int, package) -> float:
        obs_i, hat_i, q_hat, baseline = package
        pol = self.params.policies[i]
        surrogate, grads, _ = policy_surrogate_grads(pol, obs_i, hat_i, q_hat, baseline, self.cfg.tau,
                                                     self.cfg.logit_reg)
        grads = nn.clip_by_global_norm(grads, self.cfg.grad_clip)
        nn.adam_step(pol.arrays(), [-g for g in grads], self.policy_opts[i])
        soft_update(self.params.target_policies[i].arrays(), pol.arrays(), self.cfg.kappa)
        self.n_policy_updates += 1
        return surrogate


# ------------------------------------------------------------------- training
@dataclass
class EpisodeLog:
    episode: int
    delivered_bits: int
    mean_reward: float
    critic_loss: Optional[float]
    message_bits_total: int
    critic_updates: int
    policy_updates: int

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


@dataclass
class TrainResult:
    learner: MaacLearner
    log: list = field(default_factory=list)

    @property
    def params(self) -> MaacParams:
        return self.learner.params

    def delivered(self) -> np.ndarray:
        return np.array([e.delivered_bits for e in self.log], dtype=float)


def train(cfg: ExperimentConfig, seed: int = 0, episodes: Optional[int] = None, env=None,
          progress=None) -> TrainResult:
    """Online training with batched tuple uploads and periodic updates."""
    from .env import IabEnv

    tc = cfg.train
    episodes = tc.episodes if episodes is None else episodes
    ss = np.random.SeedSequence([seed, 0x1AB])
    init_ss, act_ss, learn_ss = ss.spawn(3)
    env = env or IabEnv(cfg, seed=seed)
    obs_dims = [a.obs_dim for a in env.agents]
    learner = MaacLearner(obs_dims, env.action_sets(), tc, np.random.default_rng(learn_ss),
                          np.random.default_rng(init_ss))
    act_rng = np.random.default_rng(act_ss)
    replay = ReplayBuffer(tc.replay_capacity, obs_dims)
    result = TrainResult(learner)

    frame = cfg.env.frame_slots
    warmup_steps = tc.warmup_episodes * frame
    per_tuple_bits = sum(message_bits(cfg.env.duplex, a.n_sectors, len(a.children), tc.message_l_bits,
                                      tc.message_b_bits) for a in env.agents)
    # event queue: (step, seq, kind, payload)
    events: list = []
    seq = 0

    def push(step, kind, payload):
        nonlocal seq
        heapq.heappush(events, (step, seq, kind, payload))
        seq += 1

    local: list = []
    msg_total = 0
    obs = env.observations()
    t = 0
    ep_losses: list = []

    def central_round():
        for _ in range(tc.updates_per_round):
            batch = replay.sample(tc.batch_size, learner.rng)
            loss, batch = learner.critic_update(batch)
            ep_losses.append(loss)
            push(t + tc.latency_central_steps, "policy", learner.policy_packages(batch))

    if tc.timeline == "solution2":
        push(tc.update_period, "timer", None)

    for ep in range(episodes):
        ep_bits, ep_rew = 0, 0.0
        ep_losses = []
        for _ in range(frame):
            acts = learner.act(obs, act_rng)
            next_obs, rewards, outcome = env.step(acts)
            local.append((obs, acts, rewards, next_obs))
            ep_bits += outcome.delivered_bits
            ep_rew += float(np.mean(rewards))
            obs = next_obs
            t += 1

            if t % tc.t_upd == 0:
                o = [np.array([tr[0][j] for tr in local]) for j in range(env.n_agents)]
                o2 = [np.array([tr[3][j] for tr in local]) for j in range(env.n_agents)]
                hat, nxt, logp = learner.side_info(o, o2, act_rng)
                upload = (o, np.array([tr[1] for tr in local]), np.array([tr[2] for tr in local]), o2,
                          hat, nxt, logp)
                msg_total += per_tuple_bits * len(local)
                local = []
                push(t + tc.latency_agent_steps, "arrival", upload)

            while events and events[0][0] <= t:
                _, _, kind, payload = heapq.heappop(events)
                if kind == "arrival":
                    replay.add(*payload)
                    if tc.timeline == "solution1" and t > warmup_steps:
                        central_round()
                elif kind == "timer":
                    push(t + tc.update_period, "timer", None)
                    if t > warmup_steps and len(replay):
                        central_round()
                elif kind == "policy":
                    for i, pkg in enumerate(payload):
                        learner.apply_policy_update(i, pkg)

        entry = EpisodeLog(ep, int(ep_bits), ep_rew / frame,
                           float(np.mean(ep_losses)) if ep_losses else None, int(msg_total),
                           learner.n_critic_updates, learner.n_policy_updates)
        result.log.append(entry)
        if progress is not None:
            progress(entry)
    return result


def learner_for(cfg: ExperimentConfig, env, seed: int = 0) -> MaacLearner:
    """Fresh learner sized for ``env``'s agents."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1AB]))
    return MaacLearner([a.obs_dim for a in env.agents], env.action_sets(), cfg.train, rng)


def save_checkpoint(path, learner: MaacLearner) -> None:
    nn.save_arrays(path, learner.params.named())


def load_checkpoint(path, cfg: ExperimentConfig, seed: int = 0) -> MaacLearner:
    """Rebuild the learner for instance ``seed`` and load saved parameters into it."""
    from .env import IabEnv

    learner = learner_for(cfg, IabEnv(cfg, seed=seed), seed)
    learner.params.load_named(nn.load_arrays(path))
    return learner

