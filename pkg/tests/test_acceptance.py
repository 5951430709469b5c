"""Acceptance criteria 1-10. Each test records one PASS/FAIL line, printed
in the terminal summary, and then asserts."""
import math
import time

import numpy as np
import pytest

import conftest
import engine_checks
import maac_cases
import oracles
from iabsim import channel as ch
from iabsim import cli, config, marl, metrics
from iabsim import mobility as mb
from iabsim.env import BACKHAUL, ACCESS, IabEnv, reward_fd, reward_hd

SEEDS = (0, 1, 2, 3, 4)


def record(key, ok, detail):
    conftest.ACCEPTANCE[key] = (bool(ok), detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# ------------------------------------------------------------------ 1
def test_01_channel_exactness():
    t0 = time.perf_counter()
    pl5 = ch.path_loss_db(5.0, ch.PathLossParams())
    pl50 = ch.path_loss_db(50.0, ch.PathLossParams())
    gain = ch.AntennaPattern(az_hpbw_rad=math.pi / 12, el_hpbw_rad=math.pi / 4).boresight_gain_db
    dt = time.perf_counter() - t0
    ok = abs(pl5 - 82.02) <= 0.01 and abs(pl50 - 105.62) <= 0.01 and abs(gain - 15.58) <= 0.01 and dt < 1
    record("01", ok, f"PL(5)={pl5:.4f} PL(50)={pl50:.4f} G0={gain:.4f} dB in {dt:.3f}s")


# ------------------------------------------------------------------ 2
def test_02_blockage_oracle():
    rng = np.random.default_rng(2024)
    tx, rx, c, r, h = oracles.random_blockage_configs(rng, 10_000)
    t0 = time.perf_counter()
    margins = oracles.blockage_margins(tx, rx, c, r, h)
    res = oracles.sampling_resolution(tx, rx)
    keep = np.abs(margins) > 2 * res
    got = np.array([mb.los_blocked(tx[k], rx[k], mb.Blocker(mb.WaypointState(c[k, 0], c[k, 1], 0.0, 0.0,
                                                                           mb.PAUSED, 1.0), r[k], h[k]))
                    for k in range(len(tx))])
    dt = time.perf_counter() - t0
    agree = got[keep] == (margins[keep] <= 0)
    ok = bool(np.all(agree)) and dt < 30
    record("02", ok, f"{int(agree.sum())}/{int(keep.sum())} agree ({int((~keep).sum())} tangency exclusions, "
                  f"{int((margins <= 0).sum())} blocked) in {dt:.1f}s")


# ------------------------------------------------------------------ 3
def test_03_gradient_suite():
    t0 = time.perf_counter()
    worst = {"critic": 0.0, "policy": 0.0, "networks": 0.0}
    for seed in range(20):
        worst["critic"] = max(worst["critic"], *maac_cases.critic_grad_errors(seed))
        worst["policy"] = max(worst["policy"], *maac_cases.policy_grad_errors(seed))
        worst["networks"] = max(worst["networks"], *maac_cases.network_grad_errors(seed))
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-4 and dt < 60
    record("03", ok, "20 instances, worst rel. error " + " ".join(f"{k}={v:.1e}" for k, v in worst.items())
           + f" in {dt:.1f}s")


# ------------------------------------------------------------------ 4
@pytest.mark.parametrize("preset", ["fd_high", "hd_high"])
def test_04_engine_invariants(preset):
    t0 = time.perf_counter()
    violations, slots, stats = engine_checks.run_random_episodes(config.load(preset), 100, seed=7)
    dt = time.perf_counter() - t0
    ok = not violations and dt < 60 and stats["collisions"] > 0 and stats["backhaul_bits"] > 0
    key = "04" + preset[:2]
    record(key, ok, f"{preset}: {slots} slots, {len(violations)} violations, {stats['collisions']} collisions, "
                    f"{stats['suppressed']} suppressed receptions in {dt:.1f}s"
                    + (f"; first: {violations[0]}" if violations else ""))


# ------------------------------------------------------------------ 5
def test_05_reward_branches():
    c, rho, z = 7500.0, 0.8, 1.0
    fd = [
        (reward_fd(0, 1, True, ACCESS, True, c, rho, z), 0.0),            # empty buffer set
        (reward_fd(75000, 1, True, BACKHAUL, False, c, rho, z), 0.0),
        (reward_fd(75000, 1, False, ACCESS, False, c, rho, z), 20.0),      # (h+1) C / c_min
        (reward_fd(75000, 0, False, BACKHAUL, False, c, rho, z), 8.0),     # rho (h+1) C / c_min
        (reward_fd(0, 2, False, ACCESS, True, c, rho, z), -1.0),          # failed
        (reward_fd(0, 2, False, "silent", True, c, rho, z), -1.0),        # silent with data
    ]
    hd = [
        (reward_hd(0, 1, True, ACCESS, 0, True, c, rho, z), 0.0),          # empty or receiving set
        (reward_hd(75000, 1, True, ACCESS, 0, False, c, rho, z), 0.0),
        (reward_hd(75000, 1, False, ACCESS, 0, False, c, rho, z), 20.0),
        (reward_hd(75000, 0, False, BACKHAUL, 4.0, False, c, rho, z), 2.0),  # divided by child buffer
        (reward_hd(0, 1, False, BACKHAUL, 4.0, True, c, rho, z), -1.0),
        (reward_hd(0, 1, False, "silent", 0, True, c, rho, z), -1.0),
    ]
    bad = [(k, got, want) for k, (got, want) in enumerate(fd + hd) if got != want]
    record("05", not bad, f"{len(fd)} FD and {len(hd)} HD branch cases exact" if not bad else f"mismatches {bad}")


# ------------------------------------------------------------------ 6
def test_06_attention_structure():
    problems = []
    for seed in range(10):
        params, batch, _ = maac_cases.random_instance(seed)
        for W in marl.attention_weights(params.critic, batch["obs"], batch["acts"]):
            if np.max(np.abs(W.sum(axis=-1) - 1.0)) > 1e-9:
                problems.append(f"omega sum, instance {seed}")

    cfg = config.load("desk").with_overrides(train={"batch_size": 16, "hidden_dim": 16})
    rng = np.random.default_rng(6)
    learner = marl.MaacLearner([4, 3, 5], [3, 2, 4], cfg.train, rng)
    crit = learner.params.critic
    for step in range(5):
        obs = [rng.normal(size=(16, d)) for d in learner.obs_dims]
        nxt = [rng.normal(size=(16, d)) for d in learner.obs_dims]
        hat, na, lp = learner.side_info(obs, nxt, rng)
        batch = {"obs": obs, "next_obs": nxt, "acts": [rng.integers(0, a, 16) for a in learner.n_actions],
                 "rews": rng.normal(size=(16, 3)), "hat_acts": list(hat.T), "next_acts": list(na.T),
                 "next_logp": lp}
        learner.critic_update(batch)
        views = [marl.CriticParams([e], [hh], crit.queries, crit.keys, crit.values).shared_arrays()
                 for e, hh in zip(crit.encoders, crit.heads)]
        for v in views[1:]:
            if not all(a is b or np.array_equal(a, b) for a, b in zip(v, views[0])):
                problems.append(f"shared parameters differ after update {step}")

    init, online = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    kappa, n = 0.99, 1000
    t = [init.copy()]
    for _ in range(n):
        marl.soft_update(t, [online], kappa)
    err = float(np.max(np.abs(t[0] - (kappa ** n * init + (1 - kappa ** n) * online))))
    if err > 1e-12:
        problems.append(f"soft update off by {err}")
    record("06", not problems, "omega sums, shared parameters and kappa^1000 closed form ok"
           if not problems else "; ".join(problems))


# ------------------------------------------------------------ 7 and 8
@pytest.fixture(scope="session")
def desk_runs():
    cfg = config.load("desk")
    noiab = cfg.with_overrides(scenario={"no_iab": True})
    out = {"curves": [], "marl": [], "rnd": [], "rr": [], "marl_noiab": [], "rr_noiab": [],
           "t_train": 0.0, "t_noiab": 0.0}
    t0 = time.perf_counter()
    for seed in SEEDS:
        res = marl.train(cfg, seed=seed)
        out["curves"].append(np.array(res.delivered(), dtype=float))
        out["marl"].append(sum(metrics.evaluate(cfg, "marl", seed, learner=res.learner).delivered))
        out["rnd"].append(sum(metrics.evaluate(cfg, "rnd", seed).delivered))
        out["rr"].append(sum(metrics.evaluate(cfg, "rr", seed).delivered))
    out["t_train"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    for seed in SEEDS:
        res = marl.train(noiab, seed=seed)
        out["marl_noiab"].append(sum(metrics.evaluate(noiab, "marl", seed, learner=res.learner).delivered))
        out["rr_noiab"].append(sum(metrics.evaluate(noiab, "rr", seed).delivered))
    out["t_noiab"] = time.perf_counter() - t0
    return out


@pytest.mark.slow
def test_07_desk_learning_signal(desk_runs):
    curve = np.mean(desk_runs["curves"], axis=0)
    first, last = curve[:50].mean(), curve[-50:].mean()
    marl_bits, rnd_bits = np.mean(desk_runs["marl"]), np.mean(desk_runs["rnd"])
    per_seed = " ".join(f"{c[-50:].mean() / c[:50].mean():.2f}" for c in desk_runs["curves"])
    dt = desk_runs["t_train"]
    ok = last >= 1.2 * first and marl_bits >= 1.5 * rnd_bits and dt < 15 * 60
    record("07", ok, f"last/first = {last / first:.3f} (per seed {per_seed}); MARL/RND = {marl_bits / rnd_bits:.2f} "
                  f"over 100 frames; {dt / 60:.1f} min")


@pytest.mark.slow
def test_08_iab_beats_no_iab(desk_runs):
    best_noiab = max(np.mean(desk_runs["marl_noiab"]), np.mean(desk_runs["rr_noiab"]))
    m, r = np.mean(desk_runs["marl"]), np.mean(desk_runs["rr"])
    dt = desk_runs["t_noiab"]
    ok = m > best_noiab and r > best_noiab and dt < 10 * 60
    record("08", ok, f"mean bits per 100 frames: MARL {m:.3e}, RR {r:.3e}, No-IAB MARL "
                  f"{np.mean(desk_runs['marl_noiab']):.3e}, No-IAB RR {np.mean(desk_runs['rr_noiab']):.3e}; "
                  f"No-IAB runs {dt / 60:.1f} min")


# ------------------------------------------------------------------ 9
def test_09_message_accounting():
    bad = []
    for ns, nch, l_bits, b_bits in np.ndindex(12, 5, 3, 3):
        l_bits, b_bits = 16 * l_bits, 16 * b_bits
        if marl.message_bits("fd", ns, nch, l_bits, b_bits) != 2 * ns + nch * l_bits:
            bad.append(("fd", ns, nch, l_bits))
        if marl.message_bits("hd", ns, nch, l_bits, b_bits) != 2 * ns + nch * (l_bits + b_bits):
            bad.append(("hd", ns, nch, l_bits, b_bits))
    examples = (marl.message_bits("fd", 5, 1, 32), marl.message_bits("hd", 5, 1, 32, 32))
    ok = not bad and examples == (42, 74)
    record("09", ok, f"{12 * 5 * 3 * 3} grid points per mode, examples {examples}")


# ------------------------------------------------------------------ 10
def test_10_determinism(tmp_path, capsys):
    commands = [
        ["evaluate", "--config", "desk", "--policy", "rr", "--frames", "3", "--instances", "2"],
        ["evaluate", "--config", "desk", "--policy", "rnd", "--duplex", "hd", "--frames", "3"],
        ["evaluate", "--config", "desk", "--policy", "marl", "--episodes", "12", "--frames", "2"],
        ["baseline", "--config", "fd_low", "--frames", "1", "--no-iab"],
    ]
    for d in ("a", "b"):
        for cmd in commands:
            assert cli.main(cmd + ["--out-dir", str(tmp_path / d)]) == 0
        assert cli.main(["plot-data", "--out-dir", str(tmp_path / d)]) == 0
    capsys.readouterr()
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.is_file())
    same = files == sorted(p.name for p in (tmp_path / "b").iterdir() if p.is_file())
    differ = [f for f in files if (tmp_path / "a" / f).read_bytes() != (tmp_path / "b" / f).read_bytes()]
    record("10", same and not differ and len(files) > 10,
           f"{len(files)} files compared, {len(differ)} differ" + (f": {differ}" if differ else ""))
