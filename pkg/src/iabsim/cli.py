"""``simcli``: train, evaluate and baseline runs plus figure data.

Outputs are named ``<kind>_<policy>_<duplex>_<density>_seed<k>.<ext>``; the
policy tag gains a ``-noiab`` suffix when relaying is disabled. Identical
arguments give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import marl, metrics
from .config import ConfigError, ExperimentConfig

SUMMARY_FIELDS = ("frames", "mean_delivered_bits", "total_delivered_bits", "mean_rate_mbps", "p25_mbps",
                  "median_mbps", "p75_mbps", "served_gt0_pct", "served_gt50_pct", "donor_direct_pct",
                  "multihop_pct", "mean_backhaul_bits", "collisions", "blockages")


def build_config(args) -> ExperimentConfig:
    cfg = config_mod.load(args.config)
    env, blk, sc, tr, ev = {}, {}, {}, {}, {}
    if getattr(args, "duplex", None):
        env["duplex"] = args.duplex
    if getattr(args, "density", None):
        blk["density"] = args.density
    if getattr(args, "no_iab", False):
        sc["no_iab"] = True
    if getattr(args, "episodes", None) is not None:
        tr["episodes"] = args.episodes
    if getattr(args, "frames", None) is not None:
        ev["frames"] = args.frames
    if getattr(args, "instances", None) is not None:
        ev["instances"] = args.instances
    if getattr(args, "policy", None):
        ev["policy"] = args.policy
    if getattr(args, "seed", None) is not None:
        ev["seed"] = args.seed
    return cfg.with_overrides(env=env, blockers=blk, scenario=sc, train=tr, eval=ev)


def run_tag(policy: str, cfg: ExperimentConfig, seed: int) -> str:
    name = policy + ("-noiab" if cfg.scenario.no_iab else "")
    return f"{name}_{cfg.env.duplex}_{cfg.blockers.density}_seed{seed}"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


# ------------------------------------------------------------------ workers
def _train_one(cfg: ExperimentConfig, seed: int, out_dir: Path, progress=None):
    result = marl.train(cfg, seed=seed, progress=progress)
    tag = run_tag("marl", cfg, seed)
    _write(out_dir / f"train_{tag}.jsonl", "".join(e.to_json() + "\n" for e in result.log))
    marl.save_checkpoint(out_dir / f"ckpt_{tag}", result.learner)
    return result


def _evaluate_one(job):
    cfg, policy, seed, out_dir, checkpoint = job
    learner = None
    if policy == "marl":
        if checkpoint:
            learner = marl.load_checkpoint(checkpoint, cfg, seed)
        else:
            learner = _train_one(cfg, seed, out_dir).learner
    rec = metrics.evaluate(cfg, policy, seed, learner=learner)
    tag = run_tag(policy, cfg, seed)
    _write(out_dir / f"frames_{tag}.csv", rec.csv_text())
    _write(out_dir / f"metrics_{tag}.jsonl", rec.jsonl_text())
    return seed, rec.summary(cfg.frame_duration_s)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SIM_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, policy: str, out_dir, checkpoint=None) -> dict:
    """Evaluate ``policy`` over the configured instances; returns the averaged summary."""
    out_dir = Path(out_dir)
    seeds = [cfg.eval.seed + k for k in range(cfg.eval.instances)]
    if checkpoint and len(seeds) > 1:
        raise ConfigError("a checkpoint belongs to a single instance; use --instances 1")
    jobs = [(cfg, policy, s, out_dir, checkpoint) for s in seeds]
    n = min(_workers(), len(jobs))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_evaluate_one, jobs))
    else:
        results = [_evaluate_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    summaries = [s for _, s in results]
    mean = metrics.average_summaries(summaries)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("seed",) + SUMMARY_FIELDS)
    for seed, s in results:
        w.writerow([seed] + [repr(s[k]) if isinstance(s[k], float) else s[k] for k in SUMMARY_FIELDS])
    w.writerow(["mean"] + [repr(mean[k]) for k in SUMMARY_FIELDS])
    name = policy + ("-noiab" if cfg.scenario.no_iab else "")
    _write(out_dir / f"summary_{name}_{cfg.env.duplex}_{cfg.blockers.density}.csv", buf.getvalue())
    return mean


# ----------------------------------------------------------------- commands
def cmd_train(args) -> int:
    cfg = build_config(args)
    seed = cfg.eval.seed
    out = Path(args.out_dir)

    def progress(entry):
        if not args.quiet and (entry.episode + 1) % 10 == 0:
            print(f"episode {entry.episode + 1}: delivered {entry.delivered_bits} bits", file=sys.stderr)

    _train_one(cfg, seed, out, progress)
    print(out / f"train_{run_tag('marl', cfg, seed)}.jsonl")
    return 0


def cmd_evaluate(args) -> int:
    cfg = build_config(args)
    mean = run_experiment(cfg, cfg.eval.policy, args.out_dir, args.checkpoint)
    print(json.dumps(mean, sort_keys=True))
    return 0


def cmd_baseline(args) -> int:
    cfg = build_config(args)
    out = {}
    for policy in ("rr", "rnd"):
        out[policy] = run_experiment(cfg, policy, args.out_dir)
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_plot_data(args) -> int:
    """Per-UE rates (for CDF/box plots) and per-run summaries from metrics files."""
    src = Path(args.out_dir)
    files = sorted(src.glob("metrics_*.jsonl"))
    if not files:
        print(f"no metrics_*.jsonl files in {src}", file=sys.stderr)
        return 1
    frame_s = build_config(args).frame_duration_s
    rate_rows, summary_rows = [], []
    for f in files:
        tag = f.stem[len("metrics_"):]
        frames = [json.loads(line) for line in f.read_text().splitlines() if line.strip()]
        ue_bits = np.array([fr["ue_bits"] for fr in frames], dtype=float)
        rates = metrics.ue_rate_mbps(ue_bits.mean(axis=0), frame_s)
        for u, r in enumerate(np.atleast_1d(rates)):
            rate_rows.append([tag, u, repr(float(r))])
        stats = metrics.distribution_summary(rates)
        served = metrics.served_percentages(rates)
        delivered = sum(fr["delivered_bits"] for fr in frames)
        direct = sum(fr["donor_direct_bits"] for fr in frames)
        summary_rows.append([tag, len(frames), repr(delivered / len(frames)), repr(stats["p25"]),
                             repr(stats["median"]), repr(stats["p75"]), repr(stats["mean"]),
                             repr(served[0]), repr(served[1]),
                             repr(100.0 * direct / delivered if delivered else 0.0),
                             repr(100.0 * (delivered - direct) / delivered if delivered else 0.0)])
    dest = Path(args.plot_dir or src)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "ue", "rate_mbps"])
    w.writerows(rate_rows)
    _write(dest / "plot_ue_rates.csv", buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "frames", "mean_delivered_bits", "p25_mbps", "median_mbps", "p75_mbps", "mean_mbps",
                "served_gt0_pct", "served_gt50_pct", "donor_direct_pct", "multihop_pct"])
    w.writerows(summary_rows)
    _write(dest / "plot_summary.csv", buf.getvalue())
    print(dest / "plot_summary.csv")
    return 0


def cmd_validate(args) -> int:
    cfg = build_config(args)
    sys.stdout.write(config_mod.dumps(cfg))
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simcli", description="mmWave IAB scheduling simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, policy=False):
        sp.add_argument("--config", default="default",
                        help="config file or preset name (%s)" % ", ".join(config_mod.PRESETS))
        sp.add_argument("--seed", type=int, default=None, help="first instance seed")
        sp.add_argument("--duplex", choices=("fd", "hd"))
        sp.add_argument("--density", choices=("low", "high"))
        sp.add_argument("--no-iab", action="store_true", help="disable relaying (donor only)")
        sp.add_argument("--episodes", type=int, help="training episodes")
        sp.add_argument("--frames", type=int, help="evaluation frames")
        sp.add_argument("--instances", type=int, help="number of random instances")
        sp.add_argument("--out-dir", default="results")
        if policy:
            sp.add_argument("--policy", choices=("marl", "rr", "rnd"))
            sp.add_argument("--checkpoint", help="trained parameters (marl only)")

    sp = sub.add_parser("train", help="train MAAC policies")
    common(sp)
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_train)
    sp = sub.add_parser("evaluate", help="run a policy and write per-frame metrics")
    common(sp, policy=True)
    sp.set_defaults(func=cmd_evaluate)
    sp = sub.add_parser("baseline", help="run the RR and RND baselines")
    common(sp)
    sp.set_defaults(func=cmd_baseline)
    sp = sub.add_parser("plot-data", help="rate distributions and summaries from metrics files")
    common(sp)
    sp.add_argument("--plot-dir", help="destination (defaults to --out-dir)")
    sp.set_defaults(func=cmd_plot_data)
    sp = sub.add_parser("validate-config", help="load, validate and print the resolved config")
    common(sp, policy=True)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
