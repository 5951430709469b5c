"""Experiment configuration: INI-style files with literal values.

Every file is layered over the bundled ``default.cfg``, which carries the
reference scenario values. Values are Python literals; the constant ``pi``
may appear in arithmetic (``pi/36``).
"""
from __future__ import annotations

import ast
import configparser
import io
import math
import operator
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .channel import AntennaPattern, McsTable, PathLossParams
from .mobility import MobilityConfig

PRESETS = ("default", "fd_low", "fd_high", "hd_low", "hd_high", "desk")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    area_m: tuple
    donor_xy: tuple
    n_iab: int
    iab_positions: Optional[tuple]
    parents: Any
    donor_height_m: float
    iab_height_m: float
    ue_height_m: float
    n_ues: int
    n_panels: int
    n_sectors: int
    donor_tx_power_dbm: float
    iab_tx_power_dbm: float
    iab_noise_dbm: float
    ue_noise_dbm: float
    donor_az_hpbw: float
    iab_az_hpbw: float
    el_hpbw: float
    no_iab: bool


@dataclass(frozen=True)
class ChannelConfig:
    alpha_db: float
    d0_m: float
    k_near: float
    k_far: float
    mcs_thresholds_db: tuple
    mcs_bits_per_slot: tuple


@dataclass(frozen=True)
class MobilitySection:
    ue_speed_range: tuple
    move_range: tuple
    pause_range: tuple


@dataclass(frozen=True)
class BlockerConfig:
    density: str
    count_low: int
    count_high: int
    radius_m: float
    height_m: float
    speed_range: tuple


@dataclass(frozen=True)
class EnvConfig:
    duplex: str
    frame_slots: int
    slot_s: float
    zeta: float
    rho_bh: float
    buffer_norm_cmin: float


@dataclass(frozen=True)
class TrainConfig:
    episodes: int
    hidden_dim: int
    attend_heads: int
    updates_per_round: int
    t_upd: int
    warmup_episodes: int
    lr_critic: float
    lr_policy: float
    gamma: float
    tau: float
    kappa: float
    replay_capacity: int
    batch_size: int
    timeline: str
    latency_agent_steps: int
    latency_central_steps: int
    update_period: int
    resample_actions: bool
    reward_scale: float
    grad_clip: float
    logit_reg: float
    leaky_slope: float
    message_l_bits: int
    message_b_bits: int


@dataclass(frozen=True)
class EvalConfig:
    policy: str
    frames: int
    instances: int
    seed: int
    rr_refill_cmin: float


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    channel: ChannelConfig
    mobility: MobilitySection
    blockers: BlockerConfig
    env: EnvConfig
    train: TrainConfig
    eval: EvalConfig

    # derived objects -----------------------------------------------------
    @property
    def path_loss(self) -> PathLossParams:
        c = self.channel
        return PathLossParams(c.alpha_db, c.d0_m, c.k_near, c.k_far)

    @property
    def mcs(self) -> McsTable:
        c = self.channel
        return McsTable(tuple(zip(c.mcs_thresholds_db, c.mcs_bits_per_slot)))

    @property
    def donor_pattern(self) -> AntennaPattern:
        return AntennaPattern(self.scenario.donor_az_hpbw, self.scenario.el_hpbw)

    @property
    def iab_pattern(self) -> AntennaPattern:
        return AntennaPattern(self.scenario.iab_az_hpbw, self.scenario.el_hpbw)

    @property
    def bounds(self) -> tuple:
        w, h = self.scenario.area_m
        return (0.0, float(w), 0.0, float(h))

    @property
    def ue_mobility(self) -> MobilityConfig:
        m = self.mobility
        return MobilityConfig(self.bounds, tuple(m.ue_speed_range), tuple(m.move_range), tuple(m.pause_range))

    @property
    def blocker_mobility(self) -> MobilityConfig:
        m = self.mobility
        return MobilityConfig(self.bounds, tuple(self.blockers.speed_range), tuple(m.move_range),
                              tuple(m.pause_range))

    @property
    def n_blockers(self) -> int:
        b = self.blockers
        return b.count_low if b.density == "low" else b.count_high

    @property
    def frame_duration_s(self) -> float:
        return self.env.frame_slots * self.env.slot_s

    def with_overrides(self, **sections) -> "ExperimentConfig":
        """``cfg.with_overrides(env={"duplex": "hd"})`` returns a validated copy."""
        new = self
        for section, values in sections.items():
            new = replace(new, **{section: replace(getattr(new, section), **values)})
        validate(new)
        return new


_SECTION_TYPES = {
    "scenario": ScenarioConfig, "channel": ChannelConfig, "mobility": MobilitySection,
    "blockers": BlockerConfig, "env": EnvConfig, "train": TrainConfig, "eval": EvalConfig,
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_node(node):
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return math.pi
        if node.id in ("None", "True", "False"):
            return {"None": None, "True": True, "False": False}[node.id]
        raise ConfigError(f"unknown name {node.id!r}")
    if isinstance(node, (ast.Tuple, ast.List)):
        return tuple(_eval_node(e) for e in node.elts)
    if isinstance(node, ast.Dict):
        return {_eval_node(k): _eval_node(v) for k, v in zip(node.keys, node.values)}
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    raise ConfigError(f"unsupported expression: {ast.dump(node)}")


def parse_value(text: str):
    text = text.strip()
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        # bare words are strings (duplex = fd)
        return text
    try:
        return _eval_node(tree.body)
    except ConfigError:
        if isinstance(tree.body, ast.Name):
            return text
        raise


def _read_layers(texts) -> dict:
    merged: dict = {}
    for text in texts:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_string(text)
        for section in parser.sections():
            if section not in _SECTION_TYPES:
                raise ConfigError(f"unknown section [{section}]")
            valid = {f.name for f in fields(_SECTION_TYPES[section])}
            for key, raw in parser.items(section):
                if key not in valid:
                    raise ConfigError(f"unknown key {section}.{key}")
                merged.setdefault(section, {})[key] = parse_value(raw)
    return merged


def _coerce(cls, values: dict):
    kwargs = {}
    for f in fields(cls):
        if f.name not in values:
            raise ConfigError(f"missing key {cls.__name__}.{f.name}")
        v = values[f.name]
        if f.type in ("int",) and isinstance(v, float) and v.is_integer():
            v = int(v)
        if f.type == "float" and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if f.type == "bool" and not isinstance(v, bool):
            raise ConfigError(f"{cls.__name__}.{f.name} must be True/False")
        kwargs[f.name] = v
    return cls(**kwargs)


def preset_text(name: str) -> str:
    return resources.files("iabsim").joinpath("configs", f"{name}.cfg").read_text()


def preset_path(name: str) -> Path:
    return Path(str(resources.files("iabsim").joinpath("configs", f"{name}.cfg")))


def loads(text: str = "", base: bool = True) -> ExperimentConfig:
    layers = ([preset_text("default")] if base else []) + [text]
    merged = _read_layers(layers)
    try:
        cfg = ExperimentConfig(**{s: _coerce(t, merged.get(s, {})) for s, t in _SECTION_TYPES.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def load(path_or_preset) -> ExperimentConfig:
    """Load a config file, or a bundled preset by name (``"fd_high"``)."""
    if str(path_or_preset) in PRESETS:
        return loads(preset_text(str(path_or_preset)))
    path = Path(path_or_preset)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return loads(path.read_text())


def dumps(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section in _SECTION_TYPES:
        parser[section] = {k: repr(v) for k, v in asdict(getattr(cfg, section)).items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def validate(cfg: ExperimentConfig) -> None:
    s, c, e, t, b, ev = cfg.scenario, cfg.channel, cfg.env, cfg.train, cfg.blockers, cfg.eval
    problems = []
    if len(s.area_m) != 2 or min(s.area_m) <= 0:
        problems.append("area_m must be two positive lengths")
    if s.n_panels < 1 or s.n_sectors < 1:
        problems.append("n_panels and n_sectors must be >= 1")
    if s.n_ues < 1:
        problems.append("n_ues must be >= 1")
    if s.n_iab < 0:
        problems.append("n_iab must be >= 0")
    if s.iab_positions is not None and len(s.iab_positions) != s.n_iab:
        problems.append("iab_positions length must equal n_iab")
    if s.parents != "auto" and s.parents is not None:
        if not isinstance(s.parents, tuple) or len(s.parents) != s.n_iab:
            problems.append("parents must be 'auto' or a list with one parent id per IAB node")
    if len(c.mcs_thresholds_db) != len(c.mcs_bits_per_slot):
        problems.append("MCS thresholds and rates differ in length")
    if e.duplex not in ("fd", "hd"):
        problems.append("duplex must be fd or hd")
    if b.density not in ("low", "high"):
        problems.append("density must be low or high")
    if e.frame_slots < 1 or e.slot_s <= 0:
        problems.append("frame_slots and slot_s must be positive")
    if not 0 < t.gamma < 1:
        problems.append("gamma must lie in (0, 1)")
    if not 0 <= t.kappa <= 1:
        problems.append("kappa must lie in [0, 1]")
    if t.timeline not in ("solution1", "solution2"):
        problems.append("timeline must be solution1 or solution2")
    for name in ("episodes", "hidden_dim", "attend_heads", "updates_per_round", "t_upd",
                 "replay_capacity", "batch_size", "update_period"):
        if getattr(t, name) < 1:
            problems.append(f"train.{name} must be >= 1")
    if t.hidden_dim % t.attend_heads:
        problems.append("hidden_dim must be divisible by attend_heads")
    if ev.policy not in ("marl", "rr", "rnd"):
        problems.append("eval.policy must be marl, rr or rnd")
    if problems:
        raise ConfigError("; ".join(problems))
    try:
        cfg.mcs, cfg.path_loss, cfg.donor_pattern, cfg.iab_pattern, cfg.ue_mobility
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
