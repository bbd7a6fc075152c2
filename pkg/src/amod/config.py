"""YAML run configuration shared by every ``amod`` command.

Example (all keys optional except the protocol lists for train/eval)::

    seed: 7
    length: 16
    data:
      root: data                # list files are relative to this; tracks to their list file
      protocols:
        - {id: 1, train: protocol_1/train.txt, dev: protocol_1/dev.txt, test: protocol_1/test.txt}
    synth:    {n_real: 8, n_fake: 8, frames_per_track: 32, motion_amplitude: 3.0}
    augment:  {sa_probability: 0.5, equal_gain: 0.4, per_frame_shift_px: 3, ...}
    modality: {c_values: [1000, 1], epsilon: 0.1, tvm: true, flow_scale: 0.125,
               flow: {smoothness_alpha: 20, solver_iters: 50, ...}}
    train:    {batch_size: 32, epochs: 5, passes_per_epoch: 20, lr: 1.0e-4,
               log_every: 100, modalities: full, sequence_augmentation: true,
               net: {widths: [16, 32, 64, 128], head_kernel: 5, embed_dim: 256}}
    eval:     {threshold_rule: min_acer}
    output:   {dir: runs}

Relative paths are resolved against the directory holding the config file.
"""
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .augment import AugmentConfig
from .evaluation import THRESHOLD_RULES
from .flow import FlowParams
from .modality import ModalityConfig
from .net.model import SimpleNetSpec
from .net.train import TrainConfig
from .trackio import SynthConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolPaths:
    id: int
    train: Path
    dev: Path
    test: Path


@dataclass
class RunConfig:
    seed: int = 0
    length: int = 16
    data_root: Path = None
    protocols: list = field(default_factory=list)
    synth: SynthConfig = field(default_factory=SynthConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    threshold_rule: str = "min_acer"
    output_dir: Path = Path("runs")
    source: Path = None

    @property
    def augment(self):
        return self.train.augment

    @property
    def modality(self):
        return self.train.modality

    def protocol(self, pid):
        for p in self.protocols:
            if p.id == pid:
                return p
        raise ConfigError(f"protocol {pid} is not defined in the config")

    def as_dict(self):
        def conv(x):
            if dataclasses.is_dataclass(x):
                return {f.name: conv(getattr(x, f.name)) for f in dataclasses.fields(x)}
            if isinstance(x, (list, tuple)):
                return [conv(v) for v in x]
            if isinstance(x, Path):
                return str(x)
            return x
        d = conv(self)
        d.pop("source")
        return d

    def digest(self):
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _section(raw, key):
    sec = raw.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"'{key}' must be a mapping")
    return dict(sec)


def _build(cls, values, where):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in '{where}': {', '.join(sorted(unknown))}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{where}' section: {exc}") from exc


def parse_config(raw, base_dir=Path("."), source=None):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known = {"seed", "length", "data", "synth", "augment", "modality", "train", "eval", "output"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    base_dir = Path(base_dir)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    length = raw.get("length", 16)
    if not isinstance(length, int) or length < 2:
        raise ConfigError("length must be an integer >= 2")

    data = _section(raw, "data")
    root = base_dir / data.pop("root", ".")
    protocols = []
    for i, p in enumerate(data.pop("protocols", []) or []):
        try:
            protocols.append(ProtocolPaths(int(p["id"]), *(root / p[k] for k in ("train", "dev", "test"))))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"data.protocols[{i}] needs id/train/dev/test") from exc
    if data:
        raise ConfigError(f"unknown key(s) in 'data': {', '.join(sorted(data))}")

    synth = _build(SynthConfig, _section(raw, "synth"), "synth")
    augment = _build(AugmentConfig, _section(raw, "augment"), "augment")
    mod = _section(raw, "modality")
    flow = _build(FlowParams, _section(mod, "flow"), "modality.flow")
    mod["flow"] = flow
    if "c_values" in mod:
        mod["c_values"] = tuple(float(c) for c in mod["c_values"])
    mod.setdefault("length", length)
    modality = _build(ModalityConfig, mod, "modality")
    if len(modality.c_values) != 2:
        raise ConfigError("modality.c_values must hold exactly two values")
    tr = _section(raw, "train")
    tr["augment"], tr["modality"] = augment, modality
    net = _section(tr, "net")
    if "widths" in net:
        net["widths"] = tuple(int(w) for w in net["widths"])
    tr["net"] = _build(SimpleNetSpec, net, "train.net")
    train = _build(TrainConfig, tr, "train")

    ev = _section(raw, "eval")
    rule = ev.pop("threshold_rule", "min_acer")
    if ev or rule not in THRESHOLD_RULES:
        raise ConfigError(f"eval section accepts threshold_rule in {THRESHOLD_RULES}")
    out = _section(raw, "output")
    output_dir = base_dir / out.pop("dir", "runs")
    if out:
        raise ConfigError(f"unknown key(s) in 'output': {', '.join(sorted(out))}")
    return RunConfig(seed, length, root, protocols, synth, train, rule, output_dir, source)


def load_config(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return parse_config(raw, path.parent, path)


def check_paths(cfg, needed=("train", "dev", "test")):
    """Every referenced protocol list must exist before a command starts."""
    if not cfg.protocols:
        raise ConfigError("config defines no data.protocols")
    for p in cfg.protocols:
        for k in needed:
            path = getattr(p, k)
            if not path.is_file():
                raise ConfigError(f"protocol {p.id}: {k} list not found: {path}")
