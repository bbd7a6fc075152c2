"""Numpy CNN: SimpleNet backbones, fusion head, Adam, checkpoints, training."""
from .model import FULL_BRANCHES, DEFAULT_SPEC, RAW_PAIR_BRANCHES, FusionNet, SimpleNetSpec
from .optim import Adam
from .checkpoint import load_checkpoint, save_checkpoint
