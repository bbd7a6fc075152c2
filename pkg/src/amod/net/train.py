"""Minibatch BCE training of the fusion network with Adam.

One epoch is ``passes_per_epoch`` independently shuffled passes over the
training tracks, concatenated and cut into batches (the last partial batch is
kept).  Every sample is re-augmented with a generator derived from
``(seed, epoch, pass, track id)`` so results do not depend on thread count.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .. import evaluation
from ..augment import AugmentConfig
from ..modality import ModalityConfig
from ..pipeline import collate, eval_inputs, ordered_map, prepare_sample, score_inputs, track_rng
from .model import FULL_BRANCHES, DEFAULT_SPEC, RAW_PAIR_BRANCHES, FusionNet, SimpleNetSpec
from .optim import Adam

LOG_FIELDS = ("step", "epoch", "split", "loss", "acer")


class NumericError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 5
    passes_per_epoch: int = 20
    lr: float = 1e-4
    log_every: int = 100
    modalities: str = "full"
    sequence_augmentation: bool = True
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    modality: ModalityConfig = field(default_factory=ModalityConfig)
    net: SimpleNetSpec = DEFAULT_SPEC

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or self.passes_per_epoch < 1:
            raise ValueError("batch_size and passes_per_epoch must be positive, epochs >= 0")
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if self.modalities not in ("full", "raw_pair"):
            raise ValueError(f"unknown modality set {self.modalities!r}")


@dataclass
class TrainResult:
    net: FusionNet
    adam: Adam
    log: list          # dict rows with LOG_FIELDS
    epoch_loss: list   # mean train loss per epoch
    dev_acer: list     # dev ACER (at the dev-optimal threshold) per epoch


def branches_for(modalities):
    return FULL_BRANCHES if modalities == "full" else RAW_PAIR_BRANCHES


def _init_seed(seed):
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, 0]).generate_state(1)[0])


def epoch_order(n, seed, epoch, passes):
    """Track indices for one epoch: ``passes`` shuffled passes, concatenated."""
    out = []
    for p in range(passes):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
            [int(seed) & 0xFFFFFFFFFFFFFFFF, 1, epoch, p])))
        out.extend((p, int(i)) for i in rng.permutation(n))
    return out


def dev_acer(net, inputs, labels, ids):
    scores = score_inputs(net, inputs)
    s = evaluation.ScoredSet(ids, scores, labels)
    thr = evaluation.select_threshold(s)
    return evaluation.rates(evaluation.confusion_at(s, thr))[2]


def train(split, cfg=TrainConfig(), seed=0, log_path=None, threads=None, progress=None):
    """Train on ``split.train``; report dev ACER after every epoch; keep the last epoch."""
    tracks = list(split.train)
    labels = {t.label for t in tracks}
    if labels != {0, 1}:
        raise ValueError("training set must contain both labels")
    net = FusionNet(branches_for(cfg.modalities), cfg.net, seed=_init_seed(seed))
    adam = Adam(net.params, lr=cfg.lr)

    dev = list(split.dev)
    dev_in = eval_inputs(dev, cfg.modalities, cfg.modality, threads) if dev else []
    dev_labels = [t.label for t in dev]
    dev_ids = [t.id for t in dev]

    log, epoch_loss, dev_hist = [], [], []
    fh = open(log_path, "w", newline="", encoding="utf-8") if log_path else None
    writer = csv.DictWriter(fh, fieldnames=LOG_FIELDS) if fh else None
    if writer:
        writer.writeheader()

    def emit(row):
        log.append(row)
        if writer:
            writer.writerow(row)
            fh.flush()

    step, window = 0, []
    try:
        for epoch in range(cfg.epochs):
            order = epoch_order(len(tracks), seed, epoch, cfg.passes_per_epoch)
            losses = []
            for start in range(0, len(order), cfg.batch_size):
                chunk = order[start:start + cfg.batch_size]

                def make(item):
                    p, i = item
                    t = tracks[i]
                    rng = track_rng(seed, 2, epoch, p, track_id=t.id)
                    return prepare_sample(t, cfg.modalities, cfg.modality, cfg.augment, rng,
                                          cfg.sequence_augmentation)

                inputs, y = collate(ordered_map(make, chunk, threads))
                loss, grads = net.loss_and_grads(inputs, y)
                if not np.isfinite(loss):
                    raise NumericError(f"non-finite training loss at step {step + 1}")
                adam.step(net.params, grads)
                step += 1
                losses.append(loss)
                window.append(loss)
                if step % cfg.log_every == 0:
                    emit({"step": step, "epoch": epoch + 1, "split": "train",
                          "loss": float(np.mean(window)), "acer": ""})
                    window = []
                if progress:
                    progress(step, epoch + 1, loss)
            epoch_loss.append(float(np.mean(losses)))
            emit({"step": step, "epoch": epoch + 1, "split": "train_epoch",
                  "loss": epoch_loss[-1], "acer": ""})
            if dev and {0, 1} <= set(dev_labels):
                dev_hist.append(dev_acer(net, dev_in, dev_labels, dev_ids))
                emit({"step": step, "epoch": epoch + 1, "split": "dev", "loss": "",
                      "acer": dev_hist[-1]})
    finally:
        if fh:
            fh.close()
    return TrainResult(net, adam, log, epoch_loss, dev_hist)

