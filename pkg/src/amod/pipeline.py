"""Track -> network input, shared by training, evaluation and extraction."""
import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .augment import augment_track, preprocess
from .modality import ModalityConfig, make_bundle, raw_pair_concat
from .trackio import select_uniform

MODALITY_SETS = ("full", "raw_pair")


def thread_count():
    """Worker cap from ``AMOD_THREADS``; defaults to the available cores."""
    env = os.environ.get("AMOD_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("AMOD_THREADS must be a positive integer")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


def ordered_map(fn, items, threads=None):
    """``[fn(x) for x in items]``, computed by a thread pool but returned in order."""
    threads = thread_count() if threads is None else threads
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def track_rng(seed, *keys, track_id=""):
    """Per-track generator from the global seed, loop counters and the track id."""
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys),
             zlib.crc32(track_id.encode("utf-8"))]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def prepare_track(track, mod_cfg=ModalityConfig(), aug_cfg=None, rng=None,
                  sequence_augmentation=True):
    """Subsample to ``L`` frames, then augment (training) or only preprocess (eval)."""
    t = select_uniform(track, mod_cfg.length)
    if aug_cfg is None:
        return preprocess(t, mod_cfg.size)
    return augment_track(t, rng, aug_cfg, sequence_augmentation)


def network_inputs(track16, modalities="full", mod_cfg=ModalityConfig()):
    """Dict of (C, H, W) float32 tensors keyed by backbone name."""
    if modalities == "full":
        return make_bundle(track16, mod_cfg).tensors()
    if modalities == "raw_pair":
        return {"raw_pair": raw_pair_concat(track16, mod_cfg)}
    raise ValueError(f"unknown modality set {modalities!r}")


def prepare_sample(track, modalities="full", mod_cfg=ModalityConfig(), aug_cfg=None, rng=None,
                   sequence_augmentation=True):
    """Network inputs and (possibly SA-relabelled) label for one track."""
    t16 = prepare_track(track, mod_cfg, aug_cfg, rng, sequence_augmentation)
    return network_inputs(t16, modalities, mod_cfg), t16.label


def collate(samples):
    inputs = {k: np.stack([s[0][k] for s in samples]) for k in samples[0][0]}
    labels = np.array([s[1] for s in samples], dtype=np.float32)
    return inputs, labels


def eval_inputs(tracks, modalities="full", mod_cfg=ModalityConfig(), threads=None):
    """Augmentation-free inputs for a list of tracks, in order."""
    return ordered_map(lambda t: prepare_sample(t, modalities, mod_cfg)[0], tracks, threads)


def score_inputs(net, inputs, batch_size=32):
    """Sigmoid scores (float64) for a list of input dicts, batched in order."""
    out = []
    for i in range(0, len(inputs), batch_size):
        chunk = inputs[i:i + batch_size]
        batch = {k: np.stack([x[k] for x in chunk]) for k in chunk[0]}
        out.append(net.predict(batch).astype(np.float64))
    return np.concatenate(out) if out else np.zeros(0)

