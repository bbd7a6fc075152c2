"""Train a shrunken fusion net on one synthetic protocol and evaluate it.

The backbone widths are cut down so this finishes in a few minutes on one
core; ``amod train`` with the generated config runs the full-size network.

    python scripts/train_tiny.py
"""
import time

import numpy as np

from amod import evaluation
from amod.net import SimpleNetSpec
from amod.net.train import TrainConfig, train
from amod.pipeline import eval_inputs, score_inputs
from amod.trackio import SynthConfig, generate_synthetic

# %% data: protocol 3 shifts motion and palette between train and test
split = generate_synthetic(SynthConfig(), seed=7, protocol_id=3)
print("train", len(split.train), "dev", len(split.dev), "test", len(split.test))

# %% full four-modality model vs the raw first/last frame baseline
small = SimpleNetSpec(widths=(8, 8, 16, 16), head_kernel=5, embed_dim=32)
for modalities in ("full", "raw_pair"):
    cfg = TrainConfig(epochs=4, passes_per_epoch=8, lr=1e-3, modalities=modalities, net=small)
    t0 = time.time()
    res = train(split, cfg, seed=7)
    dev = evaluation.ScoredSet([t.id for t in split.dev],
                               score_inputs(res.net, eval_inputs(split.dev, modalities)),
                               [t.label for t in split.dev])
    test = evaluation.ScoredSet([t.id for t in split.test],
                                score_inputs(res.net, eval_inputs(split.test, modalities)),
                                [t.label for t in split.test])
    r = evaluation.evaluate_split(3, dev, test)
    print(f"{modalities:8s} epoch loss {np.round(res.epoch_loss, 3)}  "
          f"test ACER {100 * r.acer:.1f}%  ({time.time() - t0:.0f}s)")
