import numpy as np
import pytest

from amod.augment import AugmentConfig
from amod.modality import ModalityConfig
from amod.net import SimpleNetSpec
from amod.net.train import TrainConfig, epoch_order, train
from amod.trackio import ProtocolSplit, SynthConfig, generate_synthetic

SIZE = 32


def small_cfg(**kw):
    base = dict(batch_size=8, epochs=5, passes_per_epoch=4, lr=3e-3, log_every=10,
                augment=AugmentConfig(target_size=SIZE),
                modality=ModalityConfig(size=SIZE),
                net=SimpleNetSpec(widths=(4, 8), head_kernel=2, embed_dim=8))
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def split():
    return generate_synthetic(SynthConfig(n_real=8, n_fake=8, frames_per_track=16,
                                          image_size=SIZE, motion_amplitude=1.5), seed=7)


def test_epoch_order_covers_passes():
    order = epoch_order(5, seed=1, epoch=0, passes=3)
    assert len(order) == 15
    for p in range(3):
        assert sorted(i for q, i in order if q == p) == list(range(5))


def test_loss_decreases(split, tmp_path):
    res = train(split, small_cfg(), seed=3, log_path=tmp_path / "log.csv")
    assert len(res.epoch_loss) == 5
    assert res.epoch_loss[-1] < res.epoch_loss[0]
    assert len(res.dev_acer) == 5
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "step,epoch,split,loss,acer"
    assert sum(",dev," in l for l in lines) == 5
    # 8 train tracks x 4 passes = 32 samples = 4 batches per epoch
    assert res.adam.step_count == 5 * 4

def test_zero_lr_keeps_parameters(split):
    cfg = small_cfg(lr=0.0, epochs=1, passes_per_epoch=1)
    res = train(split, cfg, seed=3)
    ref = train(split, small_cfg(epochs=0), seed=3)
    for k in ref.net.params:
        np.testing.assert_array_equal(res.net.params[k], ref.net.params[k])


def test_training_is_deterministic(split):
    cfg = small_cfg(epochs=2, passes_per_epoch=2)
    a = train(split, cfg, seed=11, threads=1)
    b = train(split, cfg, seed=11, threads=3)
    assert a.log == b.log
    for k in a.net.params:
        np.testing.assert_array_equal(a.net.params[k], b.net.params[k])


def test_raw_pair_training_runs(split):
    res = train(split, small_cfg(epochs=1, passes_per_epoch=1, modalities="raw_pair"), seed=0)
    assert res.net.branches == (("raw_pair", 6),)


def test_single_label_rejected(split):
    reals = [t for t in split.train if t.label == 1]
    with pytest.raises(ValueError, match="both labels"):
        train(ProtocolSplit(reals, [], [], 1), small_cfg(), seed=0)
