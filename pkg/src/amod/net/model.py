"""SimpleNet backbones and the min/avg/max fusion head.

Each backbone: four blocks of conv3x3 (pad 1) - BatchNorm - ReLU - MaxPool 2x2
with widths 16/32/64/128, then a valid 5x5 conv with 256 filters and global
average pooling (112 -> 56 -> 28 -> 14 -> 7 -> 3 -> 1).  The fusion head stacks
the per-modality embeddings, pools them with max, mean and min across
modalities, concatenates the three vectors and applies one linear unit.

Parameters live in flat ``{name: array}`` dicts so optimisers and checkpoints
can treat them uniformly.
"""
from dataclasses import dataclass

import numpy as np

from . import layers

FULL_BRANCHES = (("rp_c1000", 3), ("rp_c1", 3), ("flow_far", 2), ("flow_near", 2))
RAW_PAIR_BRANCHES = (("raw_pair", 6),)


@dataclass(frozen=True)
class SimpleNetSpec:
    widths: tuple = (16, 32, 64, 128)
    head_kernel: int = 5
    embed_dim: int = 256

    def __post_init__(self):
        if not self.widths or min(self.widths) < 1 or self.head_kernel < 1 or self.embed_dim < 1:
            raise ValueError("network widths, head_kernel and embed_dim must be positive")


DEFAULT_SPEC = SimpleNetSpec()


def _kaiming_uniform(rng, shape, fan_in, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class FusionNet:
    def __init__(self, branches=FULL_BRANCHES, spec=DEFAULT_SPEC, seed=0, dtype=np.float32):
        self.branches = tuple((str(n), int(c)) for n, c in branches)
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.params = {}
        self.buffers = {}
        self._cache = None
        rng = np.random.Generator(np.random.PCG64(seed))
        for name, cin in self.branches:
            for i, width in enumerate(spec.widths):
                pre = f"{name}.block{i}"
                self.params[f"{pre}.conv.w"] = _kaiming_uniform(rng, (width, cin, 3, 3), cin * 9, dtype)
                self.params[f"{pre}.conv.b"] = np.zeros(width, dtype)
                self.params[f"{pre}.bn.gamma"] = np.ones(width, dtype)
                self.params[f"{pre}.bn.beta"] = np.zeros(width, dtype)
                self.buffers[f"{pre}.bn.running_mean"] = np.zeros(width, dtype)
                self.buffers[f"{pre}.bn.running_var"] = np.ones(width, dtype)
                cin = width
            k = spec.head_kernel
            self.params[f"{name}.head.w"] = _kaiming_uniform(rng, (spec.embed_dim, cin, k, k),
                                                             cin * k * k, dtype)
            self.params[f"{name}.head.b"] = np.zeros(spec.embed_dim, dtype)
        fan_in = 3 * spec.embed_dim
        self.params["fc.w"] = _kaiming_uniform(rng, (fan_in,), fan_in, dtype)
        self.params["fc.b"] = np.zeros(1, dtype)

    # -- forward / backward -------------------------------------------------

    def _backbone_forward(self, name, x, train):
        caches = []
        p, buf = self.params, self.buffers
        for i in range(len(self.spec.widths)):
            pre = f"{name}.block{i}"
            x, c_conv = layers.conv_forward(x, p[f"{pre}.conv.w"], p[f"{pre}.conv.b"], pad=1)
            x, c_bn = layers.batchnorm_forward(x, p[f"{pre}.bn.gamma"], p[f"{pre}.bn.beta"],
                                               buf[f"{pre}.bn.running_mean"],
                                               buf[f"{pre}.bn.running_var"], train)
            x, c_relu = layers.relu_forward(x)
            x, c_pool = layers.maxpool_forward(x)
            caches.append((c_conv, c_bn, c_relu, c_pool))
        x, c_head = layers.conv_forward(x, p[f"{name}.head.w"], p[f"{name}.head.b"], pad=0)
        emb, c_gap = layers.global_avgpool_forward(x)
        return emb, (caches, c_head, c_gap)

    def _backbone_backward(self, name, demb, cache, grads):
        caches, c_head, c_gap = cache
        dx = layers.global_avgpool_backward(demb, c_gap)
        dx, grads[f"{name}.head.w"], grads[f"{name}.head.b"] = layers.conv_backward(dx, c_head)
        for i in range(len(self.spec.widths) - 1, -1, -1):
            pre = f"{name}.block{i}"
            c_conv, c_bn, c_relu, c_pool = caches[i]
            dx = layers.maxpool_backward(dx, c_pool)
            dx = layers.relu_backward(dx, c_relu)
            dx, grads[f"{pre}.bn.gamma"], grads[f"{pre}.bn.beta"] = layers.batchnorm_backward(dx, c_bn)
            dx, grads[f"{pre}.conv.w"], grads[f"{pre}.conv.b"] = layers.conv_backward(
                dx, c_conv, need_dx=i > 0)

    def embed(self, inputs, train=False):
        """Per-branch embeddings, shape (M, N, D).  ``inputs`` maps name -> (N, C, H, W)."""
        embs, caches = [], []
        for name, cin in self.branches:
            x = np.asarray(inputs[name], dtype=self.dtype)
            if x.ndim != 4 or x.shape[1] != cin:
                raise ValueError(f"{name}: expected (N, {cin}, H, W), got {x.shape}")
            e, c = self._backbone_forward(name, np.ascontiguousarray(x.transpose(0, 2, 3, 1)), train)
            embs.append(e)
            caches.append(c)
        return np.stack(embs), caches

    def head(self, emb):
        fused, c_pool = layers.pool_modalities_forward(emb)
        logits = fused @ self.params["fc.w"] + self.params["fc.b"][0]
        return logits, fused, c_pool

    def forward(self, inputs, train=False):
        """Logits (N,); in train mode BatchNorm uses batch statistics."""
        emb, caches = self.embed(inputs, train)
        logits, fused, c_pool = self.head(emb)
        self._cache = (caches, fused, c_pool) if train else None
        return logits

    def backward(self, dlogits):
        if self._cache is None:
            raise RuntimeError("backward() called without a preceding train-mode forward()")
        caches, fused, c_pool = self._cache
        self._cache = None
        grads = {}
        dlogits = np.asarray(dlogits, dtype=self.dtype)
        grads["fc.w"] = fused.T @ dlogits
        grads["fc.b"] = np.array([dlogits.sum()], dtype=self.dtype)
        dfused = np.outer(dlogits, self.params["fc.w"]).astype(self.dtype)
        demb = layers.pool_modalities_backward(dfused, c_pool)
        for m, (name, _) in enumerate(self.branches):
            self._backbone_backward(name, demb[m], caches[m], grads)
        return grads

    def loss_and_grads(self, inputs, labels):
        logits = self.forward(inputs, train=True)
        loss, dz = layers.bce_with_logits(logits, labels)
        return loss, self.backward(dz)

    def predict(self, inputs):
        """Sigmoid scores with BatchNorm running statistics."""
        return layers.sigmoid(self.forward(inputs, train=False))

    def state(self):
        return {**self.params, **self.buffers}

    def astype(self, dtype):
        other = FusionNet.__new__(FusionNet)
        other.branches, other.spec, other.dtype = self.branches, self.spec, np.dtype(dtype)
        other.params = {k: v.astype(dtype) for k, v in self.params.items()}
        other.buffers = {k: v.astype(dtype) for k, v in self.buffers.items()}
        other._cache = None
        return other
