"""``FUSN`` checkpoint files (little-endian).

Layout::

    b"FUSN" | version u16 | n_tensors u32 | n_tensors x record
            | has_adam u8 | [step u64, lr f64, beta1 f64, beta2 f64, eps f64,
                             2 * n_params x record (m/<name>, v/<name>)]

    record = name_len u16 | name utf-8 | rank u8 | extents u32[rank] | f32 data

Tensors are the learnable parameters followed by the BatchNorm buffers; the
architecture is recovered from the names and shapes.
"""
import struct

import numpy as np

from .model import FusionNet, SimpleNetSpec
from .optim import Adam

MAGIC = b"FUSN"
VERSION = 1


def _pack(name, arr):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    raw = name.encode("utf-8")
    head = struct.pack("<H", len(raw)) + raw + struct.pack("<B", arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes()


def _unpack(data, pos):
    (n,) = struct.unpack_from("<H", data, pos)
    pos += 2
    name = data[pos:pos + n].decode("utf-8")
    pos += n
    (rank,) = struct.unpack_from("<B", data, pos)
    pos += 1
    shape = struct.unpack_from(f"<{rank}I", data, pos)
    pos += 4 * rank
    count = int(np.prod(shape)) if rank else 1
    arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos).reshape(shape).astype(np.float32)
    return name, arr, pos + 4 * count


def save_checkpoint(path, net, adam=None):
    tensors = list(net.params.items()) + list(net.buffers.items())
    out = [MAGIC, struct.pack("<HI", VERSION, len(tensors))]
    out += [_pack(k, v) for k, v in tensors]
    if adam is None:
        out.append(struct.pack("<B", 0))
    else:
        out.append(struct.pack("<BQdddd", 1, adam.step_count, adam.lr, adam.beta1,
                               adam.beta2, adam.eps))
        for k in net.params:
            out.append(_pack("m/" + k, adam.m[k]))
            out.append(_pack("v/" + k, adam.v[k]))
    with open(path, "wb") as fh:
        fh.write(b"".join(out))


def load_checkpoint(path):
    """Return ``(net, adam_or_None)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a FUSN checkpoint")
    version, count = struct.unpack_from("<HI", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 10
    tensors = {}
    for _ in range(count):
        name, arr, pos = _unpack(data, pos)
        tensors[name] = arr

    branches, widths = [], {}
    for name, arr in tensors.items():
        parts = name.split(".")
        if parts[1:] == ["block0", "conv", "w"]:
            branches.append((parts[0], arr.shape[1]))
        if parts[1].startswith("block") and parts[2:] == ["conv", "w"]:
            widths[int(parts[1][5:])] = arr.shape[0]
    head = tensors[f"{branches[0][0]}.head.w"]
    spec = SimpleNetSpec(widths=tuple(widths[i] for i in range(len(widths))),
                         head_kernel=head.shape[2], embed_dim=head.shape[0])
    net = FusionNet.__new__(FusionNet)
    net.branches, net.spec, net.dtype, net._cache = tuple(branches), spec, np.dtype(np.float32), None
    net.params = {k: v for k, v in tensors.items() if "running_" not in k}
    net.buffers = {k: v for k, v in tensors.items() if "running_" in k}

    (has_adam,) = struct.unpack_from("<B", data, pos)
    pos += 1
    adam = None
    if has_adam:
        step, lr, b1, b2, eps = struct.unpack_from("<Qdddd", data, pos)
        pos += struct.calcsize("<Qdddd")
        adam = Adam(net.params, lr, b1, b2, eps)
        adam.step_count = step
        for _ in range(2 * len(net.params)):
            name, arr, pos = _unpack(data, pos)
            kind, key = name.split("/", 1)
            (adam.m if kind == "m" else adam.v)[key] = arr
    if pos != len(data):
        raise ValueError(f"{path}: trailing bytes")
    return net, adam
