"""Walk through the four artificial modalities on synthetic tracks.

Generates one protocol, takes a real track, a print and a replay from the test
split, computes rank pooling (C=1000 and C=1) and the two flow fields, prints a
few statistics and writes PNGs next to this script (``modality_tour_out/``).

    python scripts/modality_tour.py
"""
from pathlib import Path

import numpy as np

from amod.augment import preprocess
from amod.modality import make_bundle, rank_pool_solutions
from amod.trackio import SynthConfig, generate_synthetic, select_uniform
from amod.visualize import save_chw, save_flow

out = Path(__file__).with_name("modality_tour_out")
out.mkdir(exist_ok=True)

# %% one synthetic protocol; dev/test use the same conditions as train here
split = generate_synthetic(SynthConfig(), seed=7, protocol_id=1)
by_kind = {}
for t in split.train:
    by_kind.setdefault(t.id.split("/")[0], t)
print("kinds:", {k: t.id for k, t in by_kind.items()})

# %% 16 uniformly spaced frames, black bars removed, padded to 112 x 112
tracks = {k: preprocess(select_uniform(t, 16)) for k, t in by_kind.items()}
for k, t in tracks.items():
    print(f"{k:7s} frames {t.frames.shape}  frame-to-frame change "
          f"{np.abs(np.diff(t.frames, axis=0)).mean():.4f}")

# %% rank pooling: the SVR weight vector that orders the frames in time
for k, t in tracks.items():
    sols = rank_pool_solutions(t.frames, [1000.0, 1.0])
    print(f"{k:7s} |u| C=1000 {np.linalg.norm(sols[0].u):9.4f}   C=1 {np.linalg.norm(sols[1].u):9.4f}   "
          f"objective C=1000 {sols[0].objective:.3f}")

# %% the full bundle; flow is scaled by 1/8 and clipped to [-1, 1]
for k, t in tracks.items():
    b = make_bundle(t)
    far, near = b.flow_far, b.flow_near
    print(f"{k:7s} mean |flow| first-last {8 * np.abs(far).mean():.3f} px   "
          f"first-second {8 * np.abs(near).mean():.3f} px")
    save_chw(out / f"{k}_rp_c1000.png", b.rp_c1000)
    save_chw(out / f"{k}_rp_c1.png", b.rp_c1)
    save_flow(out / f"{k}_flow_far.png", far)
    save_flow(out / f"{k}_flow_near.png", near)
    save_chw(out / f"{k}_frame0.png", t.frames[0].transpose(2, 0, 1))

print("images written to", out)
