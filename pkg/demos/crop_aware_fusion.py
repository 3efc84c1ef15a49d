"""
Crop-aware fusion weights
=========================

Each crop's fused feature is a softmax-weighted mix of all crop features,
with weights computed from the features and the relative positional
encoding of the boxes.
"""

import numpy as np

from multicrop import FusionNet, encode_bbox, fuse, fused_mean
from multicrop.crops import rng
from multicrop.synth import make_scene

scene = make_scene(3)
print("encoding length per box:", encode_bbox(scene.bboxes[0]).shape[0])

gen = rng(1)
h = gen.normal(size=(scene.m, 32))
np.set_printoptions(precision=3, suppress=True)

# raw pixel coordinates alias badly at high frequencies; scaling them first helps
for variant, scale in (("mlp", 1.0), ("mlp", 1e-3), ("linear", 1e-3)):
    net = FusionNet.init(scene.m, 32, seed=1, variant=variant, coord_scale=scale)
    u, w = fuse(h, scene.bboxes, net)
    print(f"\n{variant}, coord scale {scale}")
    # a single linear score splits into a term for n and a term for m; the
    # m term is shared by the whole softmax row, so every row comes out equal

    print(w)
    print("rows sum to", w.sum(axis=1))

print("\npooled feature (first 5):", fused_mean(u)[:5])
