"""
Measuring disagreement between crops
====================================

Noise on the crop cameras shows up as pairwise residuals between the
full-image translations each crop implies.
"""

from multicrop import ConsistencyWeights, all_pair_residuals, cam_loss, loss_2d
from multicrop.synth import make_scene, perturb

clean = make_scene(11)
noisy = perturb(clean, sigma_s=0.05, sigma_t=0.05, seed=3)

for name, scene in (("clean", clean), ("noisy", noisy)):
    l_cam = cam_loss(scene.local_cams, scene.bboxes)
    l_2d = loss_2d(scene.joints3d, scene.gt2d_full, scene.local_cams, scene.bboxes, scene.img)
    print(f"{name:5s}  L_cam={l_cam:.3e}  L_2D={l_2d:.3e} px^2")

print("pair   r_x      r_y      r_s")
for i, j, rx, ry, rs in all_pair_residuals(noisy.local_cams, noisy.bboxes):
    print(f"{i}-{j}  {rx:+.4f}  {ry:+.4f}  {rs:+8.3f}")

# r_s is in pixels (box size times scale), hence the small default weight on it
for ls in (0.0, 1e-4, 1e-2):
    print("lambda_s", ls, "->", cam_loss(noisy.local_cams, noisy.bboxes, ConsistencyWeights(lambda_s=ls)))
