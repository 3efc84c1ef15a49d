"""
Crops and the cameras they imply
================================

One person, five crops, five weak-perspective crop cameras, and one
full-image camera that all of them agree on.
"""

import numpy as np

from multicrop import BBox, fixed_crops, full_to_local, local_to_full, project_crop, project_full
from multicrop.geometry import crop_pixel_map
from multicrop.synth import make_scene

scene = make_scene(7)
print("image", scene.img, "true full camera", scene.full_cam.translation)

# the base box hugs the projected joints; the other four shift and rescale it
for box in fixed_crops(scene.bboxes[0]):
    print(f"  crop c=({box.c_x:8.2f}, {box.c_y:8.2f})  b={box.b:7.2f}")

# a crop camera is just the full camera seen through that crop
for box, cam in zip(scene.bboxes, scene.local_cams):
    back = local_to_full(cam, box, scene.img)
    print(f"  s={cam.s:.4f} t=({cam.t_x:+.4f}, {cam.t_y:+.4f}) -> T_full={np.round(back.translation, 6)}")

# at depth zero the crop projection and the full projection mapped into the
# crop are the same point; away from it they drift apart linearly in depth
cam, box = scene.local_cams[1], scene.bboxes[1]
full = local_to_full(cam, box, scene.img)
for z in (0.0, 0.05, 0.1, 0.2):
    joint = np.array([0.3, -0.2, z])
    gap = crop_pixel_map(project_full(joint, full), box, scene.img) - project_crop(joint, cam)
    print(f"  z={z:4.2f} m  gap={np.linalg.norm(gap):.3e} px")

# going the other way, any full camera gives a local camera for any box
local = full_to_local(full, BBox(0.0, 0.0, 400.0))
print("centered 400 px box sees", local)
print("with s*b =", local.s * 400.0, "for every box of this camera:", cam.s * box.b)
