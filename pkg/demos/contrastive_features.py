"""
Multi-positive contrastive loss on crop features
================================================

Crops of the same person are positives for each other; crops of everyone
else in the batch are negatives.
"""

import numpy as np

from multicrop import ContrastNet, clm_project, contrastive_loss, contrastive_loss_grad
from multicrop.crops import rng

gen = rng(0)
n, m, d = 4, 5, 32
net = ContrastNet.init(d, seed=0)

for spread in (0.1, 0.5, 2.0):
    proto = gen.normal(size=(n, 1, d))
    h = proto + spread * gen.normal(size=(n, m, d))
    z = clm_project(h, net)
    print(f"crop noise {spread:3.1f}  loss {contrastive_loss(z):8.4f}")

# when every feature is the same the loss has a closed form
same = np.broadcast_to(z[0, 0], z.shape)
print("identical features:", contrastive_loss(same), "closed form:", n * m * np.log(n * m - 1))

# one gradient step pulls positives together and lowers the loss
g = contrastive_loss_grad(z)
step = z - 0.05 * g
step /= np.linalg.norm(step, axis=-1, keepdims=True)
print("after one step:", contrastive_loss(z), "->", contrastive_loss(step))
