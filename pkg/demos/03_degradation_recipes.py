"""High-order degradation recipes.

A recipe is two randomized rounds of {blur -> resize -> noise -> jpeg}
plus a fixed bicubic downsample to 1/4 resolution, a final JPEG, and an
optional sinc filter. The recorded seed makes every corruption exactly
replayable, and the same machinery builds the contrast/anchor training
groups.
"""

import numpy as np

from modsr.degrade import DegradeConfig, apply_recipe, make_train_group, sample_recipe
from modsr.images import save_image, synthetic_image

cfg = DegradeConfig()
rng = np.random.default_rng(2024)
hr = synthetic_image(5, 128)

recipe = sample_recipe(cfg, rng)
print("sampled stages:")
for st in recipe.stages:
    print("  ", st)

lr = apply_recipe(hr, recipe)
print(f"\nHR {hr.shape} -> LR {lr.shape}, replayable via seed {recipe.seed}")
assert np.array_equal(lr, apply_recipe(hr, recipe))
save_image(hr, "demo_out_hr.png")
save_image(lr, "demo_out_lr.png")

# one training group: c1 blurrier than c2, c3 noisier than c2,
# a1 maximally degraded, a2 perfectly clean (bicubic only)
group = make_train_group(hr[:, :64, :64], cfg, rng)
for name in ("c1", "c2", "c3", "a1", "a2"):
    member = getattr(group, name)
    save_image(member, f"demo_out_group_{name}.png")
print("\nwrote the five group members as demo_out_group_*.png")
