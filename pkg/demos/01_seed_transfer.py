"""Seed transfer walkthrough: from 2D instance masks to labeled 3D points.

Builds one synthetic frame, shrinks each instance mask to its central
region, projects the LiDAR points through the shrunk masks, and reports how
clean the resulting seed sets are at several shrink factors. Saves an
image-space visualization to demo_output/seed_transfer.png.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pseudobox.masks import shrink_mask
from pseudobox.seeds import extract_seed_points, project_points
from pseudobox.synthetic import SynthConfig, sample_scene, seed_misassignment_fraction

OUT = pathlib.Path(__file__).resolve().parent.parent / "demo_output"
OUT.mkdir(exist_ok=True)

# an occluded pair with noisy masks: the regime where shrinking matters
config = SynthConfig(
    seed=11, layout="occluded_pairs", mask_noise_px=8,
    objects_per_scene=(2, 2), clutter_points=40,
)
scene = sample_scene(config, 0)
bundle = scene.bundle
print(f"frame {bundle.frame_id}: {len(bundle.gt_boxes)} objects, "
      f"{len(bundle.cloud)} points, {len(bundle.masks)} masks")

print("\nshrink factor -> seeds kept, fraction assigned to the wrong object")
for factor in (1.0, 0.8, 0.5, 0.3, 0.1):
    seed_sets = extract_seed_points(bundle.cloud, bundle.masks, bundle.calib, factor)
    total = sum(len(s) for s in seed_sets)
    wrong = seed_misassignment_fraction(scene, seed_sets)
    print(f"  {factor:4.1f} -> {total:4d} seeds, misassigned {100 * wrong:5.2f}%")

# visualize: full mask bounds, the retained central regions, and projections
uv, valid = project_points(bundle.cloud, bundle.calib)
fig, ax = plt.subplots(figsize=(9, 5))
colors = ["tab:blue", "tab:orange", "tab:green", "tab:red"]
for mask in bundle.masks:
    color = colors[mask.instance_id % len(colors)]
    u0, u1, v0, v1 = mask.bounds
    ax.add_patch(plt.Rectangle((u0, v0), u1 - u0, v1 - v0, fill=False,
                               edgecolor=color, linestyle=":", label=f"mask {mask.instance_id}"))
    s = shrink_mask(mask, 0.3)
    su0, su1, sv0, sv1 = s.retained
    ax.add_patch(plt.Rectangle((su0, sv0), su1 - su0, sv1 - sv0, fill=False,
                               edgecolor=color, linewidth=2))
own_colors = np.array(["0.7"] * len(bundle.cloud), dtype=object)
for oi in range(len(bundle.gt_boxes)):
    own_colors[scene.point_object == oi] = colors[oi % len(colors)]
ax.scatter(uv[valid, 0], uv[valid, 1], s=3, c=list(own_colors[valid]))
h, w = bundle.calib.image_size
ax.set_xlim(0, w)
ax.set_ylim(h, 0)
ax.set_title("dotted: full mask bounds, solid: retained central region (factor 0.3)")
ax.legend(loc="lower right")
fig.tight_layout()
fig.savefig(OUT / "seed_transfer.png", dpi=110)
print(f"\nwrote {OUT / 'seed_transfer.png'}")
