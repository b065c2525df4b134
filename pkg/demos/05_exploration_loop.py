#!/usr/bin/env python3
"""The full loop: priors, surrogate-guided exploration, and the baseline.

Runs a short exploration on the builtin sphere and the random baseline on
the same scene, then prints both trajectories side by side.  Use the
command line (`gpisgrasp explore/baseline/report`) for full-length runs
with on-disk artifacts.
"""

import numpy as np

from gpisgrasp import explorer, meshes, world
from gpisgrasp.explorer import ExplorationConfig

mesh = meshes.builtin_mesh("sphere")
cam = world.look_at([0.31, 0.26, 0.16], [0.0, 0.0, 0.0], resolution=32)
scene, model, cloud = explorer.initialize_scene(mesh, cam, world.VirtualHand(),
                                                seed=11, max_cloud_points=250)
config = ExplorationConfig(n_stop=25, seed=11, acq_budget=1000,
                           com_grid=16, com_var_cells=64,
                           metrics_every=10, metrics_grid=16, surface_grid=24,
                           hausdorff_samples=4000)

result = explorer.explore(scene, model, config)
print(f"priors: {len(result.priors)} attempts, "
      f"{sum(1 for o in result.priors if o.pfc > config.prior_pfc_min)} above "
      f"pfc {config.prior_pfc_min}")
print("iter  contacts  pfc   y       best")
for obs, best in zip(result.log, result.best_pfc_curve):
    print(f"{obs.iteration:3d}   {sum(obs.contact_flags)}/3      "
          f"{obs.pfc:.1f}  {obs.y:+.3f}  {best:.1f}")
print(f"\nstable grasps (pfc > {config.stable_pfc_min}): {len(result.grasps)}")
for g in result.grasps[:3]:
    print(f"  iteration {g.iteration}: pfc {g.pfc:.1f}, wrist {g.wrist_pose[:3].round(3)}")

print("\nshape metrics (iteration, hausdorff, mean variance):")
for it, h, mv in result.shape_metrics:
    print(f"  {it:3d}  {h * 1000:6.1f} mm  {mv:.5f}")

base = explorer.baseline_explore(scene, model, config)
print(f"\nbaseline on the same scene: best pfc {base.best_pfc_curve[-1]:.1f}, "
      f"{len(base.grasps)} stable grasps "
      f"(optimizer found {len(result.grasps)})")
