#!/usr/bin/env python3
"""The simulated scene: depth camera, three-finger hand, finger closure.

Loads a builtin mesh, poses a tripod query by hand, closes the fingers,
and checks the resulting grasp with the ground-truth oracle.
"""

import numpy as np

from gpisgrasp import meshes, world
from gpisgrasp.explorer import GraspQuery

mesh = meshes.builtin_mesh("cylinder")
print(f"cylinder: {mesh.n_vertices} vertices, {mesh.n_faces} faces, "
      f"volume {meshes.mesh_volume(mesh) * 1e6:.0f} cm^3")

cam = world.look_at([0.35, 0.25, 0.18], [0.0, 0.0, 0.0], resolution=32)
cloud = world.render_pointcloud(mesh, cam, seed=0)
print(f"depth view: {len(cloud)} points (resolution 32^2 rays)")

hand = world.VirtualHand()
query = GraspQuery(
    thumb=np.array([0.05, 0.0, 0.02]),
    finger1=np.array([-0.05, 0.0, 0.02]),
    finger2_uv=np.array([0.0, 0.05]),
    wrist_euler=np.array([0.0, 0.0, 0.0]),
    approach_offset=0.0,
)
plan = world.solve_hand(query, hand, gpis_com=np.zeros(3))
print(f"wrist at {plan.wrist_origin.round(3)}, tip targets:\n{plan.tip_targets.round(3)}")

result = world.close_fingers(mesh, plan, noise=(0.001, 0.01), seed=3)
for i, c in enumerate(result.contacts):
    if c is None:
        print(f"finger {i}: no contact, tip stopped at {result.achieved_tips[i].round(3)}")
    else:
        point, normal = c
        print(f"finger {i}: contact at {point.round(3)}, outward normal {normal.round(2)}")

if result.all_contact:
    fc, eps = world.oracle_grasp_check(mesh, result.achieved_tips, mu_true=1.5)
    print(f"oracle check: force closure = {fc}, true eps = {eps:.4f}")
else:
    print("grasp missed at least one finger; an exploration loop records pfc = 0 here")
