#!/usr/bin/env python3
"""Grasp stability: wrench space, the epsilon metric, probabilistic force closure.

Builds grasps of increasing quality on a sphere and shows how the
deterministic metric and its Monte-Carlo probability respond, including the
effect of the four uncertainty sources.
"""

import numpy as np

from gpisgrasp import quality
from gpisgrasp.gpis import MassEstimate
from gpisgrasp.quality import Contact, UncertaintyModel

r = 0.1
com = MassEstimate(p_com=np.zeros(3), sigma_com=0.01)

def sphere_contact(azimuth, polar=np.pi / 2, mu=1.0):
    n = -np.array([np.sin(polar) * np.cos(azimuth),
                   np.sin(polar) * np.sin(azimuth),
                   np.cos(polar)])
    return Contact(c=-r * n, n=n, mu=mu)

single = [sphere_contact(0.0)]
antipodal = [sphere_contact(0.0), sphere_contact(np.pi)]
tripod = [sphere_contact(a) for a in np.deg2rad([0.0, 120.0, 240.0])]
lopsided = [sphere_contact(a) for a in np.deg2rad([0.0, 25.0, 50.0])]

print("deterministic wrench-space quality (m = 8 cone edges):")
for name, contacts in (("single contact", single), ("antipodal pair", antipodal),
                       ("lopsided tripod", lopsided), ("equatorial tripod", tripod)):
    ws = quality.grasp_wrenches(contacts, com.p_com, 8)
    eps = quality.epsilon_quality(ws)
    print(f"  {name:18s}: {len(ws.wrenches):2d} wrenches, eps = {eps:.4f}")

print("\nprobability of force closure under joint uncertainty:")
unc = UncertaintyModel(n_samples=2000)
for name, contacts in (("lopsided tripod", lopsided), ("equatorial tripod", tripod)):
    p = quality.pfc(contacts, unc, com, seed=7)
    print(f"  {name:18s}: pfc = {p:.3f}   "
          f"(sigma_n={np.sqrt(unc.sigma_n2):.2f} rad, sigma_c={np.sqrt(unc.sigma_c2) * 100:.0f} cm)")

print("\nsame grasp, noise sources switched off one by one:")
for label, kw in (
    ("no normal noise ", dict(sigma_n2=0.0)),
    ("no contact noise", dict(sigma_c2=0.0)),
    ("no friction noise", dict(sigma_mu2=0.0)),
    ("noiseless", dict(sigma_n2=0.0, sigma_c2=0.0, sigma_mu2=0.0)),
):
    u = UncertaintyModel(n_samples=2000, **kw)
    p = quality.pfc(tripod, u, MassEstimate(p_com=np.zeros(3), sigma_com=0.0), seed=7)
    print(f"  {label:17s}: pfc = {p:.3f}")
