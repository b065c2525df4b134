"""Command-line driver: explore, baseline, report, reconstruct.

Exit codes: 0 success, 2 configuration problem, 3 runtime failure.
The GG_THREADS environment variable caps numeric thread pools; it must be
applied before numpy loads, which is why the heavy imports live inside the
subcommand bodies.
"""

import argparse
import os
import sys
import time
from pathlib import Path

from . import config as config_mod
from .errors import ConfigError, GpisGraspError

ITERATIONS_COLUMNS = [
    "iter",
    "thumb_x", "thumb_y", "thumb_z",
    "f1_x", "f1_y", "f1_z",
    "f2_u", "f2_v",
    "eul_z", "eul_y", "eul_x",
    "offset",
    "tip1_x", "tip1_y", "tip1_z",
    "tip2_x", "tip2_y", "tip2_z",
    "tip3_x", "tip3_y", "tip3_z",
    "c1", "c2", "c3",
    "pfc", "y", "best_pfc",
    "hausdorff", "mean_variance",
    "wall_ms",
]


def _apply_thread_cap():
    cap = os.environ.get("GG_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _load_config(args) -> config_mod.RunConfig:
    cfg = config_mod.load(args.config) if args.config else config_mod.RunConfig()
    if args.seed is not None:
        cfg.run.seed = args.seed
    if args.object is not None:
        cfg.object.name = args.object
        cfg.object.mesh_path = ""
    if args.out is not None:
        cfg.run.out = args.out
    if args.iterations is not None:
        cfg.explore.n_stop = args.iterations
    return cfg


def _build_scene(cfg: config_mod.RunConfig):
    import numpy as np

    from . import explorer, meshes, world

    if cfg.object.mesh_path:
        mesh = meshes.load_mesh(cfg.object.mesh_path)
        if cfg.object.scale != 1.0:
            mesh = meshes.TriMesh(mesh.vertices * cfg.object.scale, mesh.faces)
    else:
        mesh = meshes.builtin_mesh(cfg.object.name, scale=cfg.object.scale)

    az = np.deg2rad(cfg.camera.azimuth_deg)
    el = np.deg2rad(cfg.camera.elevation_deg)
    pos = cfg.camera.distance * np.array(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
    )
    camera = world.look_at(
        pos, [0.0, 0.0, 0.0], fov=np.deg2rad(cfg.camera.fov_deg),
        resolution=cfg.camera.resolution, depth_noise_sigma=cfg.camera.depth_noise,
    )
    hand = world.VirtualHand(
        reach_radius=cfg.hand.reach_radius, finger_travel=cfg.hand.finger_travel,
        knuckle_offset=cfg.hand.knuckle_offset, tip_radius=cfg.hand.tip_radius,
        standoff=cfg.hand.standoff,
    )
    scene, model, cloud = explorer.initialize_scene(
        mesh, camera, hand, seed=cfg.run.seed,
        vision_noise=cfg.gpis.vision_noise, anchor_noise=cfg.gpis.anchor_noise,
        max_cloud_points=cfg.gpis.max_cloud_points, domain_inflate=cfg.gpis.domain_inflate,
        contact_pos_noise=cfg.hand.contact_pos_noise,
        contact_normal_noise=cfg.hand.contact_normal_noise,
    )
    return scene, model, cloud


def _exploration_config(cfg: config_mod.RunConfig):
    from . import explorer
    from .quality import UncertaintyModel

    unc = UncertaintyModel(
        sigma_n2=cfg.uncertainty.sigma_n2, sigma_c2=cfg.uncertainty.sigma_c2,
        sigma_mu2=cfg.uncertainty.sigma_mu2, mu_hat=cfg.uncertainty.mu_hat,
        n_samples=cfg.uncertainty.n_samples, delta=cfg.uncertainty.delta,
        cone_edges=cfg.uncertainty.cone_edges,
    )
    e = cfg.explore
    return explorer.ExplorationConfig(
        lambda_=e.lambda_, n_stop=e.n_stop, unc=unc,
        prior_min_grasps=e.prior_min_grasps, prior_pfc_min=e.prior_pfc_min,
        prior_attempt_cap=e.prior_attempt_cap, stable_pfc_min=e.stable_pfc_min,
        seed=cfg.run.seed, acq_budget=e.acq_budget, sigma_thumb=e.sigma_thumb,
        prior_sigma=e.prior_sigma, prior_squeeze=e.prior_squeeze,
        surrogate_sigma_se=e.surrogate_sigma_se,
        surrogate_length_scale=e.surrogate_length_scale,
        surrogate_noise=e.surrogate_noise, surrogate_input=e.surrogate_input,
        offset_range=(e.offset_min, e.offset_max),
        com_grid=cfg.gpis.com_grid, com_var_cells=cfg.gpis.com_var_cells,
        metrics_every=cfg.run.metrics_every, metrics_grid=cfg.gpis.metrics_grid,
        surface_grid=cfg.gpis.surface_grid, hausdorff_samples=cfg.run.hausdorff_samples,
        stop_grasp_count=e.stop_grasp_count, stop_grasp_pfc=e.stop_grasp_pfc,
    )


def _fmt(v) -> str:
    return repr(float(v))


def _write_artifacts(cfg, result, model_initial, cloud, out_dir, wall_seconds):
    from . import gpis, meshes

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_mod.save(cfg, out / "config.txt")
    gpis.write_xyz(cloud, out / "cloud.xyz")

    metric_by_iter = dict((int(m[0]), (m[1], m[2])) for m in result.shape_metrics)
    last_h, last_v = float("nan"), float("nan")
    if 0 in metric_by_iter:
        last_h, last_v = metric_by_iter[0]
    n_rows = len(result.log)
    wall_ms = 0.0 if cfg.run.deterministic_log else 1000.0 * wall_seconds / max(n_rows, 1)

    with open(out / "iterations.csv", "w") as f:
        f.write(",".join(ITERATIONS_COLUMNS) + "\n")
        for obs in result.log:
            if obs.iteration in metric_by_iter:
                last_h, last_v = metric_by_iter[obs.iteration]
            q = obs.query.as_vector()
            row = (
                [str(obs.iteration)]
                + [_fmt(v) for v in q]
                + [_fmt(v) for v in obs.achieved_tips.ravel()]
                + [str(int(flag)) for flag in obs.contact_flags]
                + [_fmt(obs.pfc), _fmt(obs.y),
                   _fmt(result.best_pfc_curve[obs.iteration - 1])]
                + [_fmt(last_h), _fmt(last_v), _fmt(wall_ms)]
            )
            f.write(",".join(row) + "\n")

    with open(out / "grasps.csv", "w") as f:
        f.write("iter,pfc,wrist_x,wrist_y,wrist_z,wrist_eul_z,wrist_eul_y,wrist_eul_x,"
                "tip1_x,tip1_y,tip1_z,tip2_x,tip2_y,tip2_z,tip3_x,tip3_y,tip3_z\n")
        for g in result.grasps:
            vals = [str(g.iteration), _fmt(g.pfc)] + [_fmt(v) for v in g.wrist_pose] \
                + [_fmt(v) for v in g.hand_config]
            f.write(",".join(vals) + "\n")

    with open(out / "metrics.csv", "w") as f:
        f.write("iter,hausdorff,mean_variance\n")
        for it, h, v in result.shape_metrics:
            f.write(f"{it},{_fmt(h)},{_fmt(v)}\n")

    surface_grid = cfg.gpis.surface_grid
    for name, model in (("surface_initial.obj", model_initial),
                        ("surface_final.obj", result.gpis_final)):
        try:
            est = gpis.extract_surface(model, surface_grid, compute_variance=False)
            meshes.save_mesh(est.mesh, out / name)
        except GpisGraspError:
            pass   # a degenerate field simply produces no surface file


def _run(cfg: config_mod.RunConfig, baseline: bool) -> int:
    from . import explorer

    t0 = time.perf_counter()
    scene, model, cloud = _build_scene(cfg)
    econfig = _exploration_config(cfg)
    if baseline:
        result = explorer.baseline_explore(scene, model, econfig)
    else:
        result = explorer.explore(scene, model, econfig)
    wall = time.perf_counter() - t0
    _write_artifacts(cfg, result, model, cloud, cfg.run.out, wall)
    best = result.best_pfc_curve[-1] if len(result.best_pfc_curve) else 0.0
    print(f"{'baseline' if baseline else 'explore'}: {len(result.log)} iterations, "
          f"{len(result.grasps)} grasps above {econfig.stable_pfc_min}, "
          f"best pfc {best:.2f} -> {cfg.run.out}")
    return 0


def cmd_explore(args) -> int:
    return _run(_load_config(args), baseline=False)


def cmd_baseline(args) -> int:
    return _run(_load_config(args), baseline=True)


def cmd_report(args) -> int:
    from . import report

    summary = report.generate_report(args.run_dirs, args.out or "report")
    print(f"report: {summary['converged']}/{summary['total']} runs converged, "
          f"median {summary['median']}, min {summary['min']} -> {args.out or 'report'}")
    return 0


def cmd_reconstruct(args) -> int:
    from . import gpis

    cfg = _load_config(args)
    cloud = gpis.read_xyz(args.cloud)
    domain = gpis.bounding_domain(cloud, inflate=cfg.gpis.domain_inflate)
    model = gpis.gpis_init(
        cloud, domain, vision_noise=cfg.gpis.vision_noise,
        anchor_noise=cfg.gpis.anchor_noise, max_cloud_points=cfg.gpis.max_cloud_points,
    )
    out = Path(cfg.run.out)
    out.mkdir(parents=True, exist_ok=True)
    est = gpis.extract_surface(model, cfg.gpis.surface_grid)
    from . import meshes

    meshes.save_mesh(est.mesh, out / "surface.obj")
    com = gpis.estimate_com(model, cfg.gpis.com_grid)
    mv = gpis.mean_variance(model, cfg.gpis.metrics_grid)
    print(f"reconstruct: {len(cloud)} points -> {est.mesh.n_vertices} vertices, "
          f"com {com.p_com.round(4).tolist()} sigma {com.sigma_com:.4f}, "
          f"mean variance {mv:.6g} -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpisgrasp",
        description="Shape-aware grasp exploration on a simulated tactile testbed",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run configuration file (key = value sections)")
        p.add_argument("--seed", type=int, help="override run seed")
        p.add_argument("--object", help="builtin object name override")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--iterations", type=int, help="override iteration budget")

    p = sub.add_parser("explore", help="run the surrogate-guided exploration loop")
    common(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("baseline", help="run the surface-anchored random baseline")
    common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("report", help="aggregate run directories into summary curves")
    p.add_argument("run_dirs", nargs="+", help="one or more run output directories")
    p.add_argument("--out", help="report output directory (default: report)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("reconstruct", help="fit and extract a surface from a cloud file")
    common(p)
    p.add_argument("cloud", help="ASCII point cloud, one 'x y z' per line")
    p.set_defaults(func=cmd_reconstruct)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GpisGraspError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
