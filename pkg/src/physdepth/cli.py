"""``physdepth`` command line.

Exit codes: 0 success, 2 input/parse error, 3 geometry/domain error,
4 empty overlap between depth maps.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .evaluation import apply_scale, depth_metrics, median_scale, pct_error_report, within_pct
from .exceptions import InvalidInput, PhysDepthError
from .ingest import KITTI_CAMERA_HEIGHT, load_camera
from .losses import (
    LossConfig,
    RigidTransform,
    block_matching_flow,
    confidence_map,
    flow_matches,
    min_reprojection,
    photometric_loss,
    physics_supervision_loss,
    smoothness_loss,
    spatial_2d_loss,
    warp_image,
)
from .physics import PhysicsDepthConfig, physics_depth_from_categories
from .scene import (
    LabelSchema,
    categorize,
    cityscapes_schema,
    read_image,
    read_label_png,
    read_pfd,
    write_depth_preview,
    write_image,
    write_label_png,
    write_pfd,
)
from .synth import SynthSpec, default_spec, render

SPEC_VERSION = "1.0"

log = logging.getLogger("physdepth")


def _pair(text, cast=float):
    parts = [p for p in text.split(",") if p.strip()]
    try:
        return [cast(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _range(text):
    vals = _pair(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise argparse.ArgumentTypeError(f"--range needs 'min,max' with min < max, got {text!r}")
    return tuple(vals)


def _require_file(path, what):
    if not os.path.isfile(path):
        raise InvalidInput(f"{what} not found: {path}")
    return path


def _dump(doc):
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _load_schema(path):
    if path is None:
        return cityscapes_schema("train")
    with open(_require_file(path, "schema"), encoding="utf-8") as fh:
        return LabelSchema.from_json(fh.read())


def _camera_for_mask(args, shape):
    cam = load_camera(_require_file(args.camera, "camera"), kitti_cam=args.kitti_cam,
                      camera_height=args.camera_height)
    h, w = shape
    if cam.intrinsics.shape != (h, w):
        log.info("rescaling intrinsics from %dx%d to mask size %dx%d",
                 cam.intrinsics.width, cam.intrinsics.height, w, h)
        cam = cam.rescaled(w, h)
    return cam


def cmd_physics_depth(args):
    labels = read_label_png(_require_file(args.mask, "mask"))
    schema = _load_schema(args.schema)
    cam = _camera_for_mask(args, labels.shape)
    cfg = PhysicsDepthConfig(horizon_epsilon=args.horizon_epsilon, max_depth=args.max_depth,
                             sky_factor=args.sky_factor, inpaint_radius=args.inpaint_radius,
                             per_axis_rays=args.per_axis_rays)
    result = physics_depth_from_categories(cam, categorize(labels, schema), cfg,
                                           extend_from=args.which)
    os.makedirs(args.out, exist_ok=True)
    for name, depth in result.stages().items():
        write_pfd(os.path.join(args.out, f"{name}.pfd"), depth)
        if args.preview:
            write_depth_preview(os.path.join(args.out, f"{name}.png"), depth, cfg.max_depth)
    summary = {"spec_version": SPEC_VERSION, **result.summary(),
               "config": {"horizon_epsilon": cfg.horizon_epsilon, "max_depth": cfg.max_depth,
                          "sky_factor": cfg.sky_factor, "inpaint_radius": cfg.inpaint_radius,
                          "which": args.which}}
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(_dump(summary))
    sys.stdout.write(_dump(summary))
    return 0


def cmd_evaluate(args):
    pred = read_pfd(_require_file(args.pred, "prediction"))
    gt = read_pfd(_require_file(args.gt, "ground truth"))
    report = depth_metrics(pred, gt, tuple(args.range))
    doc = {"spec_version": SPEC_VERSION, "metrics": report.to_dict()}
    if args.pct:
        if sorted(args.pct) == [5.0, 10.0]:
            doc["pct_error"] = pct_error_report(pred, gt, tuple(args.range)).to_dict()
        else:
            doc["pct_error"] = {f"frac_within_{p:g}pct": within_pct(pred, gt, p, tuple(args.range))
                                for p in args.pct}
    if args.csv:
        new = not os.path.exists(args.csv)
        with open(args.csv, "a", encoding="utf-8") as fh:
            if new:
                fh.write(",".join(report.field_names()) + "\n")
            fh.write(report.csv_row())
    sys.stdout.write(_dump(doc))
    return 0


def cmd_scale(args):
    pred = read_pfd(_require_file(args.pred, "prediction"))
    ref = read_pfd(_require_file(args.ref, "reference"))
    s = median_scale(pred, ref)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "scaled.pfd")
    write_pfd(out_path, apply_scale(pred, s))
    sys.stdout.write(_dump({"spec_version": SPEC_VERSION, "scale": s, "output": out_path}))
    return 0


def _read_pose(path):
    with open(_require_file(path, "pose"), encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"invalid pose JSON: {exc.msg}") from exc
    return {k: RigidTransform.from_dict(v) for k, v in doc.items()}


def cmd_losses(args):
    cfg = LossConfig(alpha_ssim=args.alpha_ssim, smooth_lambda=args.smooth_lambda,
                     l2d_alpha=args.l2d_alpha, l2d_beta=args.l2d_beta)
    target = read_image(_require_file(args.target, "target frame"))
    depth = read_pfd(_require_file(args.depth, "depth"))
    cam = _camera_for_mask(args, depth.shape)
    intr = cam.intrinsics
    poses = _read_pose(args.pose)
    doc = {"spec_version": SPEC_VERSION,
           "config": {"alpha_ssim": cfg.alpha_ssim, "smooth_lambda": cfg.smooth_lambda,
                      "l2d_alpha": cfg.l2d_alpha, "l2d_beta": cfg.l2d_beta,
                      "patch": args.patch, "search": args.search}}

    if args.phys:
        phys = read_pfd(_require_file(args.phys, "physics depth"))
        doc["L_phy"] = physics_supervision_loss(depth, phys, confidence_map(phys))

    maps = {}
    frames = {}
    for key, path in (("prev", args.prev), ("next", args.next)):
        if path is None:
            continue
        if key not in poses:
            raise InvalidInput(f"pose file has no '{key}' transform")
        src = read_image(_require_file(path, f"{key} frame"))
        frames[key] = src
        recon, valid = warp_image(src, depth, poses[key], intr)
        err, mean = photometric_loss(target, recon, valid, cfg)
        maps[key] = err
        doc[f"L_ph_{key}"] = mean
    if maps:
        combined = maps["prev"] if len(maps) == 1 else min_reprojection(maps["prev"], maps["next"])
        ok = np.isfinite(combined)
        doc["L_ph_min"] = float(np.sum(combined[ok]) / np.count_nonzero(ok)) if ok.any() else 0.0
    doc["smoothness"] = smoothness_loss(depth, target, cfg.smooth_lambda)
    if "prev" in frames and "next" in frames:
        v_t, v_t1 = flow_matches(block_matching_flow(frames["prev"], target, args.patch, args.search),
                                 block_matching_flow(target, frames["next"], args.patch, args.search))
        doc["L_2D"] = spatial_2d_loss(v_t, v_t1, cfg.l2d_alpha, cfg.l2d_beta) if len(v_t) else None
    else:
        doc["L_2D"] = None
    sys.stdout.write(_dump(doc))
    return 0


def cmd_synth(args):
    if args.spec:
        with open(_require_file(args.spec, "synth spec"), encoding="utf-8") as fh:
            spec = SynthSpec.from_json(fh.read())
    else:
        spec = default_spec()
    scene = render(spec, args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_image(os.path.join(args.out, "image.png"), scene.image)
    write_label_png(os.path.join(args.out, "mask.png"), scene.labels)
    write_pfd(os.path.join(args.out, "depth_gt.pfd"), scene.depth)
    with open(os.path.join(args.out, "camera.json"), "w", encoding="utf-8") as fh:
        fh.write(_dump(spec.camera.to_dict()))
    with open(os.path.join(args.out, "schema.json"), "w", encoding="utf-8") as fh:
        fh.write(scene.schema.to_json() + "\n")
    with open(os.path.join(args.out, "spec.json"), "w", encoding="utf-8") as fh:
        fh.write(_dump(spec.to_dict()))

    # neighbor frames from a camera moved along the ground-frame z axis
    R = spec.camera.rotation
    poses = {}
    for key, dz in (("prev", -args.step), ("next", args.step)):
        offset = np.array([0.0, 0.0, dz])
        write_image(os.path.join(args.out, f"{key}.png"), render(spec, args.seed, offset).image)
        poses[key] = RigidTransform(np.eye(3), -R.T @ offset).to_dict()
    with open(os.path.join(args.out, "pose.json"), "w", encoding="utf-8") as fh:
        fh.write(_dump(poses))
    sys.stdout.write(_dump({"spec_version": SPEC_VERSION, "out": args.out, "seed": args.seed,
                            "width": spec.camera.intrinsics.width,
                            "height": spec.camera.intrinsics.height}))
    return 0


def _add_camera_flags(p):
    p.add_argument("--camera", required=True, help="camera JSON, Cityscapes camera JSON or KITTI calib text")
    p.add_argument("--kitti-cam", type=int, default=2, help="KITTI rectified camera index")
    p.add_argument("--camera-height", type=float, default=KITTI_CAMERA_HEIGHT,
                   help="camera height for KITTI calib input (m)")


def build_parser():
    parser = argparse.ArgumentParser(prog="physdepth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--log-level", default="WARNING")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("physics-depth", help="compute road/flat/edge-extended/dense physics depth")
    _add_camera_flags(p)
    p.add_argument("--mask", required=True, help="label PNG of class IDs")
    p.add_argument("--schema", help="label schema JSON (default: Cityscapes trainIds)")
    p.add_argument("--which", choices=("road", "flat"), default="flat",
                   help="ground stage that edge extension grows from")
    p.add_argument("--max-depth", type=float, default=120.0)
    p.add_argument("--sky-factor", type=float, default=1.5)
    p.add_argument("--horizon-epsilon", type=float, default=1e-6)
    p.add_argument("--inpaint-radius", type=int, default=5)
    p.add_argument("--per-axis-rays", action="store_true")
    p.add_argument("--preview", action="store_true", help="also write colormapped PNG previews")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_physics_depth)

    p = sub.add_parser("evaluate", help="depth metrics of a prediction against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--range", type=_range, default=(1e-3, 80.0), help="min,max ground-truth depth")
    p.add_argument("--pct", type=_pair, help="percent thresholds, e.g. 5,10")
    p.add_argument("--csv", help="append the metrics row to this CSV file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("scale", help="median-scale a prediction to a reference")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True, help="LiDAR depth or dense physics depth")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("losses", help="evaluate every training loss on one frame")
    _add_camera_flags(p)
    p.add_argument("--target", required=True)
    p.add_argument("--prev")
    p.add_argument("--next")
    p.add_argument("--depth", required=True, help="predicted depth of the target frame (PFD1)")
    p.add_argument("--phys", help="physics depth (PFD1) for the supervision loss")
    p.add_argument("--pose", required=True, help='JSON {"prev": {...}, "next": {...}} target-to-source')
    p.add_argument("--alpha-ssim", type=float, default=0.85)
    p.add_argument("--smooth-lambda", type=float, default=1e-3)
    p.add_argument("--l2d-alpha", type=float, default=1.0)
    p.add_argument("--l2d-beta", type=float, default=1.0)
    p.add_argument("--patch", type=int, default=7)
    p.add_argument("--search", type=int, default=4)
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("synth", help="render a synthetic test bundle")
    p.add_argument("--spec", help="scene spec JSON (default: built-in street scene)")
    p.add_argument("--step", type=float, default=0.5, help="camera travel between frames (m)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PhysDepthError as exc:
        print(f"physdepth: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"physdepth: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
