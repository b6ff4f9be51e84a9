"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 empty ground truth, 3 internal error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io as dio
from .errors import Det3DError, EmptyGroundTruth, SchemaError
from .geometry import Box2D, CameraIntrinsics, Rot6D
from .lifting import (
    CanonicalConfig,
    LiftParams,
    LiftScales,
    canonicalize,
    lift,
)
from .losses import final_loss, giou_2d, silog
from .metrics import MetricConfig, evaluate, ods
from .synth import PerturbModel, SceneSpec, ClassSpec, generate, perturb
from .synth import large_box_spec, thin_box_spec

THREADS_ENV = "DET3DKIT_THREADS"


def _csv_floats(text):
    return [float(v) for v in text.split(",")]


def _intrinsics_from_arg(text):
    vals = _csv_floats(text)
    if len(vals) != 6:
        raise argparse.ArgumentTypeError("expected fx,fy,cx,cy,width,height")
    return CameraIntrinsics(
        fx=vals[0], fy=vals[1], cx=vals[2], cy=vals[3], width=int(vals[4]), height=int(vals[5])
    )


def _default_threads():
    return int(os.environ.get(THREADS_ENV, "1"))


def _metric_config(args):
    kwargs = {}
    if args.tp_ratio is not None:
        kwargs["tp_error_threshold_ratio"] = args.tp_ratio
    if args.base_classes:
        kwargs["base_classes"] = args.base_classes.split(",")
    if args.novel_classes:
        kwargs["novel_classes"] = args.novel_classes.split(",")
    if args.ap_interpolation:
        kwargs["ap_interpolation"] = args.ap_interpolation
    if args.radius_mode:
        kwargs["radius_mode"] = args.radius_mode
    return MetricConfig(**kwargs)


def _add_metric_flags(p):
    p.add_argument("--tp-ratio", type=float, default=None, help="TP-error matching ratio")
    p.add_argument("--base-classes", default="", help="comma-separated base class names")
    p.add_argument("--novel-classes", default="", help="comma-separated novel class names")
    p.add_argument("--ap-interpolation", choices=["101point", "trapezoid"], default=None)
    p.add_argument("--radius-mode", choices=["circumscribed", "inscribed"], default=None)
    p.add_argument("--threads", type=int, default=None, help="frame-level worker threads")


def _load_inputs(args):
    gts, _ = dio.read_gt(args.gt)
    dets, _ = dio.read_pred(args.pred)
    if not gts:
        raise EmptyGroundTruth(f"{args.gt} contains no ground-truth boxes")
    return gts, dets


def cmd_eval(args):
    if args.ap_dist is not None:
        # component override mode: ODS arithmetic from published numbers
        for name in ("mate", "mase", "maoe"):
            if getattr(args, name) is None:
                print(f"--ap-dist requires --{name}", file=sys.stderr)
                return 1
        value = ods(args.ap_dist, args.mate, args.mase, args.maoe)
        print(f"ODS {100.0 * value:.1f}")
        return 0
    if not args.gt or not args.pred:
        print("eval requires --gt and --pred (or component overrides)", file=sys.stderr)
        return 1
    gts, dets = _load_inputs(args)
    cfg = _metric_config(args)
    threads = args.threads if args.threads is not None else _default_threads()
    report = evaluate(gts, dets, cfg, threads=threads)
    if args.out:
        dio.write_report(report, args.out)
    if args.format == "csv":
        sys.stdout.write(dio.report_to_csv(report))
    else:
        print(f"AP_3D      {100.0 * report.ap_iou:.1f}")
        print(f"AP_3D_dist {100.0 * report.ap_dist:.1f}")
        print(f"mATE       {report.mate:.3f}")
        print(f"mASE       {report.mase:.3f}")
        print(f"mAOE       {report.maoe:.3f}")
        print(f"ODS        {100.0 * report.ods:.1f}")
        if report.ods_base is not None:
            print(f"ODS(B)     {100.0 * report.ods_base:.1f}")
        if report.ods_novel is not None:
            print(f"ODS(N)     {100.0 * report.ods_novel:.1f}")
    if args.figures:
        from .figures import render_report_figures

        for path in render_report_figures(report, args.figures):
            print(f"wrote {path}")
    return 0


def cmd_compare_matching(args):
    gts, dets = _load_inputs(args)
    cfg = _metric_config(args)
    threads = args.threads if args.threads is not None else _default_threads()
    report = evaluate(gts, dets, cfg, threads=threads)
    rows = [
        (lb, report.per_class[lb].ap_iou, report.per_class[lb].ap_dist)
        for lb in sorted(report.per_class)
    ]
    rows.sort(key=lambda r: (-(r[2] - r[1]), r[0]))
    print(f"{'class':<20} {'AP_iou':>8} {'AP_dist':>8} {'gap':>8}")
    for label, ap_i, ap_d in rows:
        print(f"{label:<20} {100 * ap_i:>8.1f} {100 * ap_d:>8.1f} {100 * (ap_d - ap_i):>8.1f}")
    if args.figures:
        from .figures import render_matching_gap_figure

        for path in render_matching_gap_figure(rows, args.figures):
            print(f"wrote {path}")
    return 0


def cmd_lift(args):
    dims_log = _csv_floats(args.dims_log)
    rot6d = _csv_floats(args.rot6d)
    box2d = Box2D(*_csv_floats(args.box2d))
    params = LiftParams(
        u_off=args.u_off,
        v_off=args.v_off,
        d_log=args.d_log,
        dims_log=dims_log,
        rot6d=Rot6D(a=rot6d[:3], b=rot6d[3:]),
    )
    scales = LiftScales(s_depth=args.s_depth, s_dim=args.s_dim)
    box = lift(params, box2d, args.intrinsics, scales)
    print(
        json.dumps(
            {
                "center": list(box.center),
                "dims": list(box.dims),
                "rotation": list(box.rotation.reshape(-1)),
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_canon(args):
    cfg = CanonicalConfig(canon_height=args.canon_height, canon_width=args.canon_width)
    transform, K = canonicalize(args.intrinsics, cfg)
    print(
        json.dumps(
            {
                "transform": {
                    "scale": transform.scale,
                    "pad_left": transform.pad_left,
                    "pad_top": transform.pad_top,
                },
                "intrinsics": {
                    "fx": K.fx,
                    "fy": K.fy,
                    "cx": K.cx,
                    "cy": K.cy,
                    "width": K.width,
                    "height": K.height,
                },
            },
            sort_keys=True,
        )
    )
    return 0


def _scene_spec(args):
    if args.spec:
        with open(args.spec, encoding="utf-8") as f:
            raw = json.load(f)
        classes = [
            ClassSpec(
                name=c["name"],
                dims_log_mean=tuple(np.log(c["dims"])),
                dims_log_std=tuple(c.get("dims_log_std", (0.0, 0.0, 0.0))),
            )
            for c in raw["classes"]
        ]
        return SceneSpec(
            n_frames=raw.get("n_frames", 20),
            boxes_per_frame=raw.get("boxes_per_frame", 8),
            classes=classes,
            depth_range=tuple(raw.get("depth_range", (4.0, 30.0))),
            seed=args.seed,
        )
    if args.preset == "thin-box":
        return thin_box_spec(seed=args.seed, n_frames=args.n_frames)
    if args.preset == "large-box":
        return large_box_spec(seed=args.seed, n_frames=args.n_frames)
    return SceneSpec(n_frames=args.n_frames, seed=args.seed)


def cmd_synth(args):
    spec = _scene_spec(args)
    gts, intrinsics = generate(spec)
    model = PerturbModel(
        sigma_t=args.sigma_t,
        sigma_s=args.sigma_s,
        sigma_r=args.sigma_r,
        p_miss=args.p_miss,
        fp_rate=args.fp_rate,
        seed=args.seed,
    )
    dets = perturb(gts, model, intrinsics)
    dio.write_boxes(gts, args.gt_out, intrinsics)
    dio.write_boxes(dets, args.pred_out, intrinsics)
    print(f"wrote {len(gts)} GT boxes to {args.gt_out}")
    print(f"wrote {len(dets)} detections to {args.pred_out}")
    return 0


def cmd_loss(args):
    if args.kind == "silog":
        value = silog(_csv_floats(args.pred), _csv_floats(args.gt), lambda_si=args.lambda_si)
    elif args.kind == "giou":
        value = giou_2d(Box2D(*_csv_floats(args.pred)), Box2D(*_csv_floats(args.gt)))
    else:
        value = final_loss(
            _csv_floats(args.pred), _csv_floats(args.gt), args.depth_loss
        )
    print(f"{value:.6f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="det3dkit",
        description="3D detection lifting, losses, and open-set evaluation toolkit",
    )
    parser.add_argument("--config", default=None, help="JSON file of flag overrides")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    p.add_argument("--gt", help="ground-truth JSONL path")
    p.add_argument("--pred", help="predictions JSONL path")
    p.add_argument("--out", default=None, help="write canonical JSON report here")
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("--figures", default=None, help="directory for rendered figures")
    p.add_argument("--ap-dist", type=float, default=None, help="component override: AP_dist")
    p.add_argument("--mate", type=float, default=None, help="component override: mATE")
    p.add_argument("--mase", type=float, default=None, help="component override: mASE")
    p.add_argument("--maoe", type=float, default=None, help="component override: mAOE")
    _add_metric_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare-matching", help="per-class IoU-AP vs distance-AP table")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--figures", default=None, help="directory for rendered figures")
    _add_metric_flags(p)
    p.set_defaults(func=cmd_compare_matching)

    p = sub.add_parser("lift", help="decode 12 head outputs into a 3D box")
    p.add_argument("--u-off", type=float, required=True)
    p.add_argument("--v-off", type=float, required=True)
    p.add_argument("--d-log", type=float, required=True)
    p.add_argument("--dims-log", required=True, help="3 comma-separated values")
    p.add_argument("--rot6d", required=True, help="6 comma-separated values")
    p.add_argument("--box2d", required=True, help="x1,y1,x2,y2")
    p.add_argument("--intrinsics", type=_intrinsics_from_arg, required=True)
    p.add_argument("--s-depth", type=float, default=1.0)
    p.add_argument("--s-dim", type=float, default=1.0)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("canon", help="canonical image space transform of intrinsics")
    p.add_argument("--intrinsics", type=_intrinsics_from_arg, required=True)
    p.add_argument("--canon-height", type=int, default=800)
    p.add_argument("--canon-width", type=int, default=1333)
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("synth", help="generate a seeded synthetic GT/prediction pair")
    p.add_argument("--spec", default=None, help="scene spec JSON file")
    p.add_argument("--preset", choices=["default", "thin-box", "large-box"], default="default")
    p.add_argument("--n-frames", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-t", type=float, default=0.0)
    p.add_argument("--sigma-s", type=float, default=0.0)
    p.add_argument("--sigma-r", type=float, default=0.0)
    p.add_argument("--p-miss", type=float, default=0.0)
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--gt-out", required=True)
    p.add_argument("--pred-out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("loss", help="evaluate a loss formula on explicit numbers")
    p.add_argument("kind", choices=["silog", "giou", "final"])
    p.add_argument("--pred", required=True, help="comma-separated values")
    p.add_argument("--gt", required=True, help="comma-separated values")
    p.add_argument("--lambda-si", type=float, default=0.5)
    p.add_argument("--depth-loss", type=float, default=0.0)
    p.set_defaults(func=cmd_loss)

    return parser


def _apply_config_file(parser, args, argv):
    if not args.config:
        return args
    with open(args.config, encoding="utf-8") as f:
        overrides = json.load(f)
    explicit = {a.split("=")[0] for a in argv if a.startswith("--")}
    for key, value in overrides.items():
        flag = "--" + key.replace("_", "-")
        dest = key.replace("-", "_")
        if flag in explicit or not hasattr(args, dest):
            continue
        setattr(args, dest, value)
    return args


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(parser, args, argv)
        return args.func(args)
    except EmptyGroundTruth as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SchemaError, OSError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Det3DError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
