"""Command-line interface.

Every subcommand accepts --config (flat JSON file), --seed, --out and
--format; explicit flags override config-file values, which override
defaults. Reports are deterministic for fixed inputs.

Exit codes: 0 on success, 2 for configuration or parse errors, 3 for
numeric divergence.
"""

import argparse
import sys
from dataclasses import fields

import numpy as np

from .coding import build_code_table, decode_logits, encode_angle, encode_index, \
    prediction_thickness
from .config import RunConfig, load_run_config
from .dota import load_detection_file, load_ground_truth_dir
from .errors import ConfigError, DivergenceError, InvalidInputError, RBoxError
from .evaluation import evaluate_detections
from .experiments import SWEEP_METHODS, fit_logits, fit_many, granularity_study, \
    loss_surface_sweep
from .geometry import RotatedBoxLongSide, rotated_iou
from .reports import emit_report

_CONFIG_FIELDS = {f.name for f in fields(RunConfig)}


def _parse_number(token):
    """Float value from a plain number or an 'a/b' fraction."""
    token = token.strip()
    try:
        if "/" in token:
            num, den = token.split("/", 1)
            return float(num) / float(den)
        return float(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad numeric value {token!r}: {exc}") from None


def _parse_number_list(text, name):
    values = [_parse_number(t) for t in text.replace(",", " ").split()]
    if not values:
        raise ConfigError(f"{name} must contain at least one value")
    return values


def _parse_box(text, name):
    values = _parse_number_list(text, name)
    if len(values) != 5:
        raise ConfigError(f"{name} must be 'x,y,h,w,theta', got {text!r}")
    try:
        return RotatedBoxLongSide(*values)
    except InvalidInputError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _codeword_value(row_bits, scheme, fmt):
    if scheme == "csl":
        vals = [float(v) for v in row_bits]
        if fmt == "csv":
            return " ".join(format(v, ".9g") for v in vals)
        return vals
    return "".join(str(int(b)) for b in row_bits)


def _cmd_codes(cfg, args):
    table = build_code_table(cfg.coding_config())
    fmt = args.format or "json"
    rows = [
        {"index": i, "codeword": _codeword_value(table.codewords[i], cfg.scheme, fmt)}
        for i in range(table.num_categories)
    ]
    return rows, {"num_categories": table.num_categories,
                  "code_length": table.code_length}


def _cmd_encode(cfg, args):
    table = build_code_table(cfg.coding_config())
    fmt = args.format or "json"
    target = encode_angle(args.theta, table)
    row = {
        "theta": float(args.theta),
        "index": encode_index(args.theta, table),
        "codeword": _codeword_value(target, cfg.scheme, fmt),
    }
    return [row], {}


def _cmd_decode(cfg, args):
    table = build_code_table(cfg.coding_config())
    logits = _parse_number_list(args.logits, "--logits")
    theta = decode_logits(logits, table)
    return [{"theta": theta}], {}


def _cmd_thickness(cfg, args):
    omega = None if args.method == "reg" else cfg.omega
    n = prediction_thickness(args.method, args.anchors,
                             angle_range=cfg.angle_range, omega=omega)
    row = {"method": args.method, "anchors": args.anchors,
           "omega": omega, "thickness": n}
    return [row], {}


def _cmd_iou(cfg, args):
    box_a = _parse_box(args.box_a, "--box-a")
    box_b = _parse_box(args.box_b, "--box-b")
    return [{"iou": rotated_iou(box_a, box_b)}], {}


def _cmd_sweep(cfg, args):
    # Convenience: the csl method needs a sparse table; switch the scheme
    # when the configured one is dense.
    if args.method == "csl" and cfg.scheme in ("bcl", "gcl"):
        cfg.scheme = "csl"
    table = None
    if args.method not in ("reg_smoothl1", "reg_smoothl1_opencv"):
        table = build_code_table(cfg.coding_config())
    result = loss_surface_sweep(args.theta_gt, args.aspect, args.method,
                                table=table,
                                weight_config=cfg.weight_config(),
                                loss_config=cfg.loss_config(),
                                step=cfg.sweep_step)
    rows = [{"theta_pred": float(t), "loss": float(l)}
            for t, l in zip(result.thetas, result.losses)]
    return rows, {"method": args.method, "theta_gt": result.theta_gt,
                  "aspect": result.aspect}


def _cmd_fit(cfg, args):
    table = build_code_table(cfg.coding_config())
    wcfg = cfg.weight_config()
    lcfg = cfg.loss_config()
    if args.theta_gt is not None:
        traj = fit_logits(args.theta_gt, table, wcfg, lcfg,
                          steps=cfg.steps, learning_rate=cfg.learning_rate,
                          init_seed=cfg.seed)
        rows = [{"step": k, "loss": float(traj.losses[k]),
                 "theta_pred": float(traj.decoded[k])}
                for k in range(traj.losses.shape[0])]
        return rows, {"theta_gt": traj.theta_gt,
                      "final_error": traj.final_error,
                      "converged": bool(traj.converged)}
    rng = np.random.default_rng((cfg.seed, 0))
    thetas = 90.0 - rng.random(cfg.n_targets) * 180.0
    result = fit_many(thetas, table, wcfg, lcfg, steps=cfg.steps,
                      learning_rate=cfg.learning_rate, seed=(cfg.seed, 1))
    rows = [
        {"index": i, "theta_gt": float(result.thetas[i]),
         "final_error": float(result.final_errors[i]),
         "converged": bool(result.converged[i])}
        for i in range(cfg.n_targets)
    ]
    return rows, {"success_rate": result.success_rate}


def _cmd_granularity(cfg, args):
    omegas = _parse_number_list(args.omegas, "--omegas")
    rows = granularity_study(
        omegas, n_targets=cfg.n_targets, seed=cfg.seed, scheme=cfg.scheme,
        angle_range=cfg.angle_range, quant_samples=cfg.quant_samples,
        steps=cfg.steps, learning_rate=cfg.learning_rate,
        weight_config=cfg.weight_config(), loss_config=cfg.loss_config())
    out = [
        {"omega": r.omega, "C": r.num_categories, "code_length": r.code_length,
         "max_error": r.max_error, "mean_error": r.mean_error,
         "fit_rate": r.fit_rate}
        for r in rows
    ]
    return out, {}


def _cmd_eval(cfg, args):
    gts = load_ground_truth_dir(args.gt)
    dets = load_detection_file(args.dets)
    result = evaluate_detections(dets, gts, iou_threshold=cfg.iou_threshold,
                                 metric=cfg.metric)
    rows = [
        {"class": str(cls), "ap": res.ap, "n_gt": res.n_gt}
        for cls, res in result.per_class.items()
    ]
    rows.append({"class": "mAP", "ap": result.mean_ap,
                 "n_gt": sum(r.n_gt for r in result.per_class.values())})
    return rows, {"n_detections": len(dets), "n_classes": len(result.per_class)}


_HANDLERS = {
    "codes": _cmd_codes,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "thickness": _cmd_thickness,
    "iou": _cmd_iou,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
    "granularity": _cmd_granularity,
    "eval": _cmd_eval,
}


def _add_common(parser):
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed")
    parser.add_argument("--out", default=None,
                        help="output path ('-' or omitted: stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (default json)")


def _add_coding(parser):
    parser.add_argument("--scheme", choices=("onehot", "csl", "bcl", "gcl"),
                        default=None)
    parser.add_argument("--omega", type=_parse_number, default=None,
                        help="bin width in degrees (fractions like 180/256 allowed)")
    parser.add_argument("--angle-range", dest="angle_range", type=float, default=None)
    parser.add_argument("--csl-radius", dest="csl_radius", type=float, default=None)
    parser.add_argument("--csl-window", dest="csl_window",
                        choices=("gaussian", "pulse"), default=None)
    parser.add_argument("--decode-threshold", dest="decode_threshold",
                        type=float, default=None)
    parser.add_argument("--invalid-code", dest="invalid_code",
                        choices=("wrap", "clamp"), default=None)


def _add_weight(parser):
    parser.add_argument("--weight-mode", dest="weight_mode",
                        choices=("none", "log_distance", "adarsw"), default=None)
    parser.add_argument("--aspect-threshold", dest="aspect_threshold",
                        type=float, default=None)


def _add_loss(parser):
    parser.add_argument("--focal-alpha", dest="focal_alpha", type=float, default=None)
    parser.add_argument("--focal-gamma", dest="focal_gamma", type=float, default=None)
    parser.add_argument("--smooth-l1-beta", dest="smooth_l1_beta",
                        type=float, default=None)
    parser.add_argument("--bit-reduction", dest="bit_reduction",
                        choices=("sum", "mean"), default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rbox",
        description="Rotated-box angle coding, loss surfaces and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codes", help="emit the codeword table")
    _add_common(p)
    _add_coding(p)

    p = sub.add_parser("encode", help="encode one angle to its target vector")
    _add_common(p)
    _add_coding(p)
    p.add_argument("--theta", type=float, required=True, help="angle in degrees")

    p = sub.add_parser("decode", help="decode logits to an angle")
    _add_common(p)
    _add_coding(p)
    p.add_argument("--logits", required=True,
                   help="comma- or space-separated logit values")

    p = sub.add_parser("thickness", help="angle-output count per location")
    _add_common(p)
    _add_coding(p)
    p.add_argument("--method", required=True,
                   choices=("reg", "onehot", "csl", "bcl", "gcl"))
    p.add_argument("--anchors", type=int, required=True)

    p = sub.add_parser("iou", help="exact IoU of two long-side boxes")
    _add_common(p)
    p.add_argument("--box-a", dest="box_a", required=True, help="x,y,h,w,theta")
    p.add_argument("--box-b", dest="box_b", required=True, help="x,y,h,w,theta")

    p = sub.add_parser("sweep", help="loss curve over predicted angles")
    _add_common(p)
    _add_coding(p)
    _add_weight(p)
    _add_loss(p)
    p.add_argument("--method", required=True, choices=sorted(SWEEP_METHODS))
    p.add_argument("--theta-gt", dest="theta_gt", type=float, required=True)
    p.add_argument("--aspect", type=float, default=6.0)
    p.add_argument("--step", dest="sweep_step", type=float, default=None)

    p = sub.add_parser("fit", help="fit logits to target angles by descent")
    _add_common(p)
    _add_coding(p)
    _add_weight(p)
    _add_loss(p)
    p.add_argument("--theta-gt", dest="theta_gt", type=float, default=None,
                   help="single target; omit to fit --targets random angles")
    p.add_argument("--targets", dest="n_targets", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lr", dest="learning_rate", type=float, default=None)

    p = sub.add_parser("granularity", help="quantization/fit table per bin width")
    _add_common(p)
    _add_coding(p)
    _add_loss(p)
    p.add_argument("--omegas", required=True,
                   help="comma-separated bin widths (fractions allowed)")
    p.add_argument("--targets", dest="n_targets", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lr", dest="learning_rate", type=float, default=None)
    p.add_argument("--quant-samples", dest="quant_samples", type=int, default=None)

    p = sub.add_parser("eval", help="per-class AP and mAP on DOTA-style files")
    _add_common(p)
    p.add_argument("--gt", required=True, help="directory of <image_id>.txt files")
    p.add_argument("--dets", required=True, help="detection file")
    p.add_argument("--iou-threshold", dest="iou_threshold", type=float, default=None)
    p.add_argument("--metric", choices=("voc07", "voc12"), default=None)

    return parser


def _resolve_config(args):
    cfg = load_run_config(args.config) if args.config else RunConfig()
    for name in _CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        rows, extra = _HANDLERS[args.command](cfg, args)
        conf = {"command": args.command, **cfg.to_dict(), **extra}
        text = emit_report(rows, fmt=args.format or "json",
                           destination=args.out, config=conf)
        if args.out in (None, "-"):
            sys.stdout.write(text)
        return 0
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except RBoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
